#include "pilib/dde.hpp"

namespace pilib {

namespace {

void fitDim(Eigen::Index& d, const Eigen::MatrixXd& m, bool rows, const char* what) {
    Eigen::Index v = rows ? m.rows() : m.cols();
    if (m.size() == 0) return;
    if (d == 0) d = v;
    else if (d != v) throw DimensionMismatch(std::string("DDE: ") + what);
}

void fitDimP(Eigen::Index& d, const Polynomial& p, bool rows, const char* what) {
    Eigen::Index v = rows ? p.rows() : p.cols();
    if (p.rows() == 0 && p.cols() == 0) return;
    if (d == 0) d = v;
    else if (d != v) throw DimensionMismatch(std::string("DDE: ") + what);
}

}  // namespace

void DDEModel::initialize() {
    size_t K = tau.size();
    for (double t : tau)
        if (!(t > 0)) throw DimensionMismatch("DDE: delays must be positive");
    auto resizeVec = [&](auto& v) { v.resize(K); };
    resizeVec(Ai);
    resizeVec(B1i);
    resizeVec(B2i);
    resizeVec(C1i);
    resizeVec(D11i);
    resizeVec(D12i);
    resizeVec(C2i);
    resizeVec(D21i);
    resizeVec(D22i);
    resizeVec(Adi);
    resizeVec(B1di);
    resizeVec(B2di);
    resizeVec(C1di);
    resizeVec(D11di);
    resizeVec(D12di);
    resizeVec(C2di);
    resizeVec(D21di);
    resizeVec(D22di);

    fitDim(nx, A0, true, "A0 rows");
    fitDim(nx, A0, false, "A0 cols");
    fitDim(nx, B1, true, "B1 rows");
    fitDim(nw, B1, false, "B1 cols");
    fitDim(nx, B2, true, "B2 rows");
    fitDim(nu, B2, false, "B2 cols");
    fitDim(nz, C1, true, "C1 rows");
    fitDim(nx, C1, false, "C1 cols");
    fitDim(ny, C2, true, "C2 rows");
    fitDim(nx, C2, false, "C2 cols");
    fitDim(nz, D11, true, "D11 rows");
    fitDim(nw, D11, false, "D11 cols");
    fitDim(nz, D12, true, "D12 rows");
    fitDim(nu, D12, false, "D12 cols");
    fitDim(ny, D21, true, "D21 rows");
    fitDim(nw, D21, false, "D21 cols");
    fitDim(ny, D22, true, "D22 rows");
    fitDim(nu, D22, false, "D22 cols");
    for (size_t i = 0; i < K; ++i) {
        fitDim(nx, Ai[i], true, "Ai");
        fitDim(nx, Ai[i], false, "Ai");
        fitDim(nx, B1i[i], true, "B1i");
        fitDim(nw, B1i[i], false, "B1i");
        fitDim(nx, B2i[i], true, "B2i");
        fitDim(nu, B2i[i], false, "B2i");
        fitDim(nz, C1i[i], true, "C1i");
        fitDim(nx, C1i[i], false, "C1i");
        fitDim(ny, C2i[i], true, "C2i");
        fitDim(nx, C2i[i], false, "C2i");
        fitDim(nz, D11i[i], true, "D11i");
        fitDim(nw, D11i[i], false, "D11i");
        fitDim(nz, D12i[i], true, "D12i");
        fitDim(nu, D12i[i], false, "D12i");
        fitDim(ny, D21i[i], true, "D21i");
        fitDim(nw, D21i[i], false, "D21i");
        fitDim(ny, D22i[i], true, "D22i");
        fitDim(nu, D22i[i], false, "D22i");
        fitDimP(nx, Adi[i], true, "Adi");
        fitDimP(nx, Adi[i], false, "Adi");
        fitDimP(nx, B1di[i], true, "B1di");
        fitDimP(nw, B1di[i], false, "B1di");
        fitDimP(nx, B2di[i], true, "B2di");
        fitDimP(nu, B2di[i], false, "B2di");
        fitDimP(nz, C1di[i], true, "C1di");
        fitDimP(nx, C1di[i], false, "C1di");
        fitDimP(nz, D11di[i], true, "D11di");
        fitDimP(nw, D11di[i], false, "D11di");
        fitDimP(nz, D12di[i], true, "D12di");
        fitDimP(nu, D12di[i], false, "D12di");
        fitDimP(ny, C2di[i], true, "C2di");
        fitDimP(nx, C2di[i], false, "C2di");
        fitDimP(ny, D21di[i], true, "D21di");
        fitDimP(nw, D21di[i], false, "D21di");
        fitDimP(ny, D22di[i], true, "D22di");
        fitDimP(nu, D22di[i], false, "D22di");
    }
    if (nx == 0) throw DimensionMismatch("DDE: no state declared");
    auto zfill = [](Eigen::MatrixXd& m, Eigen::Index r, Eigen::Index c) {
        if (m.size() == 0) m = Eigen::MatrixXd::Zero(r, c);
    };
    auto zfillP = [](Polynomial& p, Eigen::Index r, Eigen::Index c) {
        if (p.rows() == 0 && p.cols() == 0) p = Polynomial::zero(r, c);
    };
    zfill(A0, nx, nx);
    zfill(B1, nx, nw);
    zfill(B2, nx, nu);
    zfill(C1, nz, nx);
    zfill(D11, nz, nw);
    zfill(D12, nz, nu);
    zfill(C2, ny, nx);
    zfill(D21, ny, nw);
    zfill(D22, ny, nu);
    for (size_t i = 0; i < K; ++i) {
        zfill(Ai[i], nx, nx);
        zfill(B1i[i], nx, nw);
        zfill(B2i[i], nx, nu);
        zfill(C1i[i], nz, nx);
        zfill(D11i[i], nz, nw);
        zfill(D12i[i], nz, nu);
        zfill(C2i[i], ny, nx);
        zfill(D21i[i], ny, nw);
        zfill(D22i[i], ny, nu);
        zfillP(Adi[i], nx, nx);
        zfillP(B1di[i], nx, nw);
        zfillP(B2di[i], nx, nu);
        zfillP(C1di[i], nz, nx);
        zfillP(D11di[i], nz, nw);
        zfillP(D12di[i], nz, nu);
        zfillP(C2di[i], ny, nx);
        zfillP(D21di[i], ny, nw);
        zfillP(D22di[i], ny, nu);
    }
    initialized = true;
}

PIESystem convertDDEToPIE(DDEModel m) {
    if (!m.initialized) m.initialize();
    const size_t K = m.tau.size();
    const std::string v1 = "s", v2 = "s_dum";
    const double a = -1.0, b = 0.0;
    const Polynomial S = Polynomial::variable(v1);
    const Polynomial TH = Polynomial::variable(v2);

    // Which delays carry state / w / u channels?
    auto nonzeroP = [](const Polynomial& p) { return !p.isZero(); };
    auto nonzeroM = [](const Eigen::MatrixXd& mm) {
        return mm.size() != 0 && mm.cwiseAbs().maxCoeff() != 0.0;
    };
    std::vector<bool> useX(K, false), useW(K, false), useU(K, false);
    for (size_t i = 0; i < K; ++i) {
        useX[i] = nonzeroM(m.Ai[i]) || nonzeroM(m.C1i[i]) || nonzeroM(m.C2i[i]) ||
                  nonzeroP(m.Adi[i]) || nonzeroP(m.C1di[i]) || nonzeroP(m.C2di[i]);
        useW[i] = nonzeroM(m.B1i[i]) || nonzeroM(m.D11i[i]) || nonzeroM(m.D21i[i]) ||
                  nonzeroP(m.B1di[i]) || nonzeroP(m.D11di[i]) || nonzeroP(m.D21di[i]);
        useU[i] = nonzeroM(m.B2i[i]) || nonzeroM(m.D12i[i]) || nonzeroM(m.D22i[i]) ||
                  nonzeroP(m.B2di[i]) || nonzeroP(m.D12di[i]) || nonzeroP(m.D22di[i]);
    }

    // L2 block layout: state histories, then w histories, then u histories.
    struct Block {
        char chan;  // 'x','w','u'
        size_t delay;
        Eigen::Index off, size;
    };
    std::vector<Block> blocks;
    Eigen::Index n1 = 0;
    for (size_t i = 0; i < K; ++i)
        if (useX[i]) {
            blocks.push_back({'x', i, n1, m.nx});
            n1 += m.nx;
        }
    for (size_t i = 0; i < K; ++i)
        if (useW[i]) {
            blocks.push_back({'w', i, n1, m.nw});
            n1 += m.nw;
        }
    for (size_t i = 0; i < K; ++i)
        if (useU[i]) {
            blocks.push_back({'u', i, n1, m.nu});
            n1 += m.nu;
        }

    const Eigen::Index nx = m.nx, nw = m.nw, nu = m.nu, nz = m.nz, ny = m.ny;

    auto pad = [&](const Polynomial& p, Eigen::Index R, Eigen::Index C, Eigen::Index i0,
                   Eigen::Index j0) {
        Polynomial out(R, C);
        for (const auto& [e, c] : p.terms()) {
            Eigen::MatrixXd mm = Eigen::MatrixXd::Zero(R, C);
            mm.block(i0, j0, p.rows(), p.cols()) = c;
            out.addTerm(p.vars(), e, mm);
        }
        return out;
    };

    PIESystem sys;
    sys.a = a;
    sys.b = b;
    sys.var1 = v1;
    sys.var2 = v2;

    // T, Tw, Tu
    sys.T = PIOperator(nx, nx, n1, n1, a, b, v1, v2);
    sys.T.P = Polynomial::identity(nx);
    sys.Tw = PIOperator(nx, nw, n1, 0, a, b, v1, v2);
    sys.Tu = PIOperator(nx, nu, n1, 0, a, b, v1, v2);
    {
        Polynomial Q2x(n1, nx), Q2w(n1, nw), Q2u(n1, nu), R2(n1, n1);
        for (const auto& blk : blocks) {
            Polynomial negI = Polynomial::constant(-Eigen::MatrixXd::Identity(blk.size, blk.size));
            R2 = R2 + pad(negI, n1, n1, blk.off, blk.off);
            Polynomial I = Polynomial::identity(blk.size);
            if (blk.chan == 'x') Q2x = Q2x + pad(I, n1, nx, blk.off, 0);
            if (blk.chan == 'w') Q2w = Q2w + pad(I, n1, nw, blk.off, 0);
            if (blk.chan == 'u') Q2u = Q2u + pad(I, n1, nu, blk.off, 0);
        }
        sys.T.Q2 = Q2x;
        sys.T.R2 = R2;
        sys.Tw.Q2 = Q2w;
        sys.Tu.Q2 = Q2u;
    }

    // Dynamics and outputs: substitute
    //   v(t - tau_i)        = v(t) - int_{-1}^{0} vhat_f,i
    //   int distributed     = [tau_i int f] v(t) - int_{-1}^{0} H_i(th) vhat_f,i(th) dth,
    //   H_i(th) = tau_i int_{-1}^{th} f(tau_i r) dr  for kernel f.
    struct RowAcc {
        Eigen::MatrixXd onX, onW, onU;  // direct (undelayed-signal) coefficients
        Polynomial q1;                  // kernels on the L2 fundamental blocks, in var1
    };
    auto makeAcc = [&](Eigen::Index r) {
        RowAcc acc;
        acc.onX = Eigen::MatrixXd::Zero(r, nx);
        acc.onW = Eigen::MatrixXd::Zero(r, nw);
        acc.onU = Eigen::MatrixXd::Zero(r, nu);
        acc.q1 = Polynomial::zero(r, n1);
        return acc;
    };
    auto blockOffset = [&](char chan, size_t delay) -> Eigen::Index {
        for (const auto& blk : blocks)
            if (blk.chan == chan && blk.delay == delay) return blk.off;
        return -1;
    };
    auto addDiscrete = [&](RowAcc& acc, char chan, size_t i, const Eigen::MatrixXd& M) {
        if (M.size() == 0 || M.cwiseAbs().maxCoeff() == 0.0) return;
        Eigen::MatrixXd* direct = chan == 'x' ? &acc.onX : chan == 'w' ? &acc.onW : &acc.onU;
        *direct += M;
        Eigen::Index off = blockOffset(chan, i);
        acc.q1 = acc.q1 + pad(Polynomial::constant(-M), acc.q1.rows(), n1, 0, off);
    };
    auto addDistributed = [&](RowAcc& acc, char chan, size_t i, const Polynomial& f) {
        if (f.isZero()) return;
        double taui = m.tau[i];
        // f is declared on [-tau_i, 0] in "s": rescale to r in [-1,0]: f(tau_i r)
        Polynomial fr = f.subs(v1, taui * S) * taui;
        Eigen::MatrixXd direct = fr.integrate(v1, -1.0, 0.0).toConstant();
        Eigen::MatrixXd* slot = chan == 'x' ? &acc.onX : chan == 'w' ? &acc.onW : &acc.onU;
        *slot += direct;
        // kernel H(th) = int_{-1}^{th} f(tau r) dr, expressed in var1
        Polynomial H = fr.rename(v1, "r__").integrate("r__", Polynomial::constant(-1.0), S);
        Eigen::Index off = blockOffset(chan, i);
        acc.q1 = acc.q1 + pad(-H, acc.q1.rows(), n1, 0, off);
    };

    RowAcc dyn = makeAcc(nx);
    dyn.onX += m.A0;
    dyn.onW += m.B1;
    dyn.onU += m.B2;
    RowAcc zrow = makeAcc(nz);
    zrow.onX += m.C1;
    zrow.onW += m.D11;
    zrow.onU += m.D12;
    RowAcc yrow = makeAcc(ny);
    yrow.onX += m.C2;
    yrow.onW += m.D21;
    yrow.onU += m.D22;
    for (size_t i = 0; i < K; ++i) {
        addDiscrete(dyn, 'x', i, m.Ai[i]);
        addDiscrete(dyn, 'w', i, m.B1i[i]);
        addDiscrete(dyn, 'u', i, m.B2i[i]);
        addDistributed(dyn, 'x', i, m.Adi[i]);
        addDistributed(dyn, 'w', i, m.B1di[i]);
        addDistributed(dyn, 'u', i, m.B2di[i]);
        addDiscrete(zrow, 'x', i, m.C1i[i]);
        addDiscrete(zrow, 'w', i, m.D11i[i]);
        addDiscrete(zrow, 'u', i, m.D12i[i]);
        addDistributed(zrow, 'x', i, m.C1di[i]);
        addDistributed(zrow, 'w', i, m.D11di[i]);
        addDistributed(zrow, 'u', i, m.D12di[i]);
        addDiscrete(yrow, 'x', i, m.C2i[i]);
        addDiscrete(yrow, 'w', i, m.D21i[i]);
        addDiscrete(yrow, 'u', i, m.D22i[i]);
        addDistributed(yrow, 'x', i, m.C2di[i]);
        addDistributed(yrow, 'w', i, m.D21di[i]);
        addDistributed(yrow, 'u', i, m.D22di[i]);
    }

    sys.A = PIOperator(nx, nx, n1, n1, a, b, v1, v2);
    sys.A.P = Polynomial::constant(dyn.onX);
    sys.A.Q1 = dyn.q1;
    {
        Polynomial R0(n1, n1);
        for (const auto& blk : blocks) {
            Polynomial sc = Polynomial::constant(
                Eigen::MatrixXd::Identity(blk.size, blk.size) / m.tau[blk.delay]);
            R0 = R0 + pad(sc, n1, n1, blk.off, blk.off);
        }
        sys.A.R0 = R0;
    }
    sys.B1 = PIOperator(nx, nw, n1, 0, a, b, v1, v2);
    sys.B1.P = Polynomial::constant(dyn.onW);
    sys.B2 = PIOperator(nx, nu, n1, 0, a, b, v1, v2);
    sys.B2.P = Polynomial::constant(dyn.onU);

    sys.C1 = PIOperator(nz, nx, 0, n1, a, b, v1, v2);
    sys.C1.P = Polynomial::constant(zrow.onX);
    sys.C1.Q1 = zrow.q1;
    sys.D11 = PIOperator(nz, nw, 0, 0, a, b, v1, v2);
    sys.D11.P = Polynomial::constant(zrow.onW);
    sys.D12 = PIOperator(nz, nu, 0, 0, a, b, v1, v2);
    sys.D12.P = Polynomial::constant(zrow.onU);
    sys.C2 = PIOperator(ny, nx, 0, n1, a, b, v1, v2);
    sys.C2.P = Polynomial::constant(yrow.onX);
    sys.C2.Q1 = yrow.q1;
    sys.D21 = PIOperator(ny, nw, 0, 0, a, b, v1, v2);
    sys.D21.P = Polynomial::constant(yrow.onW);
    sys.D22 = PIOperator(ny, nu, 0, 0, a, b, v1, v2);
    sys.D22.P = Polynomial::constant(yrow.onU);
    sys.check();
    return sys;
}

}  // namespace pilib
