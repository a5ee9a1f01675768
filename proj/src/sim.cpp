#include "pilib/sim.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/Polynomials>
#include <cmath>
#include <complex>

namespace pilib {

Eigen::MatrixXd discretize(const PIOperator& op, int N) {
    const Eigen::Index m0 = op.m0, n0 = op.n0, m1 = op.m1, n1 = op.n1;
    const std::string s = op.var1, th = op.var2;
    const double a = op.a, b = op.b;
    Eigen::VectorXd x = cheb::nodes(N, a, b);

    // Integral blocks are computed on an upsampled grid so that products of a
    // polynomial kernel with a degree-N interpolant are integrated exactly.
    int dker = std::max({op.Q1.degree(th) + op.Q1.degree(s), op.R1.degree(th), op.R2.degree(th)});
    int M = N + dker + 2;
    Eigen::VectorXd xf = cheb::nodes(M, a, b);
    Eigen::MatrixXd Cf = cheb::valsToCoeffs(M);
    // interpolation: coarse nodal values -> fine nodal values
    Eigen::MatrixXd Cn = cheb::valsToCoeffs(N);
    Eigen::MatrixXd Tf(M + 1, N + 1);
    for (int i = 0; i <= M; ++i) {
        double t = 2.0 * (xf(i) - a) / (b - a) - 1.0;
        t = std::clamp(t, -1.0, 1.0);
        for (int k = 0; k <= N; ++k) Tf(i, k) = std::cos(k * std::acos(t));
    }
    Eigen::MatrixXd E = Tf * Cn;  // (M+1) x (N+1)

    // coefficient-space antiderivative on the fine grid (M+2 modes out)
    Eigen::MatrixXd Bmap = Eigen::MatrixXd::Zero(M + 2, M + 1);
    for (int k = 1; k <= M + 1; ++k) {
        if (k == 1) {
            Bmap(1, 0) = 1.0;
            if (M >= 2) Bmap(1, 2) = -0.5;
        } else {
            if (k - 1 <= M) Bmap(k, k - 1) += 1.0 / (2.0 * k);
            if (k + 1 <= M) Bmap(k, k + 1) -= 1.0 / (2.0 * k);
        }
    }
    Eigen::MatrixXd BC = 0.5 * (b - a) * (Bmap * Cf);  // fine values -> antiderivative coeffs
    // evaluation rows for the antiderivative: int_a^t = sum_k c_k (T_k(t) - T_k(a))
    auto antiRow = [&](double t) {
        Eigen::RowVectorXd r(M + 2);
        double u = std::clamp(2.0 * (t - a) / (b - a) - 1.0, -1.0, 1.0);
        for (int k = 0; k <= M + 1; ++k) r(k) = std::cos(k * std::acos(u)) - std::cos(k * M_PI);
        return r;
    };
    Eigen::RowVectorXd fullRow = antiRow(b);  // int_a^b in coefficient space

    Eigen::Index rows = m0 + m1 * (N + 1), cols = n0 + n1 * (N + 1);
    Eigen::MatrixXd Mout = Eigen::MatrixXd::Zero(rows, cols);

    if (m0 && n0) Mout.block(0, 0, m0, n0) = op.P.toConstant();
    if (m0 && n1 && !op.Q1.isZero()) {
        // row functional: int_a^b Q1(s) x1(s) ds, exact on interpolants
        // weights on fine grid: fullRow * BC gives fine-grid quadrature row
        Eigen::RowVectorXd wf = fullRow * BC;  // 1 x (M+1)
        for (int jf = 0; jf <= M; ++jf) {
            Eigen::MatrixXd K = op.Q1.eval({{s, xf(jf)}});
            for (int j = 0; j <= N; ++j)
                Mout.block(0, n0 + j * n1, m0, n1) += wf(jf) * E(jf, j) * K;
        }
    }
    if (m1 && n0 && !op.Q2.isZero()) {
        for (int i = 0; i <= N; ++i)
            Mout.block(m0 + i * m1, 0, m1, n0) = op.Q2.eval({{s, x(i)}});
    }
    if (m1 && n1) {
        bool hasR1 = !op.R1.isZero(), hasR2 = !op.R2.isZero();
        if (!op.R0.isZero())
            for (int i = 0; i <= N; ++i)
                Mout.block(m0 + i * m1, n0 + i * n1, m1, n1) += op.R0.eval({{s, x(i)}});
        if (hasR1 || hasR2) {
            for (int i = 0; i <= N; ++i) {
                Eigen::RowVectorXd low = antiRow(x(i)) * BC;        // 1 x (M+1)
                Eigen::RowVectorXd up = (fullRow * BC) - low;       // int_s^b
                for (int jf = 0; jf <= M; ++jf) {
                    Eigen::MatrixXd K1 = hasR1 && low(jf) != 0.0
                                             ? op.R1.eval({{s, x(i)}, {th, xf(jf)}})
                                             : Eigen::MatrixXd();
                    Eigen::MatrixXd K2 = hasR2 && up(jf) != 0.0
                                             ? op.R2.eval({{s, x(i)}, {th, xf(jf)}})
                                             : Eigen::MatrixXd();
                    for (int j = 0; j <= N; ++j) {
                        if (E(jf, j) == 0.0) continue;
                        if (K1.size())
                            Mout.block(m0 + i * m1, n0 + j * n1, m1, n1) += low(jf) * E(jf, j) * K1;
                        if (K2.size())
                            Mout.block(m0 + i * m1, n0 + j * n1, m1, n1) += up(jf) * E(jf, j) * K2;
                    }
                }
            }
        }
    }
    return Mout;
}

Eigen::VectorXd applySampled(const PIOperator& op, int N, const Eigen::VectorXd& x) {
    return discretize(op, N) * x;
}

double rlInner(int N, double a, double b, Eigen::Index n0, const Eigen::VectorXd& x,
               const Eigen::VectorXd& y) {
    Eigen::VectorXd w = cheb::weights(N, a, b);
    Eigen::Index n1 = (x.size() - n0) / (N + 1);
    double acc = x.head(n0).dot(y.head(n0));
    for (int j = 0; j <= N; ++j)
        acc += w(j) * x.segment(n0 + j * n1, n1).dot(y.segment(n0 + j * n1, n1));
    return acc;
}

namespace {

// BDF coefficients: alpha_0 x^n + ... + alpha_k x^{n-k} = dt f(x^n).
const std::vector<std::vector<double>> kBdfAlpha = {
    {},
    {1.0, -1.0},
    {1.5, -2.0, 0.5},
    {11.0 / 6.0, -3.0, 1.5, -1.0 / 3.0},
    {25.0 / 12.0, -4.0, 3.0, -4.0 / 3.0, 0.25},
};

// Root condition for BDF-k applied to z = dt*lambda: the polynomial
// rho(zeta) - z sigma(zeta) must have all roots inside the closed unit disk.
bool bdfStableAt(int k, std::complex<double> z) {
    // rho(zeta) = sum_j alpha_j zeta^{k-j}, sigma(zeta) = zeta^k
    const auto& al = kBdfAlpha[static_cast<size_t>(k)];
    std::vector<std::complex<double>> c(static_cast<size_t>(k) + 1);
    for (int j = 0; j <= k; ++j) c[static_cast<size_t>(k - j)] = al[static_cast<size_t>(j)];
    c[static_cast<size_t>(k)] -= z;  // subtract z * zeta^k
    // companion-matrix roots of sum c_i zeta^i (degree k)
    Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(k, k);
    for (int i = 0; i < k - 1; ++i) comp(i + 1, i) = 1.0;
    for (int i = 0; i < k; ++i) comp(i, k - 1) = -c[static_cast<size_t>(i)] / c[static_cast<size_t>(k)];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp);
    for (Eigen::Index i = 0; i < k; ++i)
        if (std::abs(es.eigenvalues()(i)) > 1.0 + 1e-9) return false;
    return true;
}

std::vector<std::complex<double>> pencilEigs(const Eigen::MatrixXd& Ad, const Eigen::MatrixXd& Td) {
    Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> ges;
    ges.compute(Ad, Td);
    std::vector<std::complex<double>> out;
    double tscale = std::max(1.0, Td.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < ges.alphas().size(); ++i) {
        std::complex<double> al = ges.alphas()(i);
        double be = ges.betas()(i);
        // restrict to the range of Td: discard near-infinite eigenvalues
        if (std::abs(be) < 1e-10 * tscale) continue;
        out.push_back(al / be);
    }
    return out;
}

}  // namespace

StabilityReport stabilityCheck(const PIESystem& pie, const SimOptions& opts) {
    StabilityReport rep;
    Eigen::MatrixXd Td = discretize(pie.T, opts.N);
    Eigen::MatrixXd Ad = discretize(pie.A, opts.N);
    auto eigs = pencilEigs(Ad, Td);
    if (eigs.empty()) return rep;
    rep.rightmost_real = -std::numeric_limits<double>::infinity();
    for (auto z : eigs) rep.rightmost_real = std::max(rep.rightmost_real, z.real());
    rep.physically_unstable = rep.rightmost_real > 1e-8;
    auto stableFor = [&](double dt) {
        for (auto lam : eigs)
            if (!bdfStableAt(opts.Norder, dt * lam)) return false;
        return true;
    };
    rep.scheme_stable = stableFor(opts.dt);
    if (!rep.scheme_stable) {
        if (rep.physically_unstable) {
            rep.message =
                "the BDF scheme is unstable at this time step; the underlying physical problem "
                "is unstable";
        } else {
            // search for a stabilizing step, capped at 1
            double lo = opts.dt, hi = 1.0;
            if (stableFor(hi)) {
                for (int it = 0; it < 40; ++it) {
                    double mid = 0.5 * (lo + hi);
                    if (stableFor(mid)) hi = mid;
                    else lo = mid;
                }
                rep.recommended_dt = hi;
                rep.message = "the BDF scheme is unstable at this time step; a larger step is "
                              "recommended";
            } else {
                rep.message = "the BDF scheme is unstable at this time step; increasing the time "
                              "step to a value higher than one is not recommended";
            }
        }
    }
    return rep;
}

SimSolution simulate(const PIESystem& pie, const SimOptions& opts, const SimInputs& in) {
    const int N = opts.N;
    const Eigen::Index n0 = pie.stateDim0(), n1 = pie.stateDim1();
    const Eigen::Index nw = pie.wDim(), nu = pie.uDim();
    const Eigen::Index nz = pie.zDim(), ny = pie.yDim();
    const Eigen::Index nf = n0 + n1 * (N + 1);

    SimSolution sol;
    sol.nodes = cheb::nodes(N, pie.a, pie.b);
    int Nsteps = static_cast<int>(std::floor(opts.tf / opts.dt + 1e-12));
    sol.tf = Nsteps * opts.dt;
    sol.dtime = Eigen::VectorXd::LinSpaced(Nsteps, opts.dt, Nsteps * opts.dt);

    Eigen::MatrixXd Td = discretize(pie.T, N);
    Eigen::MatrixXd Ad = discretize(pie.A, N);
    Eigen::MatrixXd Twd = nw ? discretize(pie.Tw, N) : Eigen::MatrixXd::Zero(Td.rows(), 0);
    Eigen::MatrixXd Tud = nu ? discretize(pie.Tu, N) : Eigen::MatrixXd::Zero(Td.rows(), 0);
    Eigen::MatrixXd B1d = nw ? discretize(pie.B1, N) : Eigen::MatrixXd::Zero(Td.rows(), 0);
    Eigen::MatrixXd B2d = nu ? discretize(pie.B2, N) : Eigen::MatrixXd::Zero(Td.rows(), 0);
    Eigen::MatrixXd C1d = nz ? discretize(pie.C1, N) : Eigen::MatrixXd(0, nf);
    Eigen::MatrixXd C2d = ny ? discretize(pie.C2, N) : Eigen::MatrixXd(0, nf);
    Eigen::MatrixXd D11d = (nz && nw) ? discretize(pie.D11, N) : Eigen::MatrixXd::Zero(nz, nw);
    Eigen::MatrixXd D12d = (nz && nu) ? discretize(pie.D12, N) : Eigen::MatrixXd::Zero(nz, nu);
    Eigen::MatrixXd D21d = (ny && nw) ? discretize(pie.D21, N) : Eigen::MatrixXd::Zero(ny, nw);
    Eigen::MatrixXd D22d = (ny && nu) ? discretize(pie.D22, N) : Eigen::MatrixXd::Zero(ny, nu);

    auto rep = stabilityCheck(pie, opts);
    sol.unstable_warning = !rep.scheme_stable;
    sol.warning = rep.message;

    // initial fundamental state
    Eigen::VectorXd v = Eigen::VectorXd::Zero(nf);
    if (in.ic_finite.size()) v.head(n0) = in.ic_finite;
    if (n1 && in.ic_l2) {
        Eigen::MatrixXd ics = in.ic_l2(sol.nodes);  // (N+1) x n1
        for (int j = 0; j <= N; ++j)
            for (Eigen::Index k = 0; k < n1; ++k) v(n0 + j * n1 + k) = ics(j, k);
    }

    auto wAt = [&](double t) -> Eigen::VectorXd {
        if (!nw) return Eigen::VectorXd::Zero(0);
        if (in.w) return in.w->value(t);
        return Eigen::VectorXd::Zero(nw);
    };
    auto uAt = [&](double t) -> Eigen::VectorXd {
        if (!nu) return Eigen::VectorXd::Zero(0);
        if (in.u) return in.u->value(t);
        return Eigen::VectorXd::Zero(nu);
    };
    auto dSig = [&](const std::optional<TimeSignal>& sig, double t, Eigen::Index dim) -> Eigen::VectorXd {
        if (!dim) return Eigen::VectorXd::Zero(0);
        if (!sig) return Eigen::VectorXd::Zero(dim);
        if (sig->derivative) return sig->derivative(t);
        double h = 1e-6;
        return (sig->value(t + h) - sig->value(t - h)) / (2 * h);
    };

    std::vector<Eigen::VectorXd> hist;  // most recent first
    hist.push_back(v);

    sol.ode.resize(n0, Nsteps);
    sol.regulated.resize(nz, Nsteps);
    sol.observed.resize(ny, Nsteps);
    sol.pde.reserve(static_cast<size_t>(Nsteps));

    // factorizations per effective BDF order (startup ramp uses lower orders)
    std::vector<Eigen::ColPivHouseholderQR<Eigen::MatrixXd>> fact(
        static_cast<size_t>(opts.Norder) + 1);
    std::vector<bool> haveFact(static_cast<size_t>(opts.Norder) + 1, false);

    for (int step = 1; step <= Nsteps; ++step) {
        double t = step * opts.dt;
        int k = std::min<int>(opts.Norder, step);
        const auto& al = kBdfAlpha[static_cast<size_t>(k)];
        if (!haveFact[static_cast<size_t>(k)]) {
            Eigen::MatrixXd M = al[0] * Td - opts.dt * Ad;
            fact[static_cast<size_t>(k)].compute(M);
            haveFact[static_cast<size_t>(k)] = true;
        }
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf);
        for (int j = 1; j <= k; ++j) rhs -= al[static_cast<size_t>(j)] * (Td * hist[static_cast<size_t>(j - 1)]);
        Eigen::VectorXd wn = wAt(t), un = uAt(t);
        if (nw) rhs += opts.dt * (B1d * wn) - Twd * (dSig(in.w, t, nw) * opts.dt);
        if (nu) rhs += opts.dt * (B2d * un) - Tud * (dSig(in.u, t, nu) * opts.dt);
        Eigen::VectorXd vn = fact[static_cast<size_t>(k)].solve(rhs);
        hist.insert(hist.begin(), vn);
        if (static_cast<int>(hist.size()) > opts.Norder + 1) hist.pop_back();
        v = vn;

        // outputs and primary-state reconstruction
        Eigen::VectorXd z = C1d * v;
        if (nw) z += D11d * wn;
        if (nu) z += D12d * un;
        Eigen::VectorXd y = C2d * v;
        if (nw) y += D21d * wn;
        if (nu) y += D22d * un;
        Eigen::VectorXd prim = Td * v;
        if (nw) prim += Twd * wn;
        if (nu) prim += Tud * un;
        sol.ode.col(step - 1) = prim.head(n0);
        Eigen::MatrixXd pg(N + 1, n1);
        for (int j = 0; j <= N; ++j)
            for (Eigen::Index c = 0; c < n1; ++c) pg(j, c) = prim(n0 + j * n1 + c);
        sol.pde.push_back(pg);
        sol.regulated.col(step - 1) = z;
        sol.observed.col(step - 1) = y;
    }
    sol.fundamental_final = v;
    return sol;
}

}  // namespace pilib
