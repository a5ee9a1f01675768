#include "pilib/opvar.hpp"

#include <Eigen/Eigenvalues>
#include <sstream>

#include "pilib/cheb.hpp"
#include "pilib/sim.hpp"

namespace pilib {

PIOperator identityOp(Eigen::Index n0, Eigen::Index n1, double a, double b, const std::string& v1,
                      const std::string& v2) {
    PIOperator I(n0, n0, n1, n1, a, b, v1, v2);
    I.P = Polynomial::constant(Eigen::MatrixXd::Identity(n0, n0));
    I.R0 = Polynomial::constant(Eigen::MatrixXd::Identity(n1, n1));
    return I;
}

PIOperator zeroOp(Eigen::Index m0, Eigen::Index n0, Eigen::Index m1, Eigen::Index n1, double a,
                  double b, const std::string& v1, const std::string& v2) {
    return PIOperator(m0, n0, m1, n1, a, b, v1, v2);
}

PolyAction applyPoly(const PIOperator& A, const Eigen::VectorXd& x0, const Polynomial& x1) {
    if (x0.size() != A.n0) throw DimensionMismatch("applyPoly: x0 length");
    if (A.n1 > 0 && (x1.rows() != A.n1 || x1.cols() != 1))
        throw DimensionMismatch("applyPoly: x1 shape");
    const std::string s = A.var1, th = A.var2;
    const Polynomial pa = Polynomial::constant(A.a), pb = Polynomial::constant(A.b);
    const Polynomial ps = Polynomial::variable(s);
    Polynomial x1th = x1.rename(s, th);
    Polynomial x0p = Polynomial::constant(x0);

    PolyAction out;
    Polynomial y0 = A.P * x0p;
    if (A.n1 > 0) y0 = y0 + (A.Q1 * x1).integrate(s, pa, pb);
    out.y0 = y0.isZero() ? Eigen::VectorXd::Zero(A.m0).eval() : Eigen::VectorXd(y0.toConstant());
    Polynomial y1 = A.Q2 * x0p;
    if (A.n1 > 0) {
        y1 = y1 + A.R0 * x1 + (A.R1 * x1th).integrate(th, pa, ps) +
             (A.R2 * x1th).integrate(th, ps, pb);
    }
    out.y1 = y1;
    return out;
}

double paramDistance(const PIOperator& A, const PIOperator& B) {
    if (A.m0 != B.m0 || A.n0 != B.n0 || A.m1 != B.m1 || A.n1 != B.n1)
        return std::numeric_limits<double>::infinity();
    double d = 0;
    d = std::max(d, A.P.coeffDistance(B.P));
    d = std::max(d, A.Q1.coeffDistance(B.Q1));
    d = std::max(d, A.Q2.coeffDistance(B.Q2));
    d = std::max(d, A.R0.coeffDistance(B.R0));
    d = std::max(d, A.R1.coeffDistance(B.R1));
    d = std::max(d, A.R2.coeffDistance(B.R2));
    return d;
}

bool operator==(const PIOperator& A, const PIOperator& B) {
    return A.sameSpace(B) && paramDistance(A, B) == 0.0;
}

std::string show(const PIOperator& A, double droptol) {
    std::ostringstream os;
    auto line = [&](const Polynomial& p) {
        std::ostringstream ls;
        ls << "[";
        for (Eigen::Index j = 0; j < p.cols(); ++j) {
            if (j) ls << ",";
            ls << p.block(0, j, 1, 1).str(droptol);
        }
        ls << "]";
        return ls.str();
    };
    for (Eigen::Index i = 0; i < A.m0; ++i) {
        os << (A.n0 ? line(A.P.block(i, 0, 1, A.n0)) : "[]") << " | "
           << (A.n1 ? line(A.Q1.block(i, 0, 1, A.n1)) : "[]") << "\n";
    }
    if (A.m0 == 0) os << "[] | []\n";
    os << "-----------\n";
    for (Eigen::Index i = 0; i < A.m1; ++i) {
        os << (A.n0 ? line(A.Q2.block(i, 0, 1, A.n0)) : "[]") << " | "
           << (A.n1 ? line(A.R0.block(i, 0, 1, A.n1)) : "[]") << " | "
           << (A.n1 ? line(A.R1.block(i, 0, 1, A.n1)) : "[]") << " | "
           << (A.n1 ? line(A.R2.block(i, 0, 1, A.n1)) : "[]") << "\n";
    }
    if (A.m1 == 0) os << "[] | [] | [] | []\n";
    return os.str();
}

PIOperator substitute(const DecisionPIOperator& A, const std::map<std::string, double>& decvals) {
    PIOperator out(A.m0, A.n0, A.m1, A.n1, A.a, A.b, A.var1, A.var2);
    out.P = A.P.substitute(decvals);
    out.Q1 = A.Q1.substitute(decvals);
    out.Q2 = A.Q2.substitute(decvals);
    out.R0 = A.R0.substitute(decvals);
    out.R1 = A.R1.substitute(decvals);
    out.R2 = A.R2.substitute(decvals);
    return out;
}

// --- sign test ---------------------------------------------------------------

int postest(const PIOperator& A, int gridN, double tol) {
    if (!A.isSquareShape()) throw DimensionMismatch("postest: operator not square");
    double asym = paramDistance(A, adjoint(A));
    double scale = std::max({1.0, A.P.coeffNorm(), A.R0.coeffNorm(), A.R1.coeffNorm(),
                             A.R2.coeffNorm(), A.Q1.coeffNorm(), A.Q2.coeffNorm()});
    if (asym > 1e-9 * scale) throw NotSelfAdjoint("postest: parameter asymmetry " + std::to_string(asym));

    Eigen::MatrixXd M = discretize(A, gridN);
    Eigen::VectorXd w = cheb::weights(gridN, A.a, A.b);
    Eigen::Index n = A.n0 + A.n1 * (gridN + 1);
    Eigen::VectorXd wall = Eigen::VectorXd::Ones(n);
    for (int j = 0; j <= gridN; ++j)
        for (Eigen::Index k = 0; k < A.n1; ++k) wall(A.n0 + j * A.n1 + k) = w(j);
    // quadratic form <x, Ax>_RL = x' diag(wall) M x; symmetrize
    Eigen::MatrixXd B = wall.asDiagonal() * M;
    Eigen::MatrixXd Bs = 0.5 * (B + B.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Bs);
    double lmin = es.eigenvalues().minCoeff();
    double lmax = es.eigenvalues().maxCoeff();
    double nrm = std::max(1.0, std::max(std::abs(lmin), std::abs(lmax)));
    if (lmin >= -tol * nrm) return 1;
    if (lmax <= tol * nrm) return -1;
    return 0;
}

// --- inversion ---------------------------------------------------------------

namespace {

// Evaluate a matrix polynomial at a point of var1 (must not involve var2).
Eigen::MatrixXd evalAt(const Polynomial& p, const std::string& var, double x) {
    return p.eval({{var, x}});
}

// Least-squares polynomial fit of a matrix-valued sample set; returns a
// Polynomial in `var` of the given degree.
Polynomial fitMatrix(const std::vector<Eigen::MatrixXd>& samples, const Eigen::VectorXd& pts,
                     int deg, const std::string& var) {
    Eigen::Index r = samples[0].rows(), c = samples[0].cols();
    Polynomial out(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) {
            Eigen::VectorXd y(pts.size());
            for (Eigen::Index k = 0; k < pts.size(); ++k) y(k) = samples[static_cast<size_t>(k)](i, j);
            Eigen::VectorXd coef = cheb::polyfit(pts, y, deg);
            for (int d = 0; d <= deg; ++d) {
                if (coef(d) == 0.0) continue;
                Eigen::MatrixXd cm = Eigen::MatrixXd::Zero(r, c);
                cm(i, j) = coef(d);
                out.addTerm({var}, {d}, cm);
            }
        }
    return out;
}

// Split H(s,th) into  sum_k M_k(s) th^k and stack: F(s) = [M_0 ... M_d],
// G(th) = [I th^0; ...; I th^d].
void separableSplit(const Polynomial& H, const std::string& s, const std::string& th,
                    Eigen::Index n, Polynomial& F, Polynomial& G) {
    int d = H.degree(th);
    std::vector<Polynomial> Fs, Gs;
    for (int k = 0; k <= d; ++k) {
        // coefficient of th^k: take k-th derivative trick is lossy; collect directly
        Polynomial Mk(H.rows(), H.cols());
        for (const auto& [e, c] : H.terms()) {
            // locate exponent of th
            int expTh = 0;
            Polynomial::Exponents rest = e;
            const auto& vars = H.vars();
            for (size_t vi = 0; vi < vars.size(); ++vi)
                if (vars[vi] == th) expTh = e[vi];
            if (expTh != k) continue;
            for (size_t vi = 0; vi < vars.size(); ++vi)
                if (vars[vi] == th) rest[vi] = 0;
            Mk.addTerm(vars, rest, c);
        }
        Fs.push_back(Mk);
        Polynomial gk = Polynomial::monomial(Eigen::MatrixXd::Identity(n, n), {th}, {k});
        Gs.push_back(gk);
    }
    F = Polynomial::hcat(Fs);
    G = Polynomial::vcat(Gs);
}

}  // namespace

PIOperator inverse(const PIOperator& A, const InverseOptions& opts) {
    const std::string s = A.var1, th = A.var2;
    const double a = A.a, b = A.b;
    if (!A.isSquareShape()) throw DimensionMismatch("inverse: operator not square");
    const Eigen::Index m = A.m0, n = A.m1;

    // Pure-matrix operator.
    if (n == 0) {
        Eigen::MatrixXd P = A.P.toConstant();
        Eigen::FullPivLU<Eigen::MatrixXd> lu(P);
        if (!lu.isInvertible()) throw SingularT("inverse: matrix part singular");
        PIOperator out(m, m, 0, 0, a, b, s, th);
        out.P = Polynomial::constant(lu.inverse());
        return out;
    }

    Eigen::VectorXd pts = cheb::nodes(opts.fitNodes - 1, a, b);

    // 1) polynomial least-squares approximation of R0^{-1}
    int degR0 = A.R0.degree(s);
    int dfit = std::max(opts.fitDegreeMin, 2 * degR0);
    std::vector<Eigen::MatrixXd> r0invSamples;
    for (Eigen::Index k = 0; k < pts.size(); ++k) {
        Eigen::MatrixXd R0v = evalAt(A.R0, s, pts(k));
        Eigen::FullPivLU<Eigen::MatrixXd> lu(R0v);
        if (std::abs(lu.determinant()) < opts.singTol)
            throw SingularR0("inverse: |det R0| below tolerance at node");
        r0invSamples.push_back(lu.inverse());
    }
    Polynomial R0inv = A.R0.isConstant() && degR0 == 0
                           ? Polynomial::constant(r0invSamples[0])
                           : fitMatrix(r0invSamples, pts, dfit, s);

    PIOperator Rhat(0, 0, n, n, a, b, s, th);
    Rhat.R0 = R0inv;

    bool hasKernels = !A.R1.isZero() || !A.R2.isZero();
    if (hasKernels) {
        // 2) separable factorization  F_i G_i = -R0^{-1} R_i
        Polynomial F1, G1, F2, G2;
        separableSplit(-(R0inv * A.R1), s, th, n, F1, G1);
        separableSplit(-(R0inv * A.R2), s, th, n, F2, G2);
        Eigen::Index p = F1.cols(), q = F2.cols();

        // 3) integrate U' = M U, V' = -V M with M = [G1F1, G1F2; -G2F1, -G2F2]
        Polynomial G1s = G1.rename(th, s), G2s = G2.rename(th, s);
        Polynomial Mtop = Polynomial::hcat({G1s * F1, G1s * F2});
        Polynomial Mbot = Polynomial::hcat({-(G2s * F1), -(G2s * F2)});
        Polynomial Mp = Polynomial::vcat({Mtop, Mbot});
        auto Mat = [&](double t) { return evalAt(Mp, s, t); };

        Eigen::Index nn = p + q;
        Eigen::MatrixXd U = Eigen::MatrixXd::Identity(nn, nn);
        Eigen::MatrixXd V = Eigen::MatrixXd::Identity(nn, nn);
        std::vector<Eigen::MatrixXd> Us, Vs;
        Us.reserve(pts.size());
        Vs.reserve(pts.size());
        Us.push_back(U);
        Vs.push_back(V);
        double total = b - a;
        for (Eigen::Index k = 1; k < pts.size(); ++k) {
            double t0 = pts(k - 1), t1 = pts(k);
            int steps = std::max(1, (int)std::ceil(opts.odeSteps * (t1 - t0) / total));
            double h = (t1 - t0) / steps;
            for (int st = 0; st < steps; ++st) {
                double t = t0 + st * h;
                auto fU = [&](double tt, const Eigen::MatrixXd& X) { return (Mat(tt) * X).eval(); };
                auto fV = [&](double tt, const Eigen::MatrixXd& X) { return (-X * Mat(tt)).eval(); };
                Eigen::MatrixXd k1 = fU(t, U), k2 = fU(t + h / 2, U + h / 2 * k1),
                                k3 = fU(t + h / 2, U + h / 2 * k2), k4 = fU(t + h, U + h * k3);
                U += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
                Eigen::MatrixXd l1 = fV(t, V), l2 = fV(t + h / 2, V + h / 2 * l1),
                                l3 = fV(t + h / 2, V + h / 2 * l2), l4 = fV(t + h, V + h * l3);
                V += h / 6 * (l1 + 2 * l2 + 2 * l3 + l4);
            }
            Us.push_back(U);
            Vs.push_back(V);
        }

        // 4) kernels L1, L2 from the resolvent formulas
        Eigen::MatrixXd U22b = U.block(p, p, q, q);
        Eigen::MatrixXd Pi = Eigen::MatrixXd::Zero(nn, nn);
        if (q > 0) {
            Eigen::FullPivLU<Eigen::MatrixXd> lu(U22b);
            if (std::abs(lu.determinant()) < opts.singTol)
                throw SingularU22("inverse: |det U22(b)| below tolerance");
            Pi.block(p, 0, q, p) = lu.solve(U.block(p, 0, q, p));
            Pi.block(p, p, q, q) = Eigen::MatrixXd::Identity(q, q);
        }
        int dUV = dfit;
        Polynomial Ufit = fitMatrix(Us, pts, dUV, s);
        Polynomial Vfit = fitMatrix(Vs, pts, dUV, s);
        Polynomial FF = Polynomial::hcat({F1, F2});
        Polynomial GGth = Polynomial::vcat({G1, -G2});
        Polynomial Vth = Vfit.rename(s, th);
        Polynomial core = FF * Ufit;                              // n x nn, in s
        Polynomial L2k = -(core * Polynomial::constant(Pi) * Vth * GGth);
        Polynomial L1k = core * Vth * GGth + L2k;
        Rhat.R1 = L1k * R0inv.rename(s, th);
        Rhat.R2 = L2k * R0inv.rename(s, th);
    }

    if (m == 0) return Rhat;

    // 5) 4-PI inverse via the Schur complement on the finite block.
    PIOperator Q1op(m, 0, 0, n, a, b, s, th);
    Q1op.Q1 = A.Q1;
    PIOperator Q2op(0, m, n, 0, a, b, s, th);
    Q2op.Q2 = A.Q2;
    PIOperator Q1Rhat = compose(Q1op, Rhat);              // maps L2 -> R^m
    Eigen::MatrixXd Tm = A.P.toConstant() - compose(Q1Rhat, Q2op).P.toConstant();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Tm);
    if (std::abs(lu.determinant()) < opts.singTol) throw SingularT("inverse: Schur matrix singular");
    Eigen::MatrixXd Tinv = lu.inverse();
    PIOperator Tiop(m, m, 0, 0, a, b, s, th);
    Tiop.P = Polynomial::constant(Tinv);

    PIOperator RhatQ2 = compose(Rhat, Q2op);              // maps R^m -> L2
    PIOperator topRight = -1.0 * compose(Tiop, Q1Rhat);   // R^m <- L2
    PIOperator botLeft = -1.0 * compose(RhatQ2, Tiop);    // L2 <- R^m
    PIOperator botRight = Rhat + compose(RhatQ2, compose(Tiop, Q1Rhat));

    PIOperator out(m, m, n, n, a, b, s, th);
    out.P = Tiop.P;
    out.Q1 = topRight.Q1;
    out.Q2 = botLeft.Q2;
    out.R0 = botRight.R0;
    out.R1 = botRight.R1;
    out.R2 = botRight.R2;
    return out;
}

}  // namespace pilib
