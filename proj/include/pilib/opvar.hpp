#ifndef PILIB_OPVAR_HPP
#define PILIB_OPVAR_HPP

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "pilib/poly.hpp"

namespace pilib {

struct DimensionMismatch : std::runtime_error {
    explicit DimensionMismatch(const std::string& m) : std::runtime_error("DimensionMismatch: " + m) {}
};
struct DomainMismatch : std::runtime_error {
    explicit DomainMismatch(const std::string& m) : std::runtime_error("DomainMismatch: " + m) {}
};
struct IndexOutOfRange : std::runtime_error {
    explicit IndexOutOfRange(const std::string& m) : std::runtime_error("IndexOutOfRange: " + m) {}
};
struct IllegalOrdering : std::runtime_error {
    explicit IllegalOrdering(const std::string& m) : std::runtime_error("IllegalOrdering: " + m) {}
};
struct NotSelfAdjoint : std::runtime_error {
    explicit NotSelfAdjoint(const std::string& m) : std::runtime_error("NotSelfAdjoint: " + m) {}
};
struct SingularR0 : std::runtime_error {
    explicit SingularR0(const std::string& m) : std::runtime_error("SingularR0: " + m) {}
};
struct SingularU22 : std::runtime_error {
    explicit SingularU22(const std::string& m) : std::runtime_error("SingularU22: " + m) {}
};
struct SingularT : std::runtime_error {
    explicit SingularT(const std::string& m) : std::runtime_error("SingularT: " + m) {}
};

// 4-PI operator on R^{n0} x L2^{n1}[a,b]:
//   (T x)_0    = P x0 + int_a^b Q1(s) x1(s) ds
//   (T x)_1(s) = Q2(s) x0 + R0(s) x1(s) + int_a^s R1(s,th) x1(th) dth
//                + int_s^b R2(s,th) x1(th) dth
// Parameter type P is Polynomial for fixed operators and DecisionPolynomial
// for operator decision variables.
template <class PT>
struct BasicPIOperator {
    Eigen::Index m0 = 0, n0 = 0;  // finite rows/cols
    Eigen::Index m1 = 0, n1 = 0;  // L2 rows/cols
    double a = 0.0, b = 1.0;
    std::string var1 = "s", var2 = "s_dum";
    PT P, Q1, Q2, R0, R1, R2;

    BasicPIOperator() : P(0, 0), Q1(0, 0), Q2(0, 0), R0(0, 0), R1(0, 0), R2(0, 0) {}
    BasicPIOperator(Eigen::Index m0_, Eigen::Index n0_, Eigen::Index m1_, Eigen::Index n1_,
                    double a_ = 0.0, double b_ = 1.0, std::string v1 = "s", std::string v2 = "s_dum")
        : m0(m0_), n0(n0_), m1(m1_), n1(n1_), a(a_), b(b_), var1(std::move(v1)), var2(std::move(v2)),
          P(m0_, n0_), Q1(m0_, n1_), Q2(m1_, n0_), R0(m1_, n1_), R1(m1_, n1_), R2(m1_, n1_) {}

    bool sameSpace(const BasicPIOperator& o) const {
        return a == o.a && b == o.b && var1 == o.var1 && var2 == o.var2;
    }
    Eigen::Index rowDim() const { return m0 + m1; }
    Eigen::Index colDim() const { return n0 + n1; }
    bool isSquareShape() const { return m0 == n0 && m1 == n1; }
};

using PIOperator = BasicPIOperator<Polynomial>;
using DecisionPIOperator = BasicPIOperator<DecisionPolynomial>;

// --- construction helpers -------------------------------------------------

PIOperator identityOp(Eigen::Index n0, Eigen::Index n1, double a, double b,
                      const std::string& v1 = "s", const std::string& v2 = "s_dum");
PIOperator zeroOp(Eigen::Index m0, Eigen::Index n0, Eigen::Index m1, Eigen::Index n1, double a,
                  double b, const std::string& v1 = "s", const std::string& v2 = "s_dum");

// Structural validation of the parameter/variable invariants. Throws on error.
template <class PT>
void checkValid(const BasicPIOperator<PT>& T);

// --- algebra ---------------------------------------------------------------

template <class PT>
BasicPIOperator<PT> operator-(const BasicPIOperator<PT>& A);

template <class PA, class PB>
auto operator+(const BasicPIOperator<PA>& A, const BasicPIOperator<PB>& B)
    -> BasicPIOperator<decltype(std::declval<PA>() + std::declval<PB>())>;

template <class PA, class PB>
auto operator-(const BasicPIOperator<PA>& A, const BasicPIOperator<PB>& B)
    -> BasicPIOperator<decltype(std::declval<PA>() + std::declval<PB>())>;

template <class PT>
BasicPIOperator<PT> operator*(double k, const BasicPIOperator<PT>& A);

// Operator composition A o B.
template <class PA, class PB>
auto compose(const BasicPIOperator<PA>& A, const BasicPIOperator<PB>& B)
    -> BasicPIOperator<decltype(mul(std::declval<PA>(), std::declval<PB>()))>;

template <class PA, class PB>
auto operator*(const BasicPIOperator<PA>& A, const BasicPIOperator<PB>& B)
    -> BasicPIOperator<decltype(mul(std::declval<PA>(), std::declval<PB>()))> {
    return compose(A, B);
}

// Adjoint wrt the RL inner product.
template <class PT>
BasicPIOperator<PT> adjoint(const BasicPIOperator<PT>& A);

// A + c*I on both the finite and L2 diagonal (scalar promotion of §9.2.1).
template <class PT>
BasicPIOperator<PT> plusScalarIdentity(const BasicPIOperator<PT>& A, double c);

// --- block structure --------------------------------------------------------

// Assemble an operator from a grid of blocks; grid rows share output dims,
// grid columns share input dims. A grid row whose blocks map only to R^m may
// not follow a row mapping into L2 (the opvar ordering restriction).
template <class PT>
BasicPIOperator<PT> blockOp(const std::vector<std::vector<BasicPIOperator<PT>>>& grid);

template <class PT>
BasicPIOperator<PT> hcat(const std::vector<BasicPIOperator<PT>>& ops);
template <class PT>
BasicPIOperator<PT> vcat(const std::vector<BasicPIOperator<PT>>& ops);

// Slice rows/cols of the stacked [P Q1; Q2 R] grid (0-based indices; finite
// rows come first). Index lists must keep finite indices before L2 indices.
template <class PT>
BasicPIOperator<PT> slice(const BasicPIOperator<PT>& A, const std::vector<Eigen::Index>& rows,
                          const std::vector<Eigen::Index>& cols);

// --- calculus ----------------------------------------------------------------

// Composition of d/ds with A: maps (x0, x1, ds x1) with x1 in H1.
template <class PT>
BasicPIOperator<PT> diffCompose(const BasicPIOperator<PT>& A);

// --- numeric operations (fixed operators only) -------------------------------

struct InverseOptions {
    int fitNodes = 64;    // Chebyshev sample points for least-squares fits
    int odeSteps = 512;   // RK4 steps for the U/V resolvent ODEs
    int fitDegreeMin = 4;
    double singTol = 1e-10;
};

// Numeric inverse with polynomial parameters (Appendix A inversion lemmas).
PIOperator inverse(const PIOperator& A, const InverseOptions& opts = {});

// Numeric sign test: -1 negative definite, 0 indefinite, +1 positive definite.
int postest(const PIOperator& A, int gridN = 32, double tol = 1e-8);

// Symbolic action on (x0, polynomial x1); returns {y0 (constant m0-vector), y1 polynomial}.
struct PolyAction {
    Eigen::VectorXd y0;
    Polynomial y1;
};
PolyAction applyPoly(const PIOperator& A, const Eigen::VectorXd& x0, const Polynomial& x1);

// Degrees {d1, [b0,b1,b2]} such that a poslpivar of those degrees can match Q.
struct PosDegrees {
    int d1 = 1;
    std::array<int, 3> db{1, 1, 1};
};
template <class PT>
PosDegrees degbalance(const BasicPIOperator<PT>& Q);

// Max coefficient distance across the six parameters (inf if shapes differ).
double paramDistance(const PIOperator& A, const PIOperator& B);
bool operator==(const PIOperator& A, const PIOperator& B);

// Manual-style block display:  [P | Q1]  over  [Q2 | R0 R1 R2].
std::string show(const PIOperator& A, double droptol = 1e-12);

// Substitute decision-variable values to obtain a fixed operator.
PIOperator substitute(const DecisionPIOperator& A, const std::map<std::string, double>& decvals);

// ---------------------------------------------------------------------------
// template implementations

namespace detail {
inline const char* kEta = "eta__";
}

template <class PT>
void checkValid(const BasicPIOperator<PT>& T) {
    auto dep = [](const auto& p, const std::string& v) {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, Polynomial>) {
            return p.dependsOn(v);
        } else {
            if (p.constant().dependsOn(v)) return true;
            for (const auto& [d, q] : p.linear())
                if (q.dependsOn(v)) return true;
            return false;
        }
    };
    if (!(T.a < T.b)) throw DomainMismatch("invalid interval");
    if (T.P.rows() != T.m0 || T.P.cols() != T.n0 || T.Q1.rows() != T.m0 || T.Q1.cols() != T.n1 ||
        T.Q2.rows() != T.m1 || T.Q2.cols() != T.n0 || T.R0.rows() != T.m1 || T.R0.cols() != T.n1 ||
        T.R1.rows() != T.m1 || T.R1.cols() != T.n1 || T.R2.rows() != T.m1 || T.R2.cols() != T.n1)
        throw DimensionMismatch("parameter shapes inconsistent with dim");
    if (dep(T.P, T.var1) || dep(T.P, T.var2)) throw DimensionMismatch("P must be constant");
    for (const auto* p : {&T.Q1, &T.Q2, &T.R0})
        if (dep(*p, T.var2)) throw DimensionMismatch("Q1/Q2/R0 may depend on var1 only");
}

template <class PT>
BasicPIOperator<PT> operator-(const BasicPIOperator<PT>& A) {
    BasicPIOperator<PT> C = A;
    C.P = -A.P;
    C.Q1 = -A.Q1;
    C.Q2 = -A.Q2;
    C.R0 = -A.R0;
    C.R1 = -A.R1;
    C.R2 = -A.R2;
    return C;
}

template <class PA, class PB>
auto operator+(const BasicPIOperator<PA>& A, const BasicPIOperator<PB>& B)
    -> BasicPIOperator<decltype(std::declval<PA>() + std::declval<PB>())> {
    using PC = decltype(std::declval<PA>() + std::declval<PB>());
    if (A.m0 != B.m0 || A.n0 != B.n0 || A.m1 != B.m1 || A.n1 != B.n1)
        throw DimensionMismatch("operator add");
    if (!(A.a == B.a && A.b == B.b && A.var1 == B.var1 && A.var2 == B.var2))
        throw DomainMismatch("operator add");
    BasicPIOperator<PC> C(A.m0, A.n0, A.m1, A.n1, A.a, A.b, A.var1, A.var2);
    C.P = A.P + B.P;
    C.Q1 = A.Q1 + B.Q1;
    C.Q2 = A.Q2 + B.Q2;
    C.R0 = A.R0 + B.R0;
    C.R1 = A.R1 + B.R1;
    C.R2 = A.R2 + B.R2;
    return C;
}

template <class PA, class PB>
auto operator-(const BasicPIOperator<PA>& A, const BasicPIOperator<PB>& B)
    -> BasicPIOperator<decltype(std::declval<PA>() + std::declval<PB>())> {
    return A + (-B);
}

template <class PT>
BasicPIOperator<PT> operator*(double k, const BasicPIOperator<PT>& A) {
    BasicPIOperator<PT> C = A;
    C.P = A.P * k;
    C.Q1 = A.Q1 * k;
    C.Q2 = A.Q2 * k;
    C.R0 = A.R0 * k;
    C.R1 = A.R1 * k;
    C.R2 = A.R2 * k;
    return C;
}

template <class PA, class PB>
auto compose(const BasicPIOperator<PA>& A, const BasicPIOperator<PB>& B)
    -> BasicPIOperator<decltype(mul(std::declval<PA>(), std::declval<PB>()))> {
    using PC = decltype(mul(std::declval<PA>(), std::declval<PB>()));
    if (A.n0 != B.m0 || A.n1 != B.m1) throw DimensionMismatch("compose: inner dims");
    if (!(A.a == B.a && A.b == B.b && A.var1 == B.var1 && A.var2 == B.var2))
        throw DomainMismatch("compose");
    const std::string s = A.var1, th = A.var2, eta = detail::kEta;
    const Polynomial ps = Polynomial::variable(s);
    const Polynomial pth = Polynomial::variable(th);
    const Polynomial pa = Polynomial::constant(A.a);
    const Polynomial pb = Polynomial::constant(A.b);

    auto to2 = [&](const auto& p) { return p.rename(s, th); };               // f(s) -> f(th)
    auto toEta1 = [&](const auto& p) { return p.rename(s, eta); };          // f(s, th) -> f(eta, th)
    auto toEta2 = [&](const auto& p) { return p.rename(th, eta); };         // f(s, th) -> f(s, eta)
    auto kernelEtaTh = [&](const auto& p) { return p.rename(s, eta); };     // K(s,th) -> K(eta,th)
    auto kernelEtaS = [&](const auto& p) { return p.rename(th, std::string("tmp__")).rename(s, eta).rename(std::string("tmp__"), s); };
    // K(s,th) -> K(eta, s)

    BasicPIOperator<PC> C(A.m0, B.n0, A.m1, B.n1, A.a, A.b, s, th);

    // P = P_A P_B + int_a^b Q1_A(s) Q2_B(s) ds
    C.P = mul(A.P, B.P) + mul(A.Q1, B.Q2).integrate(s, pa, pb);

    // Q1(s) = P_A Q1_B(s) + Q1_A(s) R0_B(s)
    //         + int_s^b Q1_A(eta) R1_B(eta,s) deta + int_a^s Q1_A(eta) R2_B(eta,s) deta
    {
        auto t1 = mul(A.P, B.Q1);
        auto t2 = mul(A.Q1, B.R0);
        auto q1eta = toEta1(A.Q1);
        auto t3 = mul(q1eta, kernelEtaS(B.R1)).integrate(eta, ps, pb);
        auto t4 = mul(q1eta, kernelEtaS(B.R2)).integrate(eta, pa, ps);
        C.Q1 = t1 + t2 + t3 + t4;
    }

    // Q2(s) = Q2_A(s) P_B + R0_A(s) Q2_B(s)
    //         + int_a^s R1_A(s,th) Q2_B(th) dth + int_s^b R2_A(s,th) Q2_B(th) dth
    {
        auto q2bth = to2(B.Q2);
        auto t1 = mul(A.Q2, B.P);
        auto t2 = mul(A.R0, B.Q2);
        auto t3 = mul(A.R1, q2bth).integrate(th, pa, ps);
        auto t4 = mul(A.R2, q2bth).integrate(th, ps, pb);
        C.Q2 = t1 + t2 + t3 + t4;
    }

    C.R0 = mul(A.R0, B.R0);

    // Kernels. For C.R1 (s > th) and C.R2 (s < th):
    {
        auto r0bth = to2(B.R0);
        auto q1bth = to2(B.Q1);
        auto r1aEta = toEta2(A.R1);  // R1_A(s, eta)
        auto r2aEta = toEta2(A.R2);
        auto r1bEta = kernelEtaTh(B.R1);  // R1_B(eta, th)
        auto r2bEta = kernelEtaTh(B.R2);
        auto cross = mul(A.Q2, q1bth);

        auto r1 = mul(A.R0, B.R1) + mul(A.R1, r0bth) + cross +
                  mul(r1aEta, r1bEta).integrate(eta, pth, ps) +
                  mul(r1aEta, r2bEta).integrate(eta, pa, pth) +
                  mul(r2aEta, r1bEta).integrate(eta, ps, pb);
        auto r2 = mul(A.R0, B.R2) + mul(A.R2, r0bth) + cross +
                  mul(r2aEta, r2bEta).integrate(eta, ps, pth) +
                  mul(r1aEta, r2bEta).integrate(eta, pa, ps) +
                  mul(r2aEta, r1bEta).integrate(eta, pth, pb);
        C.R1 = r1;
        C.R2 = r2;
    }
    return C;
}

template <class PT>
BasicPIOperator<PT> adjoint(const BasicPIOperator<PT>& A) {
    const std::string s = A.var1, th = A.var2, tmp = "swap__";
    auto swapVars = [&](const PT& p) { return p.rename(s, tmp).rename(th, s).rename(tmp, th); };
    BasicPIOperator<PT> C(A.n0, A.m0, A.n1, A.m1, A.a, A.b, s, th);
    C.P = A.P.transpose();
    C.Q1 = A.Q2.transpose();
    C.Q2 = A.Q1.transpose();
    C.R0 = A.R0.transpose();
    C.R1 = swapVars(A.R2).transpose();
    C.R2 = swapVars(A.R1).transpose();
    return C;
}

template <class PT>
BasicPIOperator<PT> plusScalarIdentity(const BasicPIOperator<PT>& A, double c) {
    if (!A.isSquareShape()) throw DimensionMismatch("plusScalarIdentity: not square");
    BasicPIOperator<PT> C = A;
    C.P = A.P + PT(Polynomial::constant(Eigen::MatrixXd::Identity(A.m0, A.n0) * c));
    C.R0 = A.R0 + PT(Polynomial::constant(Eigen::MatrixXd::Identity(A.m1, A.n1) * c));
    return C;
}

template <class PT>
BasicPIOperator<PT> blockOp(const std::vector<std::vector<BasicPIOperator<PT>>>& grid) {
    if (grid.empty() || grid[0].empty()) throw DimensionMismatch("blockOp: empty grid");
    const auto& first = grid[0][0];
    size_t ncols = grid[0].size();
    for (const auto& row : grid) {
        if (row.size() != ncols) throw DimensionMismatch("blockOp: ragged grid");
        for (size_t j = 0; j < ncols; ++j) {
            if (!row[j].sameSpace(first)) throw DomainMismatch("blockOp");
            if (row[j].m0 != row[0].m0 || row[j].m1 != row[0].m1)
                throw DimensionMismatch("blockOp: row output dims");
            if (row[j].n0 != grid[0][j].n0 || row[j].n1 != grid[0][j].n1)
                throw DimensionMismatch("blockOp: column input dims");
        }
    }
    auto collect = [&](auto proj) {
        std::vector<PT> rows;
        for (const auto& row : grid) {
            std::vector<PT> cells;
            for (const auto& op : row) cells.push_back(proj(op));
            rows.push_back(PT::hcat(cells));
        }
        return PT::vcat(rows);
    };
    Eigen::Index m0 = 0, m1 = 0, n0 = 0, n1 = 0;
    for (const auto& row : grid) {
        m0 += row[0].m0;
        m1 += row[0].m1;
    }
    for (size_t j = 0; j < ncols; ++j) {
        n0 += grid[0][j].n0;
        n1 += grid[0][j].n1;
    }
    BasicPIOperator<PT> C(m0, n0, m1, n1, first.a, first.b, first.var1, first.var2);
    C.P = collect([](const auto& o) { return o.P; });
    C.Q1 = collect([](const auto& o) { return o.Q1; });
    C.Q2 = collect([](const auto& o) { return o.Q2; });
    C.R0 = collect([](const auto& o) { return o.R0; });
    C.R1 = collect([](const auto& o) { return o.R1; });
    C.R2 = collect([](const auto& o) { return o.R2; });
    return C;
}

template <class PT>
BasicPIOperator<PT> hcat(const std::vector<BasicPIOperator<PT>>& ops) {
    // An opvar cannot represent L2-columns ahead of finite columns, so a block
    // with purely finite inputs may not follow one with purely L2 inputs.
    bool sawL2 = false;
    for (const auto& o : ops) {
        if (o.n1 > 0 && o.n0 == 0) sawL2 = true;
        else if (sawL2 && o.n0 > 0 && o.n1 == 0)
            throw IllegalOrdering("hcat: finite-input block after L2-input block");
    }
    return blockOp<PT>({ops});
}

template <class PT>
BasicPIOperator<PT> vcat(const std::vector<BasicPIOperator<PT>>& ops) {
    bool sawL2 = false;
    for (const auto& o : ops) {
        if (o.m1 > 0 && o.m0 == 0) sawL2 = true;
        else if (sawL2 && o.m0 > 0 && o.m1 == 0)
            throw IllegalOrdering("vcat: finite-output block after L2-output block");
    }
    std::vector<std::vector<BasicPIOperator<PT>>> grid;
    for (const auto& o : ops) grid.push_back({o});
    return blockOp<PT>(grid);
}

template <class PT>
BasicPIOperator<PT> slice(const BasicPIOperator<PT>& A, const std::vector<Eigen::Index>& rows,
                          const std::vector<Eigen::Index>& cols) {
    std::vector<Eigen::Index> rFin, rL2, cFin, cL2;
    bool seenL2 = false;
    for (auto r : rows) {
        if (r < 0 || r >= A.rowDim()) throw IndexOutOfRange("slice row");
        if (r < A.m0) {
            if (seenL2) throw IllegalOrdering("slice: finite row after L2 row");
            rFin.push_back(r);
        } else {
            seenL2 = true;
            rL2.push_back(r - A.m0);
        }
    }
    seenL2 = false;
    for (auto c : cols) {
        if (c < 0 || c >= A.colDim()) throw IndexOutOfRange("slice col");
        if (c < A.n0) {
            if (seenL2) throw IllegalOrdering("slice: finite col after L2 col");
            cFin.push_back(c);
        } else {
            seenL2 = true;
            cL2.push_back(c - A.n0);
        }
    }
    auto gather = [](const PT& p, const std::vector<Eigen::Index>& ri,
                     const std::vector<Eigen::Index>& ci) {
        std::vector<PT> rowParts;
        for (auto r : ri) {
            std::vector<PT> cells;
            for (auto c : ci) cells.push_back(p.block(r, c, 1, 1));
            rowParts.push_back(cells.empty() ? PT(1, 0) : PT::hcat(cells));
        }
        if (rowParts.empty()) return PT(0, static_cast<Eigen::Index>(ci.size()));
        return PT::vcat(rowParts);
    };
    BasicPIOperator<PT> C(static_cast<Eigen::Index>(rFin.size()), static_cast<Eigen::Index>(cFin.size()),
                          static_cast<Eigen::Index>(rL2.size()), static_cast<Eigen::Index>(cL2.size()),
                          A.a, A.b, A.var1, A.var2);
    C.P = gather(A.P, rFin, cFin);
    C.Q1 = gather(A.Q1, rFin, cL2);
    C.Q2 = gather(A.Q2, rL2, cFin);
    C.R0 = gather(A.R0, rL2, cL2);
    C.R1 = gather(A.R1, rL2, cL2);
    C.R2 = gather(A.R2, rL2, cL2);
    return C;
}

template <class PT>
BasicPIOperator<PT> diffCompose(const BasicPIOperator<PT>& A) {
    const std::string s = A.var1, th = A.var2;
    BasicPIOperator<PT> D(0, A.n0, A.m1, 2 * A.n1, A.a, A.b, s, th);
    auto onDiag = A.R1.subs(th, Polynomial::variable(s)) - A.R2.subs(th, Polynomial::variable(s));
    D.Q2 = A.Q2.diff(s);
    D.R0 = PT::hcat({A.R0.diff(s) + onDiag, A.R0});
    D.R1 = PT::hcat({A.R1.diff(s), PT(A.m1, A.n1)});
    D.R2 = PT::hcat({A.R2.diff(s), PT(A.m1, A.n1)});
    return D;
}

template <class PT>
PosDegrees degbalance(const BasicPIOperator<PT>& Q) {
    auto degOf = [](const auto& p, const std::string& v) {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, Polynomial>) {
            return p.degree(v);
        } else {
            int d = p.constant().degree(v);
            for (const auto& [dv, q] : p.linear()) d = std::max(d, q.degree(v));
            return d;
        }
    };
    auto totalOf = [](const auto& p) {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, Polynomial>) {
            return p.totalDegree();
        } else {
            int d = p.constant().totalDegree();
            for (const auto& [dv, q] : p.linear()) d = std::max(d, q.totalDegree());
            return d;
        }
    };
    PosDegrees d;
    int d1 = 0;
    for (const auto* p : {&Q.Q1, &Q.Q2, &Q.R0}) d1 = std::max(d1, degOf(*p, Q.var1));
    d.d1 = (d1 + 1) / 2;
    int ds = 0, dt = 0, dj = 0;
    for (const auto* p : {&Q.R1, &Q.R2}) {
        ds = std::max(ds, degOf(*p, Q.var1));
        dt = std::max(dt, degOf(*p, Q.var2));
        dj = std::max(dj, totalOf(*p));
    }
    d.db = {(ds + 1) / 2 + 1, (dt + 1) / 2 + 1, (dj + 1) / 2 + 1};
    d.d1 = std::max(d.d1, 1);
    return d;
}

}  // namespace pilib

#endif
