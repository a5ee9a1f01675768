#include "pilib/lpi.hpp"

#include <sstream>

namespace pilib {

LPIProgram::LPIProgram(const std::string& var, double a, double b, std::string dumVar)
    : var1_(var), var2_(dumVar.empty() ? var + "_dum" : std::move(dumVar)), a_(a), b_(b) {
    if (!(a < b)) throw DomainMismatch("lpiprogram: invalid domain");
}

int LPIProgram::addName(const std::string& name, int psdId) {
    if (index_.count(name)) throw DuplicateName(name);
    int idx = (int)names_.size();
    names_.push_back(name);
    index_[name] = idx;
    psdOf_.push_back(psdId);
    return idx;
}

std::string LPIProgram::freshName(const std::string& stem) {
    return stem + "_" + std::to_string(++counter_);
}

DecisionPolynomial LPIProgram::decvar(const std::string& name) {
    addName(name, -1);
    return DecisionPolynomial::decvar(name);
}

DecisionPolynomial LPIProgram::decvars(Eigen::Index rows, Eigen::Index cols) {
    DecisionPolynomial out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) {
            std::string nm = freshName("coeff");
            addName(nm, -1);
            DecisionPolynomial d = DecisionPolynomial::decvar(nm);
            Eigen::MatrixXd lift = Eigen::MatrixXd::Zero(rows, cols);
            lift(i, j) = 1.0;
            out = out + mul(d, Polynomial::constant(lift));
        }
    return out;
}

DecisionPolynomial LPIProgram::psdBlock(Eigen::Index size) {
    int blkId = (int)psd_.size();
    Psd blk{(int)names_.size(), size};
    DecisionPolynomial T(size, size);
    for (Eigen::Index i = 0; i < size; ++i)
        for (Eigen::Index j = i; j < size; ++j) {
            std::string nm = freshName("coeff");
            addName(nm, blkId);
            Eigen::MatrixXd lift = Eigen::MatrixXd::Zero(size, size);
            lift(i, j) = 1.0;
            lift(j, i) = 1.0;
            T = T + mul(DecisionPolynomial::decvar(nm), Polynomial::constant(lift));
        }
    psd_.push_back(blk);
    return T;
}

void LPIProgram::addEq(const DecisionPolynomial& dp, bool symmetric) {
    // one linear equation per (entry, monomial)
    struct Key {
        Eigen::Index i, j;
        std::vector<int> e;
        std::vector<std::string> vars;
        bool operator<(const Key& o) const {
            return std::tie(i, j, e, vars) < std::tie(o.i, o.j, o.e, o.vars);
        }
    };
    std::map<Key, LinRow> rows;
    dp.forEachCoefficient([&](const std::string& dv, const Polynomial::Exponents& e, Eigen::Index i,
                              Eigen::Index j, double v, const std::vector<std::string>& vars) {
        if (symmetric && j < i) return;
        // normalize exponent key: drop zero-exponent variables
        Key k;
        k.i = i;
        k.j = j;
        for (size_t t = 0; t < e.size(); ++t)
            if (e[t] != 0) {
                k.e.push_back(e[t]);
                k.vars.push_back(vars[t]);
            }
        auto& row = rows[k];
        if (dv.empty()) {
            row.rhs -= v;
        } else {
            auto it = index_.find(dv);
            if (it == index_.end()) throw UnknownVariable("lpi_eq: decvar " + dv);
            row.terms.emplace_back(it->second, v);
        }
    });
    for (auto& [k, row] : rows) {
        // merge duplicate indices
        std::map<int, double> merged;
        for (auto& [idx, v] : row.terms) merged[idx] += v;
        LinRow out;
        out.rhs = row.rhs;
        for (auto& [idx, v] : merged)
            if (v != 0.0) out.terms.emplace_back(idx, v);
        if (out.terms.empty()) {
            if (std::abs(out.rhs) > 1e-9)
                throw DimensionMismatch("lpi_eq: inconsistent constant constraint");
            continue;
        }
        eqs_.push_back(std::move(out));
    }
    solution_.reset();
}

void LPIProgram::addEq(const DecisionPIOperator& Q, bool symmetric) {
    if (symmetric && (Q.m0 != Q.n0 || Q.m1 != Q.n1))
        throw DimensionMismatch("lpi_eq: symmetric flag requires a square operator");
    addEq(Q.P, symmetric);
    addEq(Q.Q1, false);
    if (!symmetric) addEq(Q.Q2, false);
    addEq(Q.R0, symmetric);
    addEq(Q.R1, false);
    if (!symmetric) addEq(Q.R2, false);
}

void LPIProgram::addScalarIneq(const DecisionPolynomial& expr) {
    if (expr.rows() != 1 || expr.cols() != 1)
        throw DimensionMismatch("scalar inequality must be 1x1");
    DecisionPolynomial lam = psdBlock(1);
    addEq(expr - lam, false);
}

void LPIProgram::setObjective(const DecisionPolynomial& linear) {
    if (linear.rows() != 1 || linear.cols() != 1)
        throw DimensionMismatch("objective must be scalar");
    objective_.clear();
    for (const auto& [dv, p] : linear.linear()) {
        if (!p.isConstant()) throw DimensionMismatch("objective must be linear in decvars");
        auto it = index_.find(dv);
        if (it == index_.end()) throw UnknownVariable("lpisetobj: " + dv);
        objective_.emplace_back(it->second, p.toScalar());
    }
    solution_.reset();
}

SDPProblem LPIProgram::compile() const {
    SDPProblem prob;
    const int n = (int)names_.size();
    // PSD blocks first, then one diagonal block for split free variables.
    std::vector<int> freeIdx;
    for (int t = 0; t < n; ++t)
        if (psdOf_[(size_t)t] < 0) freeIdx.push_back(t);
    std::vector<int> freeSlot(n, -1);
    for (size_t k = 0; k < freeIdx.size(); ++k) freeSlot[(size_t)freeIdx[k]] = (int)k;

    for (const auto& blk : psd_) prob.blocks.push_back({(int)blk.size, false});
    int freeBlk = (int)prob.blocks.size();
    if (!freeIdx.empty()) prob.blocks.push_back({(int)(2 * freeIdx.size()), true});

    // locate a decvar inside its PSD block
    auto entryOf = [&](int idx) {
        int blkId = psdOf_[(size_t)idx];
        const Psd& blk = psd_[(size_t)blkId];
        int off = idx - blk.start;
        // upper-tri row-major: off = i*size - i(i-1)/2 + (j - i)
        int i = 0;
        Eigen::Index rem = off;
        while (rem >= blk.size - i) {
            rem -= blk.size - i;
            ++i;
        }
        int j = i + (int)rem;
        return std::tuple<int, int, int>(blkId, i, j);
    };
    auto pushCoeff = [&](std::vector<SDPProblem::Entry>& out, int idx, double v) {
        if (psdOf_[(size_t)idx] >= 0) {
            auto [blk, i, j] = entryOf(idx);
            out.push_back({blk, i, j, i == j ? v : v / 2});
        } else {
            int slot = freeSlot[(size_t)idx];
            out.push_back({freeBlk, slot, slot, v});
            int neg = slot + (int)freeIdx.size();
            out.push_back({freeBlk, neg, neg, -v});
        }
    };

    prob.rows.resize(eqs_.size());
    prob.b.resize((Eigen::Index)eqs_.size());
    for (size_t r = 0; r < eqs_.size(); ++r) {
        for (const auto& [idx, v] : eqs_[r].terms) pushCoeff(prob.rows[r], idx, v);
        prob.b((Eigen::Index)r) = eqs_[r].rhs;
    }
    for (const auto& [idx, v] : objective_) pushCoeff(prob.cost, idx, v);
    // small drift penalty for the split pairs
    for (size_t k = 0; k < 2 * freeIdx.size(); ++k)
        prob.cost.push_back({freeBlk, (int)k, (int)k, 1e-9});
    return prob;
}

LPIProgram::Diagnostics LPIProgram::solve(const SDPOptions& opts) {
    SDPProblem prob = compile();
    SDPSolution sol = solveSDP(prob, opts);
    diag_ = Diagnostics{};
    diag_.iterations = sol.iterations;
    diag_.gap = sol.gap;
    diag_.presidual = sol.presidual;
    diag_.dresidual = sol.dresidual;
    diag_.pinf = sol.verdict == SDPVerdict::PrimalInfeasible;
    diag_.dinf = sol.verdict == SDPVerdict::DualInfeasible;
    diag_.verdict = sol.verdict == SDPVerdict::Feasible ? "feasible"
                    : (diag_.pinf || diag_.dinf)        ? "infeasible"
                                                        : "marginal";
    diag_.message = sol.message;

    std::map<std::string, double> vals;
    std::vector<int> freeIdx;
    for (int t = 0; t < (int)names_.size(); ++t)
        if (psdOf_[(size_t)t] < 0) freeIdx.push_back(t);
    std::map<int, int> freeSlot;
    for (size_t k = 0; k < freeIdx.size(); ++k) freeSlot[freeIdx[k]] = (int)k;
    int freeBlk = (int)psd_.size();
    for (int t = 0; t < (int)names_.size(); ++t) {
        int blkId = psdOf_[(size_t)t];
        if (blkId >= 0) {
            const Psd& blk = psd_[(size_t)blkId];
            int off = t - blk.start;
            int i = 0;
            Eigen::Index rem = off;
            while (rem >= blk.size - i) {
                rem -= blk.size - i;
                ++i;
            }
            int j = i + (int)rem;
            vals[names_[(size_t)t]] = sol.X[(size_t)blkId](i, j);
        } else {
            int slot = freeSlot[t];
            const Eigen::MatrixXd& D = sol.X[(size_t)freeBlk];
            vals[names_[(size_t)t]] = D(slot, slot) - D(slot + (int)freeIdx.size(),
                                                        slot + (int)freeIdx.size());
        }
    }
    solution_ = std::move(vals);
    return diag_;
}

const std::map<std::string, double>& LPIProgram::solution() const {
    if (!solution_) throw std::runtime_error("LPIProgram: program not solved");
    return *solution_;
}

double LPIProgram::value(const DecisionPolynomial& scalar) const {
    return getsol(scalar).toScalar();
}

Polynomial LPIProgram::getsol(const DecisionPolynomial& p) const {
    return p.substitute(solution());
}

PIOperator LPIProgram::getsol(const DecisionPIOperator& op) const {
    return substitute(op, solution());
}

// ---------------------------------------------------------------------------

DecisionPIOperator asDecision(const PIOperator& op) {
    DecisionPIOperator out(op.m0, op.n0, op.m1, op.n1, op.a, op.b, op.var1, op.var2);
    out.P = DecisionPolynomial(op.P);
    out.Q1 = DecisionPolynomial(op.Q1);
    out.Q2 = DecisionPolynomial(op.Q2);
    out.R0 = DecisionPolynomial(op.R0);
    out.R1 = DecisionPolynomial(op.R1);
    out.R2 = DecisionPolynomial(op.R2);
    return out;
}

namespace {

// monomial basis in var of degrees 0..d, as a (d+1) x 1 polynomial column
Polynomial monomialColumn(const std::string& var, int d) {
    std::vector<Polynomial> rows;
    for (int k = 0; k <= d; ++k)
        rows.push_back(Polynomial::monomial(Eigen::MatrixXd::Ones(1, 1), {var}, {k}));
    return Polynomial::vcat(rows);
}

// Z2 basis {s^i th^j : i <= b0, j <= b1, i+j <= b2} as a q x 1 column
Polynomial z2Column(const std::string& s, const std::string& th, const std::array<int, 3>& db,
                    int* count = nullptr) {
    std::vector<Polynomial> rows;
    for (int i = 0; i <= db[0]; ++i)
        for (int j = 0; j <= db[1]; ++j) {
            if (i + j > db[2]) continue;
            rows.push_back(Polynomial::monomial(Eigen::MatrixXd::Ones(1, 1), {s, th}, {i, j}));
        }
    if (count) *count = (int)rows.size();
    if (rows.empty()) throw BadDegreeSpec("empty Z2 basis");
    return Polynomial::vcat(rows);
}

Polynomial kron(const Polynomial& col, Eigen::Index n) {
    // col (q x 1) -> (q n x n) block column of col_k * I_n
    std::vector<Polynomial> rows;
    for (Eigen::Index k = 0; k < col.rows(); ++k)
        rows.push_back(scalarMul(col.block(k, 0, 1, 1), Polynomial::identity(n)));
    return Polynomial::vcat(rows);
}

}  // namespace

DecisionPIOperator poslpivar(LPIProgram& prog, Eigen::Index n0, Eigen::Index n1,
                             const PosDegrees& deg, const PosOptions& opts) {
    if (n0 < 0 || n1 < 0 || deg.d1 < 0) throw BadDegreeSpec("poslpivar");
    const std::string s = prog.var1(), th = prog.var2();
    const double a = prog.a(), b = prog.b();

    // Z operator blocks: [x0; Z1 x1; int_a^s Z2 x1; int_s^b Z2 x1] (sep merges
    // the two integral blocks into a full-domain one).
    struct Blk {
        char kind;  // 'c' const, 'm' multiplier Z1, 'l' lower, 'u' upper, 'f' full (sep)
        Eigen::Index rows;
    };
    std::vector<Blk> blks;
    if (n0 > 0 && !opts.exclude[0]) blks.push_back({'c', n0});
    int q1 = 0, q2 = 0;
    Polynomial Z1(0, 0), Z2(0, 0);
    if (n1 > 0 && !opts.exclude[1]) {
        Z1 = monomialColumn(s, deg.d1);
        q1 = deg.d1 + 1;
        blks.push_back({'m', n1 * q1});
    }
    if (n1 > 0 && (!opts.exclude[2] || !opts.exclude[3])) {
        Z2 = z2Column(s, th, deg.db, &q2);
        if (opts.sep) {
            if (!opts.exclude[2]) blks.push_back({'f', n1 * q2});
        } else {
            if (!opts.exclude[2]) blks.push_back({'l', n1 * q2});
            if (!opts.exclude[3]) blks.push_back({'u', n1 * q2});
        }
    }
    Eigen::Index nv = 0;
    for (const auto& blk : blks) nv += blk.rows;
    if (nv == 0) throw BadDegreeSpec("poslpivar: empty parameterization");

    PIOperator Z(0, n0, nv, n1, a, b, s, th);
    {
        std::vector<Polynomial> q2rows, r0rows, r1rows, r2rows;
        for (const auto& blk : blks) {
            switch (blk.kind) {
                case 'c':
                    q2rows.push_back(Polynomial::identity(n0));
                    r0rows.push_back(Polynomial::zero(n0, n1));
                    r1rows.push_back(Polynomial::zero(n0, n1));
                    r2rows.push_back(Polynomial::zero(n0, n1));
                    break;
                case 'm':
                    q2rows.push_back(Polynomial::zero(blk.rows, n0));
                    r0rows.push_back(kron(Z1, n1));
                    r1rows.push_back(Polynomial::zero(blk.rows, n1));
                    r2rows.push_back(Polynomial::zero(blk.rows, n1));
                    break;
                case 'l':
                    q2rows.push_back(Polynomial::zero(blk.rows, n0));
                    r0rows.push_back(Polynomial::zero(blk.rows, n1));
                    r1rows.push_back(kron(Z2, n1));
                    r2rows.push_back(Polynomial::zero(blk.rows, n1));
                    break;
                case 'u':
                    q2rows.push_back(Polynomial::zero(blk.rows, n0));
                    r0rows.push_back(Polynomial::zero(blk.rows, n1));
                    r1rows.push_back(Polynomial::zero(blk.rows, n1));
                    r2rows.push_back(kron(Z2, n1));
                    break;
                case 'f':
                    q2rows.push_back(Polynomial::zero(blk.rows, n0));
                    r0rows.push_back(Polynomial::zero(blk.rows, n1));
                    r1rows.push_back(kron(Z2, n1));
                    r2rows.push_back(kron(Z2, n1));
                    break;
            }
        }
        Z.Q2 = Polynomial::vcat(q2rows);
        Z.R0 = Polynomial::vcat(r0rows);
        Z.R1 = Polynomial::vcat(r1rows);
        Z.R2 = Polynomial::vcat(r2rows);
    }

    DecisionPolynomial T = prog.psdBlock(nv);
    Polynomial g = opts.psatz == 0
                       ? Polynomial::constant(1.0)
                       : (Polynomial::constant(b) - Polynomial::variable(s)) *
                             (Polynomial::variable(s) - Polynomial::constant(a));
    // pure multiplier operator on L2^{nv} with R0 = g(s) T
    DecisionPIOperator M(0, 0, nv, nv, a, b, s, th);
    for (const auto& [dv, p] : T.linear()) {
        // scale each coefficient by g(s)
        M.R0 = M.R0 + mul(DecisionPolynomial::decvar(dv), scalarMul(g, p));
    }

    DecisionPIOperator MZ = compose(M, Z);
    return compose(adjoint(Z), MZ);
}

DecisionPIOperator lpivar(LPIProgram& prog, Eigen::Index m0, Eigen::Index n0, Eigen::Index m1,
                          Eigen::Index n1, const std::array<int, 3>& deg) {
    if (deg[0] < 0 || deg[1] < 0 || deg[2] < 0) throw BadDegreeSpec("lpivar");
    const std::string s = prog.var1(), th = prog.var2();
    DecisionPIOperator out(m0, n0, m1, n1, prog.a(), prog.b(), s, th);
    auto fill = [&](Eigen::Index r, Eigen::Index c, bool inS, bool kernel) {
        DecisionPolynomial p(r, c);
        if (r == 0 || c == 0) return p;
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) {
                Eigen::MatrixXd lift = Eigen::MatrixXd::Zero(r, c);
                lift(i, j) = 1.0;
                Polynomial cell = Polynomial::constant(lift);
                if (!kernel) {
                    int dmax = inS ? deg[0] : 0;
                    for (int k = 0; k <= dmax; ++k) {
                        Polynomial mono = Polynomial::monomial(Eigen::MatrixXd::Ones(1, 1), {s}, {k});
                        p = p + mul(prog.decvar(prog.freshName("coeff")), scalarMul(mono, cell));
                    }
                } else {
                    for (int ks = 0; ks <= deg[2]; ++ks)
                        for (int kt = 0; kt <= deg[1]; ++kt) {
                            Polynomial mono = Polynomial::monomial(Eigen::MatrixXd::Ones(1, 1),
                                                                   {s, th}, {ks, kt});
                            p = p + mul(prog.decvar(prog.freshName("coeff")), scalarMul(mono, cell));
                        }
                }
            }
        return p;
    };
    out.P = fill(m0, n0, false, false);
    out.Q1 = fill(m0, n1, true, false);
    out.Q2 = fill(m1, n0, true, false);
    out.R0 = fill(m1, n1, true, false);
    out.R1 = fill(m1, n1, true, true);
    out.R2 = fill(m1, n1, true, true);
    return out;
}

void lpi_ineq(LPIProgram& prog, const DecisionPIOperator& Q, const IneqOptions& opts) {
    if (Q.m0 != Q.n0 || Q.m1 != Q.n1) throw DimensionMismatch("lpi_ineq: operator not square");
    if (Q.m0 + Q.m1 == 0) return;
    // pure scalar inequality (no spatial content)
    PosDegrees deg = opts.deg ? *opts.deg : degbalance(Q);
    PosOptions popts;
    DecisionPIOperator R = poslpivar(prog, Q.n0, Q.n1, deg, popts);
    DecisionPIOperator resid = Q - R;
    if (opts.psatz != 0) {
        PosOptions p2 = popts;
        p2.psatz = 1;
        DecisionPIOperator R2 = poslpivar(prog, Q.n0, Q.n1, deg, p2);
        resid = resid - R2;
    }
    prog.addEq(resid, true);
}

DecisionPolynomial traceOf(const DecisionPolynomial& square) {
    if (square.rows() != square.cols()) throw DimensionMismatch("traceOf");
    DecisionPolynomial out(1, 1);
    for (Eigen::Index i = 0; i < square.rows(); ++i) out = out + square.block(i, i, 1, 1);
    return out;
}

}  // namespace pilib
