#include "pilib/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace pilib {

namespace {

const char* kVar1 = "s";
const char* kVar2 = "s_dum";
const char* kNu = "nu__";

double factorial(int n) {
    double f = 1;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

Eigen::Index stateDimFinite(const PDEModel& m) {
    Eigen::Index n = 0;
    for (const auto& c : m.x)
        if (!c.spatial) n += c.size;
    return n;
}

// Zero-padded placement of p into an R x C polynomial at (i0, j0).
Polynomial pad(const Polynomial& p, Eigen::Index R, Eigen::Index C, Eigen::Index i0,
               Eigen::Index j0) {
    Polynomial out(R, C);
    for (const auto& [e, c] : p.terms()) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(R, C);
        m.block(i0, j0, p.rows(), p.cols()) = c;
        out.addTerm(p.vars(), e, m);
    }
    return out;
}

}  // namespace

Eigen::Index PDEModel::wDim() const {
    Eigen::Index n = 0;
    for (const auto& c : w) n += c.size;
    return n;
}
Eigen::Index PDEModel::uDim() const {
    Eigen::Index n = 0;
    for (const auto& c : u) n += c.size;
    return n;
}

InitializeReport initialize(PDEModel& m) {
    InitializeReport rep;
    std::ostringstream os;
    if (m.x.empty()) throw UnboundVariable("initialize: no state equations");

    for (auto& c : m.w)
        if (c.spatial) throw UnboundVariable("initialize: distributed exogenous inputs unsupported");
    for (auto& c : m.u)
        if (c.spatial) throw UnboundVariable("initialize: distributed control inputs unsupported");

    // Validate term targets and input usage; infer differentiability orders.
    auto checkTerms = [&](const std::vector<Term>& terms, bool finiteRow, const std::string& where) {
        for (const auto& t : terms) {
            if (t.kind == Term::Kind::State) {
                if (t.target < 0 || t.target >= (int)m.x.size())
                    throw UnboundVariable(where + ": state index");
                const auto& tc = m.x[(size_t)t.target];
                if (!tc.spatial) {
                    if (t.D > 0) throw UnboundVariable(where + ": spatial derivative of ODE state");
                    if (t.loc != Term::Loc::Interior)
                        throw UnboundVariable(where + ": boundary evaluation of ODE state");
                } else {
                    if (finiteRow && t.I == Term::Integral::None && t.loc == Term::Loc::Interior)
                        throw UnboundVariable(where + ": interior state value in finite equation");
                    if (finiteRow &&
                        (t.I == Term::Integral::PartialLower || t.I == Term::Integral::PartialUpper))
                        throw UnboundVariable(where + ": partial integral in finite equation");
                }
            } else {
                if (t.D > 0) throw IllegalDerivativeOnInput(where);
                if (t.loc != Term::Loc::Interior)
                    throw IllegalDerivativeOnInput(where + ": boundary evaluation of input");
                int bound = t.kind == Term::Kind::Exo ? (int)m.w.size() : (int)m.u.size();
                if (t.target < 0 || t.target >= bound)
                    throw UnboundVariable(where + ": input index");
            }
        }
    };
    for (size_t i = 0; i < m.x.size(); ++i) checkTerms(m.x[i].terms, !m.x[i].spatial, "state eq");
    for (const auto& c : m.z) checkTerms(c.terms, true, "output z");
    for (const auto& c : m.y) checkTerms(c.terms, true, "output y");
    for (const auto& c : m.bc) checkTerms(c.terms, true, "BC");

    // Infer differentiability as the maximum derivative order taken anywhere.
    auto bump = [&](const std::vector<Term>& terms) {
        for (const auto& t : terms)
            if (t.kind == Term::Kind::State && m.x[(size_t)t.target].spatial)
                m.x[(size_t)t.target].diff = std::max(m.x[(size_t)t.target].diff, t.D);
    };
    for (const auto& c : m.x) bump(c.terms);
    for (const auto& c : m.z) bump(c.terms);
    for (const auto& c : m.y) bump(c.terms);
    for (const auto& c : m.bc) bump(c.terms);

    Eigen::Index bcNeeded = 0, bcHave = 0;
    for (const auto& c : m.x)
        if (c.spatial) bcNeeded += c.size * c.diff;
    for (const auto& c : m.bc) bcHave += c.size;
    if (bcNeeded != bcHave)
        throw BCCountMismatch("need " + std::to_string(bcNeeded) + " boundary condition rows, have " +
                              std::to_string(bcHave));

    os << "Encountered " << m.x.size() << " state component" << (m.x.size() == 1 ? "" : "s")
       << ": \n";
    for (size_t i = 0; i < m.x.size(); ++i) {
        const auto& c = m.x[i];
        os << " x" << i + 1 << (c.spatial ? "(t," + c.var + ")" : "(t)") << ",    of size "
           << c.size << ", ";
        if (c.spatial)
            os << "differentiable up to order (" << c.diff << ") in variables (" << c.var << ");\n";
        else
            os << "finite-dimensional;\n";
    }
    auto listIO = [&](const std::vector<Component>& cs, const std::string& label) {
        if (cs.empty()) return;
        os << "Encountered " << cs.size() << " " << label << (cs.size() == 1 ? "" : "s") << ": \n";
        for (size_t i = 0; i < cs.size(); ++i)
            os << " " << label[0] << i + 1 << "(t),    of size " << cs[i].size << ";\n";
    };
    listIO(m.u, "actuator input");
    listIO(m.w, "exogenous input");
    listIO(m.y, "observed output");
    listIO(m.z, "regulated output");
    os << "Encountered " << m.bc.size() << " boundary condition"
       << (m.bc.size() == 1 ? "" : "s") << ": \n";
    for (size_t i = 0; i < m.bc.size(); ++i)
        os << " F" << i + 1 << "(t) = 0, of size " << m.bc[i].size << ";\n";

    m.initialized = true;
    rep.summary = os.str();
    return rep;
}

std::string setRole(PDEModel& m, Role role, int index) {
    std::ostringstream os;
    if (role == Role::Control) {
        if (index < 0 || index >= (int)m.w.size())
            throw WrongKind("setControl: not an exogenous input");
        Component c = m.w[(size_t)index];
        m.w.erase(m.w.begin() + index);
        m.u.push_back(c);
        int newIdx = (int)m.u.size() - 1;
        auto retag = [&](std::vector<Term>& terms) {
            for (auto& t : terms) {
                if (t.kind == Term::Kind::Exo) {
                    if (t.target == index) {
                        t.kind = Term::Kind::Ctrl;
                        t.target = newIdx;
                    } else if (t.target > index) {
                        --t.target;
                    }
                }
            }
        };
        for (auto& cc : m.x) retag(cc.terms);
        for (auto& cc : m.z) retag(cc.terms);
        for (auto& cc : m.y) retag(cc.terms);
        for (auto& cc : m.bc) retag(cc.terms);
        os << "1 inputs were designated as controlled inputs";
    } else {
        if (index < 0 || index >= (int)m.z.size())
            throw WrongKind("setObserve: not a regulated output");
        Component c = m.z[(size_t)index];
        m.z.erase(m.z.begin() + index);
        m.y.push_back(c);
        os << "1 outputs were designated as observed outputs";
    }
    return os.str();
}

std::string combineVars(PDEModel& m, double a, double b) {
    std::ostringstream os;
    // Per spatial component: affine map s_old = alpha + beta * s_new.
    struct Map {
        double alpha, beta;
    };
    std::vector<Map> maps(m.x.size(), {0.0, 1.0});
    for (size_t i = 0; i < m.x.size(); ++i) {
        if (!m.x[i].spatial) continue;
        double beta = (m.x[i].b - m.x[i].a) / (b - a);
        double alpha = m.x[i].a - beta * a;
        maps[i] = {alpha, beta};
    }

    auto mapRowVar = [&](Polynomial C, size_t rowComp) {
        if (rowComp >= m.x.size() || !m.x[rowComp].spatial) return C;
        const auto& mp = maps[rowComp];
        return C.subs(kVar1, Polynomial::constant(mp.alpha) + mp.beta * Polynomial::variable(kVar1));
    };
    auto transformTerms = [&](std::vector<Term>& terms, std::optional<size_t> rowComp) {
        for (auto& t : terms) {
            if (rowComp) t.C = mapRowVar(t.C, *rowComp);
            if (t.kind == Term::Kind::State && m.x[(size_t)t.target].spatial) {
                const auto& mp = maps[(size_t)t.target];
                if (t.I != Term::Integral::None) {
                    t.C = t.C.subs(kVar2, Polynomial::constant(mp.alpha) +
                                              mp.beta * Polynomial::variable(kVar2));
                    t.C = t.C * mp.beta;  // integration Jacobian
                }
                if (t.D > 0) t.C = t.C * std::pow(1.0 / mp.beta, t.D);
            } else if (t.kind != Term::Kind::State && t.I != Term::Integral::None) {
                // integrals of finite inputs: rescale the kernel variable of the row
                if (rowComp) {
                    const auto& mp = maps[*rowComp];
                    t.C = t.C.subs(kVar2, Polynomial::constant(mp.alpha) +
                                              mp.beta * Polynomial::variable(kVar2));
                    t.C = t.C * mp.beta;
                }
            }
        }
    };
    for (size_t i = 0; i < m.x.size(); ++i)
        transformTerms(m.x[i].terms, m.x[i].spatial ? std::optional<size_t>(i) : std::nullopt);
    for (auto& c : m.z) transformTerms(c.terms, std::nullopt);
    for (auto& c : m.y) transformTerms(c.terms, std::nullopt);
    for (auto& c : m.bc) transformTerms(c.terms, std::nullopt);

    bool merged = false;
    for (auto& c : m.x) {
        if (!c.spatial) continue;
        if (c.var != kVar1) merged = true;
        c.var = kVar1;
        c.a = a;
        c.b = b;
    }
    if (merged) os << "All spatial variables have been merged and ";
    os << "rescaled to exist on the interval [" << a << "," << b << "].";
    return os.str();
}

std::string expandDelays(PDEModel& m) {
    std::ostringstream os;
    struct DelayKey {
        Term::Kind kind;
        int target;
        double tau;
        bool operator<(const DelayKey& o) const {
            return std::tie(kind, target, tau) < std::tie(o.kind, o.target, o.tau);
        }
    };
    std::map<DelayKey, int> transport;  // -> new state index
    auto scan = [&](std::vector<Term>& terms) {
        for (auto& t : terms) {
            if (t.delay <= 0) continue;
            if (t.kind == Term::Kind::State && m.x[(size_t)t.target].spatial)
                throw UnboundVariable("expandDelays: delayed PDE states are out of 1D scope");
            if (t.I != Term::Integral::None)
                throw UnboundVariable("expandDelays: delayed signal under an integral");
            DelayKey key{t.kind, t.target, t.delay};
            auto it = transport.find(key);
            int idx;
            if (it == transport.end()) {
                Component v;
                const Component& src = t.kind == Term::Kind::State ? m.x[(size_t)t.target]
                                       : t.kind == Term::Kind::Exo ? m.w[(size_t)t.target]
                                                                   : m.u[(size_t)t.target];
                v.name = src.name + "_hist";
                v.size = src.size;
                v.spatial = true;
                v.var = "ntau_" + std::to_string(transport.size() + 1);
                v.a = 0.0;
                v.b = 1.0;
                v.diff = 1;
                // transport dynamics d/dt xhat = -(1/tau) d/dr xhat
                Term dyn;
                dyn.kind = Term::Kind::State;
                dyn.target = (int)m.x.size();
                dyn.D = 1;
                dyn.C = Polynomial::constant(-Eigen::MatrixXd::Identity(v.size, v.size) / t.delay);
                v.terms = {dyn};
                m.x.push_back(v);
                idx = (int)m.x.size() - 1;
                transport[key] = idx;
                // BC xhat(0) = v(t)
                BoundaryCondition bcrow;
                bcrow.size = v.size;
                Term lhs;
                lhs.kind = Term::Kind::State;
                lhs.target = idx;
                lhs.loc = Term::Loc::Lower;
                lhs.C = Polynomial::identity(v.size);
                Term rhs;
                rhs.kind = t.kind;
                rhs.target = t.target;
                rhs.C = -1.0 * Polynomial::identity(v.size);
                bcrow.terms = {lhs, rhs};
                m.bc.push_back(bcrow);
                os << "Added 1 state components: \n   x" << idx + 1 << "(t," << v.var
                   << ")  := " << (t.kind == Term::Kind::State ? "x" : t.kind == Term::Kind::Exo ? "w" : "u")
                   << t.target + 1 << "(t-" << v.var << ");\n";
            } else {
                idx = it->second;
            }
            // replace the delayed value by the transport state at r = 1
            t.kind = Term::Kind::State;
            t.target = idx;
            t.D = 0;
            t.loc = Term::Loc::Upper;
            t.delay = 0.0;
        }
    };
    for (auto& c : m.x) scan(c.terms);
    for (auto& c : m.z) scan(c.terms);
    for (auto& c : m.y) scan(c.terms);
    for (auto& c : m.bc) scan(c.terms);
    if (!transport.empty()) {
        os << combineVars(m, -1.0, 1.0) << "\n";
        m.initialized = false;  // BC counts changed; revalidate
        initialize(m);
    }
    return os.str();
}

std::string expandTDerivatives(PDEModel& m) {
    std::ostringstream os;
    size_t nOld = m.x.size();
    bool warned = false;
    for (size_t i = 0; i < nOld; ++i) {
        int order = m.x[i].tdiff;
        if (order <= 1) continue;
        // chain states x_{k+1} = d/dt x_k; the last carries the original RHS
        std::vector<Term> rhs = m.x[i].terms;
        int prev = (int)i;
        m.x[i].tdiff = 1;
        for (int k = 1; k < order; ++k) {
            Component c;
            c.name = m.x[i].name + "_dt" + std::to_string(k);
            c.size = m.x[i].size;
            c.spatial = m.x[i].spatial;
            c.var = m.x[i].var;
            c.a = m.x[i].a;
            c.b = m.x[i].b;
            c.diff = 0;
            int idx = (int)m.x.size();
            // d/dt x_prev = x_new
            Term link;
            link.kind = Term::Kind::State;
            link.target = idx;
            link.C = Polynomial::identity(c.size);
            m.x[(size_t)prev].terms = {link};
            m.x.push_back(c);
            os << "Added 1 state component: \n    x" << idx + 1 << "  := d_t^" << k << " x"
               << i + 1 << "\n";
            prev = idx;
        }
        m.x[(size_t)prev].terms = rhs;
        if (!warned) {
            os << "Warning: No BCs have been imposed on the newly added state components "
                  "representing the higher order temporal derivatives.\n";
            warned = true;
        }
    }
    if (nOld != m.x.size()) {
        m.initialized = false;
        initialize(m);
    }
    return os.str();
}

std::string reorderComps(PDEModel& m) {
    std::ostringstream os;
    std::vector<int> perm(m.x.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(),
                     [&](int l, int r) { return !m.x[(size_t)l].spatial && m.x[(size_t)r].spatial; });
    bool changed = false;
    for (size_t i = 0; i < perm.size(); ++i) changed = changed || perm[i] != (int)i;
    if (!changed) {
        os << "The order of the state components x has not changed.";
        return os.str();
    }
    std::vector<int> inv(perm.size());
    for (size_t i = 0; i < perm.size(); ++i) inv[(size_t)perm[i]] = (int)i;
    std::vector<Component> nx;
    nx.reserve(m.x.size());
    for (size_t i = 0; i < perm.size(); ++i) nx.push_back(m.x[(size_t)perm[i]]);
    m.x = std::move(nx);
    auto retag = [&](std::vector<Term>& terms) {
        for (auto& t : terms)
            if (t.kind == Term::Kind::State) t.target = inv[(size_t)t.target];
    };
    for (auto& c : m.x) retag(c.terms);
    for (auto& c : m.z) retag(c.terms);
    for (auto& c : m.y) retag(c.terms);
    for (auto& c : m.bc) retag(c.terms);
    os << "The state components have been re-indexed as:\n";
    for (size_t i = 0; i < perm.size(); ++i)
        os << "   x" << perm[i] + 1 << "   -->   x" << i + 1 << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// PDE -> PIE

namespace {

// Accumulated affine functional over [Lam; x_f; w; u].
struct Rows {
    bool l2 = false;  // L2-valued (function of s) or finite-valued
    Polynomial lam;   // r x nLam
    Polynomial fin;   // r x nODE
    Polynomial r0, r1, r2;  // r x nPDE (L2 rows)
    Polynomial q1;          // r x nPDE (finite rows; kernel in var2)
    Polynomial bw, bu;      // r x nw, r x nu
};

struct ConvCtx {
    const PDEModel* m;
    double a, b;
    Eigen::Index nODE = 0, nPDE = 0, nLam = 0, nw = 0, nu = 0;
    std::vector<Eigen::Index> finOff;   // per finite state
    std::vector<Eigen::Index> pdeOff;   // per spatial state: column offset in x_f L2 block
    std::vector<Eigen::Index> lamOff;   // per spatial state: offset in Lam
    std::vector<Eigen::Index> wOff, uOff;

    Polynomial sVar() const { return Polynomial::variable(kVar1); }
    Polynomial thVar() const { return Polynomial::variable(kVar2); }

    // (v - a)^{j-k}/(j-k)! selector row block: n_i x (n_i d_i), in variable v.
    Polynomial lamPoly(size_t i, int D, const Polynomial& v) const {
        const auto& c = m->x[i];
        Eigen::Index n = c.size;
        std::vector<Polynomial> cells;
        for (int j = 0; j < c.diff; ++j) {
            if (j < D) {
                cells.push_back(Polynomial::zero(n, n));
            } else {
                Polynomial f = Polynomial::constant(1.0);
                Polynomial base = v - Polynomial::constant(a);
                for (int p = 0; p < j - D; ++p) f = f * base;
                cells.push_back(scalarMul(f * (1.0 / factorial(j - D)), Polynomial::identity(n)));
            }
        }
        if (cells.empty()) return Polynomial::zero(n, 0);
        return Polynomial::hcat(cells);
    }

    // (v - w)^{d-1-D}/(d-1-D)! * I kernel in variables (v, w).
    Polynomial taylorKernel(size_t i, int D, const Polynomial& v, const Polynomial& w) const {
        const auto& c = m->x[i];
        int p = c.diff - 1 - D;
        Polynomial f = Polynomial::constant(1.0);
        Polynomial base = v - w;
        for (int k = 0; k < p; ++k) f = f * base;
        return scalarMul(f * (1.0 / factorial(p)), Polynomial::identity(c.size));
    }
};

// Evaluate one term into the accumulator (r = rows of equation).
void accumulateTerm(const ConvCtx& cx, Rows& acc, const Term& t, Eigen::Index r) {
    const PDEModel& m = *cx.m;
    const Polynomial S = cx.sVar(), TH = cx.thVar();
    const Polynomial A = Polynomial::constant(cx.a), B = Polynomial::constant(cx.b);

    auto addLam = [&](size_t i, const Polynomial& block) {
        acc.lam = acc.lam + pad(block, r, cx.nLam, 0, cx.lamOff[i]);
    };
    auto addFin = [&](size_t i, const Polynomial& block) {
        acc.fin = acc.fin + pad(block, r, cx.nODE, 0, cx.finOff[i]);
    };
    auto addPDE = [&](Polynomial& slot, size_t i, const Polynomial& block) {
        slot = slot + pad(block, r, cx.nPDE, 0, cx.pdeOff[i]);
    };

    if (t.kind != Term::Kind::State) {
        Polynomial C = t.C;
        if (t.I != Term::Integral::None) {
            // integral of the coefficient itself over the kernel variable
            Polynomial lo = t.I == Term::Integral::PartialUpper ? Polynomial(S) : A;
            Polynomial hi = t.I == Term::Integral::PartialLower ? Polynomial(S) : B;
            C = C.integrate(kVar2, lo, hi);
        }
        if (t.kind == Term::Kind::Exo)
            acc.bw = acc.bw + pad(C, r, cx.nw, 0, cx.wOff[(size_t)t.target]);
        else
            acc.bu = acc.bu + pad(C, r, cx.nu, 0, cx.uOff[(size_t)t.target]);
        return;
    }

    size_t i = (size_t)t.target;
    const Component& xc = m.x[i];
    if (!xc.spatial) {
        Polynomial C = t.C;
        if (t.I != Term::Integral::None) {
            Polynomial lo = t.I == Term::Integral::PartialUpper ? Polynomial(S) : A;
            Polynomial hi = t.I == Term::Integral::PartialLower ? Polynomial(S) : B;
            C = C.integrate(kVar2, lo, hi);
        }
        addFin(i, C);
        return;
    }

    const int d = xc.diff, D = t.D;
    if (D > d) throw IllPosedBC("term derivative exceeds differentiability order");

    if (t.I == Term::Integral::None && t.loc == Term::Loc::Interior) {
        // C(s) * d^D x_i(s)
        if (!acc.l2) throw UnboundVariable("interior state value in finite equation");
        if (D == d) {
            addPDE(acc.r0, i, t.C);
        } else {
            addLam(i, t.C * cx.lamPoly(i, D, S));
            addPDE(acc.r1, i, t.C * cx.taylorKernel(i, D, S, TH));
        }
        return;
    }

    if (t.I == Term::Integral::None) {
        // boundary evaluation C * d^D x_i(a or b)
        if (D >= d)
            throw IllPosedBC("boundary evaluation of the fundamental state");
        if (t.loc == Term::Loc::Lower) {
            Polynomial sel = cx.lamPoly(i, D, A);
            addLam(i, t.C * sel);
        } else {
            addLam(i, t.C * cx.lamPoly(i, D, B));
            // full-domain kernel C * G(b, th)
            Polynomial ker = t.C * cx.taylorKernel(i, D, B, TH);
            if (acc.l2) {
                addPDE(acc.r1, i, ker);
                addPDE(acc.r2, i, ker);
            } else {
                addPDE(acc.q1, i, ker);
            }
        }
        return;
    }

    // Integral term: int_I C(s,th) d^D x_i(th) dth
    Polynomial lamTh = cx.lamPoly(i, D, TH);
    Polynomial lo = t.I == Term::Integral::PartialUpper ? Polynomial(S) : A;
    Polynomial hi = t.I == Term::Integral::PartialLower ? Polynomial(S) : B;
    // Lambda part: int_I C(s,th) lamPoly(th) dth
    if (d - D > 0) {
        Polynomial lamInt = (t.C * lamTh).integrate(kVar2, lo, hi);
        addLam(i, lamInt);
    }
    if (D == d) {
        if (t.I == Term::Integral::Full) {
            if (acc.l2) {
                addPDE(acc.r1, i, t.C);
                addPDE(acc.r2, i, t.C);
            } else {
                addPDE(acc.q1, i, t.C);
            }
        } else if (t.I == Term::Integral::PartialLower) {
            addPDE(acc.r1, i, t.C);
        } else {
            addPDE(acc.r2, i, t.C);
        }
        return;
    }
    // Double integral: int_I C(s,th) int_a^th G(th,nu) x_f(nu) dnu dth.
    Polynomial G = cx.taylorKernel(i, D, TH, Polynomial::variable(kNu));  // G(th, nu)
    Polynomial CG = t.C * G;                                              // in (s, th, nu)
    const Polynomial NU = Polynomial::variable(kNu);
    auto renameNu = [&](const Polynomial& p) { return p.rename(kVar2, "drop__").rename(kNu, kVar2); };
    if (t.I == Term::Integral::PartialLower) {
        // r1 kernel: int_nu^s C G dth
        Polynomial h = CG.integrate(kVar2, NU, S);
        addPDE(acc.r1, i, renameNu(h));
    } else if (t.I == Term::Integral::PartialUpper) {
        Polynomial h1 = CG.integrate(kVar2, S, B);   // for nu < s
        Polynomial h2 = CG.integrate(kVar2, NU, B);  // for nu > s
        addPDE(acc.r1, i, renameNu(h1));
        addPDE(acc.r2, i, renameNu(h2));
    } else {
        Polynomial h = CG.integrate(kVar2, NU, B);
        if (acc.l2) {
            addPDE(acc.r1, i, renameNu(h));
            addPDE(acc.r2, i, renameNu(h));
        } else {
            addPDE(acc.q1, i, renameNu(h));
        }
    }
}

Rows makeRows(const ConvCtx& cx, Eigen::Index r, bool l2) {
    Rows acc;
    acc.l2 = l2;
    acc.lam = Polynomial::zero(r, cx.nLam);
    acc.fin = Polynomial::zero(r, cx.nODE);
    acc.r0 = Polynomial::zero(r, cx.nPDE);
    acc.r1 = Polynomial::zero(r, cx.nPDE);
    acc.r2 = Polynomial::zero(r, cx.nPDE);
    acc.q1 = Polynomial::zero(r, cx.nPDE);
    acc.bw = Polynomial::zero(r, cx.nw);
    acc.bu = Polynomial::zero(r, cx.nu);
    return acc;
}

}  // namespace

PIESystem convertPDEToPIE(PDEModel m, std::string* report) {
    std::ostringstream rep;
    if (!m.initialized) rep << initialize(m).summary;
    bool hasT = false, hasD = false;
    for (const auto& c : m.x) hasT = hasT || c.tdiff > 1;
    auto anyDelay = [&](const std::vector<Term>& ts) {
        for (const auto& t : ts)
            if (t.delay > 0) return true;
        return false;
    };
    for (const auto& c : m.x) hasD = hasD || anyDelay(c.terms);
    for (const auto& c : m.z) hasD = hasD || anyDelay(c.terms);
    for (const auto& c : m.y) hasD = hasD || anyDelay(c.terms);
    for (const auto& c : m.bc) hasD = hasD || anyDelay(c.terms);
    if (hasT) rep << expandTDerivatives(m) << "\n";
    if (hasD) rep << expandDelays(m) << "\n";
    rep << "--- Reordering the state components to allow for representation as PIE ---\n";
    rep << reorderComps(m) << "\n";
    // unify domains
    bool uniform = true;
    double ua = 0, ub = 1;
    bool haveDom = false;
    std::string firstVar;
    for (const auto& c : m.x) {
        if (!c.spatial) continue;
        if (!haveDom) {
            ua = c.a;
            ub = c.b;
            firstVar = c.var;
            haveDom = true;
        } else if (c.a != ua || c.b != ub || c.var != firstVar) {
            uniform = false;
        }
    }
    if (!uniform) rep << combineVars(m, -1.0, 1.0) << "\n";
    for (auto& c : m.x)
        if (c.spatial) c.var = kVar1;
    if (!haveDom) {
        ua = 0;
        ub = 1;
    } else if (!uniform) {
        ua = -1;
        ub = 1;
    }

    rep << "--- Converting the PDE to an equivalent PIE ---\n";

    ConvCtx cx;
    cx.m = &m;
    cx.a = ua;
    cx.b = ub;
    for (const auto& c : m.x) {
        if (!c.spatial) {
            cx.finOff.push_back(cx.nODE);
            cx.pdeOff.push_back(-1);
            cx.lamOff.push_back(-1);
            cx.nODE += c.size;
        } else {
            cx.finOff.push_back(-1);
            cx.pdeOff.push_back(cx.nPDE);
            cx.lamOff.push_back(cx.nLam);
            cx.nPDE += c.size;
            cx.nLam += c.size * c.diff;
        }
    }
    for (const auto& c : m.w) {
        cx.wOff.push_back(cx.nw);
        cx.nw += c.size;
    }
    for (const auto& c : m.u) {
        cx.uOff.push_back(cx.nu);
        cx.nu += c.size;
    }

    // Solve the BC system for the core boundary values Lam.
    Eigen::MatrixXd Blam = Eigen::MatrixXd::Zero(cx.nLam, cx.nLam);
    Polynomial bcq1 = Polynomial::zero(cx.nLam, cx.nPDE);
    Eigen::MatrixXd bcFin = Eigen::MatrixXd::Zero(cx.nLam, cx.nODE);
    Eigen::MatrixXd bcW = Eigen::MatrixXd::Zero(cx.nLam, cx.nw);
    Eigen::MatrixXd bcU = Eigen::MatrixXd::Zero(cx.nLam, cx.nu);
    {
        Eigen::Index row = 0;
        for (const auto& bc : m.bc) {
            Rows acc = makeRows(cx, bc.size, false);
            for (const auto& t : bc.terms) accumulateTerm(cx, acc, t, bc.size);
            if (!acc.lam.isConstant()) throw IllPosedBC("BC row depends on the spatial variable");
            Blam.block(row, 0, bc.size, cx.nLam) = acc.lam.rows() ? acc.lam.toConstant()
                                                                 : Eigen::MatrixXd(bc.size, 0);
            bcq1 = bcq1 + pad(acc.q1, cx.nLam, cx.nPDE, row, 0);
            if (cx.nODE) bcFin.block(row, 0, bc.size, cx.nODE) = acc.fin.toConstant();
            if (cx.nw) bcW.block(row, 0, bc.size, cx.nw) = acc.bw.toConstant();
            if (cx.nu) bcU.block(row, 0, bc.size, cx.nu) = acc.bu.toConstant();
            row += bc.size;
        }
    }
    Eigen::MatrixXd LamFin, LamW, LamU;
    Polynomial LamKer = Polynomial::zero(cx.nLam, cx.nPDE);
    if (cx.nLam > 0) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(Blam);
        lu.setThreshold(1e-10);
        if (lu.rank() < cx.nLam)
            throw IllPosedBC("boundary-condition system is singular: conversion impossible");
        LamFin = -lu.solve(bcFin);
        LamW = -lu.solve(bcW);
        LamU = -lu.solve(bcU);
        Eigen::MatrixXd Binv = lu.inverse();
        LamKer = Polynomial::constant(-Binv) * bcq1;  // kernel variable var2
    } else {
        LamFin = Eigen::MatrixXd::Zero(0, cx.nODE);
        LamW = Eigen::MatrixXd::Zero(0, cx.nw);
        LamU = Eigen::MatrixXd::Zero(0, cx.nu);
    }

    // Substituting Lam into an accumulator yields PI-operator rows.
    struct OpRows {
        Polynomial fin, q1, r0, r1, r2, bw, bu;
    };
    auto substLam = [&](const Rows& acc) {
        OpRows o;
        Polynomial lamFinP = Polynomial::constant(LamFin);
        Polynomial lamWP = Polynomial::constant(LamW);
        Polynomial lamUP = Polynomial::constant(LamU);
        o.fin = acc.fin + acc.lam * lamFinP;
        o.bw = acc.bw + acc.lam * lamWP;
        o.bu = acc.bu + acc.lam * lamUP;
        if (acc.l2) {
            Polynomial lamKer = acc.lam * LamKer;  // r x nPDE, in (s, var2)
            o.r0 = acc.r0;
            o.r1 = acc.r1 + lamKer;
            o.r2 = acc.r2 + lamKer;
            o.q1 = Polynomial::zero(acc.r0.rows(), cx.nPDE);
        } else {
            o.q1 = acc.q1 + acc.lam * LamKer;
            o.r0 = o.r1 = o.r2 = Polynomial::zero(0, cx.nPDE);
        }
        return o;
    };

    // T, Tw, Tu rows: primary state map x = T x_f + Tw w + Tu u.
    PIESystem sys;
    sys.a = ua;
    sys.b = ub;
    sys.var1 = kVar1;
    sys.var2 = kVar2;
    const Polynomial S = Polynomial::variable(kVar1), TH = Polynomial::variable(kVar2);

    Polynomial T_Q2 = Polynomial::zero(cx.nPDE, cx.nODE);
    Polynomial T_R0 = Polynomial::zero(cx.nPDE, cx.nPDE);
    Polynomial T_R1 = Polynomial::zero(cx.nPDE, cx.nPDE);
    Polynomial T_R2 = Polynomial::zero(cx.nPDE, cx.nPDE);
    Polynomial Tw_Q2 = Polynomial::zero(cx.nPDE, cx.nw);
    Polynomial Tu_Q2 = Polynomial::zero(cx.nPDE, cx.nu);
    for (size_t i = 0; i < m.x.size(); ++i) {
        if (!m.x[i].spatial) continue;
        const auto& c = m.x[i];
        Rows acc = makeRows(cx, c.size, true);
        if (c.diff == 0) {
            // fundamental state equals the primary state
            acc.r0 = pad(Polynomial::identity(c.size), c.size, cx.nPDE, 0, cx.pdeOff[i]);
        } else {
            Term self;
            self.kind = Term::Kind::State;
            self.target = (int)i;
            self.D = 0;
            self.C = Polynomial::identity(c.size);
            accumulateTerm(cx, acc, self, c.size);
        }
        OpRows o = substLam(acc);
        Eigen::Index off = cx.pdeOff[i];
        T_Q2 = T_Q2 + pad(o.fin, cx.nPDE, cx.nODE, off, 0);
        T_R0 = T_R0 + pad(o.r0, cx.nPDE, cx.nPDE, off, 0);
        T_R1 = T_R1 + pad(o.r1, cx.nPDE, cx.nPDE, off, 0);
        T_R2 = T_R2 + pad(o.r2, cx.nPDE, cx.nPDE, off, 0);
        Tw_Q2 = Tw_Q2 + pad(o.bw, cx.nPDE, cx.nw, off, 0);
        Tu_Q2 = Tu_Q2 + pad(o.bu, cx.nPDE, cx.nu, off, 0);
    }
    sys.T = PIOperator(cx.nODE, cx.nODE, cx.nPDE, cx.nPDE, ua, ub);
    sys.T.P = Polynomial::identity(cx.nODE);
    sys.T.Q2 = T_Q2;
    sys.T.R0 = T_R0;
    sys.T.R1 = T_R1;
    sys.T.R2 = T_R2;

    // Dynamics rows.
    Polynomial A_P = Polynomial::zero(cx.nODE, cx.nODE);
    Polynomial A_Q1 = Polynomial::zero(cx.nODE, cx.nPDE);
    Polynomial A_Q2 = Polynomial::zero(cx.nPDE, cx.nODE);
    Polynomial A_R0 = Polynomial::zero(cx.nPDE, cx.nPDE);
    Polynomial A_R1 = Polynomial::zero(cx.nPDE, cx.nPDE);
    Polynomial A_R2 = Polynomial::zero(cx.nPDE, cx.nPDE);
    Polynomial B1_P = Polynomial::zero(cx.nODE, cx.nw);
    Polynomial B1_Q2 = Polynomial::zero(cx.nPDE, cx.nw);
    Polynomial B2_P = Polynomial::zero(cx.nODE, cx.nu);
    Polynomial B2_Q2 = Polynomial::zero(cx.nPDE, cx.nu);
    for (size_t i = 0; i < m.x.size(); ++i) {
        const auto& c = m.x[i];
        Rows acc = makeRows(cx, c.size, c.spatial);
        for (const auto& t : c.terms) accumulateTerm(cx, acc, t, c.size);
        OpRows o = substLam(acc);
        if (c.spatial) {
            Eigen::Index off = cx.pdeOff[i];
            A_Q2 = A_Q2 + pad(o.fin, cx.nPDE, cx.nODE, off, 0);
            A_R0 = A_R0 + pad(o.r0, cx.nPDE, cx.nPDE, off, 0);
            A_R1 = A_R1 + pad(o.r1, cx.nPDE, cx.nPDE, off, 0);
            A_R2 = A_R2 + pad(o.r2, cx.nPDE, cx.nPDE, off, 0);
            B1_Q2 = B1_Q2 + pad(o.bw, cx.nPDE, cx.nw, off, 0);
            B2_Q2 = B2_Q2 + pad(o.bu, cx.nPDE, cx.nu, off, 0);
        } else {
            Eigen::Index off = cx.finOff[i];
            A_P = A_P + pad(o.fin, cx.nODE, cx.nODE, off, 0);
            A_Q1 = A_Q1 + pad(o.q1.rename(kVar2, kVar1), cx.nODE, cx.nPDE, off, 0);
            B1_P = B1_P + pad(o.bw, cx.nODE, cx.nw, off, 0);
            B2_P = B2_P + pad(o.bu, cx.nODE, cx.nu, off, 0);
        }
    }
    sys.A = PIOperator(cx.nODE, cx.nODE, cx.nPDE, cx.nPDE, ua, ub);
    sys.A.P = A_P;
    sys.A.Q1 = A_Q1;
    sys.A.Q2 = A_Q2;
    sys.A.R0 = A_R0;
    sys.A.R1 = A_R1;
    sys.A.R2 = A_R2;
    sys.B1 = PIOperator(cx.nODE, cx.nw, cx.nPDE, 0, ua, ub);
    sys.B1.P = B1_P;
    sys.B1.Q2 = B1_Q2;
    sys.B2 = PIOperator(cx.nODE, cx.nu, cx.nPDE, 0, ua, ub);
    sys.B2.P = B2_P;
    sys.B2.Q2 = B2_Q2;

    // Output rows.
    auto buildOutput = [&](const std::vector<Component>& comps, PIOperator& C, PIOperator& Dw,
                           PIOperator& Du) {
        Eigen::Index nzdim = 0;
        for (const auto& c : comps) nzdim += c.size;
        Polynomial C_P = Polynomial::zero(nzdim, cx.nODE);
        Polynomial C_Q1 = Polynomial::zero(nzdim, cx.nPDE);
        Polynomial D_w = Polynomial::zero(nzdim, cx.nw);
        Polynomial D_u = Polynomial::zero(nzdim, cx.nu);
        Eigen::Index off = 0;
        for (const auto& c : comps) {
            Rows acc = makeRows(cx, c.size, false);
            for (const auto& t : c.terms) accumulateTerm(cx, acc, t, c.size);
            OpRows o = substLam(acc);
            C_P = C_P + pad(o.fin, nzdim, cx.nODE, off, 0);
            C_Q1 = C_Q1 + pad(o.q1.rename(kVar2, kVar1), nzdim, cx.nPDE, off, 0);
            D_w = D_w + pad(o.bw, nzdim, cx.nw, off, 0);
            D_u = D_u + pad(o.bu, nzdim, cx.nu, off, 0);
            off += c.size;
        }
        C = PIOperator(nzdim, cx.nODE, 0, cx.nPDE, ua, ub);
        C.P = C_P;
        C.Q1 = C_Q1;
        Dw = PIOperator(nzdim, cx.nw, 0, 0, ua, ub);
        Dw.P = D_w;
        Du = PIOperator(nzdim, cx.nu, 0, 0, ua, ub);
        Du.P = D_u;
    };
    buildOutput(m.z, sys.C1, sys.D11, sys.D12);
    buildOutput(m.y, sys.C2, sys.D21, sys.D22);

    sys.Tw = PIOperator(cx.nODE, cx.nw, cx.nPDE, 0, ua, ub);
    sys.Tw.Q2 = Tw_Q2;
    sys.Tu = PIOperator(cx.nODE, cx.nu, cx.nPDE, 0, ua, ub);
    sys.Tu.Q2 = Tu_Q2;

    rep << "--- Conversion to PIE was successful ---\n";
    if (report) *report = rep.str();
    sys.check();
    return sys;
}

}  // namespace pilib
