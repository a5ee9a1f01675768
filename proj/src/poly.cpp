#include "pilib/poly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pilib {

namespace {

bool isZeroMat(const Eigen::MatrixXd& m) {
    return m.size() == 0 || m.cwiseAbs().maxCoeff() == 0.0;
}

}  // namespace

Polynomial Polynomial::constant(const Eigen::MatrixXd& c) {
    Polynomial p(c.rows(), c.cols());
    if (!isZeroMat(c)) p.terms_[{}] = c;
    return p;
}

Polynomial Polynomial::variable(const std::string& name) {
    Polynomial p(1, 1);
    p.vars_ = {name};
    p.terms_[{1}] = Eigen::MatrixXd::Constant(1, 1, 1.0);
    return p;
}

Polynomial Polynomial::monomial(const Eigen::MatrixXd& c, const std::vector<std::string>& vars,
                                const Exponents& deg) {
    Polynomial p(c.rows(), c.cols());
    p.addTerm(vars, deg, c);
    return p;
}

void Polynomial::addTerm(const std::vector<std::string>& vars, const Exponents& deg,
                         const Eigen::MatrixXd& c) {
    if (vars.size() != deg.size()) throw ShapeMismatch("addTerm: vars/deg length mismatch");
    if (rows_ == 0 && cols_ == 0) { rows_ = c.rows(); cols_ = c.cols(); }
    if (c.rows() != rows_ || c.cols() != cols_) throw ShapeMismatch("addTerm: coefficient shape");
    // extend variable list
    std::vector<std::string> newVars = vars_;
    for (const auto& v : vars)
        if (std::find(newVars.begin(), newVars.end(), v) == newVars.end()) newVars.push_back(v);
    std::sort(newVars.begin(), newVars.end());
    if (newVars != vars_) *this = onVars(newVars);
    Exponents e(vars_.size(), 0);
    for (size_t i = 0; i < vars.size(); ++i) {
        if (deg[i] == 0) continue;
        auto it = std::find(vars_.begin(), vars_.end(), vars[i]);
        e[static_cast<size_t>(it - vars_.begin())] += deg[i];
    }
    insertRaw(e, c);
}

void Polynomial::insertRaw(const Exponents& e, const Eigen::MatrixXd& c) {
    if (isZeroMat(c)) return;
    auto it = terms_.find(e);
    if (it == terms_.end()) {
        terms_[e] = c;
    } else {
        it->second += c;
        if (isZeroMat(it->second)) terms_.erase(it);
    }
}

Polynomial Polynomial::onVars(const std::vector<std::string>& allVars) const {
    Polynomial out(rows_, cols_);
    out.vars_ = allVars;
    std::vector<int> pos(vars_.size());
    for (size_t i = 0; i < vars_.size(); ++i) {
        auto it = std::find(allVars.begin(), allVars.end(), vars_[i]);
        if (it == allVars.end()) throw UnknownVariable("onVars: missing " + vars_[i]);
        pos[i] = static_cast<int>(it - allVars.begin());
    }
    for (const auto& [e, c] : terms_) {
        Exponents ne(allVars.size(), 0);
        for (size_t i = 0; i < e.size(); ++i) ne[static_cast<size_t>(pos[i])] = e[i];
        out.terms_[ne] = c;
    }
    return out;
}

std::vector<std::string> unionVars(const Polynomial& a, const Polynomial& b) {
    std::vector<std::string> u = a.vars_;
    for (const auto& v : b.vars_)
        if (std::find(u.begin(), u.end(), v) == u.end()) u.push_back(v);
    std::sort(u.begin(), u.end());
    return u;
}

Polynomial scalarMul(const Polynomial& scalar, const Polynomial& m) {
    if (scalar.rows() != 1 || scalar.cols() != 1) throw ShapeMismatch("scalarMul: factor not 1x1");
    Polynomial out(m.rows(), m.cols());
    auto u = unionVars(scalar, m);
    Polynomial ss = scalar.onVars(u), mm = m.onVars(u);
    out.vars_ = u;
    for (const auto& [es, cs] : ss.terms_)
        for (const auto& [em, cm] : mm.terms_) {
            Polynomial::Exponents ne(u.size());
            for (size_t i = 0; i < u.size(); ++i) ne[i] = es[i] + em[i];
            out.insertRaw(ne, cs(0, 0) * cm);
        }
    return out;
}

bool Polynomial::isConstant() const {
    for (const auto& [e, c] : terms_)
        for (int k : e)
            if (k != 0) return false;
    return true;
}

bool Polynomial::dependsOn(const std::string& var) const {
    auto it = std::find(vars_.begin(), vars_.end(), var);
    if (it == vars_.end()) return false;
    size_t idx = static_cast<size_t>(it - vars_.begin());
    for (const auto& [e, c] : terms_)
        if (e[idx] != 0) return true;
    return false;
}

Eigen::MatrixXd Polynomial::constantPart() const {
    for (const auto& [e, c] : terms_) {
        bool all0 = true;
        for (int k : e) all0 = all0 && k == 0;
        if (all0) return c;
    }
    return Eigen::MatrixXd::Zero(rows_, cols_);
}

Eigen::MatrixXd Polynomial::toConstant() const {
    if (!isConstant()) throw ShapeMismatch("toConstant: polynomial is not constant");
    return constantPart();
}

double Polynomial::toScalar() const {
    if (rows_ != 1 || cols_ != 1) throw ShapeMismatch("toScalar: not 1x1");
    return toConstant()(0, 0);
}

int Polynomial::degree(const std::string& var) const {
    auto it = std::find(vars_.begin(), vars_.end(), var);
    if (it == vars_.end()) return 0;
    size_t idx = static_cast<size_t>(it - vars_.begin());
    int d = 0;
    for (const auto& [e, c] : terms_) d = std::max(d, e[idx]);
    return d;
}

int Polynomial::totalDegree() const {
    int d = 0;
    for (const auto& [e, c] : terms_) {
        int s = 0;
        for (int k : e) s += k;
        d = std::max(d, s);
    }
    return d;
}

Polynomial Polynomial::operator+(const Polynomial& rhs) const {
    if (rows_ != rhs.rows_ || cols_ != rhs.cols_) throw ShapeMismatch("add");
    auto u = unionVars(*this, rhs);
    Polynomial a = onVars(u), b = rhs.onVars(u);
    for (const auto& [e, c] : b.terms_) a.insertRaw(e, c);
    return a;
}

Polynomial Polynomial::operator-() const {
    Polynomial out = *this;
    for (auto& [e, c] : out.terms_) c = -c;
    return out;
}

Polynomial Polynomial::operator-(const Polynomial& rhs) const { return *this + (-rhs); }

Polynomial Polynomial::operator*(const Polynomial& rhs) const {
    if (cols_ != rhs.rows_) throw ShapeMismatch("mul: inner dimensions");
    auto u = unionVars(*this, rhs);
    Polynomial a = onVars(u), b = rhs.onVars(u);
    Polynomial out(rows_, rhs.cols_);
    out.vars_ = u;
    for (const auto& [ea, ca] : a.terms_)
        for (const auto& [eb, cb] : b.terms_) {
            Exponents e(u.size());
            for (size_t i = 0; i < u.size(); ++i) e[i] = ea[i] + eb[i];
            out.insertRaw(e, ca * cb);
        }
    return out;
}

Polynomial Polynomial::operator*(double k) const {
    if (k == 0.0) return Polynomial(rows_, cols_);
    Polynomial out = *this;
    for (auto& [e, c] : out.terms_) c *= k;
    return out;
}

Polynomial Polynomial::transpose() const {
    Polynomial out(cols_, rows_);
    out.vars_ = vars_;
    for (const auto& [e, c] : terms_) out.terms_[e] = c.transpose();
    return out;
}

bool Polynomial::operator==(const Polynomial& rhs) const {
    return coeffDistance(rhs) == 0.0;
}

double Polynomial::coeffDistance(const Polynomial& rhs) const {
    if (rows_ != rhs.rows_ || cols_ != rhs.cols_) return std::numeric_limits<double>::infinity();
    auto u = unionVars(*this, rhs);
    Polynomial d = onVars(u) - rhs.onVars(u);
    double m = 0;
    for (const auto& [e, c] : d.terms_) m = std::max(m, c.cwiseAbs().maxCoeff());
    return m;
}

double Polynomial::coeffNorm() const {
    double m = 0;
    for (const auto& [e, c] : terms_) m = std::max(m, c.cwiseAbs().maxCoeff());
    return m;
}

Polynomial Polynomial::block(Eigen::Index i0, Eigen::Index j0, Eigen::Index r, Eigen::Index c) const {
    if (i0 < 0 || j0 < 0 || i0 + r > rows_ || j0 + c > cols_) throw ShapeMismatch("block: out of range");
    Polynomial out(r, c);
    out.vars_ = vars_;
    for (const auto& [e, m] : terms_) {
        Eigen::MatrixXd sub = m.block(i0, j0, r, c);
        if (!isZeroMat(sub)) out.terms_[e] = sub;
    }
    return out;
}

Polynomial Polynomial::hcat(const std::vector<Polynomial>& ps) {
    if (ps.empty()) return Polynomial();
    Eigen::Index rows = ps[0].rows(), cols = 0;
    std::vector<std::string> u = ps[0].vars_;
    for (const auto& p : ps) {
        if (p.rows() != rows) throw ShapeMismatch("hcat: row count");
        cols += p.cols();
        for (const auto& v : p.vars_)
            if (std::find(u.begin(), u.end(), v) == u.end()) u.push_back(v);
    }
    std::sort(u.begin(), u.end());
    Polynomial out(rows, cols);
    out.vars_ = u;
    Eigen::Index off = 0;
    for (const auto& p : ps) {
        Polynomial q = p.onVars(u);
        for (const auto& [e, c] : q.terms_) {
            auto it = out.terms_.find(e);
            if (it == out.terms_.end())
                it = out.terms_.emplace(e, Eigen::MatrixXd::Zero(rows, cols)).first;
            it->second.block(0, off, rows, p.cols()) = c;
        }
        off += p.cols();
    }
    for (auto it = out.terms_.begin(); it != out.terms_.end();)
        it = isZeroMat(it->second) ? out.terms_.erase(it) : std::next(it);
    return out;
}

Polynomial Polynomial::vcat(const std::vector<Polynomial>& ps) {
    std::vector<Polynomial> ts;
    ts.reserve(ps.size());
    for (const auto& p : ps) ts.push_back(p.transpose());
    return hcat(ts).transpose();
}

Polynomial Polynomial::diff(const std::string& var, int order) const {
    Polynomial out = *this;
    auto it = std::find(out.vars_.begin(), out.vars_.end(), var);
    if (it == out.vars_.end()) return Polynomial(rows_, cols_);
    size_t idx = static_cast<size_t>(it - out.vars_.begin());
    for (int o = 0; o < order; ++o) {
        TermMap next;
        for (const auto& [e, c] : out.terms_) {
            if (e[idx] == 0) continue;
            Exponents ne = e;
            ne[idx] -= 1;
            Eigen::MatrixXd nc = c * static_cast<double>(e[idx]);
            auto jt = next.find(ne);
            if (jt == next.end()) next[ne] = nc;
            else jt->second += nc;
        }
        out.terms_ = std::move(next);
    }
    return out;
}

Polynomial Polynomial::subs(const std::string& var, const Polynomial& value) const {
    auto it = std::find(vars_.begin(), vars_.end(), var);
    if (it == vars_.end()) return *this;
    if (value.rows() != 1 || value.cols() != 1) throw ShapeMismatch("subs: value must be scalar polynomial");
    size_t idx = static_cast<size_t>(it - vars_.begin());
    int maxdeg = degree(var);
    // powers of value
    std::vector<Polynomial> pw(static_cast<size_t>(maxdeg) + 1);
    pw[0] = Polynomial::constant(1.0);
    for (int k = 1; k <= maxdeg; ++k) pw[static_cast<size_t>(k)] = pw[static_cast<size_t>(k - 1)] * value;
    std::vector<std::string> remVars = vars_;
    remVars.erase(remVars.begin() + static_cast<std::ptrdiff_t>(idx));
    Polynomial out(rows_, cols_);
    for (const auto& [e, c] : terms_) {
        Exponents re(remVars.size());
        for (size_t i = 0, j = 0; i < e.size(); ++i)
            if (i != idx) re[j++] = e[i];
        Polynomial base = Polynomial::monomial(c, remVars, re);
        out = out + scalarMul(pw[static_cast<size_t>(e[idx])], base);
    }
    return out;
}

Polynomial Polynomial::subs(const std::string& var, double value) const {
    return subs(var, Polynomial::constant(value));
}

Polynomial Polynomial::rename(const std::string& var, const std::string& newName) const {
    if (var == newName) return *this;
    return subs(var, Polynomial::variable(newName));
}

Polynomial Polynomial::integrate(const std::string& var, const Polynomial& lower,
                                 const Polynomial& upper) const {
    if (lower.dependsOn(var) || upper.dependsOn(var))
        throw BadLimits("integrate: limit depends on integration variable");
    auto it = std::find(vars_.begin(), vars_.end(), var);
    if (it == vars_.end()) {
        // integrand constant in var: p * (upper - lower)
        return scalarMul(upper - lower, *this);
    }
    size_t idx = static_cast<size_t>(it - vars_.begin());
    // antiderivative in var, then evaluate at limits
    Polynomial anti(rows_, cols_);
    anti.vars_ = vars_;
    for (const auto& [e, c] : terms_) {
        Exponents ne = e;
        ne[idx] += 1;
        anti.terms_[ne] = c / static_cast<double>(ne[idx]);
    }
    return anti.subs(var, upper) - anti.subs(var, lower);
}

Polynomial Polynomial::integrate(const std::string& var, double lower, double upper) const {
    return integrate(var, Polynomial::constant(lower), Polynomial::constant(upper));
}

Eigen::MatrixXd Polynomial::eval(const std::map<std::string, double>& point) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows_, cols_);
    for (const auto& [e, c] : terms_) {
        double f = 1.0;
        for (size_t i = 0; i < vars_.size(); ++i) {
            if (e[i] == 0) continue;
            auto it = point.find(vars_[i]);
            if (it == point.end()) throw UnknownVariable("eval: no value for " + vars_[i]);
            f *= std::pow(it->second, e[i]);
        }
        out += f * c;
    }
    return out;
}

double Polynomial::evalScalar(const std::map<std::string, double>& point) const {
    if (rows_ != 1 || cols_ != 1) throw ShapeMismatch("evalScalar: not 1x1");
    return eval(point)(0, 0);
}

std::string Polynomial::str(double droptol) const {
    std::ostringstream os;
    if (rows_ != 1 || cols_ != 1) {
        os << "[";
        for (Eigen::Index i = 0; i < rows_; ++i) {
            if (i) os << ";";
            for (Eigen::Index j = 0; j < cols_; ++j) {
                if (j) os << ",";
                os << block(i, j, 1, 1).str(droptol);
            }
        }
        os << "]";
        return os.str();
    }
    // collect monomials in a stable order: by total degree then lexicographic
    std::vector<std::pair<Exponents, double>> items;
    for (const auto& [e, c] : terms_)
        if (std::abs(c(0, 0)) > droptol) items.emplace_back(e, c(0, 0));
    if (items.empty()) return "0";
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        int ta = 0, tb = 0;
        for (int k : a.first) ta += k;
        for (int k : b.first) tb += k;
        if (ta != tb) return ta > tb;
        return a.first > b.first;
    });
    bool first = true;
    auto fmt = [](double v) {
        std::ostringstream s;
        s << v;
        return s.str();
    };
    for (const auto& [e, v] : items) {
        double av = std::abs(v);
        bool neg = v < 0;
        if (first) {
            if (neg) os << "-";
            first = false;
        } else {
            os << (neg ? "-" : "+");
        }
        std::string varpart;
        for (size_t i = 0; i < vars_.size(); ++i) {
            if (e[i] == 0) continue;
            if (!varpart.empty()) varpart += "*";
            varpart += vars_[i];
            if (e[i] > 1) varpart += "^" + std::to_string(e[i]);
        }
        if (varpart.empty()) {
            os << fmt(av);
        } else if (std::abs(av - 1.0) <= droptol) {
            os << varpart;
        } else {
            os << fmt(av) << "*" << varpart;
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// DecisionPolynomial

DecisionPolynomial DecisionPolynomial::decvar(const std::string& name, Eigen::Index rows,
                                              Eigen::Index cols) {
    DecisionPolynomial d(rows, cols);
    d.linear_[name] = Polynomial::constant(Eigen::MatrixXd::Ones(rows, cols));
    return d;
}

bool DecisionPolynomial::isZero() const {
    return constant_.isZero() && linear_.empty();
}

void DecisionPolynomial::prune() {
    for (auto it = linear_.begin(); it != linear_.end();)
        it = it->second.isZero() ? linear_.erase(it) : std::next(it);
}

DecisionPolynomial DecisionPolynomial::operator+(const DecisionPolynomial& rhs) const {
    DecisionPolynomial out;
    out.constant_ = constant_ + rhs.constant_;
    out.linear_ = linear_;
    for (const auto& [d, p] : rhs.linear_) {
        auto it = out.linear_.find(d);
        if (it == out.linear_.end()) out.linear_[d] = p;
        else it->second = it->second + p;
    }
    out.prune();
    return out;
}

DecisionPolynomial DecisionPolynomial::operator-() const {
    DecisionPolynomial out;
    out.constant_ = -constant_;
    for (const auto& [d, p] : linear_) out.linear_[d] = -p;
    return out;
}

DecisionPolynomial DecisionPolynomial::operator-(const DecisionPolynomial& rhs) const {
    return *this + (-rhs);
}

DecisionPolynomial DecisionPolynomial::operator*(double k) const {
    DecisionPolynomial out;
    out.constant_ = constant_ * k;
    if (k != 0.0)
        for (const auto& [d, p] : linear_) out.linear_[d] = p * k;
    return out;
}

DecisionPolynomial DecisionPolynomial::transpose() const {
    DecisionPolynomial out;
    out.constant_ = constant_.transpose();
    for (const auto& [d, p] : linear_) out.linear_[d] = p.transpose();
    return out;
}

Polynomial DecisionPolynomial::substitute(const std::map<std::string, double>& decvals) const {
    Polynomial out = constant_;
    for (const auto& [d, p] : linear_) {
        auto it = decvals.find(d);
        if (it == decvals.end()) throw UnknownVariable("substitute: no value for decvar " + d);
        out = out + p * it->second;
    }
    return out;
}

DecisionPolynomial DecisionPolynomial::diff(const std::string& var, int order) const {
    DecisionPolynomial out;
    out.constant_ = constant_.diff(var, order);
    for (const auto& [d, p] : linear_) out.linear_[d] = p.diff(var, order);
    out.prune();
    return out;
}

DecisionPolynomial DecisionPolynomial::subs(const std::string& var, const Polynomial& value) const {
    DecisionPolynomial out;
    out.constant_ = constant_.subs(var, value);
    for (const auto& [d, p] : linear_) out.linear_[d] = p.subs(var, value);
    out.prune();
    return out;
}

DecisionPolynomial DecisionPolynomial::rename(const std::string& var, const std::string& newName) const {
    return subs(var, Polynomial::variable(newName));
}

DecisionPolynomial DecisionPolynomial::integrate(const std::string& var, const Polynomial& lower,
                                                 const Polynomial& upper) const {
    DecisionPolynomial out;
    out.constant_ = constant_.integrate(var, lower, upper);
    for (const auto& [d, p] : linear_) out.linear_[d] = p.integrate(var, lower, upper);
    out.prune();
    return out;
}

DecisionPolynomial DecisionPolynomial::block(Eigen::Index i0, Eigen::Index j0, Eigen::Index r,
                                             Eigen::Index c) const {
    DecisionPolynomial out;
    out.constant_ = constant_.block(i0, j0, r, c);
    for (const auto& [d, p] : linear_) out.linear_[d] = p.block(i0, j0, r, c);
    out.prune();
    return out;
}

DecisionPolynomial DecisionPolynomial::hcat(const std::vector<DecisionPolynomial>& ps) {
    // union of decvars
    std::vector<std::string> dv;
    for (const auto& p : ps)
        for (const auto& [d, q] : p.linear_)
            if (std::find(dv.begin(), dv.end(), d) == dv.end()) dv.push_back(d);
    DecisionPolynomial out;
    std::vector<Polynomial> cs;
    cs.reserve(ps.size());
    for (const auto& p : ps) cs.push_back(p.constant_);
    out.constant_ = Polynomial::hcat(cs);
    for (const auto& d : dv) {
        std::vector<Polynomial> ls;
        ls.reserve(ps.size());
        for (const auto& p : ps) {
            auto it = p.linear_.find(d);
            ls.push_back(it != p.linear_.end() ? it->second
                                               : Polynomial::zero(p.rows(), p.cols()));
        }
        out.linear_[d] = Polynomial::hcat(ls);
    }
    out.prune();
    return out;
}

DecisionPolynomial DecisionPolynomial::vcat(const std::vector<DecisionPolynomial>& ps) {
    std::vector<DecisionPolynomial> ts;
    ts.reserve(ps.size());
    for (const auto& p : ps) ts.push_back(p.transpose());
    return hcat(ts).transpose();
}

void DecisionPolynomial::forEachCoefficient(
    const std::function<void(const std::string&, const Polynomial::Exponents&, Eigen::Index,
                             Eigen::Index, double, const std::vector<std::string>&)>& visit) const {
    for (const auto& [e, c] : constant_.terms())
        for (Eigen::Index i = 0; i < c.rows(); ++i)
            for (Eigen::Index j = 0; j < c.cols(); ++j)
                if (c(i, j) != 0.0) visit("", e, i, j, c(i, j), constant_.vars());
    for (const auto& [d, p] : linear_)
        for (const auto& [e, c] : p.terms())
            for (Eigen::Index i = 0; i < c.rows(); ++i)
                for (Eigen::Index j = 0; j < c.cols(); ++j)
                    if (c(i, j) != 0.0) visit(d, e, i, j, c(i, j), p.vars());
}

std::vector<std::string> DecisionPolynomial::decvarNames() const {
    std::vector<std::string> out;
    out.reserve(linear_.size());
    for (const auto& [d, p] : linear_) out.push_back(d);
    return out;
}

DecisionPolynomial mul(const Polynomial& a, const DecisionPolynomial& b) {
    bool aScalar = a.rows() == 1 && a.cols() == 1 && !(b.rows() == 1 && b.cols() == 1);
    bool bScalar = b.rows() == 1 && b.cols() == 1 && !(a.rows() == 1 && a.cols() == 1);
    auto combine = [&](const Polynomial& p) {
        if (aScalar) return scalarMul(a, p);
        return a * p;
    };
    if (bScalar) {
        DecisionPolynomial out(a.rows(), a.cols());
        out.constant_ = scalarMul(b.constant_, a);
        for (const auto& [d, p] : b.linear_) out.linear_[d] = scalarMul(p, a);
        out.prune();
        return out;
    }
    DecisionPolynomial out(aScalar ? b.rows() : a.rows(), b.cols());
    out.constant_ = combine(b.constant_);
    for (const auto& [d, p] : b.linear_) out.linear_[d] = combine(p);
    out.prune();
    return out;
}

DecisionPolynomial mul(const DecisionPolynomial& a, const Polynomial& b) {
    bool aScalar = a.rows() == 1 && a.cols() == 1 && !(b.rows() == 1 && b.cols() == 1);
    bool bScalar = b.rows() == 1 && b.cols() == 1 && !(a.rows() == 1 && a.cols() == 1);
    if (aScalar) {
        DecisionPolynomial out(b.rows(), b.cols());
        out.constant_ = scalarMul(a.constant_, b);
        for (const auto& [d, p] : a.linear_) out.linear_[d] = scalarMul(p, b);
        out.prune();
        return out;
    }
    DecisionPolynomial out(a.rows(), bScalar ? a.cols() : b.cols());
    out.constant_ = bScalar ? scalarMul(b, a.constant_) : a.constant_ * b;
    for (const auto& [d, p] : a.linear_) out.linear_[d] = bScalar ? scalarMul(b, p) : p * b;
    out.prune();
    return out;
}

DecisionPolynomial mul(const DecisionPolynomial& a, const DecisionPolynomial& b) {
    if (a.hasDecvars() && b.hasDecvars())
        throw NonAffineProduct("product of two decision polynomials");
    if (a.hasDecvars()) return mul(a, b.constant());
    return mul(a.constant(), b);
}

}  // namespace pilib
