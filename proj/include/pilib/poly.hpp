#ifndef PILIB_POLY_HPP
#define PILIB_POLY_HPP

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pilib {

struct ShapeMismatch : std::runtime_error {
    explicit ShapeMismatch(const std::string& msg) : std::runtime_error("ShapeMismatch: " + msg) {}
};
struct NonAffineProduct : std::runtime_error {
    explicit NonAffineProduct(const std::string& msg) : std::runtime_error("NonAffineProduct: " + msg) {}
};
struct UnknownVariable : std::runtime_error {
    explicit UnknownVariable(const std::string& msg) : std::runtime_error("UnknownVariable: " + msg) {}
};
struct BadLimits : std::runtime_error {
    explicit BadLimits(const std::string& msg) : std::runtime_error("BadLimits: " + msg) {}
};

// Matrix-valued polynomial in named variables, exact coefficient arithmetic.
// Terms are stored sparsely as exponent-vector -> coefficient matrix, with
// exponents aligned to the sorted variable list. Zero coefficient matrices are
// never stored, so two canonical polynomials are equal iff their term maps are.
class Polynomial {
public:
    using Exponents = std::vector<int>;
    using TermMap = std::map<Exponents, Eigen::MatrixXd>;

    Polynomial() : rows_(0), cols_(0) {}
    Polynomial(Eigen::Index rows, Eigen::Index cols) : rows_(rows), cols_(cols) {}

    static Polynomial constant(const Eigen::MatrixXd& c);
    static Polynomial constant(double c) { return constant(Eigen::MatrixXd::Constant(1, 1, c)); }
    static Polynomial variable(const std::string& name);
    static Polynomial zero(Eigen::Index rows, Eigen::Index cols) { return Polynomial(rows, cols); }
    static Polynomial identity(Eigen::Index n) { return constant(Eigen::MatrixXd::Identity(n, n)); }
    // Monomial c * prod vars[i]^deg[i].
    static Polynomial monomial(const Eigen::MatrixXd& c, const std::vector<std::string>& vars,
                               const Exponents& deg);

    Eigen::Index rows() const { return rows_; }
    Eigen::Index cols() const { return cols_; }
    const std::vector<std::string>& vars() const { return vars_; }
    const TermMap& terms() const { return terms_; }
    bool isZero() const { return terms_.empty(); }
    bool isConstant() const;
    bool dependsOn(const std::string& var) const;
    // Constant part (exponent vector all zero), or zero matrix if absent.
    Eigen::MatrixXd constantPart() const;
    // Throws if not constant.
    Eigen::MatrixXd toConstant() const;
    double toScalar() const;

    int degree(const std::string& var) const;
    int totalDegree() const;

    Polynomial operator+(const Polynomial& rhs) const;
    Polynomial operator-(const Polynomial& rhs) const;
    Polynomial operator-() const;
    Polynomial operator*(const Polynomial& rhs) const;
    Polynomial operator*(double k) const;
    friend Polynomial operator*(double k, const Polynomial& p) { return p * k; }
    Polynomial transpose() const;

    bool operator==(const Polynomial& rhs) const;
    bool operator!=(const Polynomial& rhs) const { return !(*this == rhs); }
    // max |coeff| difference against rhs over the union of terms
    double coeffDistance(const Polynomial& rhs) const;
    double coeffNorm() const;

    Polynomial block(Eigen::Index i0, Eigen::Index j0, Eigen::Index r, Eigen::Index c) const;
    static Polynomial hcat(const std::vector<Polynomial>& ps);
    static Polynomial vcat(const std::vector<Polynomial>& ps);

    Polynomial diff(const std::string& var, int order = 1) const;
    // Substitute var -> value (another variable, scalar, or polynomial).
    Polynomial subs(const std::string& var, const Polynomial& value) const;
    Polynomial subs(const std::string& var, double value) const;
    Polynomial rename(const std::string& var, const std::string& newName) const;
    // Definite integral over var from lower to upper; limits must not depend on var.
    Polynomial integrate(const std::string& var, const Polynomial& lower, const Polynomial& upper) const;
    Polynomial integrate(const std::string& var, double lower, double upper) const;

    Eigen::MatrixXd eval(const std::map<std::string, double>& point) const;
    double evalScalar(const std::map<std::string, double>& point) const;

    // Rendering in the manual's style, e.g. "s*s_dum-0.25*s_dum^2-0.75*s_dum".
    // Coefficients below droptol are not printed.
    std::string str(double droptol = 1e-12) const;

    void addTerm(const std::vector<std::string>& vars, const Exponents& deg, const Eigen::MatrixXd& c);

private:
    Eigen::Index rows_, cols_;
    std::vector<std::string> vars_;  // sorted
    TermMap terms_;

    void insertRaw(const Exponents& e, const Eigen::MatrixXd& c);
    // Rewrite onto a variable list that is a superset of vars_.
    Polynomial onVars(const std::vector<std::string>& allVars) const;
    friend std::vector<std::string> unionVars(const Polynomial& a, const Polynomial& b);
    friend Polynomial scalarMul(const Polynomial& scalar, const Polynomial& m);
};

std::vector<std::string> unionVars(const Polynomial& a, const Polynomial& b);

// Product of a 1x1 polynomial with a matrix polynomial.
Polynomial scalarMul(const Polynomial& scalar, const Polynomial& m);

// Polynomial affine in scalar decision variables:
//   value(d) = constant + sum_i d_i * linear[i].
class DecisionPolynomial {
public:
    DecisionPolynomial() = default;
    DecisionPolynomial(Eigen::Index rows, Eigen::Index cols) : constant_(rows, cols) {}
    /* implicit */ DecisionPolynomial(const Polynomial& p) : constant_(p) {}

    static DecisionPolynomial decvar(const std::string& name, Eigen::Index rows = 1, Eigen::Index cols = 1);

    Eigen::Index rows() const { return constant_.rows(); }
    Eigen::Index cols() const { return constant_.cols(); }
    const Polynomial& constant() const { return constant_; }
    const std::map<std::string, Polynomial>& linear() const { return linear_; }
    bool hasDecvars() const { return !linear_.empty(); }
    bool isZero() const;

    DecisionPolynomial operator+(const DecisionPolynomial& rhs) const;
    DecisionPolynomial operator-(const DecisionPolynomial& rhs) const;
    DecisionPolynomial operator-() const;
    DecisionPolynomial operator*(double k) const;
    friend DecisionPolynomial operator*(double k, const DecisionPolynomial& p) { return p * k; }
    DecisionPolynomial transpose() const;

    Polynomial substitute(const std::map<std::string, double>& decvals) const;

    DecisionPolynomial diff(const std::string& var, int order = 1) const;
    DecisionPolynomial subs(const std::string& var, const Polynomial& value) const;
    DecisionPolynomial rename(const std::string& var, const std::string& newName) const;
    DecisionPolynomial integrate(const std::string& var, const Polynomial& lower, const Polynomial& upper) const;
    DecisionPolynomial block(Eigen::Index i0, Eigen::Index j0, Eigen::Index r, Eigen::Index c) const;
    static DecisionPolynomial hcat(const std::vector<DecisionPolynomial>& ps);
    static DecisionPolynomial vcat(const std::vector<DecisionPolynomial>& ps);

    // Collect (decvar, coefficient) pairs for entry (i,j) at a given exponent
    // pattern; used by the LPI compiler. visit(decvar_or_empty, value).
    void forEachCoefficient(
        const std::function<void(const std::string& decvar, const Polynomial::Exponents& exp,
                                 Eigen::Index i, Eigen::Index j, double value,
                                 const std::vector<std::string>& vars)>& visit) const;

    std::vector<std::string> decvarNames() const;

private:
    Polynomial constant_;
    std::map<std::string, Polynomial> linear_;
    void prune();
    friend DecisionPolynomial mul(const Polynomial& a, const DecisionPolynomial& b);
    friend DecisionPolynomial mul(const DecisionPolynomial& a, const Polynomial& b);
};

// Product helpers: at most one factor may carry decision variables.
inline Polynomial mul(const Polynomial& a, const Polynomial& b) { return a * b; }
DecisionPolynomial mul(const Polynomial& a, const DecisionPolynomial& b);
DecisionPolynomial mul(const DecisionPolynomial& a, const Polynomial& b);
DecisionPolynomial mul(const DecisionPolynomial& a, const DecisionPolynomial& b);

inline DecisionPolynomial operator+(const Polynomial& a, const DecisionPolynomial& b) {
    return DecisionPolynomial(a) + b;
}
inline DecisionPolynomial operator+(const DecisionPolynomial& a, const Polynomial& b) {
    return a + DecisionPolynomial(b);
}
inline DecisionPolynomial operator-(const Polynomial& a, const DecisionPolynomial& b) {
    return DecisionPolynomial(a) - b;
}
inline DecisionPolynomial operator-(const DecisionPolynomial& a, const Polynomial& b) {
    return a - DecisionPolynomial(b);
}

}  // namespace pilib

#endif
