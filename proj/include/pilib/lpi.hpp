#ifndef PILIB_LPI_HPP
#define PILIB_LPI_HPP

#include <map>
#include <optional>

#include "pilib/opvar.hpp"
#include "pilib/sdp.hpp"

namespace pilib {

struct DuplicateName : std::runtime_error {
    explicit DuplicateName(const std::string& m) : std::runtime_error("DuplicateName: " + m) {}
};
struct BadDegreeSpec : std::runtime_error {
    explicit BadDegreeSpec(const std::string& m) : std::runtime_error("BadDegreeSpec: " + m) {}
};

// Convex optimization program over PI operators: scalar decision variables,
// PSD matrix blocks (from poslpivar), linear equalities over polynomial
// coefficients, and a linear objective. Compiles to an SDPProblem.
class LPIProgram {
public:
    LPIProgram(const std::string& var, double a, double b, std::string dumVar = "");

    const std::string& var1() const { return var1_; }
    const std::string& var2() const { return var2_; }
    double a() const { return a_; }
    double b() const { return b_; }

    // scalar decision variable(s)
    DecisionPolynomial decvar(const std::string& name);
    DecisionPolynomial decvars(Eigen::Index rows, Eigen::Index cols);

    // registers a PSD matrix block of fresh coefficients, returns the matrix
    DecisionPolynomial psdBlock(Eigen::Index size);

    // equality constraint: every polynomial coefficient of Q is zero
    void addEq(const DecisionPIOperator& Q, bool symmetric = false);
    void addEq(const DecisionPolynomial& dp, bool symmetric = false);

    // scalar inequality expr >= 0 (constant in space)
    void addScalarIneq(const DecisionPolynomial& expr);

    void setObjective(const DecisionPolynomial& linear);

    struct Diagnostics {
        int iterations = 0;
        double gap = 0, presidual = 0, dresidual = 0;
        bool pinf = false, dinf = false;
        std::string verdict;  // feasible | marginal | infeasible
        std::string message;
    };
    Diagnostics solve(const SDPOptions& opts = {});

    bool solved() const { return solution_.has_value(); }
    const std::map<std::string, double>& solution() const;
    double value(const DecisionPolynomial& scalar) const;
    Polynomial getsol(const DecisionPolynomial& p) const;
    PIOperator getsol(const DecisionPIOperator& op) const;

    SDPProblem compile() const;
    const Diagnostics& diagnostics() const { return diag_; }

    Eigen::Index numDecvars() const { return (Eigen::Index)names_.size(); }
    Eigen::Index numEqualities() const { return (Eigen::Index)eqs_.size(); }

    std::string freshName(const std::string& stem);

private:
    std::string var1_, var2_;
    double a_, b_;
    std::vector<std::string> names_;
    std::map<std::string, int> index_;
    std::vector<int> psdOf_;  // -1 = free, else psd block id
    struct Psd {
        int start;  // first decvar index
        Eigen::Index size;
    };
    std::vector<Psd> psd_;
    struct LinRow {
        std::vector<std::pair<int, double>> terms;
        double rhs = 0;
    };
    std::vector<LinRow> eqs_;
    std::vector<std::pair<int, double>> objective_;
    std::optional<std::map<std::string, double>> solution_;
    Diagnostics diag_;
    int counter_ = 0;

    int addName(const std::string& name, int psdId);
};

// --- operator decision variables -------------------------------------------

struct PosOptions {
    std::array<bool, 4> exclude{false, false, false, false};
    int psatz = 0;   // 0: g = 1;  1: g = (b-s)(s-a)
    bool sep = false;  // constrain R1 == R2
};

// Positive-semidefinite PI operator decision variable (Z^* (gT) Z form).
DecisionPIOperator poslpivar(LPIProgram& prog, Eigen::Index n0, Eigen::Index n1,
                             const PosDegrees& deg = {}, const PosOptions& opts = {});

// Indefinite PI operator decision variable with per-parameter degrees.
DecisionPIOperator lpivar(LPIProgram& prog, Eigen::Index m0, Eigen::Index n0, Eigen::Index m1,
                          Eigen::Index n1, const std::array<int, 3>& deg);

struct IneqOptions {
    int psatz = 0;
    std::optional<PosDegrees> deg;  // default: degbalance of the operand
};

// Operator inequality Q >= 0 via Q = R1 (+ R2 with psatz), R_i = poslpivar.
void lpi_ineq(LPIProgram& prog, const DecisionPIOperator& Q, const IneqOptions& opts = {});

// trace of the finite block of an operator decision variable
DecisionPolynomial traceOf(const DecisionPolynomial& square);

// Convert a fixed operator into a (decision-free) DecisionPIOperator.
DecisionPIOperator asDecision(const PIOperator& op);

}  // namespace pilib

#endif
