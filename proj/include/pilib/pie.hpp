#ifndef PILIB_PIE_HPP
#define PILIB_PIE_HPP

#include <optional>
#include <variant>

#include "pilib/opvar.hpp"

namespace pilib {

struct UninferableDimension : std::runtime_error {
    explicit UninferableDimension(const std::string& m)
        : std::runtime_error("UninferableDimension: " + m) {}
};
struct AlgebraicLoop : std::runtime_error {
    explicit AlgebraicLoop(const std::string& m) : std::runtime_error("AlgebraicLoop: " + m) {}
};

// PIE system
//   T dx_f/dt + Tw dw/dt + Tu du/dt = A x_f + B1 w + B2 u
//   z = C1 x_f + D11 w + D12 u
//   y = C2 x_f + D21 w + D22 u
// All operators share the domain [a,b] and variables (var1, var2).
struct PIESystem {
    double a = 0.0, b = 1.0;
    std::string var1 = "s", var2 = "s_dum";
    PIOperator T, Tw, Tu, A, B1, B2, C1, D11, D12, C2, D21, D22;

    Eigen::Index stateDim0() const { return T.n0; }
    Eigen::Index stateDim1() const { return T.n1; }
    Eigen::Index wDim() const { return B1.n0; }
    Eigen::Index uDim() const { return B2.n0; }
    Eigen::Index zDim() const { return C1.m0; }
    Eigen::Index yDim() const { return C2.m0; }

    // Asserts mutual block-dimension consistency of all twelve operators.
    void check() const;
};

// Arguments to piess may be a PI operator, a polynomial (auto-promoted to a
// multiplier operator), or empty (zero operator of inferred dimensions).
struct OpArg {
    std::variant<std::monostate, PIOperator, Polynomial> v;
    OpArg() = default;
    OpArg(const PIOperator& op) : v(op) {}
    OpArg(const Polynomial& p) : v(p) {}
    OpArg(double k) : v(Polynomial::constant(k)) {}
    bool empty() const { return std::holds_alternative<std::monostate>(v); }
    bool isOp() const { return std::holds_alternative<PIOperator>(v); }
};

// piess(T, A): autonomous system; piess({T,Tw,Tu}, A, {B1,B2}, {C1;C2},
// {D11,D12;D21,D22}) in full generality.
PIESystem piess(const OpArg& T, const OpArg& A);
PIESystem piess(const OpArg& T, const OpArg& A, const OpArg& B1, const OpArg& C1,
                const OpArg& D11 = {});
struct PiessParts {
    OpArg T, Tw, Tu;
    OpArg A;
    OpArg B1, B2;
    OpArg C1, C2;
    OpArg D11, D12, D21, D22;
};
PIESystem piess(const PiessParts& parts);

// Feedback interconnections.
enum class LoopMode { Controller, Observer };
PIESystem closedLoop(const PIESystem& sys, const PIOperator& K, LoopMode mode = LoopMode::Controller);

// Linear fractional transformation: u1 = y2, u2 = y1; stacked states, w, z.
PIESystem pielft(const PIESystem& P1, const PIESystem& P2);

}  // namespace pilib

#endif
