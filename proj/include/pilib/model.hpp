#ifndef PILIB_MODEL_HPP
#define PILIB_MODEL_HPP

#include <optional>
#include <string>
#include <vector>

#include "pilib/pie.hpp"

namespace pilib {

struct BCCountMismatch : std::runtime_error {
    explicit BCCountMismatch(const std::string& m) : std::runtime_error("BCCountMismatch: " + m) {}
};
struct IllegalDerivativeOnInput : std::runtime_error {
    explicit IllegalDerivativeOnInput(const std::string& m)
        : std::runtime_error("IllegalDerivativeOnInput: " + m) {}
};
struct UnboundVariable : std::runtime_error {
    explicit UnboundVariable(const std::string& m) : std::runtime_error("UnboundVariable: " + m) {}
};
struct WrongKind : std::runtime_error {
    explicit WrongKind(const std::string& m) : std::runtime_error("WrongKind: " + m) {}
};
struct IllPosedBC : std::runtime_error {
    explicit IllPosedBC(const std::string& m) : std::runtime_error("IllPosedBC: " + m) {}
};

// A single term of an equation:  int_I C(s,th) d^D/ds^D v(t - delay, loc).
// The target is one of {state, exogenous input, control input} by index.
struct Term {
    enum class Kind { State, Exo, Ctrl };
    enum class Loc { Interior, Lower, Upper };          // evaluation position
    enum class Integral { None, Full, PartialLower, PartialUpper };  // [a,b], [a,s], [s,b]

    Kind kind = Kind::State;
    int target = 0;
    int D = 0;
    Loc loc = Loc::Interior;
    Integral I = Integral::None;
    // Coefficient, a matrix polynomial in the component's variable (var1) and,
    // for integral terms acting as kernels, the dummy variable (var2).
    Polynomial C = Polynomial::constant(1.0);
    double delay = 0.0;
};

// A state, input, or output component. Spatial components carry one variable.
struct Component {
    std::string name;
    Eigen::Index size = 1;
    bool spatial = false;
    std::string var;       // spatial variable name when spatial
    double a = 0, b = 1;   // domain when spatial
    int diff = 0;          // spatial differentiability order (states)
    int tdiff = 1;         // temporal order of the state equation
    std::vector<Term> terms;  // dynamics (states) or output equation (z, y)
};

struct BoundaryCondition {
    Eigen::Index size = 1;  // number of scalar rows
    std::vector<Term> terms;  // 0 = sum of terms
};

struct InitializeReport {
    std::string summary;
    bool wellFormed = true;
};

// Declarative 1D coupled ODE-PDE model in the terms-based format.
struct PDEModel {
    std::vector<Component> x;   // states (finite or spatial)
    std::vector<Component> w;   // exogenous inputs (finite)
    std::vector<Component> u;   // control inputs (finite)
    std::vector<Component> z;   // regulated outputs (finite)
    std::vector<Component> y;   // observed outputs (finite)
    std::vector<BoundaryCondition> bc;
    bool initialized = false;

    Eigen::Index wDim() const;
    Eigen::Index uDim() const;
};

// Validation and normalization passes.
InitializeReport initialize(PDEModel& m);

enum class Role { Control, Observe };
// Re-tag an exogenous input as control (Role::Control, index into w) or a
// regulated output as observed (Role::Observe, index into z).
std::string setRole(PDEModel& m, Role role, int index);

// Affine-rescale every spatial variable to [a,b] and merge them into one.
std::string combineVars(PDEModel& m, double a, double b);

// Replace delayed signals by transport states (then combineVars to [-1,1]).
std::string expandDelays(PDEModel& m);

// Introduce x_{k+1} = dx_k/dt chain states for higher temporal derivatives.
std::string expandTDerivatives(PDEModel& m);

// Reorder states so finite-dimensional components precede spatial ones.
std::string reorderComps(PDEModel& m);

// PDE -> PIE conversion (initialize/expand passes are applied if pending).
PIESystem convertPDEToPIE(PDEModel m, std::string* report = nullptr);

}  // namespace pilib

#endif
