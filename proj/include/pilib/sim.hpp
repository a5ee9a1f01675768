#ifndef PILIB_SIM_HPP
#define PILIB_SIM_HPP

#include <functional>
#include <optional>

#include "pilib/cheb.hpp"
#include "pilib/opvar.hpp"
#include "pilib/pie.hpp"

namespace pilib {

struct SingularStepMatrix : std::runtime_error {
    explicit SingularStepMatrix(const std::string& m)
        : std::runtime_error("SingularStepMatrix: " + m) {}
};

// Chebyshev collocation matrix of a PI operator: acts on stacked
// [finite; nodal] vectors, nodes ascending on [a,b]. The matrix maps
// (n0 + n1(N+1)) values to (m0 + m1(N+1)) values.
Eigen::MatrixXd discretize(const PIOperator& op, int N);

// Apply the discretized operator to samples of (x0, x1) and return samples.
Eigen::VectorXd applySampled(const PIOperator& op, int N, const Eigen::VectorXd& x);

// RL inner product of sampled elements (Clenshaw-Curtis weighting).
double rlInner(int N, double a, double b, Eigen::Index n0, const Eigen::VectorXd& x,
               const Eigen::VectorXd& y);

struct SimOptions {
    int N = 8;           // Chebyshev order for the spatial expansion
    double tf = 1.0;     // final time
    int Norder = 2;      // BDF order, 1..4
    double dt = 0.01;    // time step
    bool plot = false;   // emit a gnuplot script next to CSV output
};

// Time-dependent signal with an exact derivative (closed-form inputs).
struct TimeSignal {
    std::function<Eigen::VectorXd(double)> value;
    std::function<Eigen::VectorXd(double)> derivative;  // may be empty: finite differences
    Eigen::Index dim = 0;
};

struct SimInputs {
    // Initial condition for the fundamental state: x0 part and nodal samples
    // builder for the L2 part, given the node vector.
    Eigen::VectorXd ic_finite;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd& nodes)> ic_l2;  // (N+1) x n1
    std::optional<TimeSignal> w;
    std::optional<TimeSignal> u;
};

struct SimSolution {
    double tf = 0;
    Eigen::VectorXd dtime;               // Nsteps
    Eigen::MatrixXd ode;                 // n_ode x Nsteps (primary finite states)
    std::vector<Eigen::MatrixXd> pde;    // per step: (N+1) x n_pde primary state samples
    Eigen::MatrixXd regulated;           // nz x Nsteps
    Eigen::MatrixXd observed;            // ny x Nsteps
    Eigen::VectorXd nodes;               // N+1 grid points
    // fundamental state at final time (finite; nodal stacked)
    Eigen::VectorXd fundamental_final;
    bool unstable_warning = false;
    std::string warning;
};

// Numerical-stability check for the BDF scheme on the discretized pencil.
struct StabilityReport {
    bool scheme_stable = true;
    bool physically_unstable = false;      // rightmost Re(lambda) > 0
    double rightmost_real = 0.0;
    std::optional<double> recommended_dt;  // absent when > 1 would be needed
    std::string message;
};
StabilityReport stabilityCheck(const PIESystem& pie, const SimOptions& opts);

// Simulate the PIE with BDF time stepping; reconstructs the primary state
// T v + Tw w + Tu u at every step.
SimSolution simulate(const PIESystem& pie, const SimOptions& opts, const SimInputs& in);

}  // namespace pilib

#endif
