#ifndef PILIB_DDE_HPP
#define PILIB_DDE_HPP

#include "pilib/pie.hpp"

namespace pilib {

// Batch DDE data:
//   d/dt x = A0 x + B1 w + B2 u
//          + sum_i [Ai x(t-tau_i) + B1i w(t-tau_i) + B2i u(t-tau_i)]
//          + sum_i int_{-tau_i}^0 [Adi(s) x(t+s) + B1di(s) w(t+s) + B2di(s) u(t+s)] ds
// with outputs z (C1, D11, D12, C1i, ..., C1di, ...) and y (C2, ...).
// Undeclared blocks are zero; matrices are sized on initialize().
struct DDEModel {
    std::vector<double> tau;

    Eigen::MatrixXd A0, B1, B2, C1, D11, D12, C2, D21, D22;
    std::vector<Eigen::MatrixXd> Ai, B1i, B2i, C1i, D11i, D12i, C2i, D21i, D22i;
    // distributed kernels, polynomials in the variable "s" on [-tau_i, 0]
    std::vector<Polynomial> Adi, B1di, B2di, C1di, D11di, D12di, C2di, D21di, D22di;

    Eigen::Index nx = 0, nw = 0, nu = 0, nz = 0, ny = 0;
    bool initialized = false;

    // Infers dimensions, zero-fills undeclared blocks, checks consistency.
    void initialize();
};

// Direct DDE -> PIE conversion: the state is augmented with transport states
// x_i(t,s) = x(t + tau_i s) on s in [-1,0] (and likewise for delayed inputs).
PIESystem convertDDEToPIE(DDEModel m);

}  // namespace pilib

#endif
