#ifndef PILIB_CHEB_HPP
#define PILIB_CHEB_HPP

#include <Eigen/Dense>

namespace pilib::cheb {

// Chebyshev-Gauss-Lobatto nodes on [a,b], ascending (node 0 = a, node N = b).
Eigen::VectorXd nodes(int N, double a, double b);

// Clenshaw-Curtis weights w with  int_a^b f ds ~= sum_j w_j f(nodes_j).
Eigen::VectorXd weights(int N, double a, double b);

// Values at nodes -> Chebyshev series coefficients (first-kind, on [a,b]).
Eigen::MatrixXd valsToCoeffs(int N);

// Spectral antiderivative matrices: (Jlow f)(s_i) ~= int_a^{s_i} f,
// (Jup f)(s_i) ~= int_{s_i}^{b} f, acting on nodal values.
Eigen::MatrixXd integLower(int N, double a, double b);
Eigen::MatrixXd integUpper(int N, double a, double b);

// Least-squares polynomial fit: given samples y_k at points x_k, return the
// monomial-basis coefficients c_0..c_deg of the best-fitting polynomial.
Eigen::VectorXd polyfit(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int deg);

}  // namespace pilib::cheb

#endif
