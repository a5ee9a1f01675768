#include "pilib/cheb.hpp"

#include <cmath>

namespace pilib::cheb {

Eigen::VectorXd nodes(int N, double a, double b) {
    Eigen::VectorXd x(N + 1);
    for (int j = 0; j <= N; ++j) {
        double t = std::cos(M_PI * double(N - j) / double(N));  // ascending in [-1,1]
        x(j) = a + 0.5 * (b - a) * (1.0 + t);
    }
    return x;
}

Eigen::MatrixXd valsToCoeffs(int N) {
    // c_k = (2 - delta_{k0} - delta_{kN})/N * sum_j'' f(x_j) cos(pi k (N-j)/N)
    // with the double-prime sum halving the endpoint contributions.
    Eigen::MatrixXd C(N + 1, N + 1);
    for (int k = 0; k <= N; ++k) {
        for (int j = 0; j <= N; ++j) {
            double w = (j == 0 || j == N) ? 0.5 : 1.0;
            double ck = (k == 0 || k == N) ? 1.0 : 2.0;
            C(k, j) = ck * w * std::cos(M_PI * k * double(N - j) / double(N)) / double(N);
        }
    }
    return C;
}

Eigen::VectorXd weights(int N, double a, double b) {
    // Integrate the Chebyshev interpolant: int_{-1}^{1} T_k = 2/(1-k^2) for even k.
    Eigen::MatrixXd C = valsToCoeffs(N);
    Eigen::VectorXd m = Eigen::VectorXd::Zero(N + 1);
    for (int k = 0; k <= N; k += 2) m(k) = 2.0 / (1.0 - double(k) * double(k));
    return 0.5 * (b - a) * (C.transpose() * m);
}

Eigen::MatrixXd integLower(int N, double a, double b) {
    // Work in coefficient space: antiderivative of sum c_k T_k has coefficients
    //   b_k = (c_{k-1} - c_{k+1}) / (2k),  k >= 2;  b_1 = c_0 - c_2/2,
    // then fix the constant so the antiderivative vanishes at the left end.
    Eigen::MatrixXd C = valsToCoeffs(N);
    int M = N + 2;  // antiderivative needs one more mode
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(M, N + 1);
    for (int k = 1; k < M; ++k) {
        if (k == 1) {
            B(1, 0) = 1.0;
            if (N >= 2) B(1, 2) = -0.5;
        } else {
            if (k - 1 <= N) B(k, k - 1) += 1.0 / (2.0 * k);
            if (k + 1 <= N) B(k, k + 1) -= 1.0 / (2.0 * k);
        }
    }
    // Values of T_k at the N+1 nodes (in [-1,1], ascending).
    Eigen::MatrixXd T(N + 1, M);
    for (int j = 0; j <= N; ++j) {
        double t = std::cos(M_PI * double(N - j) / double(N));
        for (int k = 0; k < M; ++k) T(j, k) = std::cos(k * std::acos(std::min(1.0, std::max(-1.0, t))));
    }
    Eigen::MatrixXd Anti = T * (B * C);          // nodal values of antiderivative (up to constant)
    Eigen::MatrixXd J = Anti.rowwise() - Anti.row(0);  // vanish at left end (node 0 = a)
    return 0.5 * (b - a) * J;
}

Eigen::MatrixXd integUpper(int N, double a, double b) {
    Eigen::MatrixXd J = integLower(N, a, b);
    Eigen::VectorXd w = weights(N, a, b);
    // int_s^b = int_a^b - int_a^s
    return w.transpose().replicate(N + 1, 1) - J;
}

Eigen::VectorXd polyfit(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int deg) {
    Eigen::MatrixXd V(x.size(), deg + 1);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double p = 1.0;
        for (int k = 0; k <= deg; ++k) {
            V(i, k) = p;
            p *= x(i);
        }
    }
    return V.colPivHouseholderQr().solve(y);
}

}  // namespace pilib::cheb
