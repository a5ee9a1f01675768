#include "doctest.h"
#include "pilib/pie.hpp"
#include "pilib/sim.hpp"

#include <random>

using namespace pilib;

namespace {

Polynomial s() { return Polynomial::variable("s"); }
Polynomial th() { return Polynomial::variable("s_dum"); }
Polynomial c(double v) { return Polynomial::constant(v); }

// The boundary-controlled heat PIE of the conversion chapter, built directly.
PIESystem ioFixture() {
    PIOperator T(0, 0, 1, 1, 0.0, 1.0);
    T.R1 = -th();
    T.R2 = -s();
    PIOperator Tu(0, 1, 1, 0, 0.0, 1.0);
    Tu.Q2 = c(1.0);
    PIOperator C1(1, 0, 0, 1, 0.0, 1.0);
    C1.Q1 = 0.5 * (s() * s()) - s();
    PIOperator C2(1, 0, 0, 1, 0.0, 1.0);
    C2.Q1 = -s();
    PiessParts p;
    p.T = T;
    p.Tu = Tu;
    p.A = c(0.5);
    p.B1 = s() * (c(2.0) - s());
    p.C1 = C1;
    p.C2 = C2;
    p.D12 = c(1.0);
    p.D22 = c(1.0);
    return piess(p);
}

}  // namespace

TEST_CASE("piess transport fixture") {
    PIOperator T(0, 0, 1, 1, 0.0, 1.0);
    T.R1 = c(1.0);
    PIOperator A(0, 0, 1, 1, 0.0, 1.0);
    A.R0 = c(2.0);
    A.R1 = c(10.0);
    PIESystem pie = piess(T, A);
    CHECK(pie.T.R1 == c(1.0));
    CHECK(pie.A.R0 == c(2.0));
    CHECK(pie.A.R1 == c(10.0));
    CHECK(pie.wDim() == 0);
    CHECK(pie.uDim() == 0);
    CHECK(pie.zDim() == 0);

    // B = 5s auto-promoted to a multiplier R -> L2
    PIOperator C(1, 0, 0, 1, 0.0, 1.0);
    C.Q1 = c(1.0) - s();
    PIESystem pie2 = piess(T, A, 5.0 * s(), C, 0.0);
    CHECK(pie2.B1.Q2 == 5.0 * s());
    CHECK(pie2.B1.m1 == 1);
    CHECK(pie2.wDim() == 1);
    CHECK(pie2.Tw.Q2.isZero());
    CHECK(pie2.D11.P.isZero());

    // mismatched domains
    PIOperator A2 = A;
    A2.b = 2.0;
    CHECK_THROWS_AS(piess(T, A2), DomainMismatch);
}

TEST_CASE("piess full io form matches the fixture") {
    PIESystem pie = ioFixture();
    CHECK(pie.T.R1 == -th());
    CHECK(pie.Tu.Q2 == c(1.0));
    CHECK(pie.A.R0 == c(0.5));
    CHECK(pie.D12.P == c(1.0));
    CHECK(pie.D22.P == c(1.0));
    CHECK(pie.B2.Q2.isZero());
    pie.check();
}

TEST_CASE("closedLoop with K=0 deletes the u channel") {
    PIESystem pie = ioFixture();
    PIOperator K0(1, 0, 0, 1, 0.0, 1.0);  // zero gain L2 -> R
    PIESystem cl = closedLoop(pie, K0);
    CHECK(cl.uDim() == 0);
    CHECK(cl.yDim() == 0);
    CHECK(paramDistance(cl.A, pie.A) < 1e-14);
    CHECK(paramDistance(cl.T, pie.T) < 1e-14);
    CHECK(paramDistance(cl.C1, pie.C1) < 1e-14);
}

TEST_CASE("closedLoop controller folds the feedback law") {
    PIESystem pie = ioFixture();
    PIOperator K(1, 0, 0, 1, 0.0, 1.0);
    K.Q1 = c(1.0);  // u = int xf
    PIESystem cl = closedLoop(pie, K);
    // T gains Tu o K: kernel 1 on both triangles
    CHECK(cl.T.R1 == c(1.0) - th());
    CHECK(cl.T.R2 == c(1.0) - s());
    // z gains D12 o K
    CHECK(cl.C1.Q1 == c(1.0) + 0.5 * (s() * s()) - s());
}

TEST_CASE("closedLoop observer doubles the state") {
    PIESystem pie = ioFixture();
    PIOperator L(0, 1, 1, 0, 0.0, 1.0);
    L.Q2 = s() * (c(1.0) - s());
    PIESystem cl = closedLoop(pie, L, LoopMode::Observer);
    CHECK(cl.T.n1 == 2);
    CHECK(cl.zDim() == 2);
    CHECK(cl.yDim() == 0);
    // T is block diagonal with two copies
    CHECK(slice(cl.T, {0}, {0}).R1 == pie.T.R1);
    CHECK(slice(cl.T, {1}, {1}).R1 == pie.T.R1);
    CHECK(slice(cl.T, {0}, {1}).R1.isZero());
    // A(2,1) = -L C2
    PIOperator LC2 = compose(L, pie.C2);
    CHECK(paramDistance(slice(cl.A, {1}, {0}), -1.0 * LC2) < 1e-14);
}

TEST_CASE("pielft reproduces the estimator interconnection dims") {
    PIESystem pie = ioFixture();
    // estimator PIE: state xhat, input u2 = y1, outputs (z2 = C1 xhat; y2 = K xhat)
    PIOperator T = pie.T;
    PIOperator A(0, 0, 1, 1, 0.0, 1.0);
    A.R0 = c(0.5);
    A.R1 = -(s() * (c(1.0) - s()) * th());
    A.R2 = A.R1;
    PIOperator C1(1, 0, 0, 1, 0.0, 1.0);
    C1.Q1 = 0.5 * (s() * s()) - s();
    PIOperator K(1, 0, 0, 1, 0.0, 1.0);
    K.Q1 = c(1.0);
    PIOperator L(0, 1, 1, 0, 0.0, 1.0);
    L.Q2 = s() * (c(1.0) - s());
    PiessParts est;
    est.T = T;
    est.A = A;
    est.B2 = -1.0 * L;
    est.C1 = C1;
    est.C2 = K;
    PIESystem estSys = piess(est);
    PIESystem cl = pielft(pie, estSys);
    CHECK(cl.T.n1 == 2);
    CHECK(cl.uDim() == 0);
    CHECK(cl.yDim() == 0);
    CHECK(cl.wDim() == 1);
    CHECK(cl.zDim() == 2);
    // T(1,2) block = Tu1 o K: kernel 1 over the full domain
    PIOperator T12 = slice(cl.T, {0}, {1});
    CHECK(T12.R1 == c(1.0));
    CHECK(T12.R2 == c(1.0));
    // A(2,1) = B2_est o C2_1 = (-L) o C2: kernel +s(1-s)*th
    PIOperator A21 = slice(cl.A, {1}, {0});
    CHECK(A21.R1 == s() * (c(1.0) - s()) * th());
    // z1 row: [C1, D12 o K] over (x1, x2)
    CHECK(slice(cl.C1, {0}, {0}).Q1 == 0.5 * (s() * s()) - s());
    CHECK(slice(cl.C1, {0}, {1}).Q1 == c(1.0));

    cl.check();
}

TEST_CASE("pielft action matches hand-composed equations on samples") {
    PIESystem pie = ioFixture();
    PIOperator T = pie.T;
    PIOperator A(0, 0, 1, 1, 0.0, 1.0);
    A.R0 = c(0.5);
    PIOperator C1(1, 0, 0, 1, 0.0, 1.0);
    C1.Q1 = 0.5 * (s() * s()) - s();
    PIOperator K(1, 0, 0, 1, 0.0, 1.0);
    K.Q1 = c(1.0);
    PIOperator L(0, 1, 1, 0, 0.0, 1.0);
    L.Q2 = s() * (c(1.0) - s());
    PiessParts est;
    est.T = T;
    est.A = A;
    est.B2 = -1.0 * L;
    est.C1 = C1;
    est.C2 = K;
    PIESystem estSys = piess(est);
    PIESystem cl = pielft(pie, estSys);

    int N = 16;
    Eigen::MatrixXd Acl = discretize(cl.A, N);
    // manual: u1 = y2 = K x2; u2 = y1 = C2 x1 + D22 u1 = C2 x1 + D22 K x2
    Eigen::MatrixXd A1 = discretize(pie.A, N), B2_1 = discretize(pie.B2, N);
    Eigen::MatrixXd C2_1 = discretize(pie.C2, N), D22_1 = discretize(pie.D22, N);
    Eigen::MatrixXd A2 = discretize(estSys.A, N), B2_2 = discretize(estSys.B2, N);
    Eigen::MatrixXd C2_2 = discretize(estSys.C2, N);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Eigen::VectorXd nodes = cheb::nodes(N, 0.0, 1.0);
    double supErr = 0;
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::VectorXd x1(N + 1), x2(N + 1);
        double a0 = d(rng), a1 = d(rng);
        for (int j = 0; j <= N; ++j) {
            x1(j) = a0 * std::sin(2 * nodes(j)) + 0.3;
            x2(j) = a1 * std::cos(nodes(j));
        }
        Eigen::VectorXd u1 = C2_2 * x2;
        Eigen::VectorXd u2 = C2_1 * x1 + D22_1 * u1;
        Eigen::VectorXd lhs1 = A1 * x1 + B2_1 * u1;
        Eigen::VectorXd lhs2 = A2 * x2 + B2_2 * u2;
        Eigen::VectorXd full(2 * (N + 1));
        // stacked state ordering: per-node interleaving of (x1, x2)
        for (int j = 0; j <= N; ++j) {
            full(2 * j) = x1(j);
            full(2 * j + 1) = x2(j);
        }
        Eigen::VectorXd got = Acl * full;
        for (int j = 0; j <= N; ++j) {
            supErr = std::max(supErr, std::abs(got(2 * j) - lhs1(j)));
            supErr = std::max(supErr, std::abs(got(2 * j + 1) - lhs2(j)));
        }
    }
    CHECK(supErr < 1e-9);
}

TEST_CASE("pielft with a static zero second system deletes channels") {
    PIESystem pie = ioFixture();
    // second system: finite state, u2-dim = y1-dim = 1, y2-dim = u1-dim = 1, all maps zero
    PIOperator T2 = identityOp(1, 0, 0.0, 1.0);
    PIOperator A2(1, 1, 0, 0, 0.0, 1.0);
    A2.P = c(-1.0);
    PiessParts p2;
    p2.T = T2;
    p2.A = A2;
    p2.B2 = zeroOp(1, 1, 0, 0, 0.0, 1.0);
    p2.C2 = zeroOp(1, 1, 0, 0, 0.0, 1.0);
    PIESystem sys2 = piess(p2);
    PIESystem cl = pielft(pie, sys2);
    CHECK(cl.uDim() == 0);
    CHECK(cl.yDim() == 0);
    // plant dynamics unchanged in the (1,1) block
    PIOperator A11 = slice(cl.A, {1}, {1});
    CHECK(paramDistance(A11, pie.A) < 1e-14);
}

TEST_CASE("pielft rejects a singular algebraic loop") {
    // two static systems with D22 = 1 each: I - D22 D22 = 0
    PIOperator T = identityOp(1, 0, 0.0, 1.0);
    PIOperator A(1, 1, 0, 0, 0.0, 1.0);
    A.P = c(-1.0);
    PiessParts p;
    p.T = T;
    p.A = A;
    p.B2 = identityOp(1, 0, 0.0, 1.0);
    p.C2 = identityOp(1, 0, 0.0, 1.0);
    p.D22 = identityOp(1, 0, 0.0, 1.0);
    PIESystem s1 = piess(p);
    CHECK_THROWS_AS(pielft(s1, s1), AlgebraicLoop);
}
