#include "doctest.h"
#include "pilib/dde.hpp"
#include "pilib/model.hpp"
#include "pilib/sim.hpp"

#include "oracles.hpp"

using namespace pilib;

namespace {

Polynomial s() { return Polynomial::variable("s"); }
Polynomial th() { return Polynomial::variable("s_dum"); }
Polynomial c(double v) { return Polynomial::constant(v); }

Term stateTerm(int target, int D = 0, const Polynomial& C = Polynomial::constant(1.0)) {
    Term t;
    t.kind = Term::Kind::State;
    t.target = target;
    t.D = D;
    t.C = C;
    return t;
}

Term boundaryTerm(int target, int D, Term::Loc loc, const Polynomial& C = Polynomial::constant(1.0)) {
    Term t = stateTerm(target, D, C);
    t.loc = loc;
    return t;
}

Term integralTerm(int target, Term::Integral I, const Polynomial& C = Polynomial::constant(1.0),
                  int D = 0) {
    Term t = stateTerm(target, D, C);
    t.I = I;
    return t;
}

Term inputTerm(Term::Kind kind, int target, const Polynomial& C = Polynomial::constant(1.0)) {
    Term t;
    t.kind = kind;
    t.target = target;
    t.C = C;
    return t;
}

// Heat equation with integral BCs (the conversion-chapter fixture):
//   xdot = d2x/ds2 on [0,1],  x(0) + int_0^1 x = 0,  x(1) + int_0^1 x = 0.
PDEModel heatIntegralBC() {
    PDEModel m;
    Component x;
    x.name = "x";
    x.spatial = true;
    x.var = "s";
    x.a = 0;
    x.b = 1;
    x.terms = {stateTerm(0, 2)};
    m.x = {x};
    BoundaryCondition bc1;
    bc1.terms = {boundaryTerm(0, 0, Term::Loc::Lower), integralTerm(0, Term::Integral::Full)};
    BoundaryCondition bc2;
    bc2.terms = {boundaryTerm(0, 0, Term::Loc::Upper), integralTerm(0, Term::Integral::Full)};
    m.bc = {bc1, bc2};
    return m;
}

// Boundary-controlled heat equation with disturbance (the io fixture):
//   xdot = 0.5 d2x/ds2 + s(2-s) w,  z = int x,  y = x(1),  x(0)=u,  dx(1)=0.
PDEModel heatBoundaryControl() {
    PDEModel m;
    Component x;
    x.name = "x";
    x.spatial = true;
    x.var = "s";
    x.a = 0;
    x.b = 1;
    x.terms = {stateTerm(0, 2, c(0.5)),
               inputTerm(Term::Kind::Exo, 0, s() * (c(2.0) - s()))};
    m.x = {x};
    Component w;
    w.name = "w";
    m.w = {w};
    Component u;
    u.name = "u";
    m.u = {u};
    Component z;
    z.name = "z";
    z.terms = {integralTerm(0, Term::Integral::Full)};
    m.z = {z};
    Component y;
    y.name = "y";
    y.terms = {boundaryTerm(0, 0, Term::Loc::Upper)};
    m.y = {y};
    BoundaryCondition bc1;  // x(0) - u = 0
    bc1.terms = {boundaryTerm(0, 0, Term::Loc::Lower), inputTerm(Term::Kind::Ctrl, 0, c(-1.0))};
    BoundaryCondition bc2;  // dx(1) = 0
    bc2.terms = {boundaryTerm(0, 1, Term::Loc::Upper)};
    m.bc = {bc1, bc2};
    return m;
}

}  // namespace

TEST_CASE("initialize reports and validates") {
    PDEModel m = heatIntegralBC();
    auto rep = initialize(m);
    CHECK(rep.summary.find("differentiable up to order (2)") != std::string::npos);
    CHECK(m.x[0].diff == 2);
    CHECK(m.initialized);

    // missing one BC
    PDEModel bad = heatIntegralBC();
    bad.bc.pop_back();
    CHECK_THROWS_AS(initialize(bad), BCCountMismatch);

    // derivative of an input
    PDEModel bad2 = heatIntegralBC();
    Component w;
    bad2.w = {w};
    Term t = inputTerm(Term::Kind::Exo, 0);
    t.D = 1;
    bad2.x[0].terms.push_back(t);
    CHECK_THROWS_AS(initialize(bad2), IllegalDerivativeOnInput);
}

TEST_CASE("setRole retags inputs and outputs") {
    PDEModel m = heatBoundaryControl();
    // make a variant where u was declared exogenous: move it back
    PDEModel m2 = m;
    // convert w (index 0) to control
    std::string msg = setRole(m2, Role::Control, 0);
    CHECK(msg == "1 inputs were designated as controlled inputs");
    CHECK(m2.w.empty());
    CHECK(m2.u.size() == 2);
    // the dynamics term now references the control input
    bool found = false;
    for (const auto& t : m2.x[0].terms)
        if (t.kind == Term::Kind::Ctrl && t.target == 1) found = true;
    CHECK(found);
    CHECK_THROWS_AS(setRole(m2, Role::Control, 0), WrongKind);

    PDEModel m3 = heatBoundaryControl();
    std::string msg2 = setRole(m3, Role::Observe, 0);
    CHECK(msg2 == "1 outputs were designated as observed outputs");
    CHECK(m3.z.empty());
    CHECK(m3.y.size() == 2);
}

TEST_CASE("heat equation conversion reproduces the printed operators exactly") {
    PDEModel m = heatIntegralBC();
    PIESystem pie = convertPDEToPIE(m);
    CHECK(pie.T.n1 == 1);
    Polynomial expectR1 = s() * th() - 0.25 * (th() * th()) - 0.75 * th();
    Polynomial expectR2 = s() * th() - 0.25 * (th() * th()) - s() + 0.25 * th();
    CHECK(pie.T.R1.coeffDistance(expectR1) < 1e-12);
    CHECK(pie.T.R2.coeffDistance(expectR2) < 1e-12);
    CHECK(pie.A.R0.coeffDistance(c(1.0)) < 1e-12);
    CHECK(pie.A.R1.isZero());
    CHECK(pie.T.R1.str() == "s*s_dum-0.25*s_dum^2-0.75*s_dum");
}

TEST_CASE("conversion preserves dynamics on a compatible state") {
    // pick x(s) = s(1-s)-like state satisfying the integral BCs:
    // solve for q(s)=alpha+beta*s+s^2 basis is overkill; instead verify
    // action(T, xf) == x for x built from an arbitrary xf through the map.
    PDEModel m = heatIntegralBC();
    PIESystem pie = convertPDEToPIE(m);
    // choose xf = d2x/ds2 for x = s^2(1-s)^2 + correction to satisfy BCs:
    // just use the PIE map itself on a polynomial xf and check the BCs and
    // second derivative relation hold exactly, which is the same identity.
    Polynomial xf = s() * s() - c(0.3);
    Polynomial x = applyPoly(pie.T, Eigen::VectorXd::Zero(0), xf).y1;
    CHECK(x.diff("s", 2).coeffDistance(xf) < 1e-12);
    double bc1 = x.evalScalar({{"s", 0.0}}) + x.integrate("s", 0.0, 1.0).toScalar();
    double bc2 = x.evalScalar({{"s", 1.0}}) + x.integrate("s", 0.0, 1.0).toScalar();
    CHECK(std::abs(bc1) < 1e-12);
    CHECK(std::abs(bc2) < 1e-12);
}

TEST_CASE("io conversion reproduces all printed blocks") {
    PDEModel m = heatBoundaryControl();
    PIESystem pie = convertPDEToPIE(m);
    CHECK(pie.Tu.Q2.coeffDistance(c(1.0)) < 1e-12);
    CHECK(pie.Tw.Q2.isZero());
    CHECK(pie.T.R1.coeffDistance(-th()) < 1e-12);
    CHECK(pie.T.R2.coeffDistance(-s()) < 1e-12);
    CHECK(pie.A.R0.coeffDistance(c(0.5)) < 1e-12);
    CHECK(pie.B1.Q2.coeffDistance(-(s() * s()) + 2.0 * s()) < 1e-12);
    CHECK(pie.C1.Q1.coeffDistance(0.5 * (s() * s()) - s()) < 1e-12);
    CHECK(pie.D12.P.coeffDistance(c(1.0)) < 1e-12);
    CHECK(pie.C2.Q1.coeffDistance(-s()) < 1e-12);
    CHECK(pie.D22.P.coeffDistance(c(1.0)) < 1e-12);
    CHECK(pie.D11.P.isZero());
    CHECK(pie.B2.Q2.isZero());
}

TEST_CASE("pure ODE conversion") {
    PDEModel m;
    Component x;
    x.name = "x";
    x.terms = {stateTerm(0, 0, c(-1.0))};
    m.x = {x};
    PIESystem pie = convertPDEToPIE(m);
    CHECK(pie.T.P.coeffDistance(c(1.0)) < 1e-14);
    CHECK(pie.A.P.coeffDistance(c(-1.0)) < 1e-14);
    CHECK(pie.T.n1 == 0);
}

TEST_CASE("reorder_comps moves finite states first and is idempotent") {
    PDEModel m;
    Component xp;
    xp.name = "xp";
    xp.spatial = true;
    xp.var = "s";
    xp.a = 0;
    xp.b = 1;
    xp.terms = {stateTerm(0, 2)};
    Component xo;
    xo.name = "xo";
    xo.terms = {stateTerm(1, 0, c(-1.0))};
    m.x = {xp, xo};
    BoundaryCondition b1, b2;
    b1.terms = {boundaryTerm(0, 0, Term::Loc::Lower)};
    b2.terms = {boundaryTerm(0, 0, Term::Loc::Upper)};
    m.bc = {b1, b2};
    initialize(m);
    std::string r1 = reorderComps(m);
    CHECK(r1.find("re-indexed") != std::string::npos);
    CHECK(!m.x[0].spatial);
    CHECK(m.x[0].name == "xo");
    CHECK(m.x[0].terms[0].target == 0);  // self-reference updated
    CHECK(m.x[1].terms[0].target == 1);
    std::string r2 = reorderComps(m);
    CHECK(r2.find("has not changed") != std::string::npos);
}

TEST_CASE("combine_vars rescales derivative coefficients") {
    // transport equations on [0,1], [0,2], [0,3] merge with speeds 1, .5, .333
    PDEModel m;
    for (int k = 0; k < 3; ++k) {
        Component x;
        x.name = "phi" + std::to_string(k + 1);
        x.spatial = true;
        x.var = "s" + std::to_string(k + 1);
        x.a = 0;
        x.b = k + 1.0;
        x.terms = {stateTerm(k, 1)};
        m.x.push_back(x);
        BoundaryCondition bc;
        bc.terms = {boundaryTerm(k, 0, Term::Loc::Lower)};
        m.bc.push_back(bc);
    }
    initialize(m);
    combineVars(m, 0.0, 1.0);
    for (int k = 0; k < 3; ++k) {
        CHECK(m.x[(size_t)k].var == "s");
        CHECK(m.x[(size_t)k].a == 0.0);
        CHECK(m.x[(size_t)k].b == 1.0);
        double speed = m.x[(size_t)k].terms[0].C.toScalar();
        CHECK(speed == doctest::Approx(1.0 / (k + 1.0)));
    }
    // identity rescale changes nothing
    PDEModel m2 = heatIntegralBC();
    initialize(m2);
    PDEModel m3 = m2;
    combineVars(m3, 0.0, 1.0);
    CHECK(m3.x[0].terms[0].C.coeffDistance(m2.x[0].terms[0].C) < 1e-14);
}

TEST_CASE("combine_vars doubles diffusion coefficient squared on [0,1]->[-1,1]") {
    PDEModel m = heatIntegralBC();
    initialize(m);
    combineVars(m, -1.0, 1.0);
    CHECK(m.x[0].terms[0].C.toScalar() == doctest::Approx(4.0));
}

TEST_CASE("expand_tderivatives builds the wave chain") {
    PDEModel m;
    Component x;
    x.name = "x";
    x.spatial = true;
    x.var = "s";
    x.a = 0;
    x.b = 1;
    x.tdiff = 2;
    x.terms = {stateTerm(0, 2)};
    m.x = {x};
    BoundaryCondition b1, b2;
    b1.terms = {boundaryTerm(0, 0, Term::Loc::Lower)};
    b2.terms = {boundaryTerm(0, 0, Term::Loc::Upper)};
    m.bc = {b1, b2};
    initialize(m);
    std::string rep = expandTDerivatives(m);
    CHECK(rep.find("Added 1 state component") != std::string::npos);
    CHECK(rep.find("No BCs have been imposed") != std::string::npos);
    CHECK(m.x.size() == 2);
    // first equation is xdot1 = x2
    CHECK(m.x[0].terms.size() == 1);
    CHECK(m.x[0].terms[0].target == 1);
    CHECK(m.x[0].tdiff == 1);
    // second equation carries the original RHS
    CHECK(m.x[1].terms[0].D == 2);
    CHECK_NOTHROW(convertPDEToPIE(m));

    // all tdiff=1 is an identity
    PDEModel m2 = heatIntegralBC();
    initialize(m2);
    CHECK(expandTDerivatives(m2).empty());
}

TEST_CASE("expand_delays adds a transport state and matches method of steps") {
    // xdot(t) = -x(t) + 0.5 x(t-1): scalar delayed ODE
    PDEModel m;
    Component x;
    x.name = "x";
    Term self = stateTerm(0, 0, c(-1.0));
    Term delayed = stateTerm(0, 0, c(0.5));
    delayed.delay = 1.0;
    x.terms = {self, delayed};
    m.x = {x};
    initialize(m);
    std::string rep = expandDelays(m);
    CHECK(rep.find("Added 1 state components") != std::string::npos);
    CHECK(m.x.size() == 2);
    CHECK(m.x[1].spatial);
    CHECK(m.bc.size() == 1);
    PIESystem pie = convertPDEToPIE(m);
    CHECK(pie.T.n0 == 1);
    CHECK(pie.T.n1 == 1);

    // no delays: identity
    PDEModel m2 = heatIntegralBC();
    initialize(m2);
    CHECK(expandDelays(m2).empty());
}

TEST_CASE("DDE conversion reproduces the printed 6x6 operators") {
    DDEModel dde;
    dde.A0 = (Eigen::MatrixXd(2, 2) << -1.5, 0, 0.5, -1).finished();
    dde.tau = {1.0, 2.0};
    dde.Adi.resize(2);
    dde.Adi[0] = Polynomial::constant((Eigen::MatrixXd(2, 2) << 3, 2.25, 0, 0.5).finished());
    dde.Adi[1] = Polynomial::constant((Eigen::MatrixXd(2, 2) << -1, 0, 0, -1).finished());
    PIESystem pie = convertDDEToPIE(dde);
    CHECK(pie.T.n0 == 2);
    CHECK(pie.T.n1 == 4);
    CHECK(pie.T.P.coeffDistance(Polynomial::identity(2)) < 1e-14);
    Eigen::MatrixXd q2(4, 2);
    q2 << 1, 0, 0, 1, 1, 0, 0, 1;
    CHECK(pie.T.Q2.coeffDistance(Polynomial::constant(q2)) < 1e-14);
    CHECK(pie.T.R2.coeffDistance(Polynomial::constant(-Eigen::MatrixXd::Identity(4, 4))) < 1e-14);
    CHECK(pie.T.R1.isZero());
    CHECK(pie.T.R0.isZero());

    Eigen::MatrixXd ap(2, 2);
    ap << -0.5, 2.25, 0.5, -2.5;
    CHECK(pie.A.P.coeffDistance(Polynomial::constant(ap)) < 1e-12);
    Eigen::MatrixXd r0 = Eigen::VectorXd({{1.0, 1.0, 0.5, 0.5}}).asDiagonal();
    CHECK(pie.A.R0.coeffDistance(Polynomial::constant(r0)) < 1e-14);
    // A.Q1 rows as printed
    Polynomial q1 = pie.A.Q1;
    Polynomial expect = Polynomial::zero(2, 4);
    auto put = [&](int i, int j, const Polynomial& p) {
        Eigen::MatrixXd lift = Eigen::MatrixXd::Zero(2, 4);
        lift(i, j) = 1;
        expect = expect + scalarMul(p, Polynomial::constant(lift));
    };
    put(0, 0, -3.0 * s() - c(3.0));
    put(0, 1, -2.25 * s() - c(2.25));
    put(0, 2, 2.0 * s() + c(2.0));
    put(1, 1, -0.5 * s() - c(0.5));
    put(1, 3, 2.0 * s() + c(2.0));
    CHECK(q1.coeffDistance(expect) < 1e-12);
}

TEST_CASE("DDE with no delays is the plain ODE") {
    DDEModel dde;
    dde.A0 = Eigen::MatrixXd::Constant(1, 1, -1.0);
    PIESystem pie = convertDDEToPIE(dde);
    CHECK(pie.T.n1 == 0);
    CHECK(pie.A.P.coeffDistance(c(-1.0)) < 1e-14);
}

TEST_CASE("DDE pencil eigenvalue matches the characteristic root") {
    // xdot = -x(t-1): rightmost root of lambda = -e^{-lambda} is about -0.3181
    DDEModel dde;
    dde.tau = {1.0};
    dde.Ai.resize(1);
    dde.Ai[0] = Eigen::MatrixXd::Constant(1, 1, -1.0);
    PIESystem pie = convertDDEToPIE(dde);
    // The rightmost root of lambda = -e^{-lambda} is complex, alpha + i beta
    // with alpha = -beta/tan(beta) and beta - sin(beta) e^{beta/tan(beta)} = 0;
    // bisection oracle on beta in (1, 1.5).
    auto h = [](double beta) { return beta - std::sin(beta) * std::exp(beta / std::tan(beta)); };
    double lo = 1.0, hi = 1.5;
    for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        if (h(lo) * h(mid) <= 0) hi = mid;
        else lo = mid;
    }
    double beta = 0.5 * (lo + hi);
    double expect = -beta / std::tan(beta);
    CHECK(expect == doctest::Approx(-0.3181).epsilon(1e-3));

    SimOptions opts;
    opts.N = 24;
    StabilityReport rep = stabilityCheck(pie, opts);
    CHECK(rep.rightmost_real == doctest::Approx(expect).epsilon(1e-5));
}
