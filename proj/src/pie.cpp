#include "pilib/pie.hpp"

namespace pilib {

void PIESystem::check() const {
    auto sameSpace = [&](const PIOperator& op) {
        return op.a == a && op.b == b && op.var1 == var1 && op.var2 == var2;
    };
    for (const PIOperator* op : {&T, &Tw, &Tu, &A, &B1, &B2, &C1, &D11, &D12, &C2, &D21, &D22}) {
        checkValid(*op);
        if (!sameSpace(*op)) throw DomainMismatch("PIESystem: operator domain/vars");
    }
    auto req = [](bool ok, const char* what) {
        if (!ok) throw DimensionMismatch(std::string("PIESystem: ") + what);
    };
    req(T.m0 == T.n0 && T.m1 == T.n1, "T square");
    req(A.m0 == T.m0 && A.m1 == T.m1 && A.n0 == T.n0 && A.n1 == T.n1, "A vs T");
    req(Tw.m0 == T.m0 && Tw.m1 == T.m1, "Tw rows");
    req(Tu.m0 == T.m0 && Tu.m1 == T.m1, "Tu rows");
    req(B1.m0 == T.m0 && B1.m1 == T.m1, "B1 rows");
    req(B2.m0 == T.m0 && B2.m1 == T.m1, "B2 rows");
    req(Tw.n0 == B1.n0 && Tw.n1 == B1.n1, "Tw vs B1 cols");
    req(Tu.n0 == B2.n0 && Tu.n1 == B2.n1, "Tu vs B2 cols");
    req(C1.n0 == T.n0 && C1.n1 == T.n1, "C1 cols");
    req(C2.n0 == T.n0 && C2.n1 == T.n1, "C2 cols");
    req(D11.m0 == C1.m0 && D11.m1 == C1.m1 && D11.n0 == B1.n0 && D11.n1 == B1.n1, "D11");
    req(D12.m0 == C1.m0 && D12.m1 == C1.m1 && D12.n0 == B2.n0 && D12.n1 == B2.n1, "D12");
    req(D21.m0 == C2.m0 && D21.m1 == C2.m1 && D21.n0 == B1.n0 && D21.n1 == B1.n1, "D21");
    req(D22.m0 == C2.m0 && D22.m1 == C2.m1 && D22.n0 == B2.n0 && D22.n1 == B2.n1, "D22");
}

namespace {

struct Dims {
    Eigen::Index d0 = -1, d1 = -1;  // -1 = unknown
    bool known() const { return d0 >= 0 && d1 >= 0; }
    void meet(Eigen::Index a0, Eigen::Index a1, const char* what) {
        if (d0 < 0) { d0 = a0; d1 = a1; return; }
        if (d0 != a0 || d1 != a1) throw DimensionMismatch(std::string("piess: ") + what);
    }
};

struct Space {
    double a, b;
    std::string v1, v2;
};

// Promote an argument to an operator with given row/col structure.
PIOperator promote(const OpArg& arg, Eigen::Index m0, Eigen::Index m1, Eigen::Index n0,
                   Eigen::Index n1, const Space& sp, const char* what) {
    if (arg.isOp()) {
        const PIOperator& op = std::get<PIOperator>(arg.v);
        if (op.m0 != m0 || op.m1 != m1 || op.n0 != n0 || op.n1 != n1)
            throw DimensionMismatch(std::string("piess: ") + what);
        if (op.a != sp.a || op.b != sp.b || op.var1 != sp.v1 || op.var2 != sp.v2)
            throw DomainMismatch(std::string("piess: ") + what);
        return op;
    }
    PIOperator out(m0, n0, m1, n1, sp.a, sp.b, sp.v1, sp.v2);
    if (arg.empty()) return out;
    const Polynomial& p = std::get<Polynomial>(arg.v);
    if (p.isZero()) return out;
    // scalar k promotes to k*I on square targets
    if (p.isConstant() && p.rows() == 1 && p.cols() == 1 && (m0 + m1) > 0 && m0 == n0 && m1 == n1) {
        double k = p.toScalar();
        out.P = Polynomial::constant(Eigen::MatrixXd::Identity(m0, n0) * k);
        out.R0 = Polynomial::constant(Eigen::MatrixXd::Identity(m1, n1) * k);
        return out;
    }
    // multiplier promotions
    if (m1 == 0 && n1 == 0) {
        if (!p.isConstant()) throw DimensionMismatch(std::string("piess: ") + what +
                                                     ": spatial multiplier on finite map");
        if (p.rows() != m0 || p.cols() != n0) throw DimensionMismatch(std::string("piess: ") + what);
        out.P = p;
        return out;
    }
    if (m0 == 0 && n1 == 0) {  // R^n0 -> L2^m1 multiplier
        if (p.rows() != m1 || p.cols() != n0) throw DimensionMismatch(std::string("piess: ") + what);
        out.Q2 = p;
        return out;
    }
    if (m0 == 0 && n0 == 0) {  // L2 -> L2 multiplier
        if (p.rows() != m1 || p.cols() != n1) throw DimensionMismatch(std::string("piess: ") + what);
        out.R0 = p;
        return out;
    }
    throw DimensionMismatch(std::string("piess: cannot promote polynomial for ") + what);
}

}  // namespace

PIESystem piess(const PiessParts& parts) {
    // Establish the shared space from any operator argument.
    const PIOperator* any = nullptr;
    for (const OpArg* a : {&parts.T, &parts.Tw, &parts.Tu, &parts.A, &parts.B1, &parts.B2,
                           &parts.C1, &parts.C2, &parts.D11, &parts.D12, &parts.D21, &parts.D22})
        if (a->isOp()) { any = &std::get<PIOperator>(a->v); break; }
    if (!any) throw UninferableDimension("piess: no operator argument");
    Space sp{any->a, any->b, any->var1, any->var2};

    Dims X, W, U, Z, Y;
    auto note = [&](const OpArg& a, Dims* rowd, Dims* cold, const char* what) {
        if (!a.isOp()) return;
        const PIOperator& op = std::get<PIOperator>(a.v);
        if (rowd) rowd->meet(op.m0, op.m1, what);
        if (cold) cold->meet(op.n0, op.n1, what);
    };
    note(parts.T, &X, &X, "T");
    note(parts.A, &X, &X, "A");
    note(parts.Tw, &X, &W, "Tw");
    note(parts.Tu, &X, &U, "Tu");
    note(parts.B1, &X, &W, "B1");
    note(parts.B2, &X, &U, "B2");
    note(parts.C1, &Z, &X, "C1");
    note(parts.C2, &Y, &X, "C2");
    note(parts.D11, &Z, &W, "D11");
    note(parts.D12, &Z, &U, "D12");
    note(parts.D21, &Y, &W, "D21");
    note(parts.D22, &Y, &U, "D22");
    // Polynomial-valued B/C arguments pin the dimensions they can.
    auto notePolyIn = [&](const OpArg& a, Dims* cold) {
        if (a.isOp() || a.empty()) return;
        const Polynomial& p = std::get<Polynomial>(a.v);
        if (cold->d0 < 0) cold->meet(p.cols(), 0, "input dim");
    };
    notePolyIn(parts.B1, &W);
    notePolyIn(parts.B2, &U);
    notePolyIn(parts.Tw, &W);
    notePolyIn(parts.Tu, &U);
    if (!X.known()) throw UninferableDimension("piess: state dimensions");
    auto defaulted = [&](Dims& d, const char* what, bool used) {
        if (d.known()) return;
        if (used) throw UninferableDimension(std::string("piess: ") + what);
        d.d0 = 0;
        d.d1 = 0;
    };
    auto usedAny = [](std::initializer_list<const OpArg*> args) {
        for (const OpArg* a : args)
            if (!a->empty()) return true;
        return false;
    };
    defaulted(W, "w dims", usedAny({&parts.Tw, &parts.B1, &parts.D11, &parts.D21}));
    defaulted(U, "u dims", usedAny({&parts.Tu, &parts.B2, &parts.D12, &parts.D22}));
    auto notePolyOut = [&](const OpArg& a, Dims* rowd) {
        if (a.isOp() || a.empty()) return;
        const Polynomial& p = std::get<Polynomial>(a.v);
        if (rowd->d0 < 0) rowd->meet(p.rows(), 0, "output dim");
    };
    notePolyOut(parts.C1, &Z);
    notePolyOut(parts.C2, &Y);
    defaulted(Z, "z dims", usedAny({&parts.C1, &parts.D11, &parts.D12}));
    defaulted(Y, "y dims", usedAny({&parts.C2, &parts.D21, &parts.D22}));

    PIESystem sys;
    sys.a = sp.a;
    sys.b = sp.b;
    sys.var1 = sp.v1;
    sys.var2 = sp.v2;
    sys.T = promote(parts.T, X.d0, X.d1, X.d0, X.d1, sp, "T");
    sys.A = promote(parts.A, X.d0, X.d1, X.d0, X.d1, sp, "A");
    sys.Tw = promote(parts.Tw, X.d0, X.d1, W.d0, W.d1, sp, "Tw");
    sys.Tu = promote(parts.Tu, X.d0, X.d1, U.d0, U.d1, sp, "Tu");
    sys.B1 = promote(parts.B1, X.d0, X.d1, W.d0, W.d1, sp, "B1");
    sys.B2 = promote(parts.B2, X.d0, X.d1, U.d0, U.d1, sp, "B2");
    sys.C1 = promote(parts.C1, Z.d0, Z.d1, X.d0, X.d1, sp, "C1");
    sys.C2 = promote(parts.C2, Y.d0, Y.d1, X.d0, X.d1, sp, "C2");
    sys.D11 = promote(parts.D11, Z.d0, Z.d1, W.d0, W.d1, sp, "D11");
    sys.D12 = promote(parts.D12, Z.d0, Z.d1, U.d0, U.d1, sp, "D12");
    sys.D21 = promote(parts.D21, Y.d0, Y.d1, W.d0, W.d1, sp, "D21");
    sys.D22 = promote(parts.D22, Y.d0, Y.d1, U.d0, U.d1, sp, "D22");
    sys.check();
    return sys;
}

PIESystem piess(const OpArg& T, const OpArg& A) {
    PiessParts p;
    p.T = T;
    p.A = A;
    return piess(p);
}

PIESystem piess(const OpArg& T, const OpArg& A, const OpArg& B1, const OpArg& C1, const OpArg& D11) {
    PiessParts p;
    p.T = T;
    p.A = A;
    p.B1 = B1;
    p.C1 = C1;
    p.D11 = D11;
    return piess(p);
}

PIESystem closedLoop(const PIESystem& sys, const PIOperator& K, LoopMode mode) {
    PIESystem cl;
    cl.a = sys.a;
    cl.b = sys.b;
    cl.var1 = sys.var1;
    cl.var2 = sys.var2;
    if (mode == LoopMode::Controller) {
        if (K.n0 != sys.T.n0 || K.n1 != sys.T.n1 || K.m0 != sys.B2.n0 || K.m1 != sys.B2.n1)
            throw DimensionMismatch("closedLoop: controller gain dims");
        cl.T = sys.T + compose(sys.Tu, K);
        cl.A = sys.A + compose(sys.B2, K);
        cl.Tw = sys.Tw;
        cl.B1 = sys.B1;
        cl.C1 = sys.C1 + compose(sys.D12, K);
        cl.D11 = sys.D11;
        // u and y channels removed
        Eigen::Index m0 = sys.T.m0, m1 = sys.T.m1;
        cl.Tu = zeroOp(m0, 0, m1, 0, sys.a, sys.b, sys.var1, sys.var2);
        cl.B2 = cl.Tu;
        cl.D12 = zeroOp(cl.C1.m0, 0, cl.C1.m1, 0, sys.a, sys.b, sys.var1, sys.var2);
        cl.C2 = zeroOp(0, sys.T.n0, 0, sys.T.n1, sys.a, sys.b, sys.var1, sys.var2);
        cl.D21 = zeroOp(0, sys.B1.n0, 0, sys.B1.n1, sys.a, sys.b, sys.var1, sys.var2);
        cl.D22 = zeroOp(0, 0, 0, 0, sys.a, sys.b, sys.var1, sys.var2);
    } else {
        // Observer: L maps y -> state; doubled-state system for (x, xhat).
        if (K.n0 != sys.C2.m0 || K.n1 != sys.C2.m1 || K.m0 != sys.T.m0 || K.m1 != sys.T.m1)
            throw DimensionMismatch("closedLoop: observer gain dims");
        const PIOperator& L = K;
        PIOperator Zs = zeroOp(sys.T.m0, sys.T.n0, sys.T.m1, sys.T.n1, sys.a, sys.b, sys.var1, sys.var2);
        cl.T = blockOp<Polynomial>({{sys.T, Zs}, {Zs, sys.T}});
        PIOperator LC2 = compose(L, sys.C2);
        cl.A = blockOp<Polynomial>({{sys.A, Zs}, {-LC2, sys.A + LC2}});
        PIOperator LD21 = compose(L, sys.D21);
        cl.B1 = vcat<Polynomial>({sys.B1, -LD21});
        cl.Tw = vcat<Polynomial>({sys.Tw, zeroOp(sys.Tw.m0, sys.Tw.n0, sys.Tw.m1, sys.Tw.n1,
                                                 sys.a, sys.b, sys.var1, sys.var2)});
        PIOperator Zc = zeroOp(sys.C1.m0, sys.C1.n0, sys.C1.m1, sys.C1.n1, sys.a, sys.b, sys.var1,
                               sys.var2);
        cl.C1 = blockOp<Polynomial>({{sys.C1, Zc}, {Zc, sys.C1}});
        cl.D11 = vcat<Polynomial>({sys.D11, zeroOp(sys.D11.m0, sys.D11.n0, sys.D11.m1, sys.D11.n1,
                                                   sys.a, sys.b, sys.var1, sys.var2)});
        cl.Tu = zeroOp(cl.T.m0, 0, cl.T.m1, 0, sys.a, sys.b, sys.var1, sys.var2);
        cl.B2 = cl.Tu;
        cl.D12 = zeroOp(cl.C1.m0, 0, cl.C1.m1, 0, sys.a, sys.b, sys.var1, sys.var2);
        cl.C2 = zeroOp(0, cl.T.n0, 0, cl.T.n1, sys.a, sys.b, sys.var1, sys.var2);
        cl.D21 = zeroOp(0, cl.B1.n0, 0, cl.B1.n1, sys.a, sys.b, sys.var1, sys.var2);
        cl.D22 = zeroOp(0, 0, 0, 0, sys.a, sys.b, sys.var1, sys.var2);
    }
    cl.check();
    return cl;
}

PIESystem pielft(const PIESystem& P1, const PIESystem& P2) {
    if (P1.uDim() != P2.yDim() || P1.B2.n1 != P2.C2.m1 || P1.yDim() != P2.uDim() ||
        P1.C2.m1 != P2.B2.n1)
        throw DimensionMismatch("pielft: interconnection channel dims");
    if (!(P1.a == P2.a && P1.b == P2.b && P1.var1 == P2.var1)) throw DomainMismatch("pielft");
    // Feedthrough loop u1 = y2 = C2 x2 + D21 w2 + D22 u2, u2 = y1 = ...
    bool loop1 = !P1.D22.P.isZero() || !P1.D22.Q1.isZero() || !P1.D22.Q2.isZero() ||
                 !P1.D22.R0.isZero() || !P1.D22.R1.isZero() || !P1.D22.R2.isZero();
    bool loop2 = !P2.D22.P.isZero() || !P2.D22.Q1.isZero() || !P2.D22.Q2.isZero() ||
                 !P2.D22.R0.isZero() || !P2.D22.R1.isZero() || !P2.D22.R2.isZero();
    const PIESystem& S1 = P1;
    const PIESystem& S2 = P2;
    // Interconnection signals:
    //   u1 = y2 = C2_2 x2 + D21_2 w2 + D22_2 u2,  u2 = y1 = C2_1 x1 + D21_1 w1 + D22_1 u1.
    // Resolving the loop (push-through identity):
    //   u1 = W2 [C2_2 x2 + D21_2 w2] + W2 D22_2 [C2_1 x1 + D21_1 w1],  W2 = (I - D22_2 D22_1)^{-1}
    //   u2 = W1 [C2_1 x1 + D21_1 w1] + W1 D22_1 [C2_2 x2 + D21_2 w2],  W1 = (I - D22_1 D22_2)^{-1}
    PIOperator W1 = identityOp(P1.D22.m0, P1.D22.m1, P1.a, P1.b, P1.var1, P1.var2);
    PIOperator W2 = identityOp(P2.D22.m0, P2.D22.m1, P1.a, P1.b, P1.var1, P1.var2);
    if (loop1 && loop2) {
        if (P1.D22.m1 != 0 || P1.D22.n1 != 0 || P2.D22.m1 != 0 || P2.D22.n1 != 0)
            throw AlgebraicLoop("pielft: infinite-dimensional feedthrough loop");
        Eigen::MatrixXd D1 = P1.D22.P.toConstant(), D2 = P2.D22.P.toConstant();
        Eigen::MatrixXd I2 = Eigen::MatrixXd::Identity(D2.rows(), D2.rows()) - D2 * D1;
        Eigen::MatrixXd I1 = Eigen::MatrixXd::Identity(D1.rows(), D1.rows()) - D1 * D2;
        Eigen::FullPivLU<Eigen::MatrixXd> lu2(I2), lu1(I1);
        if (std::abs(lu2.determinant()) < 1e-10 || std::abs(lu1.determinant()) < 1e-10)
            throw AlgebraicLoop("pielft: I - D22*D22 singular");
        W2.P = Polynomial::constant(lu2.inverse());
        W1.P = Polynomial::constant(lu1.inverse());
    }
    auto Z = [&](Eigen::Index m0, Eigen::Index n0, Eigen::Index m1, Eigen::Index n1) {
        return zeroOp(m0, n0, m1, n1, P1.a, P1.b, P1.var1, P1.var2);
    };
    PIOperator U1x1 = compose(W2, compose(S2.D22, S1.C2));
    PIOperator U1x2 = compose(W2, S2.C2);
    PIOperator U1w1 = compose(W2, compose(S2.D22, S1.D21));
    PIOperator U1w2 = compose(W2, S2.D21);
    PIOperator U2x1 = compose(W1, S1.C2);
    PIOperator U2x2 = compose(W1, compose(S1.D22, S2.C2));
    PIOperator U2w1 = compose(W1, S1.D21);
    PIOperator U2w2 = compose(W1, compose(S1.D22, S2.D21));

    PIESystem cl;
    cl.a = P1.a;
    cl.b = P1.b;
    cl.var1 = P1.var1;
    cl.var2 = P1.var2;
    auto comp2 = [&](const PIOperator& L, const PIOperator& R) { return compose(L, R); };
    cl.T = blockOp<Polynomial>({{S1.T, comp2(S1.Tu, U1x2)}, {comp2(S2.Tu, U2x1), S2.T}});
    cl.Tw = blockOp<Polynomial>(
        {{S1.Tw + comp2(S1.Tu, U1w1), comp2(S1.Tu, U1w2)},
         {comp2(S2.Tu, U2w1), S2.Tw + comp2(S2.Tu, U2w2)}});
    cl.A = blockOp<Polynomial>({{S1.A + comp2(S1.B2, U1x1), comp2(S1.B2, U1x2)},
                                {comp2(S2.B2, U2x1), S2.A + comp2(S2.B2, U2x2)}});
    cl.B1 = blockOp<Polynomial>({{S1.B1 + comp2(S1.B2, U1w1), comp2(S1.B2, U1w2)},
                                 {comp2(S2.B2, U2w1), S2.B1 + comp2(S2.B2, U2w2)}});
    cl.C1 = blockOp<Polynomial>({{S1.C1 + comp2(S1.D12, U1x1), comp2(S1.D12, U1x2)},
                                 {comp2(S2.D12, U2x1), S2.C1 + comp2(S2.D12, U2x2)}});
    cl.D11 = blockOp<Polynomial>({{S1.D11 + comp2(S1.D12, U1w1), comp2(S1.D12, U1w2)},
                                  {comp2(S2.D12, U2w1), S2.D11 + comp2(S2.D12, U2w2)}});
    cl.Tu = Z(cl.T.m0, 0, cl.T.m1, 0);
    cl.B2 = cl.Tu;
    cl.D12 = Z(cl.C1.m0, 0, cl.C1.m1, 0);
    cl.C2 = Z(0, cl.T.n0, 0, cl.T.n1);
    cl.D21 = Z(0, cl.B1.n0, 0, cl.B1.n1);
    cl.D22 = Z(0, 0, 0, 0);
    cl.check();
    return cl;
}

}  // namespace pilib
