#include <catch2/catch_amalgamated.hpp>

#include "flatcert/form_operator.hpp"
#include "test_support.hpp"

using namespace flatcert;
using namespace flatcert::testing;

namespace {

DiffForm random_low_form(std::mt19937_64& rng, int degree) {
    return random_form_vector(rng, 1, degree)[0];
}

}  // namespace

TEST_CASE("wedge basics") {
    DiffForm dx = DiffForm::d_coord(coord("x"));
    DiffForm dth = DiffForm::d_coord(coord("theta"));
    CHECK(wedge(dx, dx).is_zero());
    CHECK(wedge(dth, dx) == -wedge(dx, dth));
}

TEST_CASE("graded anticommutativity") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 20; ++i) {
        for (int p : {1, 2}) {
            for (int q : {1, 2}) {
                DiffForm a = random_low_form(rng, p);
                DiffForm b = random_low_form(rng, q);
                DiffForm lhs = wedge(a, b);
                DiffForm rhs = wedge(b, a);
                if ((p * q) % 2 == 1) rhs = -rhs;
                CHECK(lhs == rhs);
            }
        }
    }
}

TEST_CASE("exterior derivative") {
    Expr th = var("theta");
    SECTION("paper example: d(-tan th dx + dy)") {
        DiffForm w1(1);
        w1.add(WedgeBasis{{coord("x")}}, -tan(th));
        w1.add(WedgeBasis{{coord("y")}}, kOne);
        DiffForm d = exterior_d(w1);
        DiffForm expect(2);
        std::vector<JetCoord> w{coord("theta"), coord("x")};
        int sign = normalize_wedge(w);
        expect.add(WedgeBasis{w},
                   sign > 0 ? -(kOne / (cos(th) * cos(th)))
                            : kOne / (cos(th) * cos(th)));
        CHECK(d == expect);
    }
    SECTION("d of a basis differential vanishes") {
        CHECK(exterior_d(DiffForm::d_coord(coord("x", 3))).is_zero());
    }
    SECTION("d^2 = 0 on random forms") {
        std::mt19937_64 rng(8);
        for (int i = 0; i < 25; ++i)
            for (int p : {0, 1, 2, 3})
                CHECK(exterior_d(exterior_d(random_low_form(rng, p))).is_zero());
    }
    SECTION("dF of the car matches P(F) dx rewritten") {
        Expr xd = var("x", 1), yd = var("y", 1);
        Expr F = xd * sin(th) - yd * cos(th);
        DiffForm dF = d_scalar(F);
        DiffForm expect(1);
        expect.add(WedgeBasis{{coord("x", 1)}}, sin(th));
        expect.add(WedgeBasis{{coord("y", 1)}}, -cos(th));
        expect.add(WedgeBasis{{coord("theta")}}, xd * cos(th) + yd * sin(th));
        CHECK(dF == expect);
    }
}

TEST_CASE("Lie derivative of forms") {
    CHECK(lie_derivative_form(DiffForm::d_coord(coord("x"))) ==
          DiffForm::d_coord(coord("x", 1)));

    DiffForm f_dx(1);
    f_dx.add(WedgeBasis{{coord("x")}}, Expr::integer(5));
    DiffForm ld = lie_derivative_form(f_dx);
    DiffForm expect(1);
    expect.add(WedgeBasis{{coord("x", 1)}}, Expr::integer(5));
    CHECK(ld == expect);

    SECTION("commutes with d") {
        std::mt19937_64 rng(13);
        for (int i = 0; i < 25; ++i) {
            DiffForm a = random_low_form(rng, 1);
            CHECK(lie_derivative_form(exterior_d(a)) ==
                  exterior_d(lie_derivative_form(a)));
        }
    }
    SECTION("window guard") {
        JetWindow tiny{2};
        DiffForm a = DiffForm::d_coord(coord("x", 2));
        CHECK_THROWS_AS(lie_derivative_form(a, tiny), WindowExceeded);
    }
}

TEST_CASE("binomial prolongation formula for pulled-back differentials") {
    // dx^(j) = sum_r C(j,r) L^r(dphi/dy^(l)) dy^(l+j-r) for j = 2 on a random
    // phi, compared against applying L twice
    std::mt19937_64 rng(21);
    Expr phi = var("py") * var("py") + sin(var("py")) * var("py", 1);
    DiffForm dphi = d_scalar(phi);
    DiffForm lhs = lie_derivative_form(lie_derivative_form(dphi));
    DiffForm rhs(1);
    for (auto& c : jet_coords_of(phi)) {
        Expr coeff = partial(phi, c);
        for (int r = 0; r <= 2; ++r) {
            Rational binom = (r == 1) ? 2 : 1;
            Expr lr = coeff;
            for (int k = 0; k < r; ++k) lr = total_derivative(lr);
            rhs.add(WedgeBasis{{JetCoord{c.var, c.order + 2 - r}}},
                    Expr::number(binom) * lr);
        }
    }
    CHECK(lhs == rhs);
}

TEST_CASE("pullback") {
    SECTION("identity") {
        std::mt19937_64 rng(34);
        std::vector<VarId> vars{ExprPool::instance().var("w1"),
                                ExprPool::instance().var("w2"),
                                ExprPool::instance().var("wth")};
        JetMap id = JetMap::identity(vars);
        for (int i = 0; i < 10; ++i) {
            DiffForm a = random_low_form(rng, 1);
            CHECK(pullback(id, a) == a);
        }
    }
    SECTION("functorial over wedge and d") {
        // phi: (w1, w2) <- functions of (s1, s2)
        std::vector<VarId> targets{ExprPool::instance().var("w1"),
                                   ExprPool::instance().var("w2"),
                                   ExprPool::instance().var("wth")};
        JetMap phi(targets, {var("s1") * var("s2"), var("s2") + sin(var("s1")),
                             var("s1", 1)});
        std::mt19937_64 rng(55);
        for (int i = 0; i < 10; ++i) {
            DiffForm a = random_low_form(rng, 1);
            DiffForm b = random_low_form(rng, 1);
            CHECK(pullback(phi, wedge(a, b)) ==
                  wedge(pullback(phi, a), pullback(phi, b)));
            CHECK(pullback(phi, exterior_d(a)) == exterior_d(pullback(phi, a)));
        }
    }
    SECTION("car trivialization pulls dF back to zero") {
        // x = -(y1d/y2d) cos^2 y2, y = y1 - (y1d/y2d) sin y2 cos y2, th = y2
        Expr y1 = var("cy1"), y2 = var("cy2");
        Expr y1d = var("cy1", 1), y2d = var("cy2", 1);
        Expr X = -(y1d / y2d) * cos(y2) * cos(y2);
        Expr Y = y1 - (y1d / y2d) * sin(y2) * cos(y2);
        JetMap phi({ExprPool::instance().var("x"), ExprPool::instance().var("y"),
                    ExprPool::instance().var("theta")},
                   {X, Y, y2});
        Expr th = var("theta");
        Expr F = var("x", 1) * sin(th) - var("y", 1) * cos(th);
        DiffForm dF = d_scalar(F);
        CHECK(pullback(phi, dF).is_zero());
        // equivalently the scalar composition vanishes identically
        CHECK(phi.pull_scalar(F).is_zero_canonical());
    }
}

TEST_CASE("dgoth on matrices") {
    SECTION("identity gives zero") {
        std::mt19937_64 rng(70);
        auto kappa = random_form_vector(rng, 2, 1);
        for (auto& f : dgoth_matrix(OreMatrix::identity(2), kappa))
            CHECK(f.is_zero());
    }
    SECTION("diagonal scalar matrix gives df wedge") {
        Expr f = var("w1") * var("w2");
        OreMatrix h(2, 2);
        h.at(0, 0) = OrePoly(f);
        h.at(1, 1) = OrePoly(f);
        std::mt19937_64 rng(71);
        auto kappa = random_form_vector(rng, 2, 1);
        auto got = dgoth_matrix(h, kappa);
        DiffForm df = d_scalar(f);
        CHECK(got[0] == wedge(df, kappa[0]));
        CHECK(got[1] == wedge(df, kappa[1]));
    }
    SECTION("operator extraction agrees with the definition") {
        std::mt19937_64 rng(72);
        for (int i = 0; i < 6; ++i) {
            UniMat h = random_unimodular(rng, 2, 3);
            auto kappa = random_form_vector(rng, 2, 1);
            auto direct = dgoth_matrix(h.mat, kappa);
            auto via_op = dgoth_operator(h.mat).apply(kappa);
            CHECK(direct[0] == via_op[0]);
            CHECK(direct[1] == via_op[1]);
        }
    }
}

TEST_CASE("dgoth is a complex (Prop 3)") {
    std::mt19937_64 rng(80);
    for (int i = 0; i < 5; ++i) {
        FormOperator mu = random_form_operator(rng, 2);
        FormOperator ddmu = dgoth_operator(dgoth_operator(mu));
        CHECK(ddmu.is_zero());
        // and via the defining formula on random vectors
        auto kappa = random_form_vector(rng, 2, 1);
        for (auto& f : dgoth_apply_definition(dgoth_operator(mu), kappa))
            CHECK(f.is_zero());
    }
}

TEST_CASE("product rule (Prop 4)") {
    std::mt19937_64 rng(81);
    for (int i = 0; i < 6; ++i) {
        UniMat h = random_unimodular(rng, 2, 2);
        FormOperator mu = random_form_operator(rng, 2);
        FormOperator lhs = operator_compose(dgoth_operator(h.mat), mu) +
                           operator_compose(FormOperator::from_matrix(h.mat),
                                            dgoth_operator(mu));
        FormOperator rhs = dgoth_operator(h.mat * mu);
        CHECK(lhs == rhs);
    }
}

TEST_CASE("mu = -H^[-1] dgoth(H) satisfies dgoth(mu) = mu^2 (Eq 18 shape)") {
    std::mt19937_64 rng(82);
    for (int i = 0; i < 5; ++i) {
        UniMat h = random_unimodular(rng, 2, 3);
        UniMat hinv = unimodular_inverse(h);
        FormOperator mu =
            -operator_compose(FormOperator::from_matrix(hinv.mat),
                              dgoth_operator(h.mat));
        CHECK(dgoth_operator(mu) == operator_compose(mu, mu));
    }
}

TEST_CASE("operator composition basics") {
    std::mt19937_64 rng(83);
    FormOperator mu = random_form_operator(rng, 2);
    FormOperator zero(2, 2, 1);
    CHECK(operator_compose(mu, zero).is_zero());
    CHECK(operator_compose(zero, mu).is_zero());

    // composition against application on random vectors
    for (int i = 0; i < 5; ++i) {
        FormOperator a = random_form_operator(rng, 2);
        FormOperator b = random_form_operator(rng, 2);
        auto kappa = random_form_vector(rng, 2, 1);
        auto lhs = operator_compose(a, b).apply(kappa);
        auto rhs = a.apply(b.apply(kappa));
        CHECK(lhs[0] == rhs[0]);
        CHECK(lhs[1] == rhs[1]);
    }
}

TEST_CASE("form text round-trip") {
    ExprSymbols syms;
    syms.allow_auto_vars = true;
    for (const char* s :
         {"(-tan(theta))*d[x] + d[y]", "d[theta]^d[x]", "d[dot(x)]",
          "sin(theta)*d[x]^d[y] + 2*d[x]^d[theta]", "0"}) {
        DiffForm f = parse_form(s, syms);
        DiffForm g = parse_form(to_text(f), syms);
        CHECK(f == g);
    }
}
