#include <catch2/catch_amalgamated.hpp>

#include "flatcert/ore_matrix.hpp"
#include "test_support.hpp"

using namespace flatcert;
using namespace flatcert::testing;

namespace {

OreMatrix car_pf() {
    // P(F) = (sin(th)*D, -cos(th)*D, E) with E = xd cos th + yd sin th
    Expr th = var("theta");
    Expr E = var("x", 1) * cos(th) + var("y", 1) * sin(th);
    OreMatrix m(1, 3);
    m.at(0, 0) = OrePoly::monomial(sin(th), 1);
    m.at(0, 1) = OrePoly::monomial(-cos(th), 1);
    m.at(0, 2) = OrePoly(E);
    return m;
}

}  // namespace

TEST_CASE("smith of a 1x2 row") {
    OreMatrix a(1, 2);
    a.at(0, 0) = OrePoly::D();
    a.at(0, 1) = OrePoly::one();
    SmithResult s = smith_decompose(a);
    REQUIRE(s.delta.size() == 1);
    CHECK(s.delta[0].is_one());
    CHECK(s.hyper_regular());
    CHECK(s.verify(a));
    CHECK(s.V.log_consistent());
    CHECK(s.U.log_consistent());
}

TEST_CASE("smith of the identity") {
    OreMatrix a = OreMatrix::identity(3);
    SmithResult s = smith_decompose(a);
    CHECK(s.V.mat.is_identity());
    CHECK(s.U.mat.is_identity());
    for (auto& d : s.delta) CHECK(d.is_one());
}

TEST_CASE("smith of the car variational matrix") {
    OreMatrix a = car_pf();
    SmithResult s = smith_decompose(a);
    REQUIRE(s.delta.size() == 1);
    CHECK(s.delta[0].is_one());
    CHECK(s.hyper_regular());
    CHECK(s.verify(a));

    // the produced U matches the published decomposition
    Expr th = var("theta");
    Expr E = var("x", 1) * cos(th) + var("y", 1) * sin(th);
    OreMatrix expectU(3, 3);
    expectU.at(0, 2) = OrePoly::one();
    expectU.at(1, 1) = OrePoly::one();
    expectU.at(2, 0) = OrePoly(kOne / E);
    expectU.at(2, 1) = OrePoly::monomial(cos(th) / E, 1);
    expectU.at(2, 2) = OrePoly::monomial(-sin(th) / E, 1);
    CHECK(s.U.mat == expectU);

    // ledger recorded the denominator E
    bool hasE = false;
    for (auto& e : s.ledger.entries())
        if (e == E || e == -E) hasE = true;
    CHECK(hasE);
}

TEST_CASE("hyper-regularity verdicts") {
    SECTION("torsion row is not hyper-regular") {
        OreMatrix a(1, 2);
        a.at(0, 0) = OrePoly::D() - OrePoly(kOne);
        SmithResult s = smith_decompose(a);
        CHECK_FALSE(s.hyper_regular());
        REQUIRE(s.delta.size() == 1);
        CHECK(s.delta[0] == OrePoly::D() - OrePoly(kOne));
    }
    SECTION("unimodular squares are hyper-regular") {
        std::mt19937_64 rng(2024);
        for (int i = 0; i < 5; ++i) {
            UniMat u = random_unimodular(rng, 3, 4);
            CHECK(is_hyper_regular(u.mat));
        }
    }
}

TEST_CASE("unimodular inverse from the action log") {
    SECTION("elementary inverse") {
        ElementaryAction t{ElementaryAction::Kind::AddMul, 0, 1, OrePoly::D(),
                           kOne};
        UniMat u{UniMat::build(2, {t}), {t}};
        UniMat inv = unimodular_inverse(u);
        CHECK((u.mat * inv.mat).is_identity());
        CHECK(inv.mat.at(0, 1) == -OrePoly::D());
    }
    SECTION("identity") {
        UniMat u = UniMat::identity(3);
        CHECK(unimodular_inverse(u).mat.is_identity());
    }
    SECTION("shear with meromorphic entry") {
        Expr th = var("theta");
        Expr m12 = -var("x") / (cos(th) * cos(th));
        ElementaryAction t{ElementaryAction::Kind::AddMul, 0, 1, OrePoly(m12),
                           kOne};
        UniMat u{UniMat::build(2, {t}), {t}};
        UniMat inv = unimodular_inverse(u);
        CHECK((u.mat * inv.mat).is_identity());
        CHECK(inv.mat.at(0, 1) == OrePoly(-m12));
    }
    SECTION("random products invert") {
        std::mt19937_64 rng(99);
        for (int i = 0; i < 6; ++i) {
            UniMat u = random_unimodular(rng, 3, 5);
            UniMat inv = unimodular_inverse(u);
            CHECK((u.mat * inv.mat).is_identity());
            CHECK((inv.mat * u.mat).is_identity());
        }
    }
}

TEST_CASE("smith bases") {
    OreMatrix a = car_pf();
    SECTION("right basis of a wide hyper-regular matrix") {
        auto [v, u] = right_smith_basis(a);
        OreMatrix prod = (v.mat * a) * u.mat;
        OreMatrix expect(1, 3);
        expect.at(0, 0) = OrePoly::one();
        CHECK(prod == expect);
    }
    SECTION("left basis of a tall matrix") {
        // Uhat of the car
        Expr th = var("theta");
        Expr E = var("x", 1) * cos(th) + var("y", 1) * sin(th);
        OreMatrix uhat(3, 2);
        uhat.at(0, 1) = OrePoly::one();
        uhat.at(1, 0) = OrePoly::one();
        uhat.at(2, 0) = OrePoly::monomial(cos(th) / E, 1);
        uhat.at(2, 1) = OrePoly::monomial(-sin(th) / E, 1);
        auto [q, r] = left_smith_basis(uhat);
        OreMatrix prod = (q.mat * uhat) * r.mat;
        OreMatrix expect(3, 2);
        expect.at(0, 0) = OrePoly::one();
        expect.at(1, 1) = OrePoly::one();
        CHECK(prod == expect);
    }
    SECTION("trivial shapes") {
        OreMatrix a2(2, 3);
        a2.at(0, 0) = OrePoly::one();
        a2.at(1, 1) = OrePoly::one();
        auto [v, u] = right_smith_basis(a2);
        CHECK(v.mat.is_identity());
        CHECK(u.mat.is_identity());
        OreMatrix a3(3, 2);
        a3.at(0, 0) = OrePoly::one();
        a3.at(1, 1) = OrePoly::one();
        auto [q, r] = left_smith_basis(a3);
        CHECK(q.mat.is_identity());
        CHECK(r.mat.is_identity());
    }
    SECTION("not hyper-regular raises") {
        OreMatrix bad(1, 2);
        bad.at(0, 0) = OrePoly::D() - OrePoly(kOne);
        CHECK_THROWS_AS(right_smith_basis(bad), NotHyperRegular);
    }
}

TEST_CASE("matrix application") {
    OreMatrix a = car_pf();
    Expr th = var("theta");
    std::vector<Expr> v{var("x"), var("y"), th};
    std::vector<Expr> r = a.apply(v);
    REQUIRE(r.size() == 1);
    Expr E = var("x", 1) * cos(th) + var("y", 1) * sin(th);
    CHECK(r[0] == var("x", 1) * sin(th) - var("y", 1) * cos(th) + E * th);

    CHECK_THROWS_AS(a.apply(std::vector<Expr>{kOne}), DimensionMismatch);

    OreMatrix id = OreMatrix::identity(3);
    CHECK(a * id == a);
}

TEST_CASE("smith on random matrices with invariants") {
    std::mt19937_64 rng(31415);
    int done = 0;
    for (int trial = 0; done < 12 && trial < 40; ++trial) {
        std::uniform_int_distribution<int> dim(1, 3);
        int rows = dim(rng), cols = dim(rng);
        OreMatrix a = random_ore_matrix(rng, rows, cols, 2);
        SmithResult s;
        try {
            s = smith_decompose(a);
        } catch (const InconclusivePivot&) {
            continue;
        }
        ++done;
        CHECK(s.verify(a));
        CHECK(s.V.log_consistent());
        CHECK(s.U.log_consistent());
        // divisibility chain via exact division
        for (std::size_t i = 0; i + 1 < s.delta.size(); ++i) {
            if (s.delta[i].is_zero() || s.delta[i + 1].is_zero()) continue;
            AssumptionLedger led = s.ledger;
            auto [q, r] = right_divide(s.delta[i + 1], s.delta[i], led);
            CHECK(r.is_zero());
        }
        // inverses verified
        UniMat vi = unimodular_inverse(s.V);
        CHECK((s.V.mat * vi.mat).is_identity());
        UniMat ui = unimodular_inverse(s.U);
        CHECK((s.U.mat * ui.mat).is_identity());
        // numeric agreement of V*A*U with the reduced matrix
        OreMatrix lhs = (s.V.mat * a) * s.U.mat;
        CHECK(numeric_operator_equal(lhs, s.reduced, rng));
    }
    CHECK(done >= 8);
}

TEST_CASE("hyper-regularity is invariant under logged unimodular factors") {
    std::mt19937_64 rng(777);
    OreMatrix a = car_pf();
    for (int i = 0; i < 4; ++i) {
        UniMat l = random_unimodular(rng, 1, 2);
        UniMat r = random_unimodular(rng, 3, 3);
        OreMatrix b = (l.mat * a) * r.mat;
        CHECK(is_hyper_regular(b));
    }
}

TEST_CASE("matrix text round-trip") {
    OreMatrix a = car_pf();
    std::string text = to_text(a);
    ExprSymbols syms;
    syms.allow_auto_vars = true;
    CHECK(parse_matrix(text, syms) == a);
}
