#include <catch2/catch_amalgamated.hpp>

#include "qelliptic/free_field.hpp"

using namespace qell;

namespace {

VarTablePtr txw() { return table_pq_plus({"z", "w"}); }
VarTablePtr tx() { return table_pq_plus({"x"}); }

}  // namespace

TEST_CASE("bracket closed form") {
    auto cd1 = cartan_matrix('A', 1);
    auto cd3 = cartan_matrix('A', 3);

    SECTION("i=j, n=1 equals (1-q^{-1})(p-p^{-1})(1-pq)/(1-p)") {
        // Integer powers only, so p = 1/5 and q = 1/3 are valid sample points.
        Rational p = rat(1, 5), q = rat(1, 3);
        Rational expect = (1 - 1 / q) * (p - 1 / p) * (1 - p * q) / (1 - p);
        REQUIRE(bracket_times_n(cd1, 0, 0).eval_pq(1, p, q) == expect);
    }
    SECTION("A_ij = 0 vanishes") {
        REQUIRE(bracket_times_n(cd3, 0, 2).num.is_zero());
        REQUIRE(bracket_value(cd3, 0, 2, 3, rat(1, 2), rat(1, 3)) == 0);
    }
    SECTION("n = 0 rejected") {
        REQUIRE_THROWS_AS(bracket_value(cd1, 0, 0, 0, rat(1, 2), rat(1, 3)), std::invalid_argument);
    }
    SECTION("antisymmetry value(i,j,n) = -value(j,i,-n)") {
        auto cd2 = cartan_matrix('A', 2);
        for (long n : {1L, 2L, 3L, 5L})
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    REQUIRE(bracket_value(cd2, i, j, n, rat(1, 2), rat(2, 3)) ==
                            -bracket_value(cd2, j, i, -n, rat(1, 2), rat(2, 3)));
    }
}

TEST_CASE("s-mode coefficients") {
    Rational p = rat(1, 5), q = rat(1, 3);
    SECTION("(+,1) is 1/(q-1)") { REQUIRE(smode_coefficient('+').eval_pq(1, p, q) == 1 / (q - 1)); }
    SECTION("(-,1) is -1/((pq)^{-1}-1)") {
        REQUIRE(smode_coefficient('-').eval_pq(1, p, q) == -1 / (1 / (p * q) - 1));
    }
    SECTION("product with reciprocal is 1") {
        Rational v = smode_coefficient('+').eval_pq(2, p, q);
        REQUIRE(v * (1 / v) == 1);
    }
    SECTION("n = 0 rejected") { REQUIRE_THROWS_AS(smode_value('+', 0, p, q), std::invalid_argument); }
}

TEST_CASE("contraction exponents against frozen closed forms") {
    auto t = tx();
    auto cd1 = cartan_matrix('A', 1);
    auto cd2 = cartan_matrix('A', 2);
    auto conv = Convention::literal(t);
    Rational rho = rat(1, 2), sigma = rat(2, 3);  // p = 1/16, q = 16/81

    SECTION("(E,E) i=j: gamma_n = (p^{nA/2}-p^{-nA/2})(1-(pq)^n)/((1-p^n)(1-q^n))") {
        auto g = contraction_exponent(VKind::E, VKind::E, 0, 0, cd1, conv);
        GammaFamily hand;
        hand.num = (NPoly::term(1, 4, 0) - NPoly::term(1, -4, 0)) * (NPoly::one() - NPoly::term(1, 4, 4));
        hand.den = {NKey{4, 0, 0}, NKey{0, 4, 0}};
        for (long n : {1L, 2L, 3L, 4L, 7L}) REQUIRE(g.eval(n, rho, sigma) == hand.eval(n, rho, sigma));
    }
    SECTION("(E,E) is shift independent") {
        auto conv2 = conv;
        conv2.g_E = mono(t, 1, {{"q", -2}, {"p", 1}});
        auto a = contraction_exponent(VKind::E, VKind::E, 0, 1, cd2, conv);
        auto b = contraction_exponent(VKind::E, VKind::E, 0, 1, cd2, conv2);
        for (long n : {1L, 2L, 5L}) REQUIRE(a.eval(n, rho, sigma) == b.eval(n, rho, sigma));
    }
    SECTION("(E,F) i=i under literal shifts collapses to q^{-n}(p^{-3n/2}+p^{-n/2})") {
        auto g = contraction_exponent(VKind::E, VKind::F, 0, 0, cd1, conv);
        REQUIRE(g.den.empty());
        REQUIRE(g.num.terms().size() == 2);
        REQUIRE(g.num.terms().count({-6, -4, 0}) == 1);
        REQUIRE(g.num.terms().count({-2, -4, 0}) == 1);
        REQUIRE(g.num.terms().at({-6, -4, 0}) == 1);
        REQUIRE(g.num.terms().at({-2, -4, 0}) == 1);
    }
    SECTION("A_ij = 0 gives the zero family") {
        auto cd3 = cartan_matrix('A', 3);
        for (auto X : {VKind::E, VKind::F})
            for (auto Y : {VKind::E, VKind::F})
                REQUIRE(contraction_exponent(X, Y, 0, 2, cd3, conv).is_zero());
    }
    SECTION("raw and simplified assemblies agree numerically") {
        for (auto X : {VKind::E, VKind::F})
            for (auto Y : {VKind::E, VKind::F})
                for (auto ij : std::vector<std::pair<int, int>>{{0, 0}, {0, 1}}) {
                    auto raw = contraction_exponent_raw(X, Y, ij.first, ij.second, cd2, conv);
                    auto simp = contraction_exponent(X, Y, ij.first, ij.second, cd2, conv);
                    for (long n : {1L, 2L, 3L, 6L})
                        REQUIRE(raw.eval(n, rho, sigma) == simp.eval(n, rho, sigma));
                }
    }
    SECTION("gamma symmetry: gamma^{YX}_{ji}(n) = gamma^{XY}_{ij}(-n)") {
        for (auto X : {VKind::E, VKind::F})
            for (auto Y : {VKind::E, VKind::F})
                for (auto ij : std::vector<std::pair<int, int>>{{0, 0}, {0, 1}, {1, 0}}) {
                    auto fwd = contraction_exponent(X, Y, ij.first, ij.second, cd2, conv);
                    auto rev = contraction_exponent(Y, X, ij.second, ij.first, cd2, conv);
                    for (long n : {1L, 2L, 3L}) REQUIRE(rev.eval(n, rho, sigma) == fwd.eval(-n, rho, sigma));
                }
    }
}

TEST_CASE("contraction product forms") {
    auto t = tx();
    auto cd1 = cartan_matrix('A', 1);
    auto conv = Convention::literal(t);
    Monomial x = mono(t, 1, {{"x", 4}});

    SECTION("(E,F) i=i is the finite rational form with poles at q p^{1/2}, q p^{3/2}") {
        auto c = contraction(VKind::E, VKind::F, 0, 0, cd1, conv);
        auto pf = c.product_form(x);
        REQUIRE(pf.families().empty());
        REQUIRE(pf.finite_factors().size() == 2);
        for (auto& f : pf.finite_factors()) {
            REQUIRE(f.multiplicity == -1);
            REQUIRE(f.arg.exps()[t->index_of("q")] == -4);
            bool pole_one = f.arg.exps()[t->index_of("p")] == -6;
            bool pole_two = f.arg.exps()[t->index_of("p")] == -2;
            REQUIRE((pole_one || pole_two));
        }
    }
    SECTION("(E,E) i=i yields Pochhammer families") {
        auto c = contraction(VKind::E, VKind::E, 0, 0, cd1, conv);
        auto pf = c.product_form(x);
        REQUIRE(!pf.families().empty());
    }
    SECTION("A_ij = 0 gives the constant form 1") {
        auto cd3 = cartan_matrix('A', 3);
        auto conv3 = Convention::literal(t);
        auto c = contraction(VKind::E, VKind::E, 0, 2, cd3, conv3);
        auto pf = c.product_form(x);
        Window w(t);
        w.set_spectral_units("x", 3);
        w.set_nome_units(0, 3);
        REQUIRE(pf.expand(w).window_equal(Series::one(t, w), w).pass);
    }
    SECTION("product form equals direct exponential summation (dual route)") {
        Window w(t);
        w.set_spectral("x", 0, 12);
        w.set_nome_units(-8, 3);
        auto cd2 = cartan_matrix('A', 2);
        for (auto X : {VKind::E, VKind::F})
            for (auto Y : {VKind::E, VKind::F})
                for (auto ij : std::vector<std::pair<int, int>>{{0, 0}, {0, 1}}) {
                    auto g = contraction_exponent(X, Y, ij.first, ij.second, cd2, conv);
                    auto viaPF = g.is_zero() ? Series::one(t, w) : expand_product({g.to_product_form(x)}, w);
                    auto viaExp = g.exp_series(x, w);
                    auto rep = viaPF.window_equal(viaExp, w);
                    INFO("pair " << int(X) << int(Y) << " ij " << ij.first << ij.second);
                    REQUIRE(rep.pass);
                }
    }
}

TEST_CASE("zero-mode factors") {
    auto t = txw();
    auto cd2 = cartan_matrix('A', 2);
    auto conv = Convention::literal(t);
    Monomial z = mono(t, 1, {{"z", 4}});
    Monomial w = mono(t, 1, {{"w", 4}});

    SECTION("E_i(z) E_j(w) accumulates z^{A_ij}") {
        std::vector<VertexAtom> word{{VKind::E, 0, z, 0}, {VKind::E, 1, w, 1}};
        auto m = zero_mode_factor(word, cd2, conv, t);
        REQUIRE(m.coeff() == 1);
        REQUIRE(m.exps()[t->index_of("z")] == -4);  // A_{01} = -1
        std::vector<VertexAtom> same{{VKind::E, 0, z, 0}, {VKind::E, 0, w, 1}};
        REQUIRE(zero_mode_factor(same, cd2, conv, t).exps()[t->index_of("z")] == 8);
    }
    SECTION("E_i(z) F_j(w) accumulates z^{-A_ij}") {
        std::vector<VertexAtom> word{{VKind::E, 0, z, 0}, {VKind::F, 0, w, 1}};
        REQUIRE(zero_mode_factor(word, cd2, conv, t).exps()[t->index_of("z")] == -8);
    }
    SECTION("single atom gives (1, +)") {
        std::vector<VertexAtom> word{{VKind::E, 0, z, 0}};
        REQUIRE(zero_mode_factor(word, cd2, conv, t).is_one());
    }
    SECTION("cocycle flips the relative sign of adjacent-node reorderings") {
        auto conv_c = conv;
        conv_c.cocycle = true;
        std::vector<VertexAtom> ab{{VKind::E, 0, z, 0}, {VKind::E, 1, w, 1}};
        std::vector<VertexAtom> ba{{VKind::E, 1, w, 0}, {VKind::E, 0, z, 1}};
        auto ma = zero_mode_factor(ab, cd2, conv_c, t);
        auto mb = zero_mode_factor(ba, cd2, conv_c, t);
        REQUIRE(ma.coeff() * mb.coeff() == -1);  // one ordering needs a swap
        auto ma0 = zero_mode_factor(ab, cd2, conv, t);
        auto mb0 = zero_mode_factor(ba, cd2, conv, t);
        REQUIRE(ma0.coeff() * mb0.coeff() == 1);
    }
}

TEST_CASE("word expansion for composite currents") {
    auto t = txw();
    auto conv = Convention::literal(t);
    Monomial z = mono(t, 1, {{"z", 4}});
    auto atoms = expand_ops({{'+', 0, z}}, conv);
    REQUIRE(atoms.size() == 2);
    REQUIRE(atoms[0].kind == VKind::E);
    REQUIRE(atoms[0].arg.exps()[t->index_of("p")] == 1);
    REQUIRE(atoms[1].kind == VKind::F);
    REQUIRE(atoms[1].arg.exps()[t->index_of("p")] == -1);
    REQUIRE(atoms[0].group == atoms[1].group);

    auto cd1 = cartan_matrix('A', 1);
    auto ws = word_scalar(atoms, cd1, conv, t);
    REQUIRE(ws.contractions.empty());    // same group: no internal contraction
    REQUIRE(ws.zero_mode.is_one());      // and no internal zero-mode factor

    // two composites against each other: cross pairs cancel to 1 for H+H+
    Monomial w2 = mono(t, 1, {{"w", 4}});
    auto pair_atoms = expand_ops({{'+', 0, z}, {'+', 0, w2}}, conv);
    auto ws2 = word_scalar(pair_atoms, cd1, conv, t);
    REQUIRE(ws2.zero_mode.is_one());
    REQUIRE(ws2.contractions.size() == 4);
}
