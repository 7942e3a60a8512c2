#include <catch2/catch_amalgamated.hpp>

#include "qelliptic/fock.hpp"

using namespace qell;

namespace {

VarTablePtr tpq() { return table_pq_plus({}); }

/// Truncated numeric contraction: the x-polynomial of exp(sum gamma_n x^n /n)
/// through degree N, evaluated at a rational x. Independent of both the
/// product-form pipeline and the Fock machinery.
Rational cexp_truncated(const GammaFamily& g, const Rational& x, int N, const FockParams& par) {
    std::vector<Rational> logc(N + 1, Rational(0));
    for (int n = 1; n <= N; ++n) logc[n] = g.eval(n, par.rho, par.sigma) / n;
    std::vector<Rational> acc(N + 1, Rational(0)), layer(N + 1, Rational(0));
    acc[0] = 1;
    layer[0] = 1;
    for (int k = 1; k <= N; ++k) {
        std::vector<Rational> next(N + 1, Rational(0));
        for (int a = 0; a <= N; ++a)
            for (int b = 1; a + b <= N; ++b) next[a + b] += layer[a] * logc[b];
        for (auto& v : next) v /= k;
        layer = next;
        for (int d = 0; d <= N; ++d) acc[d] += layer[d];
    }
    Rational val(0);
    for (int d = 0; d <= N; ++d) val += acc[d] * pow_int(x, d);
    return val;
}

}  // namespace

TEST_CASE("mode algebra on the truncated Fock space") {
    auto cd = cartan_matrix('A', 2);
    FockParams par{rat(1, 2), rat(2, 3)};
    auto vac = FockState::vacuum(&cd, par, 6);

    SECTION("annihilation kills the vacuum") { REQUIRE(vac.apply_mode(0, 1).is_zero()); }
    SECTION("a_j[1] a_i[-1] |0> = bracket(j,i,1) |0>") {
        auto s = vac.apply_mode(0, -1).apply_mode(1, 1);
        REQUIRE(s.amplitudes().size() == 1);
        REQUIRE(s.amplitudes().begin()->second == bracket_value(cd, 1, 0, 1, par.rho, par.sigma));
    }
    SECTION("creation beyond the cutoff projects to zero with a flag") {
        auto tight = FockState::vacuum(&cd, par, 1);
        auto s = tight.apply_mode(0, -1).apply_mode(0, -1);
        REQUIRE(s.is_zero());
        REQUIRE(s.overflowed());
    }
    SECTION("projector idempotence") {
        auto s = vac.apply_mode(0, -2).apply_mode(1, -3);
        auto p1 = s.project(4);
        auto p2 = p1.project(4);
        REQUIRE(p1.amplitudes() == p2.amplitudes());
    }
}

TEST_CASE("vertex operator matrix elements") {
    auto t = tpq();
    auto cd = cartan_matrix('A', 1);
    auto conv = Convention::literal(t);
    FockParams par{rat(1, 2), rat(2, 3)};
    const int N = 6;

    SECTION("<0|E_i(z)|0> = 0 by charge selection") {
        REQUIRE(vertex_matrix_element(cd, par, N, {}, {{'E', 0, rat(1)}}, {}, conv) == 0);
    }
    SECTION("<0|H^+_i(z)|0> = 1") {
        REQUIRE(vertex_matrix_element(cd, par, N, {}, {{'+', 0, rat(1)}}, {}, conv) == 1);
    }
    SECTION("<0|E(z)F(w)|0> equals z^{-2} C^{EF}(w/z) truncated at N") {
        Rational z = rat(1), w = rat(1, 2);
        auto g = contraction_exponent(VKind::E, VKind::F, 0, 0, cd, conv);
        Rational expect = pow_int(z, -2) * cexp_truncated(g, w / z, N, par);
        Rational got = vertex_matrix_element(cd, par, N, {}, {{'E', 0, z}, {'F', 0, w}}, {}, conv);
        REQUIRE(got == expect);
    }
    SECTION("<0|F(w)E(z)|0> equals w^{-2} C^{FE}(z/w) truncated at N") {
        Rational z = rat(1), w = rat(1, 2);
        auto g = contraction_exponent(VKind::F, VKind::E, 0, 0, cd, conv);
        Rational expect = pow_int(w, -2) * cexp_truncated(g, z / w, N, par);
        Rational got = vertex_matrix_element(cd, par, N, {}, {{'F', 0, w}, {'E', 0, z}}, {}, conv);
        REQUIRE(got == expect);
    }
    SECTION("mode-exponential parts reproduce every contraction pair") {
        auto cd2 = cartan_matrix('A', 2);
        Rational z = rat(1), w = rat(1, 3);
        for (auto [X, xk] : std::vector<std::pair<VKind, char>>{{VKind::E, 'e'}, {VKind::F, 'f'}})
            for (auto [Y, yk] : std::vector<std::pair<VKind, char>>{{VKind::E, 'e'}, {VKind::F, 'f'}})
                for (auto ij : std::vector<std::pair<int, int>>{{0, 0}, {0, 1}}) {
                    auto g = contraction_exponent(X, Y, ij.first, ij.second, cd2, conv);
                    Rational expect = cexp_truncated(g, w / z, N, par);
                    Rational got = vertex_matrix_element(
                        cd2, par, N, {}, {{xk, ij.first, z}, {yk, ij.second, w}}, {}, conv);
                    INFO("pair " << xk << yk << " ij " << ij.first << ij.second);
                    REQUIRE(got == expect);
                }
    }
    SECTION("momentum bookkeeping: <0|e(z)f(w)|0> carries no zero-mode power") {
        Rational z = rat(2), w = rat(1, 2);
        auto g = contraction_exponent(VKind::E, VKind::F, 0, 0, cd, conv);
        Rational expect = cexp_truncated(g, w / z, N, par);
        Rational got = vertex_matrix_element(cd, par, N, {}, {{'e', 0, z}, {'f', 0, w}}, {}, conv);
        REQUIRE(got == expect);
    }
    SECTION("sector orthogonality between distinct charges") {
        // E E has net charge 2: any vacuum-to-vacuum element vanishes exactly
        REQUIRE(vertex_matrix_element(cd, par, N, {}, {{'E', 0, rat(1)}, {'E', 0, rat(1, 2)}}, {}, conv) == 0);
    }
    SECTION("single-mode bra and ket elements") {
        Rational z = rat(1, 2);
        // <0| a[2] H^+(z) a[-2] |0> is finite and exact
        Rational v = vertex_matrix_element(cd, par, N, {{0, 2}}, {{'+', 0, z}}, {{0, -2}}, conv);
        Rational norm = vertex_matrix_element(cd, par, N, {{0, 2}}, {}, {{0, -2}}, conv);
        REQUIRE(norm == bracket_value(cd, 0, 0, 2, par.rho, par.sigma));
        REQUIRE(v != 0);
    }
}

TEST_CASE("mode coefficient reflection consistency") {
    auto t = tpq();
    auto conv = Convention::literal(t);
    FockParams par{rat(1, 3), rat(1, 2)};
    for (auto k : {VKind::E, VKind::F}) {
        auto fwd = detail::mode_coeff(k, k == VKind::E ? conv.g_E : conv.g_F, false);
        auto refl = detail::mode_coeff(k, k == VKind::E ? conv.g_E : conv.g_F, true);
        for (long n : {1L, 2L, 3L})
            REQUIRE(refl.eval(n, par.rho, par.sigma) == fwd.eval(-n, par.rho, par.sigma));
    }
}
