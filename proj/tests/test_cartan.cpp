#include <catch2/catch_amalgamated.hpp>

#include "qelliptic/cartan.hpp"

using namespace qell;

TEST_CASE("standard matrices") {
    SECTION("A1") {
        auto cd = cartan_matrix('A', 1);
        REQUIRE(cd.A == std::vector<std::vector<int>>{{2}});
    }
    SECTION("A2") {
        auto cd = cartan_matrix('A', 2);
        REQUIRE(cd.A == std::vector<std::vector<int>>{{2, -1}, {-1, 2}});
    }
    SECTION("D4 branch node from declared edge list") {
        auto cd = cartan_matrix('D', 4);
        // independent construction from the declared Dynkin edges
        std::vector<std::pair<int, int>> edges{{0, 1}, {1, 2}, {1, 3}};
        std::vector<std::vector<int>> ref(4, std::vector<int>(4, 0));
        for (int i = 0; i < 4; ++i) ref[i][i] = 2;
        for (auto& [a, b] : edges) ref[a][b] = ref[b][a] = -1;
        REQUIRE(cd.A == ref);
        int deg = 0;
        for (int j = 0; j < 4; ++j) deg += (cd.A[1][j] == -1);
        REQUIRE(deg == 3);
    }
    SECTION("E6 shape") {
        auto cd = cartan_matrix('E', 6);
        REQUIRE(validate(cd).pass);
        int deg4 = 0;
        for (int j = 0; j < 6; ++j) deg4 += (cd.A[3][j] == -1);
        REQUIRE(deg4 == 3);  // node 4 carries the branch
    }
    SECTION("invalid combinations rejected") {
        REQUIRE_THROWS_AS(cartan_matrix('D', 3), std::invalid_argument);
        REQUIRE_THROWS_AS(cartan_matrix('E', 9), std::invalid_argument);
        REQUIRE_THROWS_AS(cartan_matrix('B', 2), std::invalid_argument);
    }
}

TEST_CASE("label parsing") {
    REQUIRE(cartan_from_label("A2").rank == 2);
    REQUIRE(cartan_from_label("d4").type == 'D');
    REQUIRE_THROWS_AS(cartan_from_label("X1"), std::invalid_argument);
    REQUIRE_THROWS_AS(cartan_from_label("A"), std::invalid_argument);
}

TEST_CASE("validate") {
    SECTION("valid A2 passes") { REQUIRE(validate(cartan_matrix('A', 2)).pass); }
    SECTION("off-diagonal -2 fails (not simply laced)") {
        auto cd = cartan_matrix('A', 2);
        cd.A[0][1] = cd.A[1][0] = -2;
        auto r = validate(cd);
        REQUIRE(!r.pass);
        REQUIRE(r.reason == "not simply laced");
    }
    SECTION("disconnected diag(2,2) labelled A2 fails") {
        CartanData cd{'A', 2, {{2, 0}, {0, 2}}};
        auto r = validate(cd);
        REQUIRE(!r.pass);
        REQUIRE(r.reason == "Dynkin diagram disconnected");
    }
    SECTION("asymmetric matrix fails") {
        CartanData cd{'A', 2, {{2, -1}, {0, 2}}};
        REQUIRE(!validate(cd).pass);
    }
    SECTION("symmetry and diagonal invariants on all stored types") {
        for (auto [ty, rk] : std::vector<std::pair<char, int>>{{'A', 1}, {'A', 5}, {'D', 4}, {'D', 6}, {'E', 6}, {'E', 7}, {'E', 8}}) {
            auto cd = cartan_matrix(ty, rk);
            REQUIRE(validate(cd).pass);
            for (int i = 0; i < rk; ++i)
                for (int j = 0; j < rk; ++j) {
                    REQUIRE(cd.A[i][j] == cd.A[j][i]);
                    if (i == j) REQUIRE(cd.A[i][j] == 2);
                }
        }
    }
}
