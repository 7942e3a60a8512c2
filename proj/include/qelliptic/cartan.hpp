#pragma once

#include <cctype>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qell {

/// Simply laced Cartan matrix with its Dynkin label. Node numbering is
/// Bourbaki: A_n a chain 1..n; D_n a chain 1..n-2 with n-1 and n attached to
/// n-2; E_n a chain 1,3,4,...,n with 2 attached to 4. Indices are 0-based in
/// code, 1-based in reports.
struct CartanData {
    char type = 'A';
    int rank = 0;
    std::vector<std::vector<int>> A;

    int entry(int i, int j) const { return A.at(i).at(j); }
};

namespace detail {
inline std::vector<std::pair<int, int>> dynkin_edges(char type, int rank) {
    std::vector<std::pair<int, int>> e;
    switch (type) {
        case 'A':
            if (rank < 1) throw std::invalid_argument("A_n requires n >= 1");
            for (int i = 0; i + 1 < rank; ++i) e.push_back({i, i + 1});
            return e;
        case 'D':
            if (rank < 4) throw std::invalid_argument("D_n requires n >= 4");
            for (int i = 0; i + 1 < rank - 2; ++i) e.push_back({i, i + 1});
            e.push_back({rank - 3, rank - 2});
            e.push_back({rank - 3, rank - 1});
            return e;
        case 'E':
            if (rank < 6 || rank > 8) throw std::invalid_argument("E_n requires n in {6,7,8}");
            e.push_back({0, 2});
            for (int i = 2; i + 1 < rank; ++i) e.push_back({i, i + 1});
            e.push_back({1, 3});
            return e;
        default:
            throw std::invalid_argument("unsupported type (simply laced only)");
    }
}
}  // namespace detail

inline CartanData cartan_matrix(char type, int rank) {
    auto edges = detail::dynkin_edges(type, rank);
    CartanData cd{type, rank, std::vector<std::vector<int>>(rank, std::vector<int>(rank, 0))};
    for (int i = 0; i < rank; ++i) cd.A[i][i] = 2;
    for (auto& [a, b] : edges) cd.A[a][b] = cd.A[b][a] = -1;
    return cd;
}

/// Parses "A2", "D4", "E6" style labels.
inline CartanData cartan_from_label(const std::string& label) {
    if (label.size() < 2 || !std::isalpha(static_cast<unsigned char>(label[0])))
        throw std::invalid_argument("bad algebra label: " + label);
    char type = static_cast<char>(std::toupper(static_cast<unsigned char>(label[0])));
    int rank = 0;
    try {
        rank = std::stoi(label.substr(1));
    } catch (...) {
        throw std::invalid_argument("bad algebra label: " + label);
    }
    return cartan_matrix(type, rank);
}

struct ValidationResult {
    bool pass = true;
    std::string reason;
};

/// Checks the stored matrix against all invariants and against the standard
/// matrix for the declared label.
inline ValidationResult validate(const CartanData& cd) {
    auto fail = [](std::string r) { return ValidationResult{false, std::move(r)}; };
    int n = cd.rank;
    if (n <= 0 || static_cast<int>(cd.A.size()) != n) return fail("rank/matrix size mismatch");
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(cd.A[i].size()) != n) return fail("matrix not square");
        if (cd.A[i][i] != 2) return fail("diagonal entry != 2");
        for (int j = 0; j < n; ++j) {
            if (cd.A[i][j] != cd.A[j][i]) return fail("matrix not symmetric");
            if (i != j && cd.A[i][j] != 0 && cd.A[i][j] != -1) return fail("not simply laced");
        }
    }
    // connectivity
    std::vector<int> seen(n, 0), stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int u = 0; u < n; ++u)
            if (u != v && cd.A[v][u] == -1 && !seen[u]) {
                seen[u] = 1;
                stack.push_back(u);
            }
    }
    for (int v = 0; v < n; ++v)
        if (!seen[v]) return fail("Dynkin diagram disconnected");
    CartanData ref;
    try {
        ref = cartan_matrix(cd.type, cd.rank);
    } catch (const std::exception& e) {
        return fail(e.what());
    }
    if (ref.A != cd.A) return fail("matrix does not match the declared Dynkin type");
    return {};
}

}  // namespace qell
