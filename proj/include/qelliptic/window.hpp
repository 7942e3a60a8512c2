#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qelliptic/monomial.hpp"
#include "qelliptic/variables.hpp"

namespace qell {

/// Truncation region for series: per-spectral-variable exponent bounds plus a
/// total-nome-degree interval [floor, cap]. All bounds are in quarter units.
/// Arithmetic never reads or writes outside the window.
class Window {
public:
    Window() = default;
    explicit Window(VarTablePtr table) : table_(std::move(table)) {
        for (size_t i = 0; i < table_->size(); ++i)
            if (!table_->is_nome(i)) spectral_.push_back({i, 0, 0});
    }

    /// Bounds for one spectral variable, quarter units, lo <= hi.
    Window& set_spectral(const std::string& name, int32_t lo_q, int32_t hi_q) {
        if (lo_q > hi_q) throw std::invalid_argument("window: lo > hi for " + name);
        size_t idx = table_->index_of(name);
        for (auto& b : spectral_)
            if (b.var == idx) {
                b.lo = lo_q;
                b.hi = hi_q;
                return *this;
            }
        throw std::invalid_argument("window: not a spectral variable: " + name);
    }

    /// Symmetric integer-unit helper: exponents in [-k, k].
    Window& set_spectral_units(const std::string& name, int32_t k) {
        return set_spectral(name, -4 * k, 4 * k);
    }

    Window& set_nome(int64_t floor_q, int64_t cap_q) {
        if (cap_q < 0) throw std::invalid_argument("window: nome cap must be >= 0");
        if (floor_q > cap_q) throw std::invalid_argument("window: nome floor above cap");
        nome_floor_ = floor_q;
        nome_cap_ = cap_q;
        return *this;
    }
    Window& set_nome_units(int64_t floor_u, int64_t cap_u) { return set_nome(4 * floor_u, 4 * cap_u); }

    const VarTablePtr& table() const { return table_; }
    int64_t nome_floor() const { return nome_floor_; }
    int64_t nome_cap() const { return nome_cap_; }
    int32_t spectral_lo(size_t var) const { return find(var).lo; }
    int32_t spectral_hi(size_t var) const { return find(var).hi; }

    bool contains(const ExpVec& e) const {
        int64_t d = 0;
        for (size_t i = 0; i < e.size(); ++i)
            if (table_->is_nome(i)) d += e[i];
        if (d < nome_floor_ || d > nome_cap_) return false;
        for (auto& b : spectral_)
            if (e[b.var] < b.lo || e[b.var] > b.hi) return false;
        return true;
    }

    /// Component-wise intersection; throws if empty in some direction.
    Window intersect(const Window& o) const {
        if (!(*table_ == *o.table_)) throw std::invalid_argument("window intersect: table mismatch");
        Window r(table_);
        for (auto& b : spectral_) {
            int32_t lo = std::max(b.lo, o.find(b.var).lo);
            int32_t hi = std::min(b.hi, o.find(b.var).hi);
            if (lo > hi) throw std::invalid_argument("window intersect: empty spectral range");
            r.set_spectral((*table_)[b.var].name, lo, hi);
        }
        r.set_nome(std::max(nome_floor_, o.nome_floor_), std::min(nome_cap_, o.nome_cap_));
        return r;
    }

    bool operator==(const Window& o) const {
        if (!(*table_ == *o.table_)) return false;
        if (nome_floor_ != o.nome_floor_ || nome_cap_ != o.nome_cap_) return false;
        for (auto& b : spectral_) {
            if (o.find(b.var).lo != b.lo || o.find(b.var).hi != b.hi) return false;
        }
        return true;
    }

    std::string to_string() const {
        std::string s = "nome[" + std::to_string(nome_floor_) + "," + std::to_string(nome_cap_) + "]/4";
        for (auto& b : spectral_)
            s += " " + (*table_)[b.var].name + "[" + std::to_string(b.lo) + "," + std::to_string(b.hi) + "]/4";
        return s;
    }

private:
    struct Bound {
        size_t var;
        int32_t lo, hi;
    };
    const Bound& find(size_t var) const {
        for (auto& b : spectral_)
            if (b.var == var) return b;
        throw std::out_of_range("window: no bound for variable index");
    }

    VarTablePtr table_;
    std::vector<Bound> spectral_;
    int64_t nome_floor_ = 0;
    int64_t nome_cap_ = 0;
};

}  // namespace qell
