#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "qelliptic/rational.hpp"
#include "qelliptic/variables.hpp"

namespace qell {

/// Exponent vector over a variable table. Entries are exponent numerators on
/// the quarter-integer lattice: the true exponent is entry/4. Stored dense;
/// tables here never exceed a handful of variables.
struct ExpVec {
    std::vector<int32_t> e;

    ExpVec() = default;
    explicit ExpVec(size_t n) : e(n, 0) {}

    int32_t operator[](size_t i) const { return e[i]; }
    int32_t& operator[](size_t i) { return e[i]; }
    size_t size() const { return e.size(); }

    ExpVec operator+(const ExpVec& o) const {
        ExpVec r(*this);
        for (size_t i = 0; i < e.size(); ++i) r.e[i] += o.e[i];
        return r;
    }
    ExpVec operator-(const ExpVec& o) const {
        ExpVec r(*this);
        for (size_t i = 0; i < e.size(); ++i) r.e[i] -= o.e[i];
        return r;
    }
    ExpVec operator-() const {
        ExpVec r(*this);
        for (auto& x : r.e) x = -x;
        return r;
    }
    ExpVec scaled(int32_t k) const {
        ExpVec r(*this);
        for (auto& x : r.e) x *= k;
        return r;
    }
    bool is_zero() const {
        return std::all_of(e.begin(), e.end(), [](int32_t x) { return x == 0; });
    }
    auto operator<=>(const ExpVec& o) const = default;
};

/// Monomial: exact rational coefficient times a product of variable powers on
/// the quarter lattice. Hosts shift factors such as p^{1/2} or p^{c/4} with c
/// instantiated, including signed shifts like -q^{1/2}.
class Monomial {
public:
    Monomial() : coeff_(0) {}
    Monomial(VarTablePtr table, Rational coeff) : table_(std::move(table)), coeff_(std::move(coeff)), exps_(table_->size()) {}
    Monomial(VarTablePtr table, Rational coeff, ExpVec exps)
        : table_(std::move(table)), coeff_(std::move(coeff)), exps_(std::move(exps)) {
        if (exps_.size() != table_->size()) throw std::invalid_argument("exponent vector size mismatch");
        if (coeff_ == 0) exps_ = ExpVec(table_->size());
    }

    static Monomial one(VarTablePtr table) { return Monomial(std::move(table), Rational(1)); }
    static Monomial zero(VarTablePtr table) { return Monomial(std::move(table), Rational(0)); }

    /// var^(num/4) builder; exponent in quarter units.
    Monomial& mul_var(const std::string& name, int32_t quarter_exp) {
        exps_[table_->index_of(name)] += quarter_exp;
        return *this;
    }

    const VarTablePtr& table() const { return table_; }
    const Rational& coeff() const { return coeff_; }
    const ExpVec& exps() const { return exps_; }
    bool is_zero() const { return coeff_ == 0; }
    bool is_one() const { return coeff_ == 1 && exps_.is_zero(); }

    Monomial operator*(const Monomial& o) const {
        require_same_table(o);
        if (is_zero() || o.is_zero()) return zero(table_);
        return Monomial(table_, coeff_ * o.coeff_, exps_ + o.exps_);
    }

    Monomial inverse() const {
        if (is_zero()) throw std::domain_error("inverse of zero monomial");
        return Monomial(table_, Rational(1) / coeff_, -exps_);
    }

    /// Integer power (negative allowed for nonzero coefficient).
    Monomial pow(long k) const {
        if (k == 0) return one(table_);
        if (is_zero()) {
            if (k < 0) throw std::domain_error("zero monomial to negative power");
            return *this;
        }
        return Monomial(table_, pow_int(coeff_, k), exps_.scaled(static_cast<int32_t>(k)));
    }

    /// Total weighted nome degree in quarter units (weight one per unit of
    /// each nome variable).
    int64_t nome_degree_quarters() const {
        int64_t d = 0;
        for (size_t i = 0; i < exps_.size(); ++i)
            if (table_->is_nome(i)) d += exps_[i];
        return d;
    }

    bool operator==(const Monomial& o) const {
        return *table_ == *o.table_ && coeff_ == o.coeff_ && exps_ == o.exps_;
    }

    std::string to_string() const {
        std::string s = qell::to_string(coeff_);
        for (size_t i = 0; i < exps_.size(); ++i)
            if (exps_[i] != 0) {
                s += "*" + (*table_)[i].name + "^(" + std::to_string(exps_[i]) + "/4)";
            }
        return s;
    }

    void require_same_table(const Monomial& o) const {
        if (!(*table_ == *o.table_)) throw std::invalid_argument("variable-table mismatch");
    }

private:
    VarTablePtr table_;
    Rational coeff_;
    ExpVec exps_;
};

/// Convenience builder: coeff * prod(var_i ^ (quarters_i/4)).
inline Monomial mono(VarTablePtr table, Rational coeff,
                     std::initializer_list<std::pair<const char*, int32_t>> powers = {}) {
    Monomial m(table, std::move(coeff));
    for (auto& [name, qexp] : powers) m.mul_var(name, qexp);
    return m;
}

}  // namespace qell
