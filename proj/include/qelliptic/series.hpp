#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qelliptic/monomial.hpp"
#include "qelliptic/rational.hpp"
#include "qelliptic/variables.hpp"
#include "qelliptic/window.hpp"

namespace qell {

struct EqualityReport {
    bool pass = true;
    ExpVec where;     // lexicographically first discrepant exponent vector
    Rational lhs, rhs;
};

inline Window translate_window(const Window& w, const ExpVec& delta) {
    const auto& t = *w.table();
    Window r(w.table());
    int64_t nshift = 0;
    for (size_t i = 0; i < t.size(); ++i) {
        if (t.is_nome(i))
            nshift += delta[i];
        else
            r.set_spectral(t[i].name, w.spectral_lo(i) + delta[i], w.spectral_hi(i) + delta[i]);
    }
    int64_t cap = w.nome_cap() + nshift;
    if (cap < 0) cap = 0;
    r.set_nome(std::min<int64_t>(w.nome_floor() + nshift, cap), cap);
    return r;
}

/// Truncated multivariate Laurent series over exact rationals, exponents on
/// the quarter lattice. Immutable value semantics: every operation returns a
/// fresh series. Terms outside the window are dropped silently and recorded
/// in the truncation flag.
class Series {
public:
    using TermMap = std::map<ExpVec, Rational>;

    Series(VarTablePtr table, Window window)
        : table_(std::move(table)), window_(std::move(window)) {
        if (!(*window_.table() == *table_)) throw std::invalid_argument("series: window table mismatch");
    }

    static Series zero(VarTablePtr table, const Window& w) { return Series(std::move(table), w); }
    static Series one(VarTablePtr table, const Window& w) {
        Series s(std::move(table), w);
        s.add_term(ExpVec(s.table_->size()), Rational(1));
        return s;
    }
    static Series from_monomial(const Monomial& m, const Window& w) {
        Series s(m.table(), w);
        if (!m.is_zero()) s.add_term(m.exps(), m.coeff());
        return s;
    }

    const VarTablePtr& table() const { return table_; }
    const Window& window() const { return window_; }
    const TermMap& terms() const { return terms_; }
    bool truncated() const { return truncated_; }
    bool is_zero() const { return terms_.empty(); }
    size_t term_count() const { return terms_.size(); }

    /// Accumulate c at exponent e; drops (and flags) out-of-window writes.
    void add_term(const ExpVec& e, const Rational& c) {
        if (c == 0) return;
        if (!window_.contains(e)) {
            truncated_ = true;
            return;
        }
        auto [it, fresh] = terms_.try_emplace(e, c);
        if (!fresh) {
            it->second += c;
            if (it->second == 0) terms_.erase(it);
        }
    }

    Rational coefficient(const ExpVec& e) const {
        if (!window_.contains(e)) throw std::out_of_range("coefficient query outside window");
        auto it = terms_.find(e);
        return it == terms_.end() ? Rational(0) : it->second;
    }

    Series operator+(const Series& o) const {
        require_same_table(o);
        Series r(table_, window_.intersect(o.window_));
        r.truncated_ = truncated_ || o.truncated_;
        for (auto& [e, c] : terms_) r.add_term(e, c);
        for (auto& [e, c] : o.terms_) r.add_term(e, c);
        return r;
    }
    Series operator-(const Series& o) const { return *this + o.negate(); }

    Series negate() const {
        Series r(table_, window_);
        r.truncated_ = truncated_;
        for (auto& [e, c] : terms_) r.terms_.emplace(e, -c);
        return r;
    }

    Series scale(const Rational& c) const {
        Series r(table_, window_);
        r.truncated_ = truncated_;
        if (c == 0) return r;
        for (auto& [e, k] : terms_) r.terms_.emplace(e, c * k);
        return r;
    }

    /// Multiply by a monomial (exponent shift); result stays in this window.
    Series shift(const Monomial& m) const {
        Series r(table_, window_);
        r.truncated_ = truncated_;
        if (m.is_zero()) return r;
        for (auto& [e, c] : terms_) r.add_term(e + m.exps(), c * m.coeff());
        return r;
    }

    /// Cauchy product truncated to `target` (defaults to window intersection).
    /// Exact and bilinear on the target region provided the operands carry
    /// every in-support term that can land there; window planning is the
    /// caller's job (see checker window planner).
    Series mul(const Series& o, std::optional<Window> target = std::nullopt) const {
        require_same_table(o);
        Window tw = target ? *target : window_.intersect(o.window_);
        Series r(table_, tw);
        r.truncated_ = truncated_ || o.truncated_;
        if (terms_.empty() || o.terms_.empty()) return r;

        // Flatten with nome degrees, sort the inner operand by nome degree so
        // the cap prunes the tail of the scan.
        struct Flat {
            const ExpVec* e;
            const Rational* c;
            int64_t d;
        };
        auto flatten = [&](const Series& s) {
            std::vector<Flat> v;
            v.reserve(s.terms_.size());
            for (auto& [e, c] : s.terms_) v.push_back({&e, &c, nome_deg(s, e)});
            return v;
        };
        std::vector<Flat> A = flatten(*this), B = flatten(o);
        if (A.size() < B.size()) std::swap(A, B);
        std::stable_sort(B.begin(), B.end(), [](const Flat& x, const Flat& y) { return x.d < y.d; });
        const int64_t cap = tw.nome_cap();
        for (auto& a : A) {
            for (auto& b : B) {
                if (a.d + b.d > cap) break;
                ExpVec e = *a.e + *b.e;
                if (!tw.contains(e)) {
                    r.truncated_ = true;
                    continue;
                }
                Rational prod = *a.c * *b.c;
                auto [it, fresh] = r.terms_.try_emplace(std::move(e), prod);
                if (!fresh) {
                    it->second += prod;
                    if (it->second == 0) r.terms_.erase(it);
                }
            }
        }
        return r;
    }
    Series operator*(const Series& o) const { return mul(o); }

    /// Multiplicative inverse in the window. The grading is (nome degree,
    /// total spectral degree); the minimal-grade slice must be one monomial.
    /// Every non-leading term then has strictly larger grade and the
    /// geometric sum leaves any finite window. A tie at the minimal grade
    /// (possible with two or more spectral variables) is a hard error.
    Series invert(std::optional<Window> target = std::nullopt) const {
        if (terms_.empty()) throw std::domain_error("invert: zero series");
        auto grade = [&](const ExpVec& e) {
            int64_t nd = nome_deg(*this, e), sd = 0;
            for (size_t i = 0; i < e.size(); ++i)
                if (!table_->is_nome(i)) sd += e[i];
            return std::pair<int64_t, int64_t>(nd, sd);
        };
        const ExpVec* lead_e = nullptr;
        const Rational* lead_c = nullptr;
        bool tie = false;
        std::pair<int64_t, int64_t> gmin;
        for (auto& [e, c] : terms_) {
            auto g = grade(e);
            if (!lead_e || g < gmin) {
                gmin = g;
                lead_e = &e;
                lead_c = &c;
                tie = false;
            } else if (g == gmin) {
                tie = true;
            }
        }
        if (tie) throw std::domain_error("invert: minimal-grade slice is not a single monomial");
        Monomial lead(table_, *lead_c, *lead_e);
        Monomial lead_inv = lead.inverse();

        Window tw = target ? *target : window_;
        // b = lead^{-1} * sum_k (-u)^k with u = lead^{-1}*this - 1; the
        // accumulation lives on the target window shifted by the leading
        // monomial.
        Window acc_w = translate_window(tw, lead.exps());
        Series u(table_, acc_w);
        for (auto& [e, c] : terms_)
            if (&e != lead_e) u.add_term(e - lead.exps(), c * lead_inv.coeff());

        Series acc = Series::one(table_, acc_w);
        Series pw = Series::one(table_, acc_w);
        int sign = 1;
        while (true) {
            pw = pw.mul(u, acc_w);
            sign = -sign;
            if (pw.is_zero()) break;
            acc = acc + (sign < 0 ? pw.negate() : pw);
        }
        Series r(table_, tw);
        r.truncated_ = truncated_;
        for (auto& [e, c] : acc.terms()) r.add_term(e + lead_inv.exps(), c * lead_inv.coeff());
        return r;
    }

    /// Replace var^e by coeff(m)^{e/4} * var^e * prod_v v^{e*m_v/4}. The
    /// substitution monomial must not contain var itself; off-lattice results
    /// are rejected.
    Series substitute(const std::string& var, const Monomial& m) const {
        if (m.is_zero()) throw std::invalid_argument("substitute: zero monomial");
        size_t vi = table_->index_of(var);
        if (m.exps()[vi] != 0) throw std::invalid_argument("substitute: monomial mentions substituted variable");
        Series r(table_, window_);
        r.truncated_ = truncated_;
        for (auto& [e, c] : terms_) {
            int32_t ev = e[vi];
            ExpVec ne = e;
            Rational nc = c;
            if (ev != 0) {
                for (size_t k = 0; k < ne.size(); ++k) {
                    if (m.exps()[k] == 0) continue;
                    int64_t add = static_cast<int64_t>(ev) * m.exps()[k];
                    if (add % 4 != 0) throw std::domain_error("substitute: result leaves quarter lattice");
                    ne[k] += static_cast<int32_t>(add / 4);
                }
                if (m.coeff() != 1) {
                    if (ev % 4 != 0) throw std::domain_error("substitute: fractional power of coefficient");
                    nc *= pow_int(m.coeff(), ev / 4);
                }
            }
            r.add_term(ne, nc);
        }
        return r;
    }

    /// Coefficient-wise comparison over an explicit window; on failure reports
    /// the lexicographically first discrepant exponent vector.
    EqualityReport window_equal(const Series& o, const Window& w) const {
        require_same_table(o);
        EqualityReport rep;
        auto ia = terms_.begin(), ib = o.terms_.begin();
        auto skipa = [&] { while (ia != terms_.end() && !w.contains(ia->first)) ++ia; };
        auto skipb = [&] { while (ib != o.terms_.end() && !w.contains(ib->first)) ++ib; };
        skipa();
        skipb();
        while (ia != terms_.end() || ib != o.terms_.end()) {
            if (ib == o.terms_.end() || (ia != terms_.end() && ia->first < ib->first)) {
                rep = {false, ia->first, ia->second, Rational(0)};
                return rep;
            }
            if (ia == terms_.end() || ib->first < ia->first) {
                rep = {false, ib->first, Rational(0), ib->second};
                return rep;
            }
            if (ia->second != ib->second) {
                rep = {false, ia->first, ia->second, ib->second};
                return rep;
            }
            ++ia, ++ib;
            skipa();
            skipb();
        }
        return rep;
    }

    /// Canonical sorted text form for golden files and report embedding.
    std::string to_canonical_text() const {
        std::ostringstream os;
        os << "vars:";
        for (size_t i = 0; i < table_->size(); ++i) os << " " << (*table_)[i].name;
        os << "\nwindow: " << window_.to_string() << "\ntruncated: " << (truncated_ ? "yes" : "no") << "\n";
        for (auto& [e, c] : terms_) {
            for (size_t i = 0; i < e.size(); ++i) os << (i ? " " : "") << e[i];
            os << " : " << qell::to_string(c) << "\n";
        }
        return os.str();
    }

    /// Evaluate at exact rational points for each variable given as the
    /// rational value of the QUARTER ROOT (v = r^4), so quarter exponents stay
    /// rational. Used by the numeric oracle comparisons.
    Rational eval_quartic(const std::vector<Rational>& quarter_roots) const {
        if (quarter_roots.size() != table_->size()) throw std::invalid_argument("eval: arity mismatch");
        Rational acc(0);
        for (auto& [e, c] : terms_) {
            Rational t = c;
            for (size_t i = 0; i < e.size(); ++i)
                if (e[i] != 0) t *= pow_int(quarter_roots[i], e[i]);
            acc += t;
        }
        return acc;
    }

    void require_same_table(const Series& o) const {
        if (!(*table_ == *o.table_)) throw std::invalid_argument("variable-table mismatch");
    }

    static int64_t nome_deg(const Series& s, const ExpVec& e) {
        int64_t d = 0;
        for (size_t i = 0; i < e.size(); ++i)
            if (s.table_->is_nome(i)) d += e[i];
        return d;
    }

private:
    VarTablePtr table_;
    Window window_;
    TermMap terms_;
    bool truncated_ = false;
};

}  // namespace qell
