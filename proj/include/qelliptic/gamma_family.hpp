#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "qelliptic/product_form.hpp"

namespace qell {

/// One symbolic power of the mode index: coeff * (-1)^{s n} p^{a n/4} q^{b n/4}.
/// Keys are (a, b, s) with s in {0,1}.
struct NKey {
    int32_t a = 0, b = 0;
    int32_t s = 0;
    auto operator<=>(const NKey&) const = default;
};

/// Laurent polynomial in the formal symbols p^{n/4}, q^{n/4}, (-1)^n. Carries
/// the numerators of mode-bracket closed forms.
class NPoly {
public:
    static NPoly zero() { return NPoly(); }
    static NPoly term(const Rational& c, int32_t a, int32_t b, int32_t s = 0) {
        NPoly p;
        if (c != 0) p.t_[{a, b, s & 1}] = c;
        return p;
    }
    static NPoly one() { return term(1, 0, 0); }

    const std::map<NKey, Rational>& terms() const { return t_; }
    bool is_zero() const { return t_.empty(); }
    size_t size() const { return t_.size(); }

    NPoly operator+(const NPoly& o) const {
        NPoly r = *this;
        for (auto& [k, c] : o.t_) r.add(k, c);
        return r;
    }
    NPoly operator-(const NPoly& o) const {
        NPoly r = *this;
        for (auto& [k, c] : o.t_) r.add(k, -c);
        return r;
    }
    NPoly operator*(const NPoly& o) const {
        NPoly r;
        for (auto& [k1, c1] : t_)
            for (auto& [k2, c2] : o.t_) r.add({k1.a + k2.a, k1.b + k2.b, (k1.s + k2.s) & 1}, c1 * c2);
        return r;
    }
    NPoly negate() const {
        NPoly r;
        for (auto& [k, c] : t_) r.t_[k] = -c;
        return r;
    }

    /// Exact division by (1 - g) with g = p^{a n/4} q^{b n/4} (-1)^{sn} of
    /// positive nome weight; returns false when not divisible.
    bool divide_by_one_minus(const NKey& g, NPoly& quotient) const {
        if (g.a + g.b <= 0) return false;
        NPoly rem = *this, quot;
        // process by increasing nome weight a+b; multiplying by g raises it
        while (!rem.is_zero()) {
            auto it = std::min_element(rem.t_.begin(), rem.t_.end(), [](auto& x, auto& y) {
                return std::tuple(x.first.a + x.first.b, x.first) < std::tuple(y.first.a + y.first.b, y.first);
            });
            NKey k = it->first;
            Rational c = it->second;
            quot.add(k, c);
            rem.add(k, -c);
            rem.add({k.a + g.a, k.b + g.b, (k.s + g.s) & 1}, c);
            if (quot.size() > 4096) return false;  // not divisible, diverging
        }
        quotient = quot;
        return true;
    }

    /// Evaluate at mode index n with rational quarter roots rho = p^{1/4},
    /// sigma = q^{1/4}.
    Rational eval(long n, const Rational& rho, const Rational& sigma) const {
        Rational acc(0);
        for (auto& [k, c] : t_) {
            Rational v = c * pow_int(rho, k.a * n) * pow_int(sigma, k.b * n);
            if (k.s && (n % 2 != 0)) v = -v;
            acc += v;
        }
        return acc;
    }

    /// Evaluate at mode index n directly in (p, q); every quarter exponent
    /// times n must be integral.
    Rational eval_pq(long n, const Rational& p, const Rational& q) const {
        Rational acc(0);
        for (auto& [k, c] : t_) {
            if ((static_cast<long>(k.a) * n) % 4 != 0 || (static_cast<long>(k.b) * n) % 4 != 0)
                throw std::domain_error("eval_pq: fractional power at this mode");
            Rational v = c * pow_int(p, k.a * n / 4) * pow_int(q, k.b * n / 4);
            if (k.s && (n % 2 != 0)) v = -v;
            acc += v;
        }
        return acc;
    }

private:
    void add(const NKey& k, const Rational& c) {
        auto [it, fresh] = t_.try_emplace(k, c);
        if (!fresh) {
            it->second += c;
            if (it->second == 0) t_.erase(it);
        }
    }
    std::map<NKey, Rational> t_;
};

/// gamma_n as a structured ratio: numerator NPoly over a product of
/// (1 - p^{a n/4} q^{b n/4}) factors. The contraction scalar is
/// C(x) = exp( sum_{n>=1} gamma_n x^n / n ).
struct GammaFamily {
    NPoly num;
    std::vector<NKey> den;  // all with positive nome weight, s = 0

    bool is_zero() const { return num.is_zero(); }

    GammaFamily mul(const GammaFamily& o) const {
        GammaFamily r;
        r.num = num * o.num;
        r.den = den;
        r.den.insert(r.den.end(), o.den.begin(), o.den.end());
        return r;
    }

    /// Cancel denominator factors that divide the numerator exactly.
    GammaFamily simplified() const {
        GammaFamily r = *this;
        bool changed = true;
        while (changed) {
            changed = false;
            for (size_t i = 0; i < r.den.size(); ++i) {
                NPoly q;
                if (r.num.divide_by_one_minus(r.den[i], q)) {
                    r.num = q;
                    r.den.erase(r.den.begin() + static_cast<long>(i));
                    changed = true;
                    break;
                }
            }
        }
        std::sort(r.den.begin(), r.den.end());
        return r;
    }

    Rational eval(long n, const Rational& rho, const Rational& sigma) const {
        Rational d(1);
        for (auto& k : den) {
            Rational f = Rational(1) - pow_int(rho, k.a * n) * pow_int(sigma, k.b * n);
            if (f == 0) throw std::domain_error("gamma eval: denominator vanishes");
            d *= f;
        }
        return num.eval(n, rho, sigma) / d;
    }

    Rational eval_pq(long n, const Rational& p, const Rational& q) const {
        Rational d(1);
        for (auto& k : den) {
            if ((static_cast<long>(k.a) * n) % 4 != 0 || (static_cast<long>(k.b) * n) % 4 != 0)
                throw std::domain_error("eval_pq: fractional power at this mode");
            Rational f = Rational(1) - pow_int(p, k.a * n / 4) * pow_int(q, k.b * n / 4);
            if (f == 0) throw std::domain_error("gamma eval: denominator vanishes");
            d *= f;
        }
        return num.eval_pq(n, p, q) / d;
    }

    /// Convert to the product form of exp(sum gamma_n x^n / n) with x the
    /// given argument monomial: every numerator term c*mu^n (c = +-1)
    /// contributes a Pochhammer family (x*mu | nome gens)^{-c}.
    ProductForm to_product_form(const Monomial& x) const {
        auto t = x.table();
        ProductForm pf(t);
        std::vector<Monomial> gens;
        for (auto& k : den) {
            Monomial g = Monomial::one(t);
            g.mul_var("p", k.a);
            g.mul_var("q", k.b);
            if (g.nome_degree_quarters() <= 0)
                throw std::invalid_argument("contraction product form: denominator with non-positive nome weight");
            gens.push_back(g);
        }
        for (auto& [k, c] : num.terms()) {
            if (c != 1 && c != -1)
                throw std::domain_error("contraction product form: non-unit numerator coefficient");
            Monomial base(t, k.s ? Rational(-1) : Rational(1));
            base.mul_var("p", k.a);
            base.mul_var("q", k.b);
            base = base * x;
            int mult = (c == 1) ? -1 : 1;
            if (gens.empty())
                pf.mul_finite(base, mult);
            else
                pf.mul_family(base, gens, mult);
        }
        return pf;
    }

    /// Windowed expansion of exp(sum_{n>=1} gamma_n x^n / n) by direct
    /// summation of the exponent series; independent of the product-form
    /// route and used to cross-check it.
    Series exp_series(const Monomial& x, const Window& w_target) const {
        auto tt = x.table();
        // The exponent terms carry x^n mu^n with mu possibly of negative nome
        // degree; pad the working window so truncated products stay exact on
        // the target region, then restrict.
        int64_t mu_min = 0, mu_max = 0;
        for (auto& [k, c] : num.terms()) {
            mu_min = std::min<int64_t>(mu_min, k.a + k.b);
            mu_max = std::max<int64_t>(mu_max, k.a + k.b);
        }
        int64_t nmax = INT64_MAX;
        for (size_t v = 0; v < tt->size(); ++v)
            if (!tt->is_nome(v) && x.exps()[v] != 0)
                nmax = std::min<int64_t>(nmax, (w_target.spectral_hi(v) - w_target.spectral_lo(v)) /
                                                       std::abs(x.exps()[v]) +
                                                   1);
        if (nmax == INT64_MAX) throw std::invalid_argument("exp_series: argument has no spectral part");
        int64_t pad = nmax * std::max<int64_t>(0, -mu_min);
        Window w(tt);
        for (size_t v = 0; v < tt->size(); ++v)
            if (!tt->is_nome(v)) w.set_spectral((*tt)[v].name, w_target.spectral_lo(v), w_target.spectral_hi(v));
        w.set_nome(std::min<int64_t>(w_target.nome_floor(), -pad), w_target.nome_cap() + pad);

        auto t = x.table();
        // log C as a series: sum_n (1/n) * (num terms mu^n) * geometric den
        Series logc(t, w);
        // Represent each numerator term and denominator multi-index as a
        // monomial in (p, q) with sign, then sum over n until the x-power
        // leaves the window.
        std::vector<FiniteFactor> denfac;
        ProductForm probe(t);
        // enumerate denominator lattice within the cap via a family with base 1
        std::vector<Monomial> gens;
        for (auto& k : den) {
            Monomial g = Monomial::one(t);
            g.mul_var("p", k.a);
            g.mul_var("q", k.b);
            gens.push_back(g);
        }
        int64_t min_mu = 0;
        for (auto& [k, c] : num.terms()) min_mu = std::min<int64_t>(min_mu, k.a + k.b);
        const int64_t lat_cap = w.nome_cap() - min_mu;
        std::vector<Monomial> lattice{Monomial::one(t)};
        for (auto& g : gens) {
            std::vector<Monomial> next;
            for (auto& m : lattice) {
                Monomial cur = m;
                while (cur.nome_degree_quarters() <= lat_cap) {
                    next.push_back(cur);
                    cur = cur * g;
                }
            }
            lattice = std::move(next);
        }
        for (auto& [k, c] : num.terms()) {
            Monomial mu(t, k.s ? Rational(-1) : Rational(1));
            mu.mul_var("p", k.a);
            mu.mul_var("q", k.b);
            for (auto& lat : lattice) {
                Monomial base = x * mu * lat;
                Monomial pw = base;
                for (long n = 1;; ++n) {
                    if (!w.contains(pw.exps())) break;
                    logc.add_term(pw.exps(), c * pw.coeff() / n);
                    pw = pw * base;
                }
            }
        }
        // exp via the truncated series exponential
        Series acc = Series::one(t, w);
        Series term = Series::one(t, w);
        for (long k = 1;; ++k) {
            term = term.mul(logc, w).scale(Rational(1, k));
            if (term.is_zero()) break;
            acc = acc + term;
        }
        Series out(t, w_target);
        for (auto& [e, c] : acc.terms()) out.add_term(e, c);
        return out;
    }
};

}  // namespace qell
