#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qelliptic/monomial.hpp"
#include "qelliptic/series.hpp"
#include "qelliptic/window.hpp"

namespace qell {

/// One infinite Pochhammer block (u0 | v1,...,vm)_inf^mult =
/// prod_{j>=0} (1 - u0 * v1^j1 ... vm^jm)^mult. Every nome generator must
/// carry strictly positive nome degree so windowed expansion terminates.
struct PochFamily {
    Monomial base;
    std::vector<Monomial> nome_gens;
    int multiplicity = 1;
};

/// (1 - arg)^multiplicity
struct FiniteFactor {
    Monomial arg;
    int multiplicity = 1;
};

/// Symbolic product  prefactor * prod_k (1-u_k)^{m_k} * prod Pochhammer
/// families. Closed form carrier for theta functions, structure functions and
/// contraction functions; expansion into a Series window is exact.
class ProductForm {
public:
    explicit ProductForm(VarTablePtr table) : table_(std::move(table)), prefactor_(Monomial::one(table_)) {}

    static ProductForm one(VarTablePtr table) { return ProductForm(std::move(table)); }

    ProductForm& mul_prefactor(const Monomial& m) {
        if (m.is_zero()) throw std::invalid_argument("product form: zero prefactor");
        prefactor_ = prefactor_ * m;
        return *this;
    }
    ProductForm& mul_finite(const Monomial& arg, int mult) {
        if (mult == 0) throw std::invalid_argument("product form: zero multiplicity");
        finite_.push_back({arg, mult});
        return *this;
    }
    ProductForm& mul_family(const Monomial& base, std::vector<Monomial> nome_gens, int mult) {
        if (mult == 0) throw std::invalid_argument("product form: zero multiplicity");
        for (auto& g : nome_gens)
            if (g.nome_degree_quarters() <= 0)
                throw std::invalid_argument("product form: non-positive nome generator");
        families_.push_back({base, std::move(nome_gens), mult});
        return *this;
    }
    ProductForm& mul(const ProductForm& o) {
        prefactor_ = prefactor_ * o.prefactor_;
        finite_.insert(finite_.end(), o.finite_.begin(), o.finite_.end());
        families_.insert(families_.end(), o.families_.begin(), o.families_.end());
        return *this;
    }
    ProductForm inverse() const {
        ProductForm r(table_);
        r.prefactor_ = prefactor_.inverse();
        for (auto f : finite_) {
            f.multiplicity = -f.multiplicity;
            r.finite_.push_back(f);
        }
        for (auto f : families_) {
            f.multiplicity = -f.multiplicity;
            r.families_.push_back(f);
        }
        return r;
    }

    const VarTablePtr& table() const { return table_; }
    const Monomial& prefactor() const { return prefactor_; }
    const std::vector<FiniteFactor>& finite_factors() const { return finite_; }
    const std::vector<PochFamily>& families() const { return families_; }

    /// All linear factors (1-u)^{+-1} that meet the window's nome cap; family
    /// members beyond the cap contribute 1.
    std::vector<FiniteFactor> instantiate_factors(const Window& w) const {
        std::vector<FiniteFactor> out;
        for (auto& f : finite_)
            out.push_back(f);
        for (auto& fam : families_) enumerate_family(fam, w, out);
        return out;
    }

    /// Exact expansion on the window: every in-window coefficient of the
    /// mathematical product restricted to the instantiated factor set.
    Series expand(const Window& w) const {
        Series acc = Series::from_monomial(prefactor_, w);
        auto factors = instantiate_factors(w);
        // Positive powers first keeps intermediate supports small.
        std::stable_sort(factors.begin(), factors.end(),
                         [](const FiniteFactor& a, const FiniteFactor& b) { return a.multiplicity > b.multiplicity; });
        for (auto& f : factors) {
            int reps = f.multiplicity > 0 ? f.multiplicity : -f.multiplicity;
            for (int r = 0; r < reps; ++r)
                acc = f.multiplicity > 0 ? mul_linear(acc, f.arg, w) : mul_geometric(acc, f.arg, w);
        }
        return acc;
    }

    std::string to_string() const {
        std::string s = prefactor_.to_string();
        for (auto& f : finite_) s += " (1-" + f.arg.to_string() + ")^" + std::to_string(f.multiplicity);
        for (auto& f : families_) {
            s += " (" + f.base.to_string() + "|";
            for (size_t i = 0; i < f.nome_gens.size(); ++i) s += (i ? "," : "") + f.nome_gens[i].to_string();
            s += ")^" + std::to_string(f.multiplicity);
        }
        return s;
    }

private:
    static void enumerate_family(const PochFamily& fam, const Window& w, std::vector<FiniteFactor>& out) {
        enumerate_rec(fam, 0, fam.base, w.nome_cap(), out);
    }
    // Depth-first over the multi-index lattice, pruned by the nome cap: once a
    // ray passes the cap every deeper member is past it too (generators only
    // add degree).
    static void enumerate_rec(const PochFamily& fam, size_t gi, Monomial cur, int64_t cap,
                              std::vector<FiniteFactor>& out) {
        if (gi == fam.nome_gens.size()) {
            if (cur.nome_degree_quarters() <= cap) out.push_back({cur, fam.multiplicity});
            return;
        }
        while (true) {
            enumerate_rec(fam, gi + 1, cur, cap, out);
            cur = cur * fam.nome_gens[gi];
            if (cur.nome_degree_quarters() > cap) break;
        }
    }

    /// acc * (1 - u), truncated to w.
    static Series mul_linear(const Series& acc, const Monomial& u, const Window& w) {
        Series r(acc.table(), w);
        for (auto& [e, c] : acc.terms()) {
            r.add_term(e, c);
            r.add_term(e + u.exps(), -(c * u.coeff()));
        }
        return r;
    }

    /// acc * (1-u)^{-1} = acc * sum_k u^k, truncated to w. The argument must
    /// leave the window along its own ray, otherwise the expansion cannot be
    /// capped.
    static Series mul_geometric(const Series& acc, const Monomial& u, const Window& w) {
        if (u.exps().is_zero())
            throw std::invalid_argument("product form: cannot cap geometric factor with constant argument");
        bool spectral = false;
        for (size_t i = 0; i < u.exps().size(); ++i)
            if (!u.table()->is_nome(i) && u.exps()[i] != 0) spectral = true;
        if (!spectral && u.nome_degree_quarters() <= 0)
            throw std::invalid_argument("product form: cannot cap geometric factor with non-positive nome weight");

        Series r = acc;
        Series layer = acc;
        while (true) {
            layer = layer.shift(u);
            if (layer.is_zero()) break;
            r = r + layer;
        }
        // r currently lives on acc's window; restrict to w
        if (r.window() == w) return r;
        Series out(acc.table(), w);
        for (auto& [e, c] : r.terms()) out.add_term(e, c);
        return out;
    }

    VarTablePtr table_;
    Monomial prefactor_;
    std::vector<FiniteFactor> finite_;
    std::vector<PochFamily> families_;

    friend Series expand_product(const std::vector<ProductForm>& pfs, const Window& w);
};

/// Exact multiplication of several product forms on a target window.
///
/// Truncated Cauchy products are only exact when intermediate exponents that
/// later factors can still move back into the target region are retained. The
/// planner bounds, per coordinate, how far the REMAINING factors can move an
/// exponent (usage counts bounded through the finite window spans), and
/// multiplies with a per-step pruning window widened by exactly that suffix
/// capacity. Negative-moving factors are multiplied first so the pruning
/// window collapses onto the target quickly.
inline Series expand_product(const std::vector<ProductForm>& pfs, const Window& w) {
    if (pfs.empty()) throw std::invalid_argument("expand_product: empty factor list");
    auto t = pfs.front().table();
    const size_t nv = t->size();

    // Instantiate factors with caps iterated to a fixed point: members of a
    // Pochhammer family above the padded cap can never reach the target.
    Monomial pref = Monomial::one(t);
    for (auto& pf : pfs) pref = pref * pf.prefactor();
    // Factors appearing with both orientations cancel exactly; removing the
    // pairs up front keeps the planner from padding for ladders that are not
    // really there.
    auto cancel_pairs = [](std::vector<FiniteFactor>& fs) {
        for (size_t a = 0; a < fs.size(); ++a)
            for (size_t b = a + 1; b < fs.size(); ++b) {
                if (fs[a].multiplicity == 0 || fs[b].multiplicity == 0) continue;
                if (!(fs[a].arg == fs[b].arg)) continue;
                if ((fs[a].multiplicity > 0) == (fs[b].multiplicity > 0)) continue;
                int k = std::min(std::abs(fs[a].multiplicity), std::abs(fs[b].multiplicity));
                fs[a].multiplicity += (fs[a].multiplicity > 0 ? -k : k);
                fs[b].multiplicity += (fs[b].multiplicity > 0 ? -k : k);
            }
        std::erase_if(fs, [](const FiniteFactor& f) { return f.multiplicity == 0; });
    };
    std::vector<FiniteFactor> factors;
    Window work = w;
    for (int round = 0; round < 16; ++round) {
        factors.clear();
        for (auto& pf : pfs) {
            auto fs = pf.instantiate_factors(work);
            factors.insert(factors.end(), fs.begin(), fs.end());
        }
        cancel_pairs(factors);
        int64_t neg_nome = 0;
        std::vector<int64_t> neg(nv, 0);
        int64_t nome_span = work.nome_cap() - work.nome_floor();
        for (auto& f : factors) {
            int64_t uses;
            if (f.multiplicity > 0) {
                uses = f.multiplicity;
            } else {
                int64_t k = INT64_MAX;
                int64_t dn = f.arg.nome_degree_quarters();
                if (dn != 0) k = std::min(k, nome_span / std::abs(dn) + 1);
                for (size_t v = 0; v < nv; ++v)
                    if (!t->is_nome(v) && f.arg.exps()[v] != 0)
                        k = std::min<int64_t>(
                            k, (work.spectral_hi(v) - work.spectral_lo(v)) / std::abs(f.arg.exps()[v]) + 1);
                if (k == INT64_MAX) throw std::invalid_argument("expand_product: unbounded geometric factor");
                uses = k * (-f.multiplicity);
            }
            int64_t dn = f.arg.nome_degree_quarters();
            if (dn < 0) neg_nome += uses * (-dn);
            for (size_t v = 0; v < nv; ++v)
                if (!t->is_nome(v) && f.arg.exps()[v] < 0) neg[v] += uses * int64_t(-f.arg.exps()[v]);
        }
        Window next(t);
        for (size_t v = 0; v < nv; ++v)
            if (!t->is_nome(v)) {
                int32_t lo =
                    static_cast<int32_t>(std::min<int64_t>(w.spectral_lo(v), pref.exps()[v] - neg[v]));
                next.set_spectral((*t)[v].name,
                                  lo, static_cast<int32_t>(std::max<int64_t>(w.spectral_hi(v), pref.exps()[v]) + neg[v]));
            }
        // The family instantiation cutoff lives on this cap: a member of
        // argument degree D still matters when the prefactor and the other
        // factors' negative capacity can pull D back under the target cap.
        int64_t pref_nome = pref.nome_degree_quarters();
        next.set_nome(std::min<int64_t>(w.nome_floor(), pref_nome - neg_nome),
                      w.nome_cap() + neg_nome + std::max<int64_t>(0, -pref_nome));
        if (next == work) break;
        work = next;
    }

    // Movement capacity of one factor within the working window.
    struct Move {
        int64_t nome_dn = 0, nome_up = 0;
        std::vector<int64_t> dn, up;
    };
    auto movement = [&](const FiniteFactor& f) {
        Move m;
        m.dn.assign(nv, 0);
        m.up.assign(nv, 0);
        int64_t uses;
        if (f.multiplicity > 0) {
            uses = f.multiplicity;
        } else {
            int64_t k = INT64_MAX;
            int64_t dn = f.arg.nome_degree_quarters();
            if (dn != 0) k = std::min(k, (work.nome_cap() - work.nome_floor()) / std::abs(dn) + 1);
            for (size_t v = 0; v < nv; ++v)
                if (!t->is_nome(v) && f.arg.exps()[v] != 0)
                    k = std::min<int64_t>(
                        k, (work.spectral_hi(v) - work.spectral_lo(v)) / std::abs(f.arg.exps()[v]) + 1);
            uses = k * (-f.multiplicity);
        }
        int64_t dn = f.arg.nome_degree_quarters();
        (dn < 0 ? m.nome_dn : m.nome_up) += uses * std::abs(dn);
        for (size_t v = 0; v < nv; ++v) {
            if (t->is_nome(v) || f.arg.exps()[v] == 0) continue;
            (f.arg.exps()[v] < 0 ? m.dn[v] : m.up[v]) += uses * std::abs(int64_t(f.arg.exps()[v]));
        }
        return m;
    };

    // Negative movers first, then cheap linear factors.
    std::stable_sort(factors.begin(), factors.end(), [&](const FiniteFactor& a, const FiniteFactor& b) {
        bool an = a.arg.nome_degree_quarters() < 0, bn = b.arg.nome_degree_quarters() < 0;
        if (an != bn) return an;
        return a.multiplicity > b.multiplicity;
    });

    std::vector<Move> suffix(factors.size() + 1);
    suffix[factors.size()].dn.assign(nv, 0);
    suffix[factors.size()].up.assign(nv, 0);
    for (size_t i = factors.size(); i-- > 0;) {
        Move m = movement(factors[i]);
        m.nome_dn += suffix[i + 1].nome_dn;
        m.nome_up += suffix[i + 1].nome_up;
        for (size_t v = 0; v < nv; ++v) {
            m.dn[v] += suffix[i + 1].dn[v];
            m.up[v] += suffix[i + 1].up[v];
        }
        suffix[i] = std::move(m);
    }
    auto prune_window = [&](const Move& m) {
        Window pw(t);
        for (size_t v = 0; v < nv; ++v)
            if (!t->is_nome(v))
                pw.set_spectral((*t)[v].name, static_cast<int32_t>(std::max<int64_t>(
                                                  w.spectral_lo(v) - m.up[v], work.spectral_lo(v))),
                                static_cast<int32_t>(std::min<int64_t>(w.spectral_hi(v) + m.dn[v],
                                                                       work.spectral_hi(v))));
        pw.set_nome(std::max<int64_t>(w.nome_floor() - m.nome_up, work.nome_floor()),
                    std::min<int64_t>(w.nome_cap() + m.nome_dn, work.nome_cap()));
        return pw;
    };

    Series acc = Series::from_monomial(pref, prune_window(suffix[0]));
    for (size_t i = 0; i < factors.size(); ++i) {
        // acc lives on the suffix[i] prune window; the step result only needs
        // the suffix[i+1] one. Geometric ladders walk inside the wider window
        // (shift paths are monotone, so leaving it is final) and deposit the
        // in-prune part.
        Window pwide = prune_window(suffix[i]);
        Window pw = prune_window(suffix[i + 1]);
        const auto& f = factors[i];
        if (f.multiplicity > 0) {
            for (int r = 0; r < f.multiplicity; ++r) {
                Series nxt(t, pw);
                for (auto& [e, c] : acc.terms()) {
                    nxt.add_term(e, c);
                    nxt.add_term(e + f.arg.exps(), -(c * f.arg.coeff()));
                }
                acc = std::move(nxt);
            }
        } else {
            for (int r = 0; r < -f.multiplicity; ++r) {
                Series nxt(t, pw);
                for (auto& [e, c] : acc.terms()) nxt.add_term(e, c);
                Series layer(t, pwide);
                for (auto& [e, c] : acc.terms()) layer.add_term(e, c);
                while (true) {
                    layer = layer.shift(f.arg);
                    if (layer.is_zero()) break;
                    for (auto& [e, c] : layer.terms()) nxt.add_term(e, c);
                }
                acc = std::move(nxt);
            }
        }
    }
    Series out(t, w);
    for (auto& [e, c] : acc.terms()) out.add_term(e, c);
    return out;
}

}  // namespace qell
