#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qelliptic/free_field.hpp"

namespace qell {

/// Parameter point for the numeric oracle: exact rational quarter roots, so
/// p = rho^4 and q = sigma^4 and every quarter-lattice shift stays rational.
struct FockParams {
    Rational rho, sigma;
    Rational p() const { return pow_int(rho, 4); }
    Rational q() const { return pow_int(sigma, 4); }
};

inline Rational eval_monomial(const Monomial& m, const FockParams& par) {
    Rational v = m.coeff();
    const auto& t = *m.table();
    for (size_t i = 0; i < t.size(); ++i) {
        if (m.exps()[i] == 0) continue;
        if (t[i].name == "p")
            v *= pow_int(par.rho, m.exps()[i]);
        else if (t[i].name == "q")
            v *= pow_int(par.sigma, m.exps()[i]);
        else
            throw std::invalid_argument("eval_monomial: spectral variable in numeric shift");
    }
    return v;
}

/// Basis label of the truncated Fock space: creation-mode multiset (node,
/// mode < 0) and the lattice charge vector. Momentum eigenvalues are derived
/// from the charge through the Cartan pairing.
struct FockKey {
    std::vector<std::pair<int, int>> modes;  // sorted
    std::vector<int> charge;
    auto operator<=>(const FockKey&) const = default;

    int energy() const {
        int e = 0;
        for (auto& [i, n] : modes) e += -n;
        return e;
    }
};

/// A finite linear combination of basis states with exact rational
/// amplitudes. Value semantics; applying operators returns new states.
class FockState {
public:
    FockState(const CartanData* cd, FockParams par, int cutoff)
        : cd_(cd), par_(std::move(par)), cutoff_(cutoff) {}

    static FockState vacuum(const CartanData* cd, const FockParams& par, int cutoff) {
        FockState s(cd, par, cutoff);
        FockKey k;
        k.charge.assign(cd->rank, 0);
        s.amp_[k] = 1;
        return s;
    }

    const std::map<FockKey, Rational>& amplitudes() const { return amp_; }
    bool overflowed() const { return overflow_; }
    bool is_zero() const { return amp_.empty(); }
    int cutoff() const { return cutoff_; }
    const FockParams& params() const { return par_; }

    void add(const FockKey& k, const Rational& c) {
        if (c == 0) return;
        if (k.energy() > cutoff_) {
            overflow_ = true;
            return;
        }
        auto [it, fresh] = amp_.try_emplace(k, c);
        if (!fresh) {
            it->second += c;
            if (it->second == 0) amp_.erase(it);
        }
    }

    /// a_i[n]: creation for n < 0 (cutoff-projected, flagged), annihilation
    /// for n > 0 via the bracket pairing against every matching creation mode.
    FockState apply_mode(int i, int n) const {
        if (n == 0) throw std::invalid_argument("apply_mode: n must be nonzero");
        FockState r(cd_, par_, cutoff_);
        r.overflow_ = overflow_;
        for (auto& [k, c] : amp_) {
            if (n < 0) {
                FockKey nk = k;
                nk.modes.push_back({i, n});
                std::sort(nk.modes.begin(), nk.modes.end());
                r.add(nk, c);
            } else {
                // distinct matching modes with multiplicities
                for (size_t m = 0; m < k.modes.size(); ++m) {
                    if (m > 0 && k.modes[m] == k.modes[m - 1]) continue;
                    auto [j, mode] = k.modes[m];
                    if (mode != -n) continue;
                    long mult = static_cast<long>(std::count(k.modes.begin(), k.modes.end(), k.modes[m]));
                    Rational b = bracket_value(*cd_, i, j, n, par_.rho, par_.sigma);
                    if (b == 0) continue;
                    FockKey nk = k;
                    nk.modes.erase(nk.modes.begin() + static_cast<long>(m));
                    r.add(nk, c * b * mult);
                }
            }
        }
        return r;
    }

    FockState apply_charge(int i, int sgn) const {
        FockState r(cd_, par_, cutoff_);
        r.overflow_ = overflow_;
        for (auto& [k, c] : amp_) {
            FockKey nk = k;
            nk.charge[i] += sgn;
            r.add(nk, c);
        }
        return r;
    }

    /// z^{s P_i}: multiplies each amplitude by z^{s m_i} with m_i the
    /// momentum eigenvalue A_{i.} . charge.
    FockState apply_momentum(int i, int sgn, const Rational& z) const {
        FockState r(cd_, par_, cutoff_);
        r.overflow_ = overflow_;
        for (auto& [k, c] : amp_) {
            long m = 0;
            for (int j = 0; j < cd_->rank; ++j) m += cd_->entry(i, j) * k.charge[j];
            r.add(k, c * pow_int(z, sgn * m));
        }
        return r;
    }

    FockState scale(const Rational& c) const {
        FockState r(cd_, par_, cutoff_);
        r.overflow_ = overflow_;
        for (auto& [k, a] : amp_) r.add(k, a * c);
        return r;
    }
    FockState operator+(const FockState& o) const {
        FockState r(cd_, par_, cutoff_);
        r.overflow_ = overflow_ || o.overflow_;
        for (auto& [k, a] : amp_) r.add(k, a);
        for (auto& [k, a] : o.amp_) r.add(k, a);
        return r;
    }
    FockState operator-(const FockState& o) const { return *this + o.scale(Rational(-1)); }

    /// Projection onto energy <= N (idempotent).
    FockState project(int N) const {
        FockState r(cd_, par_, cutoff_);
        r.overflow_ = overflow_;
        for (auto& [k, a] : amp_)
            if (k.energy() <= N) r.add(k, a);
        return r;
    }

    /// exp(sum_n coeff(n) a_i[n]) over the given mode range, truncated by the
    /// cutoff; exact because each application lowers or raises energy.
    template <typename CoeffFn>
    FockState apply_exp_modes(int i, int from, int to, CoeffFn coeff) const {
        FockState acc = *this;
        FockState layer = *this;
        for (long k = 1;; ++k) {
            FockState next(cd_, par_, cutoff_);
            next.overflow_ = layer.overflow_;
            for (int n = from; n <= to; ++n) {
                if (n == 0) continue;
                Rational c = coeff(n);
                if (c == 0) continue;
                next = next + layer.apply_mode(i, n).scale(c);
            }
            if (next.is_zero()) {
                acc.overflow_ = acc.overflow_ || next.overflow_;
                break;
            }
            layer = next.scale(Rational(1, k));
            acc = acc + layer;
        }
        return acc;
    }

    const CartanData* cartan() const { return cd_; }

private:
    const CartanData* cd_;
    FockParams par_;
    int cutoff_;
    std::map<FockKey, Rational> amp_;
    bool overflow_ = false;
};

/// A current evaluated at an exact rational spectral point.
struct OpVal {
    char kind;  // 'E', 'F', '+', '-'
    int node;
    Rational z;
};

namespace detail {
/// Apply one E/F factor: mode exponentials at argument z*shift, then zero
/// modes z^{+-P_i} e^{+-Q_i}. `momentum` selects whether this factor carries
/// its own z^{P} zero mode (composite H legs share a combined one).
inline FockState apply_vertex_leg(const FockState& s, VKind kind, int i, const Rational& zval,
                                  const Convention& conv, bool with_zero_modes) {
    const FockParams& par = s.params();
    // field coefficient of a[n] is (z g)^{-n}/(q^n-1) type; mode_coeff carries
    // g^{-n} and the denominator, the z^{-n} power is added here
    GammaFamily cf = mode_coeff(kind, kind == VKind::E ? conv.g_E : conv.g_F, false);
    auto coeff = [&](int n) -> Rational { return cf.eval(n, par.rho, par.sigma) * pow_int(zval, -n); };
    FockState r = s;
    if (with_zero_modes) {
        r = r.apply_momentum(i, kind == VKind::E ? 1 : -1, zval);
        r = r.apply_charge(i, kind == VKind::E ? 1 : -1);
    }
    // annihilation part first (rightmost), then creation
    r = r.apply_exp_modes(i, 1, r.cutoff(), coeff);
    r = r.apply_exp_modes(i, -r.cutoff(), -1, coeff);
    return r;
}
}  // namespace detail

/// Apply a current X(z) to a state. E and F are single vertex legs; H^+- are
/// the normal-ordered composites with the convention's internal shifts and a
/// combined momentum zero mode (h_E/h_F)^{P_i}. Lowercase 'e'/'f' apply only
/// the mode-exponential part (no zero modes), which is what the contraction
/// cross-checks compare.
inline FockState apply_current(const FockState& s, const OpVal& op, const Convention& conv) {
    const FockParams& par = s.params();
    switch (op.kind) {
        case 'E':
            return detail::apply_vertex_leg(s, VKind::E, op.node, op.z, conv, true);
        case 'F':
            return detail::apply_vertex_leg(s, VKind::F, op.node, op.z, conv, true);
        case 'e':
            return detail::apply_vertex_leg(s, VKind::E, op.node, op.z, conv, false);
        case 'f':
            return detail::apply_vertex_leg(s, VKind::F, op.node, op.z, conv, false);
        case '+':
        case '-': {
            const Monomial& hE = op.kind == '+' ? conv.h_plus_E : conv.h_minus_E;
            const Monomial& hF = op.kind == '+' ? conv.h_plus_F : conv.h_minus_F;
            // normal ordered: annihilation legs right, creation left, zero
            // modes reduce to (hE/hF)^{P_i}
            Rational zE = op.z * eval_monomial(hE, par), zF = op.z * eval_monomial(hF, par);
            GammaFamily cE = detail::mode_coeff(VKind::E, conv.g_E, false);
            GammaFamily cF = detail::mode_coeff(VKind::F, conv.g_F, false);
            auto coeffE = [&](int n) -> Rational { return cE.eval(n, par.rho, par.sigma) * pow_int(zE, -n); };
            auto coeffF = [&](int n) -> Rational { return cF.eval(n, par.rho, par.sigma) * pow_int(zF, -n); };
            Rational mom = eval_monomial(hE, par) / eval_monomial(hF, par);
            FockState r = s.apply_momentum(op.node, 1, mom);
            r = r.apply_exp_modes(op.node, 1, r.cutoff(), coeffF);
            r = r.apply_exp_modes(op.node, 1, r.cutoff(), coeffE);
            r = r.apply_exp_modes(op.node, -r.cutoff(), -1, coeffF);
            r = r.apply_exp_modes(op.node, -r.cutoff(), -1, coeffE);
            return r;
        }
        default:
            throw std::invalid_argument("apply_current: unknown kind");
    }
}

/// <bra| word |ket> with bra and ket given as creation-mode lists on the
/// vacuum (empty = vacuum). Charge-sector mismatch yields exact 0.
inline Rational vertex_matrix_element(const CartanData& cd, const FockParams& par, int cutoff,
                                      const std::vector<std::pair<int, int>>& bra_modes,
                                      const std::vector<OpVal>& word,
                                      const std::vector<std::pair<int, int>>& ket_modes,
                                      const Convention& conv) {
    FockState ket = FockState::vacuum(&cd, par, cutoff);
    for (auto& [i, n] : ket_modes) {
        if (n >= 0) throw std::invalid_argument("ket modes must be creation modes");
        ket = ket.apply_mode(i, n);
    }
    for (auto it = word.rbegin(); it != word.rend(); ++it) ket = apply_current(ket, *it, conv);
    // bra: <0| prod a_i[n] with n>0
    for (auto it = bra_modes.rbegin(); it != bra_modes.rend(); ++it) {
        if (it->second <= 0) throw std::invalid_argument("bra modes must be positive");
        ket = ket.apply_mode(it->first, it->second);
    }
    FockKey vac;
    vac.charge.assign(cd.rank, 0);
    auto it = ket.amplitudes().find(vac);
    return it == ket.amplitudes().end() ? Rational(0) : it->second;
}

}  // namespace qell
