#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qelliptic/cartan.hpp"
#include "qelliptic/gamma_family.hpp"
#include "qelliptic/theta.hpp"

namespace qell {

enum class VKind { E, F };

/// Convention block for the level-1 realization: internal argument shifts of
/// the E and F mode exponentials (signed monomials in p, q), the internal
/// shift pair of the composite H currents, and the optional two-cocycle sign
/// in charge reordering. Defaults follow the literal realization:
/// E at z(pq)^{1/2}, F at z q^{1/2}, H^+- = :E(z p^{+-1/4}) F(z p^{-+1/4}):.
struct Convention {
    Monomial g_E, g_F;
    Monomial h_plus_E, h_plus_F;    // H^+ internal shifts for the E / F legs
    Monomial h_minus_E, h_minus_F;  // H^- internal shifts
    bool cocycle = false;

    static Convention literal(VarTablePtr t) {
        Convention c{Monomial::one(t), Monomial::one(t), Monomial::one(t), Monomial::one(t),
                     Monomial::one(t), Monomial::one(t)};
        c.g_E.mul_var("p", 2).mul_var("q", 2);
        c.g_F.mul_var("q", 2);
        c.h_plus_E.mul_var("p", 1);
        c.h_plus_F.mul_var("p", -1);
        c.h_minus_E.mul_var("p", -1);
        c.h_minus_F.mul_var("p", 1);
        return c;
    }

    const Monomial& shift(VKind k) const { return k == VKind::E ? g_E : g_F; }
};

/// n * [a_i[n], a_j[-n]] as a structured ratio:
/// (1-q^{-n})(p^{nA/2}-p^{-nA/2})(1-(pq)^n) / (1-p^n).
/// The Kronecker pairing couples modes n and -n.
inline GammaFamily bracket_times_n(const CartanData& cd, int i, int j) {
    int A = cd.entry(i, j);
    GammaFamily g;
    if (A == 0) {
        g.num = NPoly::zero();
        return g;
    }
    NPoly f1 = NPoly::one() - NPoly::term(1, 0, -4);                    // 1 - q^{-n}
    NPoly f2 = NPoly::term(1, 2 * A, 0) - NPoly::term(1, -2 * A, 0);    // p^{nA/2} - p^{-nA/2}
    NPoly f3 = NPoly::one() - NPoly::term(1, 4, 4);                     // 1 - (pq)^n
    g.num = f1 * f2 * f3;
    g.den = {NKey{4, 0, 0}};                                            // (1 - p^n)
    return g;
}

/// Exact numeric value of [a_i[n], a_j[m]] for m = -n at rational quarter
/// roots rho = p^{1/4}, sigma = q^{1/4}.
inline Rational bracket_value(const CartanData& cd, int i, int j, long n, const Rational& rho,
                              const Rational& sigma) {
    if (n == 0) throw std::invalid_argument("bracket_value: n must be nonzero");
    return bracket_times_n(cd, i, j).eval(n, rho, sigma) / Rational(n);
}

/// s^+[n] = a[n]/(q^n - 1), s^-[n] = -a[n]/((pq)^{-n} - 1): the scalar in
/// front of a[n], as a structured ratio in n.
inline GammaFamily smode_coefficient(char sign) {
    GammaFamily g;
    if (sign == '+') {
        g.num = NPoly::term(-1, 0, 0);  // 1/(q^n-1) = -1/(1-q^n)
        g.den = {NKey{0, 4, 0}};
    } else if (sign == '-') {
        g.num = NPoly::term(-1, 4, 4);  // -1/((pq)^{-n}-1) = -(pq)^n/(1-(pq)^n)
        g.den = {NKey{4, 4, 0}};
    } else {
        throw std::invalid_argument("smode_coefficient: sign must be + or -");
    }
    return g;
}
inline Rational smode_value(char sign, long n, const Rational& rho, const Rational& sigma) {
    if (n == 0) throw std::invalid_argument("smode: n must be nonzero");
    return smode_coefficient(sign).eval(n, rho, sigma);
}

namespace detail {
/// Signed shift monomial g as an n-power factor g^{k n} (k = +-1) in NPoly
/// form. g must be +-(p,q)-monomial.
inline NPoly shift_power(const Monomial& g, int k) {
    const auto& t = *g.table();
    int32_t a = 0, b = 0;
    for (size_t v = 0; v < t.size(); ++v) {
        if (g.exps()[v] == 0) continue;
        if (t[v].name == "p")
            a = g.exps()[v];
        else if (t[v].name == "q")
            b = g.exps()[v];
        else
            throw std::invalid_argument("internal shift must be a monomial in p, q");
    }
    int32_t s = 0;
    if (g.coeff() == -1)
        s = 1;
    else if (g.coeff() != 1)
        throw std::invalid_argument("internal shift coefficient must be +-1");
    return NPoly::term(1, a * k, b * k, s);
}

/// Mode coefficient of the field kind at mode +n: E -> g_E^{-n}/(q^n-1),
/// F -> g_F^{-n}/((pq)^{-n}-1). The reflected coefficient at mode -n is
/// obtained by negating every n-power.
inline GammaFamily mode_coeff(VKind k, const Monomial& shift, bool reflected) {
    GammaFamily base;
    if (k == VKind::E) {
        // at +n: -g^{-n}/(1-q^n);  at -n: g^{n} q^{n}/(1-q^n)
        if (!reflected) {
            base.num = NPoly::term(-1, 0, 0) * shift_power(shift, -1);
            base.den = {NKey{0, 4, 0}};
        } else {
            base.num = NPoly::term(1, 0, 4) * shift_power(shift, 1);
            base.den = {NKey{0, 4, 0}};
        }
    } else {
        // F at +n: g^{-n}/((pq)^{-n}-1) = g^{-n}(pq)^n/(1-(pq)^n);
        // at -n: g^{n}/((pq)^{n}-1) = -g^{n}/(1-(pq)^n)
        if (!reflected) {
            base.num = NPoly::term(1, 4, 4) * shift_power(shift, -1);
            base.den = {NKey{4, 4, 0}};
        } else {
            base.num = NPoly::term(-1, 0, 0) * shift_power(shift, 1);
            base.den = {NKey{4, 4, 0}};
        }
    }
    return base;
}
}  // namespace detail

/// gamma family of the ordered contraction X_i(z) Y_j(w):
/// gamma_n = n * x^X_n * y^Y_{-n} * [a_i[n], a_j[-n]], returned simplified.
inline GammaFamily contraction_exponent(VKind X, VKind Y, int i, int j, const CartanData& cd,
                                        const Convention& conv) {
    GammaFamily g = detail::mode_coeff(X, conv.shift(X), false)
                        .mul(detail::mode_coeff(Y, conv.shift(Y), true))
                        .mul(bracket_times_n(cd, i, j));
    return g.simplified();
}

/// Same assembly left unsimplified; an independent path for cross-checks.
inline GammaFamily contraction_exponent_raw(VKind X, VKind Y, int i, int j, const CartanData& cd,
                                            const Convention& conv) {
    return detail::mode_coeff(X, conv.shift(X), false)
        .mul(detail::mode_coeff(Y, conv.shift(Y), true))
        .mul(bracket_times_n(cd, i, j));
}

/// Contraction scalar C^{XY}_{ij} as a product form in the ratio argument
/// x = (arg of Y)/(arg of X).
struct ContractionDescriptor {
    VKind X, Y;
    int i, j;
    GammaFamily gamma;
    ProductForm product_form(const Monomial& x) const {
        if (gamma.is_zero()) return ProductForm::one(x.table());
        return gamma.to_product_form(x);
    }
};

inline ContractionDescriptor contraction(VKind X, VKind Y, int i, int j, const CartanData& cd,
                                         const Convention& conv) {
    return {X, Y, i, j, contraction_exponent(X, Y, i, j, cd, conv)};
}

/// One E/F factor inside a normal-ordered word. Atoms sharing a group id come
/// from the same composite (H) current and are never contracted together.
struct VertexAtom {
    VKind kind;
    int node;
    Monomial arg;
    int group;
    int charge() const { return kind == VKind::E ? 1 : -1; }
};

/// The scalar produced by Wick-reducing a word of vertex atoms to the common
/// normal-ordered operator: zero-mode monomial (with cocycle sign folded into
/// the coefficient) and the list of pairwise contraction factors.
struct WordScalar {
    Monomial zero_mode;
    std::vector<std::pair<ContractionDescriptor, Monomial>> contractions;  // (descriptor, x-argument)
};

/// Zero-mode factor of a word: commuting each z^{+-P_i} past later e^{+-Q_j}
/// via [P_i, Q_j] = A_{ij} accumulates arg_m^{e_m e_l A_{i_m i_l}} per pair;
/// with the cocycle enabled, sorting the charge operators into node order
/// contributes (-1)^{e_m e_l A_{i_m i_l}} per transposition. Pairs inside one
/// normal-ordered composite carry no factor.
inline Monomial zero_mode_factor(const std::vector<VertexAtom>& word, const CartanData& cd,
                                 const Convention& conv, VarTablePtr t) {
    Monomial acc = Monomial::one(t);
    for (size_t m = 0; m < word.size(); ++m)
        for (size_t l = m + 1; l < word.size(); ++l) {
            if (word[m].group == word[l].group && word[m].group >= 0) continue;
            int e = word[m].charge() * word[l].charge() * cd.entry(word[m].node, word[l].node);
            acc = acc * word[m].arg.pow(e);
        }
    if (conv.cocycle) {
        // bubble sort by node index, counting signed transpositions
        std::vector<std::pair<int, int>> charges;  // (node, charge)
        for (auto& a : word) charges.push_back({a.node, a.charge()});
        int sign = 1;
        for (size_t i = 0; i < charges.size(); ++i)
            for (size_t j = 0; j + 1 < charges.size() - i; ++j)
                if (charges[j].first > charges[j + 1].first) {
                    int A = cd.entry(charges[j].first, charges[j + 1].first);
                    if ((charges[j].second * charges[j + 1].second * A) % 2 != 0) sign = -sign;
                    std::swap(charges[j], charges[j + 1]);
                }
        if (sign < 0) acc = acc * Monomial(t, Rational(-1));
    }
    return acc;
}

inline WordScalar word_scalar(const std::vector<VertexAtom>& word, const CartanData& cd,
                              const Convention& conv, VarTablePtr t) {
    WordScalar ws{zero_mode_factor(word, cd, conv, t), {}};
    for (size_t m = 0; m < word.size(); ++m)
        for (size_t l = m + 1; l < word.size(); ++l) {
            if (word[m].group == word[l].group && word[m].group >= 0) continue;
            auto cdsc = contraction(word[m].kind, word[l].kind, word[m].node, word[l].node, cd, conv);
            if (cdsc.gamma.is_zero()) continue;
            ws.contractions.push_back({cdsc, word[l].arg * word[m].arg.inverse()});
        }
    return ws;
}

/// High-level current reference: kind in {E, F, H+, H-} at a node with a
/// spectral argument monomial.
struct OpRef {
    char kind;  // 'E', 'F', '+', '-'
    int node;
    Monomial arg;
};

/// Expand composite currents into vertex atoms. H currents expand through
/// their normal-ordered E/F pair with the convention's internal shifts.
inline std::vector<VertexAtom> expand_ops(const std::vector<OpRef>& ops, const Convention& conv) {
    std::vector<VertexAtom> atoms;
    int group = 0;
    for (auto& op : ops) {
        switch (op.kind) {
            case 'E':
                atoms.push_back({VKind::E, op.node, op.arg, group});
                break;
            case 'F':
                atoms.push_back({VKind::F, op.node, op.arg, group});
                break;
            case '+':
                atoms.push_back({VKind::E, op.node, op.arg * conv.h_plus_E, group});
                atoms.push_back({VKind::F, op.node, op.arg * conv.h_plus_F, group});
                break;
            case '-':
                atoms.push_back({VKind::E, op.node, op.arg * conv.h_minus_E, group});
                atoms.push_back({VKind::F, op.node, op.arg * conv.h_minus_F, group});
                break;
            default:
                throw std::invalid_argument("expand_ops: unknown kind");
        }
        ++group;
    }
    return atoms;
}

}  // namespace qell
