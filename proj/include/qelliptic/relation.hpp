#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "qelliptic/free_field.hpp"
#include "qelliptic/theta.hpp"

namespace qell {

/// The eight two-current exchange relations.
enum class RelId { HpHp, HpHm, HpE, HmE, HpF, HmF, EE, FF };

inline const char* rel_name(RelId r) {
    switch (r) {
        case RelId::HpHp: return "H+H+";
        case RelId::HpHm: return "H+H-";
        case RelId::HpE: return "H+E";
        case RelId::HmE: return "H-E";
        case RelId::HpF: return "H+F";
        case RelId::HmF: return "H-F";
        case RelId::EE: return "EE";
        case RelId::FF: return "FF";
    }
    return "?";
}

inline std::pair<char, char> rel_kinds(RelId r) {
    switch (r) {
        case RelId::HpHp: return {'+', '+'};
        case RelId::HpHm: return {'+', '-'};
        case RelId::HpE: return {'+', 'E'};
        case RelId::HmE: return {'-', 'E'};
        case RelId::HpF: return {'+', 'F'};
        case RelId::HmF: return {'-', 'F'};
        case RelId::EE: return {'E', 'E'};
        case RelId::FF: return {'F', 'F'};
    }
    throw std::invalid_argument("rel_kinds");
}

/// Exchange coefficient K with X_i(z) Y_j(w) = K * Y_j(w) X_i(z), as a
/// monomial prefactor and cleared theta lists (argument, nome) for numerator
/// and denominator. Thetas are reduced (no constant eta block).
struct RelCoeff {
    Monomial pref;
    std::vector<std::pair<Monomial, Monomial>> num;  // (arg, nome)
    std::vector<std::pair<Monomial, Monomial>> den;

    explicit RelCoeff(VarTablePtr t) : pref(Monomial::one(t)) {}

    ProductForm num_pf() const {
        ProductForm pf(pref.table());
        pf.mul_prefactor(pref);
        for (auto& [a, n] : num) pf.mul(theta_pf(a, n, false));
        return pf;
    }
    ProductForm den_pf() const {
        ProductForm pf(pref.table());
        for (auto& [a, n] : den) pf.mul(theta_pf(a, n, false));
        return pf;
    }
};

/// Builds the exchange coefficient for the relation at Cartan entry A_ij,
/// central charge c, base nome `qm` (a monomial, e.g. the variable q itself
/// or q p^{c'} for a shifted family member), and ratio argument zw = z/w as a
/// monomial. q-tilde is always eliminated as qm * p^c before expansion.
inline RelCoeff relation_coefficient(RelId r, int i, int j, const CartanData& cd, const Rational& c,
                                     const Monomial& qm, const Monomial& zw) {
    auto t = zw.table();
    int A = cd.entry(i, j);
    Monomial qt = qm * mono(t, 1, {{"p", detail::quarters(c)}});
    auto pp = [&](const Rational& e) { return mono(t, 1, {{"p", detail::quarters(e)}}); };
    Rational Ah = Rational(A) / 2;
    RelCoeff rc(t);
    Monomial sgn(t, (A % 2 == 0) ? Rational(1) : Rational(-1));
    switch (r) {
        case RelId::HpHp:
            rc.num = {{zw * pp(Ah), qm}, {zw * pp(-Ah), qt}};
            rc.den = {{zw * pp(-Ah), qm}, {zw * pp(Ah), qt}};
            break;
        case RelId::HpHm:
            rc.num = {{zw * pp(Ah + c / 2), qm}, {zw * pp(-(Ah + c / 2)), qt}};
            rc.den = {{zw * pp(-(Ah - c / 2)), qm}, {zw * pp(Ah - c / 2), qt}};
            break;
        case RelId::HpE:
        case RelId::HmE: {
            Rational s = (r == RelId::HpE) ? Rational(c / 4) : Rational(-c / 4);
            rc.pref = sgn * pp(-Ah);
            rc.num = {{zw * pp(Ah + s), qm}};
            rc.den = {{zw * pp(-Ah + s), qm}};
            break;
        }
        case RelId::HpF:
        case RelId::HmF: {
            Rational s = (r == RelId::HpF) ? Rational(-c / 4) : Rational(c / 4);
            rc.pref = sgn * pp(Ah);
            rc.num = {{zw * pp(-Ah + s), qt}};
            rc.den = {{zw * pp(Ah + s), qt}};
            break;
        }
        case RelId::EE:
            rc.pref = sgn * pp(-Ah);
            rc.num = {{zw * pp(Ah), qm}};
            rc.den = {{zw * pp(-Ah), qm}};
            break;
        case RelId::FF:
            rc.pref = sgn * pp(Ah);
            rc.num = {{zw * pp(-Ah), qt}};
            rc.den = {{zw * pp(Ah), qt}};
            break;
    }
    return rc;
}

}  // namespace qell
