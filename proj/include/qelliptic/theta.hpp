#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qelliptic/cartan.hpp"
#include "qelliptic/product_form.hpp"

namespace qell {

/// (u | q_1,...,q_m)_inf expanded on the window. Factors whose argument
/// exceeds the nome cap contribute 1.
inline Series pochhammer(const Monomial& u, const std::vector<Monomial>& nomes, const Window& w) {
    ProductForm pf(u.table());
    pf.mul_family(u, nomes, 1);
    return pf.expand(w);
}

/// theta_v(u) = (u|v)(v u^{-1}|v)(v|v) as a product form. The relation
/// machinery works with the reduced form (eta = false), dropping the constant
/// (v|v) block that cancels between the two sides of every cleared identity.
inline ProductForm theta_pf(const Monomial& u, const Monomial& nome, bool eta = true) {
    if (nome.nome_degree_quarters() <= 0) throw std::invalid_argument("theta: nome must have positive degree");
    ProductForm pf(u.table());
    pf.mul_family(u, {nome}, 1);
    pf.mul_family(nome * u.inverse(), {nome}, 1);
    if (eta) pf.mul_family(nome, {nome}, 1);
    return pf;
}

inline Series theta(const Monomial& u, const Monomial& nome, const Window& w) {
    return theta_pf(u, nome, true).expand(w);
}

enum class PsiKind { Q, QTilde };

/// Scalar exchange coefficient as a cleared numerator/denominator pair of
/// product forms; sign and monomial prefactor live in `num`.
struct StructureFunction {
    std::string label;
    int i = 0, j = 0;
    Rational charge;
    ProductForm num, den;

    StructureFunction(VarTablePtr t) : num(t), den(t) {}
};

namespace detail {
inline int32_t quarters(const Rational& r) {
    Rational q4 = r * 4;
    if (q4.get_den() != 1) throw std::invalid_argument("exponent leaves the quarter lattice");
    if (q4 < -(1 << 30) || q4 > (1 << 30)) throw std::invalid_argument("exponent too large");
    return static_cast<int32_t>(q4.get_num().get_si());
}
}  // namespace detail

/// q-tilde as a monomial: q * p^c.
inline Monomial qtilde_monomial(VarTablePtr t, const Rational& c) {
    Monomial m = Monomial::one(t);
    m.mul_var("q", 4);
    m.mul_var("p", detail::quarters(c));
    return m;
}

/// psi^{(a)}_{ij}(x) with x given as an explicit ratio monomial. For kind Q:
/// (-1)^{A_ij} p^{-A_ij/2} theta_q(x^{-1} p^{A_ij/2}) / theta_q(x^{-1} p^{-A_ij/2});
/// for kind QTilde the p-powers flip sign and the nome is q p^c.
inline StructureFunction structure_psi(PsiKind kind, int i, int j, const CartanData& cd, const Rational& c,
                                       VarTablePtr t, const Monomial& x) {
    int A = cd.entry(i, j);
    StructureFunction sf(t);
    sf.label = kind == PsiKind::Q ? "psi_q" : "psi_qt";
    sf.i = i;
    sf.j = j;
    sf.charge = c;
    Monomial nome = kind == PsiKind::Q ? mono(t, 1, {{"q", 4}}) : qtilde_monomial(t, c);
    int sgn_pow = kind == PsiKind::Q ? -1 : +1;  // p^{-A/2} for q, p^{+A/2} for q-tilde
    Monomial pref = mono(t, (A % 2 == 0) ? Rational(1) : Rational(-1), {});
    pref.mul_var("p", static_cast<int32_t>(sgn_pow * 2 * A));
    Monomial xa = x.inverse();
    Monomial up = xa * mono(t, 1, {{"p", static_cast<int32_t>(2 * A)}});
    Monomial dn = xa * mono(t, 1, {{"p", static_cast<int32_t>(-2 * A)}});
    if (kind == PsiKind::QTilde) std::swap(up, dn);
    sf.num = theta_pf(up, nome, false);
    sf.num.mul_prefactor(pref);
    sf.den = theta_pf(dn, nome, false);
    return sf;
}

/// A formal sum of product forms (used for cleared Serre coefficients).
using PFSum = std::vector<ProductForm>;

inline Series expand_sum(const PFSum& s, const Window& w) {
    Series acc = Series::zero(s.empty() ? nullptr : s.front().table(), w);
    for (auto& pf : s) acc = acc + pf.expand(w);
    return acc;
}

/// Cleared form of the Serre coefficient f^{(a)}_{ij}(z1/w, z2/w):
///   numerator  (psi_ii(z2/z1)+1)(psi_ij(w/z1) psi_ij(w/z2)+1)
///   denominator psi_ij(w/z2) + psi_ii(z2/z1) psi_ij(w/z1)
/// multiplied through by all three theta denominators, so both parts become
/// sums of products of theta series. Requires A_ij = -1. The arguments are
/// explicit monomials so the z1 <-> z2 replacement summand reuses the same
/// builder.
inline std::pair<PFSum, PFSum> serre_coefficient_f_args(PsiKind kind, int i, int j, const CartanData& cd,
                                                        const Rational& c, VarTablePtr t, const Monomial& z1,
                                                        const Monomial& z2, const Monomial& w) {
    if (cd.entry(i, j) != -1) throw std::invalid_argument("serre coefficient: requires A_ij = -1");
    auto psi_ii = structure_psi(kind, i, i, cd, c, t, z2 * z1.inverse());
    auto psi_1 = structure_psi(kind, i, j, cd, c, t, w * z1.inverse());
    auto psi_2 = structure_psi(kind, i, j, cd, c, t, w * z2.inverse());

    auto prod = [&](const ProductForm& a, const ProductForm& b, const ProductForm& cc) {
        ProductForm r = a;
        r.mul(b);
        r.mul(cc);
        return r;
    };
    // numerator (nS + dS)(n1 n2 + d1 d2); denominator n2 dS d1 + nS n1 d2
    PFSum num{prod(psi_ii.num, psi_1.num, psi_2.num), prod(psi_ii.num, psi_1.den, psi_2.den),
              prod(psi_ii.den, psi_1.num, psi_2.num), prod(psi_ii.den, psi_1.den, psi_2.den)};
    PFSum den{prod(psi_2.num, psi_ii.den, psi_1.den), prod(psi_ii.num, psi_1.num, psi_2.den)};
    return {num, den};
}

inline std::pair<PFSum, PFSum> serre_coefficient_f(PsiKind kind, int i, int j, const CartanData& cd,
                                                   const Rational& c, VarTablePtr t) {
    Monomial z1 = mono(t, 1, {{"z1", 4}});
    Monomial z2 = mono(t, 1, {{"z2", 4}});
    Monomial w = mono(t, 1, {{"w", 4}});
    return serre_coefficient_f_args(kind, i, j, cd, c, t, z1, z2, w);
}

}  // namespace qell
