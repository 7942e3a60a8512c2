#pragma once

#include <chrono>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qelliptic/fock.hpp"
#include "qelliptic/relation.hpp"

namespace qell {

struct Witness {
    std::string where;  // rendered exponent vector
    std::string lhs, rhs;
};

struct RelationReport {
    std::string id;
    int i = 0, j = 0;
    std::string algebra;
    int kx = 0, knome = 0;
    std::string convention;
    std::string status;  // "pass" | "fail" | "pass-after-calibration"
    std::optional<Witness> witness;
    std::vector<std::string> notes;
    long wall_ms = 0;

    bool passed() const { return status != "fail"; }
};

inline std::string render_convention(const Convention& conv) {
    std::string s = "gE=" + conv.g_E.to_string() + " gF=" + conv.g_F.to_string();
    s += conv.cocycle ? " cocycle=on" : " cocycle=off";
    return s;
}

inline std::string render_expvec(const VariableTable& t, const ExpVec& e) {
    std::string s;
    for (size_t k = 0; k < e.size(); ++k) {
        if (e[k] == 0) continue;
        if (!s.empty()) s += " ";
        s += t[k].name + "^(" + std::to_string(e[k]) + "/4)";
    }
    return s.empty() ? "1" : s;
}

namespace detail {

inline Monomial strip_spectral(const Monomial& m) {
    Monomial r(m.table(), m.coeff());
    const auto& t = *m.table();
    for (size_t v = 0; v < t.size(); ++v)
        if (t.is_nome(v) && m.exps()[v] != 0) r.mul_var(t[v].name, m.exps()[v]);
    return r;
}

/// Rebuild a convention's monomials onto another variable table carrying the
/// same nome variables.
inline Convention rebuild_convention(const Convention& conv, VarTablePtr t) {
    auto rebuild = [&](const Monomial& src) {
        Monomial m(t, src.coeff());
        const auto& st = *src.table();
        for (size_t v = 0; v < st.size(); ++v)
            if (src.exps()[v] != 0) m.mul_var(st[v].name, src.exps()[v]);
        return m;
    };
    Convention fresh = Convention::literal(t);
    fresh.g_E = rebuild(conv.g_E);
    fresh.g_F = rebuild(conv.g_F);
    fresh.h_plus_E = rebuild(conv.h_plus_E);
    fresh.h_plus_F = rebuild(conv.h_plus_F);
    fresh.h_minus_E = rebuild(conv.h_minus_E);
    fresh.h_minus_F = rebuild(conv.h_minus_F);
    fresh.cocycle = conv.cocycle;
    return fresh;
}

/// Nome-degree floor for a comparison window: -(total spectral span) times
/// the worst single-factor negative weight per spectral step, read off the
/// actual factor arguments of the check.
inline int64_t rule_floor_quarters(const std::vector<ProductForm>& pfs, const Window& probe) {
    Rational worst(0);  // quarters of nome drop per quarter of spectral move
    auto consider = [&](const Monomial& arg) {
        int64_t nq = arg.nome_degree_quarters();
        if (nq >= 0) return;
        int64_t sq = 0;
        const auto& t = *arg.table();
        for (size_t v = 0; v < t.size(); ++v)
            if (!t.is_nome(v)) sq += std::abs(arg.exps()[v]);
        if (sq == 0) return;
        Rational ratio = Rational(-nq) / Rational(sq);
        if (ratio > worst) worst = ratio;
    };
    for (auto& pf : pfs) {
        for (auto& f : pf.finite_factors()) consider(f.arg);
        for (auto& fam : pf.families()) consider(fam.base);
    }
    int64_t span = 0;
    const auto& t = *probe.table();
    for (size_t v = 0; v < t.size(); ++v)
        if (!t.is_nome(v)) span += probe.spectral_hi(v) - probe.spectral_lo(v);
    Rational fl = Rational(span) * worst;
    mpz_class num = fl.get_num(), den = fl.get_den();
    int64_t q = static_cast<int64_t>(mpz_class(num / den).get_si()) + 1;
    return -q;
}

inline std::vector<ProductForm> contraction_pfs(const WordScalar& ws, VarTablePtr t) {
    std::vector<ProductForm> pfs;
    for (auto& [desc, xarg] : ws.contractions) pfs.push_back(desc.product_form(xarg));
    return pfs;
}

inline ProductForm monomial_pf(const Monomial& m) {
    ProductForm pf(m.table());
    pf.mul_prefactor(m);
    return pf;
}

/// Cleared-denominator form of a two-sided identity: inverse factors and
/// inverse Pochhammer blocks whose argument carries negative nome weight
/// (rational E-F contraction denominators, the downhill theta-type blocks of
/// adjacent-node contractions) would force unbounded working windows. Both
/// sides are multiplied by both denominator sets instead; the verdict is
/// unchanged because the multiplier has an invertible leading monomial.
inline void clear_rational_denominators(std::vector<ProductForm>& lhs, std::vector<ProductForm>& rhs) {
    auto extract = [](std::vector<ProductForm>& side) {
        ProductForm moved(side.front().table());
        bool any = false;
        for (auto& pf : side) {
            ProductForm kept(pf.table());
            kept.mul_prefactor(pf.prefactor());
            for (auto& fam : pf.families()) {
                if (fam.multiplicity < 0 && fam.base.nome_degree_quarters() <= 0) {
                    moved.mul_family(fam.base, fam.nome_gens, -fam.multiplicity);
                    any = true;
                } else {
                    kept.mul_family(fam.base, fam.nome_gens, fam.multiplicity);
                }
            }
            for (auto& f : pf.finite_factors()) {
                if (f.multiplicity < 0 && f.arg.nome_degree_quarters() <= 0) {
                    moved.mul_finite(f.arg, -f.multiplicity);
                    any = true;
                } else {
                    kept.mul_finite(f.arg, f.multiplicity);
                }
            }
            pf = kept;
        }
        return std::pair<ProductForm, bool>(moved, any);
    };
    auto [lmoved, lany] = extract(lhs);
    auto [rmoved, rany] = extract(rhs);
    if (lany) rhs.push_back(lmoved);
    if (rany) lhs.push_back(rmoved);
}

}  // namespace detail

/// The two-current exchange check in cleared-denominator form. Every factor
/// of the exchange scalar is homogeneous of spectral degree zero in (z, w),
/// so the check runs over the single ratio variable x = w/z (the reference
/// argument z maps to the unit monomial and w to x; the common z power of
/// the zero modes is identical on both sides by construction). Builds
///   LHS = (zero modes of X_i(z) Y_j(w)) * prod C * (theta denominator)
///   RHS = prefactor * (theta numerator) * (zero modes of Y_j(w) X_i(z)) * prod C'
/// as two-sided windowed series over (p, q, x) and compares coefficients.
/// An explicit coefficient can be supplied for mutation tests.
inline RelationReport check_exchange(const CartanData& cd, const std::string& algebra, RelId rel, int i,
                                     int j, int kx, int knome, const Convention& conv,
                                     const std::optional<RelCoeff>& coeff_override = std::nullopt) {
    auto start = std::chrono::steady_clock::now();
    auto t = table_pq_plus({"x"});
    Convention cv = detail::rebuild_convention(conv, t);
    Monomial zref = Monomial::one(t);
    Monomial x = mono(t, 1, {{"x", 4}});
    auto [xk, yk] = rel_kinds(rel);

    auto atoms_L = expand_ops({{xk, i, zref}, {yk, j, x}}, cv);
    auto atoms_R = expand_ops({{yk, j, x}, {xk, i, zref}}, cv);
    auto ws_L = word_scalar(atoms_L, cd, cv, t);
    auto ws_R = word_scalar(atoms_R, cd, cv, t);
    RelCoeff rc = coeff_override ? *coeff_override
                                 : relation_coefficient(rel, i, j, cd, 1, mono(t, 1, {{"q", 4}}),
                                                        x.inverse());

    std::vector<ProductForm> lhs_pfs{detail::monomial_pf(ws_L.zero_mode)};
    for (auto& pf : detail::contraction_pfs(ws_L, t)) lhs_pfs.push_back(pf);
    lhs_pfs.push_back(rc.den_pf());
    std::vector<ProductForm> rhs_pfs{detail::monomial_pf(ws_R.zero_mode)};
    for (auto& pf : detail::contraction_pfs(ws_R, t)) rhs_pfs.push_back(pf);
    rhs_pfs.push_back(rc.num_pf());
    detail::clear_rational_denominators(lhs_pfs, rhs_pfs);

    Window probe(t);
    probe.set_spectral_units("x", 2 * kx);
    probe.set_nome_units(0, knome);
    std::vector<ProductForm> all = lhs_pfs;
    all.insert(all.end(), rhs_pfs.begin(), rhs_pfs.end());
    int64_t floor_q = detail::rule_floor_quarters(all, probe);
    Window win(t);
    win.set_spectral_units("x", 2 * kx);
    win.set_nome(floor_q, 4 * knome);

    Series lhs = expand_product(lhs_pfs, win);
    Series rhs = expand_product(rhs_pfs, win);
    if (lhs.is_zero() && rhs.is_zero())
        throw std::runtime_error("exchange check: window too small to contain any theta term");

    auto rep = lhs.window_equal(rhs, win);
    RelationReport out;
    out.id = rel_name(rel);
    out.i = i + 1;
    out.j = j + 1;
    out.algebra = algebra;
    out.kx = kx;
    out.knome = knome;
    out.convention = render_convention(cv);
    out.status = rep.pass ? "pass" : "fail";
    if (!rep.pass)
        out.witness = Witness{render_expvec(*t, rep.where), to_string(rep.lhs), to_string(rep.rhs)};
    out.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start)
                      .count();
    return out;
}

/// One delta-supported term of the [E, F] commutator.
struct DeltaTerm {
    Monomial support;          // s with delta(x/s), x = w/z
    bool h_matched = false;
    char h_sign = '?';         // '+' or '-' when matched
    Monomial h_argument;       // residue operator is H^sign(z * h_argument)
    Monomial residue_vs_paper; // measured coefficient over the +-1/(p-1) normalization
    std::string note;
};

struct DeltaDecomposition {
    bool certified = false;            // both orderings expand one rational function
    std::optional<Monomial> mismatch;  // measured EF/FE monomial ratio when not certified
    Monomial support_offset;           // uniform offset of measured supports vs {q, pq}
    bool offset_uniform = false;
    std::vector<DeltaTerm> terms;
};

/// The [E_i(z), F_j(w)] check. For i != j the commutator must vanish; for
/// i = j the two orderings are tested as expansions of one rational function
/// (multiplying through by the candidate pole denominator), the pole supports
/// and residues are extracted, and the residues are matched against the H
/// currents. Discrepancies are measured and reported, never repaired.
inline std::pair<RelationReport, DeltaDecomposition> check_ef_commutator(const CartanData& cd,
                                                                         const std::string& algebra, int i,
                                                                         int j, int kx, int knome,
                                                                         const Convention& conv) {
    auto start = std::chrono::steady_clock::now();
    auto t = table_pq_plus({"x"});
    Convention cv = detail::rebuild_convention(conv, t);
    Monomial zref = Monomial::one(t);
    Monomial x = mono(t, 1, {{"x", 4}});

    auto ws_EF = word_scalar(expand_ops({{'E', i, zref}, {'F', j, x}}, cv), cd, cv, t);
    auto ws_FE = word_scalar(expand_ops({{'F', j, x}, {'E', i, zref}}, cv), cd, cv, t);

    RelationReport out;
    out.id = "EF";
    out.i = i + 1;
    out.j = j + 1;
    out.algebra = algebra;
    out.kx = kx;
    out.knome = knome;
    out.convention = render_convention(cv);
    DeltaDecomposition dec;

    std::vector<ProductForm> lhs_pfs{detail::monomial_pf(ws_EF.zero_mode)};
    for (auto& pf : detail::contraction_pfs(ws_EF, t)) lhs_pfs.push_back(pf);
    std::vector<ProductForm> rhs_pfs{detail::monomial_pf(ws_FE.zero_mode)};
    for (auto& pf : detail::contraction_pfs(ws_FE, t)) rhs_pfs.push_back(pf);

    auto finish = [&](std::string status) {
        out.status = std::move(status);
        out.wall_ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start)
                .count();
        return std::make_pair(out, dec);
    };

    if (i != j) {
        // zero commutator expected
        Window probe(t);
        probe.set_spectral_units("x", 2 * kx);
        probe.set_nome_units(0, knome);
        std::vector<ProductForm> all = lhs_pfs;
        all.insert(all.end(), rhs_pfs.begin(), rhs_pfs.end());
        Window win(t);
        win.set_spectral_units("x", 2 * kx);
        win.set_nome(detail::rule_floor_quarters(all, probe), 4 * knome);
        Series lhs = expand_product(lhs_pfs, win);
        Series rhs = expand_product(rhs_pfs, win);
        auto rep = lhs.window_equal(rhs, win);
        if (!rep.pass)
            out.witness = Witness{render_expvec(*t, rep.where), to_string(rep.lhs), to_string(rep.rhs)};
        return finish(rep.pass ? "pass" : "fail");
    }

    // i = j: the contraction forms must be finite rational
    auto gEF = contraction_exponent(VKind::E, VKind::F, i, j, cd, cv);
    auto gFE = contraction_exponent(VKind::F, VKind::E, j, i, cd, cv);
    if (!gEF.den.empty() || !gFE.den.empty())
        throw std::runtime_error("EF check: contraction is not a finite rational form");
    ProductForm cEF = gEF.to_product_form(x);
    ProductForm cFE = gFE.to_product_form(x.inverse());

    // pole supports read off the product form: factor (1 - (w/z) m)^{-1} has
    // its pole at x = w/z = m^{-1}
    std::vector<Monomial> supports;
    for (auto& f : cEF.finite_factors()) {
        if (f.multiplicity >= 0) continue;
        Monomial m(t, f.arg.coeff());
        const auto& st = *t;
        for (size_t v = 0; v < st.size(); ++v)
            if (st.is_nome(v) && f.arg.exps()[v] != 0) m.mul_var(st[v].name, f.arg.exps()[v]);
        supports.push_back(m.inverse());
    }
    std::sort(supports.begin(), supports.end(), [](const Monomial& a, const Monomial& b) {
        return a.exps() < b.exps();
    });

    // certification: multiply both orderings by the candidate denominator
    ProductForm dcand(t);
    for (auto& s : supports) dcand.mul_finite(x * s.inverse(), 1);
    Window probe(t);
    probe.set_spectral_units("x", 2 * kx);
    probe.set_nome_units(0, knome);
    std::vector<ProductForm> all = lhs_pfs;
    all.insert(all.end(), rhs_pfs.begin(), rhs_pfs.end());
    Window win(t);
    win.set_spectral_units("x", 2 * kx);
    win.set_nome(detail::rule_floor_quarters(all, probe) - 4, 4 * knome + 4);

    auto lhs_cleared = lhs_pfs;
    lhs_cleared.push_back(dcand);
    auto rhs_cleared = rhs_pfs;
    rhs_cleared.push_back(dcand);
    Series p_up = expand_product(lhs_cleared, win);
    Series p_down = expand_product(rhs_cleared, win);
    auto cert = p_up.window_equal(p_down, win);
    dec.certified = cert.pass;
    if (!cert.pass) {
        // measure the mismatch when both collapse to monomials
        if (p_up.term_count() == 1 && p_down.term_count() == 1) {
            auto& [eu, cu] = *p_up.terms().begin();
            auto& [ed, cdn] = *p_down.terms().begin();
            dec.mismatch = Monomial(t, cdn / cu, ed - eu);
            out.notes.push_back("orderings differ by the monomial factor " + dec.mismatch->to_string());
        } else {
            out.notes.push_back("orderings are not expansions of a common rational function");
        }
        out.witness = Witness{render_expvec(*t, cert.where), to_string(cert.lhs), to_string(cert.rhs)};
    }

    // support offset against the paper normalization {q, pq}
    {
        std::vector<Monomial> target{mono(t, 1, {{"q", 4}}), mono(t, 1, {{"p", 4}, {"q", 4}})};
        if (supports.size() == target.size()) {
            std::optional<Monomial> off;
            bool uniform = true;
            for (size_t k = 0; k < supports.size(); ++k) {
                Monomial r = supports[k] * target[k].inverse();
                if (!off)
                    off = r;
                else if (!(*off == r))
                    uniform = false;
            }
            if (off && uniform) {
                dec.support_offset = *off;
                dec.offset_uniform = true;
                out.notes.push_back("measured support offset vs {q, pq}: " + off->to_string());
            }
        }
    }

    // residues: P/(prod (1-x/s_k)) with P the collapsed numerator monomial of
    // the EF ordering; the residue operator at support s matches
    // H^sign(z * hE^{-1}) exactly when s = hF/hE for that sign.
    Monomial pnum = Monomial::one(t);
    if (p_up.term_count() == 1) {
        auto& [e, c] = *p_up.terms().begin();
        pnum = Monomial(t, c, e);
    }
    for (size_t k = 0; k < supports.size(); ++k) {
        DeltaTerm term;
        term.support = supports[k];
        // residue coefficient ratio vs the +-1/(p-1) normalization: for the
        // two-support case s1/s2 = p^{-1} this is a monomial, computed below.
        if (supports.size() == 2) {
            const Monomial& s1 = supports[k];
            const Monomial& s2 = supports[1 - k];
            // a_k = 1/(1 - s_k/s_{k'}): with s1/s2 = p^{-1}: a = -p/(1-p) or 1/(1-p)
            Monomial ratio = s1 * s2.inverse();
            Monomial pinv = mono(t, 1, {{"p", -4}});
            if (ratio == pinv) {
                // a_k = 1/(1-p^{-1}) = -p/(1-p); paper coefficient +1/(p-1):
                // measured/paper = s_k * p  (times the collapsed numerator,
                // with the common z,w zero-mode power stripped)
                term.residue_vs_paper = s1 * mono(t, 1, {{"p", 4}}) * detail::strip_spectral(pnum);
            } else {
                term.residue_vs_paper = s1 * detail::strip_spectral(pnum);
            }
        }
        // H matching: the residue operator at support s is exactly an H
        // current built from internal shifts (hE, hF) iff s = hF/hE; the
        // argument is then z * hE^{-1}. A sign-flipped F leg is also tried
        // and reported as a solved variant.
        Monomial hp = cv.h_plus_F * cv.h_plus_E.inverse();
        Monomial hm = cv.h_minus_F * cv.h_minus_E.inverse();
        Monomial neg(t, Rational(-1));
        if (term.support == hp) {
            term.h_matched = true;
            term.h_sign = '+';
            term.h_argument = cv.h_plus_E.inverse();
        } else if (term.support == hm) {
            term.h_matched = true;
            term.h_sign = '-';
            term.h_argument = cv.h_minus_E.inverse();
        } else if (term.support == hp * neg) {
            term.h_matched = true;
            term.h_sign = '+';
            term.h_argument = cv.h_plus_E.inverse();
            term.note = "matches the H+ variant with a sign-flipped F leg";
        } else if (term.support == hm * neg) {
            term.h_matched = true;
            term.h_sign = '-';
            term.h_argument = cv.h_minus_E.inverse();
            term.note = "matches the H- variant with a sign-flipped F leg";
        } else {
            term.note = "residue operator is not an H current for this support (zero-mode obstruction " +
                        (term.support * hp.inverse()).to_string() + " vs H+)";
        }
        dec.terms.push_back(term);
    }

    bool supports_are_paper = dec.offset_uniform && dec.support_offset.is_one();
    bool residues_ok = !dec.terms.empty();
    for (auto& tm : dec.terms) residues_ok = residues_ok && tm.h_matched;
    bool pass = dec.certified && supports_are_paper && residues_ok;
    if (dec.certified && residues_ok && !supports_are_paper)
        out.notes.push_back("delta decomposition certified with H residues; supports differ from {q, pq}");
    return finish(pass ? "pass" : "fail");
}

/// Serre relation check in cleared form over the ratio variables u = z2/z1,
/// v = w/z2. All six orderings of X_i X_i X_j are reduced to the common
/// normal-ordered word through pairwise contraction scalars, the cleared
/// Serre coefficient multiplies through, and the six-term sum must vanish on
/// the window. A mutation hook shifts one psi argument by p^{1/4} to verify
/// the check's sensitivity.
inline RelationReport check_serre(const CartanData& cd, const std::string& algebra, VKind kind, int i,
                                  int j, int kx, int knome, const Convention& conv, bool mutate = false) {
    auto start = std::chrono::steady_clock::now();
    if (cd.entry(i, j) != -1) throw std::invalid_argument("serre check: requires A_ij = -1");
    if (kx < 2 || knome < 3) throw std::invalid_argument("serre check: window below the enforced minimum");
    auto t = table_pq_plus({"u", "v"});
    Convention cv = detail::rebuild_convention(conv, t);
    Monomial one = Monomial::one(t);
    Monomial u = mono(t, 1, {{"u", 4}});
    Monomial v = mono(t, 1, {{"v", 4}});
    Monomial w = u * v;
    char k = kind == VKind::E ? 'E' : 'F';
    PsiKind pk = kind == VKind::E ? PsiKind::Q : PsiKind::QTilde;

    // words: scalar lists, with argument assignments z1 -> 1, z2 -> u, w -> uv
    auto scal = [&](const Monomial& a1, const Monomial& a2, const Monomial& a3, int n1, int n2, int n3) {
        return word_scalar(expand_ops({{k, n1, a1}, {k, n2, a2}, {k, n3, a3}}, cv), cd, cv, t);
    };
    WordScalar S1 = scal(one, u, w, i, i, j);
    WordScalar S2 = scal(one, w, u, i, j, i);
    WordScalar S3 = scal(w, one, u, j, i, i);
    WordScalar S1p = scal(u, one, w, i, i, j);
    WordScalar S2p = scal(u, w, one, i, j, i);
    WordScalar S3p = scal(w, u, one, j, i, i);

    Monomial twist = mutate ? mono(t, 1, {{"p", 1}}) : Monomial::one(t);
    auto [Nf, Df] = serre_coefficient_f_args(pk, i, j, cd, 1, t, one, u * twist, w);
    auto [Nfp, Dfp] = serre_coefficient_f_args(pk, i, j, cd, 1, t, u, one * twist, w);

    // sum of flat product terms with signs:
    //   (S1+S3+S1'+S3') D D'  -  N S2 D'  -  N' S2' D  == 0
    struct Term {
        Rational sign;
        std::vector<ProductForm> pfs;
    };
    std::vector<Term> terms;
    auto word_pfs = [&](const WordScalar& ws) {
        std::vector<ProductForm> pfs{detail::monomial_pf(ws.zero_mode)};
        for (auto& pf : detail::contraction_pfs(ws, t)) pfs.push_back(pf);
        return pfs;
    };
    auto add_terms = [&](const WordScalar& ws, const Rational& sign, const PFSum& A, const PFSum& B) {
        for (auto& a : A)
            for (auto& b : B) {
                Term tm{sign, word_pfs(ws)};
                tm.pfs.push_back(a);
                tm.pfs.push_back(b);
                terms.push_back(tm);
            }
    };
    for (auto* S : {&S1, &S3, &S1p, &S3p}) add_terms(*S, Rational(1), Df, Dfp);
    add_terms(S2, Rational(-1), Nf, Dfp);
    add_terms(S2p, Rational(-1), Nfp, Df);

    // Shared clearing so no term keeps an inverse block with a non-positive
    // nome-degree base: multiply every term by the union of such blocks and
    // let the expansion cancel matching pairs.
    ProductForm clearer(t);
    bool any_clear = false;
    for (auto& tm : terms)
        for (auto& pf : tm.pfs) {
            for (auto& fam : pf.families())
                if (fam.multiplicity < 0 && fam.base.nome_degree_quarters() <= 0) {
                    clearer.mul_family(fam.base, fam.nome_gens, -fam.multiplicity);
                    any_clear = true;
                }
            for (auto& f : pf.finite_factors())
                if (f.multiplicity < 0 && f.arg.nome_degree_quarters() <= 0) {
                    clearer.mul_finite(f.arg, -f.multiplicity);
                    any_clear = true;
                }
        }
    // Deduplicate the union: keep the max multiplicity per distinct block.
    if (any_clear) {
        ProductForm dedup(t);
        std::map<std::string, std::pair<FiniteFactor, int>> ff;
        for (auto& f : clearer.finite_factors()) {
            auto key = f.arg.to_string();
            auto [it, fresh] = ff.try_emplace(key, std::pair<FiniteFactor, int>{f, f.multiplicity});
            if (!fresh) it->second.second = std::max(it->second.second, f.multiplicity);
        }
        std::map<std::string, std::pair<PochFamily, int>> fm;
        for (auto& f : clearer.families()) {
            std::string key = f.base.to_string();
            for (auto& g : f.nome_gens) key += "|" + g.to_string();
            auto [it, fresh] = fm.try_emplace(key, std::pair<PochFamily, int>{f, f.multiplicity});
            if (!fresh) it->second.second = std::max(it->second.second, f.multiplicity);
        }
        ProductForm un(t);
        for (auto& [key, pr] : ff) un.mul_finite(pr.first.arg, pr.second);
        for (auto& [key, pr] : fm) un.mul_family(pr.first.base, pr.first.nome_gens, pr.second);
        for (auto& tm : terms) tm.pfs.push_back(un);
    }

    Window probe(t);
    probe.set_spectral_units("u", 2 * kx);
    probe.set_spectral_units("v", 2 * kx);
    probe.set_nome_units(0, knome);
    std::vector<ProductForm> all;
    for (auto& tm : terms) all.insert(all.end(), tm.pfs.begin(), tm.pfs.end());
    Window win(t);
    win.set_spectral_units("u", 2 * kx);
    win.set_spectral_units("v", 2 * kx);
    win.set_nome(detail::rule_floor_quarters(all, probe), 4 * knome);

    Series total = Series::zero(t, win);
    for (auto& tm : terms) total = total + expand_product(tm.pfs, win).scale(tm.sign);

    RelationReport out;
    out.id = kind == VKind::E ? "serreE" : "serreF";
    out.i = i + 1;
    out.j = j + 1;
    out.algebra = algebra;
    out.kx = kx;
    out.knome = knome;
    out.convention = render_convention(cv) + (mutate ? " mutated" : "");
    if (total.is_zero()) {
        out.status = "pass";
    } else {
        out.status = "fail";
        auto it = total.terms().begin();
        out.witness = Witness{render_expvec(*t, it->first), to_string(it->second), "0"};
    }
    out.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start)
                      .count();
    return out;
}

/// Verifies that the composite H currents satisfy the full set of exchange
/// relations for the node pair.
inline RelationReport check_h_consistency(const CartanData& cd, const std::string& algebra, int i, int j,
                                          int kx, int knome, const Convention& conv) {
    auto start = std::chrono::steady_clock::now();
    RelationReport out;
    out.id = "Hcons";
    out.i = i + 1;
    out.j = j + 1;
    out.algebra = algebra;
    out.kx = kx;
    out.knome = knome;
    out.convention = render_convention(conv);
    out.status = "pass";
    for (auto rel : {RelId::HpHp, RelId::HpHm, RelId::HpE, RelId::HmE, RelId::HpF, RelId::HmF}) {
        auto rep = check_exchange(cd, algebra, rel, i, j, kx, knome, conv);
        if (!rep.passed()) {
            out.status = "fail";
            out.notes.push_back(std::string(rel_name(rel)) + " fails");
            if (!out.witness) out.witness = rep.witness;
        }
    }
    out.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start)
                      .count();
    return out;
}

/// One point of the calibration search box.
struct ShiftAssignment {
    int aE = 0, bE = 0;  // g_E = (+-) q^{aE/4} p^{bE/4}
    int aF = 0, bF = 0;
    bool negE = false, negF = false;

    Convention to_convention(VarTablePtr t) const {
        Convention cv = Convention::literal(t);
        cv.g_E = mono(t, negE ? -1 : 1, {{"q", aE}, {"p", bE}});
        cv.g_F = mono(t, negF ? -1 : 1, {{"q", aF}, {"p", bF}});
        return cv;
    }
    std::string to_string() const {
        auto part = [](const char* n, int a, int b, bool s) {
            return std::string(n) + "=" + (s ? "-" : "") + "q^(" + std::to_string(a) + "/4)p^(" +
                   std::to_string(b) + "/4)";
        };
        return part("gE", aE, bE, negE) + " " + part("gF", aF, bF, negF);
    }
};

struct CalibrationResult {
    std::vector<std::string> targets;
    int box_lo = -2, box_hi = 2;
    bool signs = true;
    std::vector<ShiftAssignment> solutions;
    std::vector<std::string> solution_status;  // per-solution residual statuses
    bool literal_passes = false;
    std::string literal_status;
    long wall_ms = 0;
};

/// Exhaustive scan of internal-shift assignments over a quarter-lattice box
/// (optionally with sign bits on each shift). Every relation verdict depends
/// on the assignment only through r = g_F/g_E, so verdicts are computed once
/// per ratio class and fanned out to assignments. The literal assignment is
/// always evaluated and flagged.
inline CalibrationResult calibrate_shifts(const CartanData& cd, const std::string& algebra,
                                          const std::vector<std::string>& targets, int box_lo, int box_hi,
                                          bool signs, int kx, int knome, bool cocycle = false) {
    auto start = std::chrono::steady_clock::now();
    if (box_lo > box_hi) throw std::invalid_argument("calibration: empty box");
    CalibrationResult res;
    res.targets = targets;
    res.box_lo = box_lo;
    res.box_hi = box_hi;
    res.signs = signs;
    auto t = table_pq_plus({});

    // shift-sensitive targets first, so failing classes exit early
    auto ordered_targets = targets;
    std::stable_sort(ordered_targets.begin(), ordered_targets.end(),
                     [](const std::string& a, const std::string& b) {
                         auto rank = [](const std::string& id) {
                             if (id == "HpE" || id == "HmE" || id == "HpF" || id == "HmF") return 0;
                             if (id == "EF" || id == "EFsupports" || id == "EFconsistent") return 1;
                             return 2;
                         };
                         return rank(a) < rank(b);
                     });
    auto eval_conv = [&](const Convention& cv, bool early_exit) -> std::string {
        std::vector<std::pair<int, int>> pairs{{0, 0}};
        if (cd.rank >= 2) pairs.push_back({0, 1});
        std::string status;
        auto note = [&](const std::string& id, bool ok) {
            if (!ok) status += (status.empty() ? "" : ",") + id + ":fail";
        };
        for (auto& id : ordered_targets) {
            if (early_exit && !status.empty()) break;
            if (id == "EFsupports" || id == "EFconsistent" || id == "EF") {
                auto [rep, dec] = check_ef_commutator(cd, algebra, 0, 0, kx, knome, cv);
                if (id == "EFsupports") {
                    note(id, dec.offset_uniform && dec.support_offset.is_one());
                } else if (id == "EFconsistent") {
                    note(id, dec.certified);
                } else {
                    bool ok = rep.passed();
                    if (cd.rank >= 2) {
                        auto [r2, d2] = check_ef_commutator(cd, algebra, 0, 1, kx, knome, cv);
                        ok = ok && r2.passed();
                    }
                    note(id, ok);
                }
                continue;
            }
            RelId rel;
            if (id == "EE") rel = RelId::EE;
            else if (id == "FF") rel = RelId::FF;
            else if (id == "HpHp") rel = RelId::HpHp;
            else if (id == "HpHm") rel = RelId::HpHm;
            else if (id == "HpE") rel = RelId::HpE;
            else if (id == "HmE") rel = RelId::HmE;
            else if (id == "HpF") rel = RelId::HpF;
            else if (id == "HmF") rel = RelId::HmF;
            else throw std::invalid_argument("calibration: unknown target " + id);
            for (auto& [i, j] : pairs) {
                auto rep = check_exchange(cd, algebra, rel, i, j, kx, knome, cv);
                if (!rep.passed()) {
                    note(id, false);
                    break;
                }
            }
        }
        return status;  // empty = all targets pass
    };

    // ratio classes: (aF-aE, bF-bE, relative sign)
    std::map<std::tuple<int, int, bool>, std::string> class_status;
    auto class_of = [&](const ShiftAssignment& s) {
        return std::tuple<int, int, bool>(s.aF - s.aE, s.bF - s.bE, s.negE != s.negF);
    };
    std::vector<bool> signbits = signs ? std::vector<bool>{false, true} : std::vector<bool>{false};
    for (int aE = box_lo; aE <= box_hi; ++aE)
        for (int bE = box_lo; bE <= box_hi; ++bE)
            for (int aF = box_lo; aF <= box_hi; ++aF)
                for (int bF = box_lo; bF <= box_hi; ++bF)
                    for (bool sE : signbits)
                        for (bool sF : signbits) {
                            ShiftAssignment s{aE, bE, aF, bF, sE, sF};
                            auto key = class_of(s);
                            auto it = class_status.find(key);
                            if (it == class_status.end()) {
                                Convention cv = s.to_convention(t);
                                cv.cocycle = cocycle;
                                it = class_status.emplace(key, eval_conv(cv, true)).first;
                            }
                            if (it->second.empty()) {
                                res.solutions.push_back(s);
                                res.solution_status.push_back("pass");
                            }
                        }
    {
        Convention lit = Convention::literal(t);
        lit.cocycle = cocycle;
        res.literal_status = eval_conv(lit, false);
        res.literal_passes = res.literal_status.empty();
        if (res.literal_passes) res.literal_status = "pass";
    }
    res.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start)
                      .count();
    return res;
}

struct SpotcheckReport {
    std::string id;
    bool pass = false;
    bool conclusive = true;  // false when the truncation bound swamps the signal
    bool coeffs_exact = false;  // Fock-extracted contraction coefficients match the closed forms
    Rational max_residual;      // worst per-coefficient |LHS - RHS|
    Rational bound;             // tolerated truncation tail
};

/// Independent numeric cross-check of an exchange relation at an exact
/// rational parameter point, per power of x = w/z.
///
/// The two orderings of a formal exchange identity are expansions in
/// opposite regions and never both converge at one numeric point, so the
/// comparison is made coefficient-wise: the ordered contraction coefficients
/// are extracted from truncated Fock matrix elements by Lagrange
/// interpolation in w (exact rationals), compared exactly against the
/// closed-form gamma route, and then fed through the cleared identity whose
/// theta coefficients are single Jacobi monomials. Contributions beyond the
/// cutoff are bounded by the majorant (1 - g x)^{-G} of the contraction
/// exponential. Relations whose contraction growth defeats the bound at this
/// cutoff are reported as inconclusive rather than judged.
inline SpotcheckReport exchange_spotcheck(const CartanData& cd, RelId rel, int i, int j,
                                          const FockParams& par, int cutoff, const Convention& conv) {
    auto tx = table_pq_plus({"x"});
    Convention cv = detail::rebuild_convention(conv, tx);
    auto [xk, yk] = rel_kinds(rel);
    auto lower = [](char c) { return c == 'E' ? 'e' : c == 'F' ? 'f' : c; };
    char xo = lower(xk), yo = lower(yk);

    Monomial zref = Monomial::one(tx);
    Monomial xm = mono(tx, 1, {{"x", 4}});
    auto ws_L = word_scalar(expand_ops({{xk, i, zref}, {yk, j, xm}}, cv), cd, cv, tx);
    auto ws_R = word_scalar(expand_ops({{yk, j, xm}, {xk, i, zref}}, cv), cd, cv, tx);

    auto eval_pq = [&](const Monomial& m, int* xpow = nullptr) -> Rational {
        Rational v = m.coeff();
        const auto& tt = *m.table();
        for (size_t k = 0; k < tt.size(); ++k) {
            if (m.exps()[k] == 0) continue;
            if (tt[k].name == "p")
                v *= pow_int(par.rho, m.exps()[k]);
            else if (tt[k].name == "q")
                v *= pow_int(par.sigma, m.exps()[k]);
            else if (xpow) {
                if (m.exps()[k] % 4 != 0) throw std::domain_error("spotcheck: fractional spectral power");
                *xpow += m.exps()[k] / 4;
            } else {
                throw std::domain_error("spotcheck: unexpected spectral part");
            }
        }
        return v;
    };

    const int N = cutoff;
    const int KC = std::max(N, 16);  // identity residuals use the gamma route this far
    // Fock route: matrix elements at z = 1 and several w samples; the mode
    // part of each ordering is a polynomial of degree <= N in the second
    // argument over the first.
    std::vector<Rational> wsamp;
    for (int k = 0; k < N + 1; ++k) wsamp.push_back(Rational(1, 2 + k));
    auto lagrange_coeffs = [&](bool reversed) {
        std::vector<Rational> vals;
        for (auto& w : wsamp) {
            std::vector<OpVal> word = reversed
                                          ? std::vector<OpVal>{{yo, j, w}, {xo, i, Rational(1)}}
                                          : std::vector<OpVal>{{xo, i, Rational(1)}, {yo, j, w}};
            vals.push_back(vertex_matrix_element(cd, par, cutoff, {}, word, {}, cv));
        }
        // solve sum_k c_k w^{+-k} = val; reversed ordering is a polynomial in 1/w
        std::vector<std::vector<Rational>> M(N + 1, std::vector<Rational>(N + 2));
        for (int r = 0; r <= N; ++r) {
            for (int k = 0; k <= N; ++k) M[r][k] = pow_int(wsamp[r], reversed ? -k : k);
            M[r][N + 1] = vals[r];
        }
        for (int col = 0; col <= N; ++col) {  // gaussian elimination, exact
            int piv = col;
            while (piv <= N && M[piv][col] == 0) ++piv;
            if (piv > N) throw std::runtime_error("spotcheck: singular sample matrix");
            std::swap(M[col], M[piv]);
            for (int r = 0; r <= N; ++r) {
                if (r == col || M[r][col] == 0) continue;
                Rational f = M[r][col] / M[col][col];
                for (int k = col; k <= N + 1; ++k) M[r][k] -= f * M[col][k];
            }
        }
        std::vector<Rational> c(N + 1);
        for (int k = 0; k <= N; ++k) c[k] = M[k][N + 1] / M[k][k];
        return c;
    };
    std::vector<Rational> CL = lagrange_coeffs(false), CR = lagrange_coeffs(true);

    // gamma route: C-prod coefficients from the closed forms, exact.
    auto gamma_coeffs = [&](const WordScalar& ws, bool reversed, Rational& G, Rational& g) {
        std::vector<Rational> s(KC + 1, Rational(0));  // s[n] = sum gamma(n) x^{+-n} coefficient
        G = 0;
        g = Rational(1, 1000000);
        for (auto& [desc, xarg] : ws.contractions) {
            int xp = 0;
            Rational shift_val = eval_pq(xarg, &xp);
            if ((reversed && xp != -1) || (!reversed && xp != 1))
                throw std::runtime_error("spotcheck: unexpected contraction argument direction");
            for (int n = 1; n <= KC; ++n) s[n] += desc.gamma.eval(n, par.rho, par.sigma) * pow_int(shift_val, n);
            // majorant data: |gamma_n shift^n| <= T D^{#den} (g0 |shift|)^n
            Rational T(0), g0(0);
            for (auto& [k, c] : desc.gamma.num.terms()) {
                Rational ac = c >= 0 ? c : Rational(-c);
                T += ac;
                Rational mv = pow_int(par.rho, k.a) * pow_int(par.sigma, k.b);
                if (mv < 0) mv = -mv;
                if (mv > g0) g0 = mv;
            }
            Rational D(1);
            for (auto& k : desc.gamma.den) {
                Rational dv = pow_int(par.rho, k.a) * pow_int(par.sigma, k.b);
                if (dv < 0) dv = -dv;
                if (dv >= 1) throw std::domain_error("spotcheck: denominator magnitude >= 1");
                D /= (1 - dv);
            }
            Rational ash = shift_val >= 0 ? shift_val : Rational(-shift_val);
            G += T * D;
            if (g0 * ash > g) g = g0 * ash;
        }
        // exponentiate the truncated log series
        std::vector<Rational> c(KC + 1, Rational(0)), layer(KC + 1, Rational(0));
        c[0] = 1;
        layer[0] = 1;
        for (int k = 1; k <= KC; ++k) {
            std::vector<Rational> next(KC + 1, Rational(0));
            for (int a = 0; a <= KC; ++a)
                for (int b = 1; a + b <= KC; ++b)
                    if (layer[a] != 0 && s[b] != 0) next[a + b] += layer[a] * s[b] / b;
            for (auto& v : next) v /= k;
            layer = next;
            for (int d = 0; d <= KC; ++d) c[d] += layer[d];
        }
        return c;
    };
    Rational GL, gL, GR, gR;
    std::vector<Rational> CLg = gamma_coeffs(ws_L, false, GL, gL);
    std::vector<Rational> CRg = gamma_coeffs(ws_R, true, GR, gR);

    SpotcheckReport rep;
    rep.id = rel_name(rel);
    rep.coeffs_exact = std::equal(CL.begin(), CL.end(), CLg.begin()) &&
                       std::equal(CR.begin(), CR.end(), CRg.begin());

    // cleared identity per coefficient of x^m:
    //   sum_k zmL CL_k Theta_den(m - aL - k) = prefv sum_k zmR CR_k Theta_num(m - aR + k)
    RelCoeff rc = relation_coefficient(rel, i, j, cd, 1, mono(tx, 1, {{"q", 4}}), xm.inverse());
    int aL = 0, aR = 0, apref = 0;
    Rational zmL = eval_pq(ws_L.zero_mode, &aL), zmR = eval_pq(ws_R.zero_mode, &aR);
    Rational prefv = eval_pq(rc.pref, &apref);

    // full-theta x-coefficients are single Jacobi monomials; for a product of
    // thetas convolve them (finite within any coefficient range given the
    // super-geometric decay; |n| <= 40 is far past exhaustion here)
    auto theta_prod_coeff = [&](const std::vector<std::pair<Monomial, Monomial>>& thetas, long jx) -> Rational {
        std::vector<std::pair<Rational, Rational>> uv;  // (u-val, nome-val) with x-power +-1
        std::vector<int> dir;
        Rational eta(1);
        for (auto& [arg, nome] : thetas) {
            int xp = 0;
            Rational u = eval_pq(arg, &xp);
            Rational nv = eval_pq(nome, nullptr);
            uv.push_back({u, nv});
            dir.push_back(xp);
            // eta block of the full theta
            Rational e(1), qq = nv;
            for (int n = 1; n <= 64; ++n) {
                e *= (1 - qq);
                qq *= nv;
                if (qq == 0) break;
            }
            eta *= e;
        }
        auto single = [&](size_t t, long n) -> Rational {
            return Rational((n % 2 == 0) ? 1 : -1) * pow_int(uv[t].second, n * (n - 1) / 2) *
                   pow_int(uv[t].first, n);
        };
        if (thetas.size() == 1) {
            long n = dir[0] * jx;
            return eta * single(0, n);
        }
        Rational acc(0);
        for (long n = -40; n <= 40; ++n) {
            long n2 = dir[1] * (jx - dir[0] * n);
            acc += single(0, n) * single(1, n2);
        }
        return eta * acc;
    };

    // residuals for a few central coefficients with a tail bound from the
    // majorant coefficients of (1 - g x)^{-G}
    auto majorant = [&](const Rational& G, const Rational& g, int k) -> Rational {
        Rational c(1);
        for (int s = 1; s <= k; ++s) c *= g * (G + s - 1) / s;
        return c;
    };
    auto theta_mag = [&](const std::vector<std::pair<Monomial, Monomial>>& thetas, long jx) -> Rational {
        Rational v = theta_prod_coeff(thetas, jx);
        return v >= 0 ? v : Rational(-v);
    };
    Rational max_resid(0), bound(0);
    for (long m = -2; m <= 2; ++m) {
        Rational lhs(0), rhs(0);
        for (int k = 0; k <= KC; ++k) {
            lhs += zmL * CLg[k] * theta_prod_coeff(rc.den, m - aL - k);
            rhs += prefv * zmR * CRg[k] * theta_prod_coeff(rc.num, m - apref - aR + k);
        }
        Rational resid = lhs - rhs;
        if (resid < 0) resid = -resid;
        if (resid > max_resid) max_resid = resid;
        // tail: sum_{k>N} majorant_k * |theta(m -+ k)| on both sides, summed
        // until the ratio test certifies a geometric tail
        for (int side = 0; side < 2; ++side) {
            const auto& th = side ? rc.num : rc.den;
            Rational G = side ? GR : GL, g = side ? gR : gL;
            Rational zm = side ? zmR * prefv : zmL;
            Rational azm = zm >= 0 ? zm : Rational(-zm);
            Rational sum(0);
            Rational prev(-1);
            for (int k = KC + 1; k <= KC + 40; ++k) {
                long jxv = side ? (m - apref - aR + k) : (m - aL - k);
                Rational term = majorant(G, g, k) * theta_mag(th, jxv);
                sum += term;
                if (prev >= 0 && term * 2 <= prev && k > KC + 8) {
                    sum += term;  // geometric remainder, ratio <= 1/2
                    break;
                }
                prev = term;
            }
            bound += azm * sum;
        }
    }
    rep.max_residual = max_resid;
    rep.bound = bound;
    // conclusive when the bound is far below the natural scale of the identity
    Rational scale(0);
    for (long m = -2; m <= 2; ++m) {
        Rational s = theta_mag(rc.den, m) + theta_mag(rc.num, m);
        if (s > scale) scale = s;
    }
    rep.conclusive = bound * 1000 < scale || max_resid > bound;
    rep.pass = rep.coeffs_exact && max_resid <= bound;
    return rep;
}

}  // namespace qell
