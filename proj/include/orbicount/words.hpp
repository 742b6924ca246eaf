#pragma once

// Symbolic layer: parsing, free and torsion reduction, conjugacy canonical
// forms, essentiality and primitivity.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "orbicount/config.hpp"
#include "orbicount/error.hpp"
#include "orbicount/hypgeom.hpp"
#include "orbicount/orbifold.hpp"

namespace orbicount::words {

/// Exponent of a generator of order m brought into (-m/2, m/2]; m = 0 means
/// infinite order and leaves e unchanged.
inline std::int64_t normalize_exponent(std::int64_t e, int m) {
    if (m == 0) return e;
    std::int64_t r = ((e % m) + m) % m;
    if (2 * r > m) r -= m;
    return r;
}

/// Parses `a1 b1 a1^-1 x1^2`. The single token `1` (or empty text) is the
/// empty word.
inline Word parse_word(const std::string& text, const Signature& sig) {
    const auto names = generator_names(sig);
    Word w;
    std::size_t pos = 0;
    auto fail = [&](const std::string& why) {
        throw Error(ErrorCode::ParseError, why + " at column " + std::to_string(pos + 1));
    };
    auto skip_ws = [&] {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    };
    skip_ws();
    if (text.substr(pos) == "1") return w;
    while (pos < text.size()) {
        const std::size_t start = pos;
        while (pos < text.size() && std::isalnum(static_cast<unsigned char>(text[pos]))) ++pos;
        if (pos == start) fail("expected a generator name");
        const std::string name = text.substr(start, pos - start);
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) throw Error(ErrorCode::UnknownGenerator, "no generator named '" + name + "'");
        std::int64_t e = 1;
        if (pos < text.size() && text[pos] == '^') {
            ++pos;
            const std::size_t es = pos;
            if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) ++pos;
            const std::size_t digits = pos;
            while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
            if (pos == digits) fail("expected an exponent");
            e = std::stoll(text.substr(es, pos - es));
        }
        if (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])))
            fail(std::string("unexpected character '") + text[pos] + "'");
        if (e != 0) w.push_back({static_cast<int>(it - names.begin()), e});
        skip_ws();
    }
    return w;
}

inline std::string format_word(const Word& w, const Signature& sig) {
    if (w.empty()) return "1";
    std::string s;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i) s += ' ';
        s += generator_name(sig, w[i].gen);
        if (w[i].exp != 1) s += "^" + std::to_string(w[i].exp);
    }
    return s;
}

inline Word inverse(const Word& w) {
    Word out(w.rbegin(), w.rend());
    for (Syllable& s : out) s.exp = -s.exp;
    return out;
}

inline Word concat(Word u, const Word& v) {
    u.insert(u.end(), v.begin(), v.end());
    return u;
}

inline Word power(const Word& w, int n) {
    const Word base = n >= 0 ? w : inverse(w);
    Word out;
    for (int k = 0; k < std::abs(n); ++k) out = concat(std::move(out), base);
    return out;
}

/// Syllable-weighted letter count.
inline std::int64_t word_length(const Word& w) {
    std::int64_t n = 0;
    for (const Syllable& s : w) n += s.exp < 0 ? -s.exp : s.exp;
    return n;
}

/// Free reduction plus torsion normalization, run to a fixed point.
inline Word reduce(const Word& w, const Signature& sig) {
    Word out;
    for (Syllable s : w) {
        const int m = generator_order(sig, s.gen);
        s.exp = normalize_exponent(s.exp, m);
        if (s.exp == 0) continue;
        if (!out.empty() && out.back().gen == s.gen) {
            const std::int64_t e = normalize_exponent(out.back().exp + s.exp, m);
            if (e == 0) out.pop_back();
            else out.back().exp = e;
        } else {
            out.push_back(s);
        }
    }
    return out;
}

/// Reduced word with first and last syllables on different generators.
inline Word cyclic_reduce(const Word& w, const Signature& sig) {
    Word r = reduce(w, sig);
    std::size_t lo = 0, hi = r.size();
    while (hi - lo >= 2 && r[lo].gen == r[hi - 1].gen) {
        const std::int64_t e = normalize_exponent(r[lo].exp + r[hi - 1].exp, generator_order(sig, r[lo].gen));
        --hi;
        if (e == 0) ++lo;
        else r[lo].exp = e;
    }
    return Word(r.begin() + static_cast<std::ptrdiff_t>(lo), r.begin() + static_cast<std::ptrdiff_t>(hi));
}

/// With boundary, the last boundary generator is a product of the others, so
/// substituting it leaves a free product of cyclic groups where the cyclic
/// normal form is a complete conjugacy invariant.
inline Word eliminate(const Word& w, const Signature& sig) {
    if (sig.boundary == 0) return w;
    const int last = boundary_generator(sig, sig.boundary - 1);
    Word rel = long_relator(sig);
    rel.pop_back();
    const Word value = inverse(rel);  // c_b = (rest of relator)^-1
    Word out;
    for (const Syllable& s : w) {
        if (s.gen != last) {
            out.push_back(s);
            continue;
        }
        out = concat(std::move(out), power(value, static_cast<int>(s.exp)));
    }
    return out;
}

namespace detail {
inline std::tuple<int, int, std::int64_t> key(const Syllable& s) {
    return {s.gen, s.exp < 0 ? 1 : 0, s.exp < 0 ? -s.exp : s.exp};
}
inline bool less(const Syllable& x, const Syllable& y) { return key(x) < key(y); }

// Booth's least rotation over syllables.
inline std::size_t least_rotation(const Word& s) {
    const std::size_t n = s.size();
    if (n == 0) return 0;
    std::vector<std::ptrdiff_t> f(2 * n, -1);
    std::size_t k = 0;
    auto at = [&](std::size_t i) -> const Syllable& { return s[i % n]; };
    for (std::size_t j = 1; j < 2 * n; ++j) {
        std::ptrdiff_t i = f[j - k - 1];
        while (i != -1 && !(at(j) == at(k + static_cast<std::size_t>(i) + 1))) {
            if (less(at(j), at(k + static_cast<std::size_t>(i) + 1))) k = j - static_cast<std::size_t>(i) - 1;
            i = f[static_cast<std::size_t>(i)];
        }
        if (i == -1 && !(at(j) == at(k + static_cast<std::size_t>(i) + 1))) {
            if (less(at(j), at(k + static_cast<std::size_t>(i) + 1))) k = j;
            f[j - k] = -1;
        } else {
            f[j - k] = i + 1;
        }
    }
    return k % n;
}

inline Word rotate(const Word& w, std::size_t k) {
    Word out(w.begin() + static_cast<std::ptrdiff_t>(k), w.end());
    out.insert(out.end(), w.begin(), w.begin() + static_cast<std::ptrdiff_t>(k));
    return out;
}

inline bool lex_less(const Word& u, const Word& v) {
    return std::lexicographical_compare(u.begin(), u.end(), v.begin(), v.end(), less);
}
}  // namespace detail

/// Minimal rotation of w and of w^-1 under the syllable order (generator
/// index, positive before negative, |exponent|).
inline Word canonicalize(const Word& w, const Signature& sig) {
    const Word c = cyclic_reduce(eliminate(w, sig), sig);
    if (c.empty()) return c;
    const Word inv = cyclic_reduce(inverse(c), sig);
    const Word u = detail::rotate(c, detail::least_rotation(c));
    const Word v = detail::rotate(inv, detail::least_rotation(inv));
    return detail::lex_less(v, u) ? v : u;
}

/// Smallest root of a cyclically reduced word: w = root^n with n maximal.
inline std::pair<Word, int> root_of(const Word& cyc, const Signature& sig) {
    const std::size_t n = cyc.size();
    if (n == 0) return {cyc, 1};
    if (n == 1) {
        const std::int64_t e = cyc[0].exp;
        if (generator_order(sig, cyc[0].gen) != 0) return {cyc, 1};
        return {Word{{cyc[0].gen, e > 0 ? 1 : -1}}, static_cast<int>(e > 0 ? e : -e)};
    }
    for (std::size_t p = 1; p <= n / 2; ++p) {
        if (n % p) continue;
        bool periodic = true;
        for (std::size_t i = p; i < n && periodic; ++i) periodic = cyc[i] == cyc[i - p];
        if (periodic) return {Word(cyc.begin(), cyc.begin() + static_cast<std::ptrdiff_t>(p)), static_cast<int>(n / p)};
    }
    return {cyc, 1};
}

/// Symbolic finite-order test: a single torsion syllable after cyclic reduction.
inline bool is_symbolic_torsion(const Word& w, const Signature& sig) {
    const Word c = cyclic_reduce(w, sig);
    return c.size() == 1 && generator_order(sig, c[0].gen) != 0;
}

inline bool is_peripheral(const Word& w, const FuchsianGroup& group, double length,
                          const Tolerances& tol = kDefaultTolerances) {
    const Signature& sig = group.signature;
    const Word cw = canonicalize(w, sig);
    for (int l = 0; l < sig.boundary; ++l) {
        const int gen = boundary_generator(sig, l);
        const double lc = hyp::translation_length(group.generator(gen));
        const long n0 = std::lround(length / lc);
        // a length bound keeps the power search finite
        for (long n = std::max(1L, n0 - 1); n <= n0 + 1; ++n) {
            if (std::abs(n * lc - length) > 1e3 * tol.length_match * std::max(1.0, length)) continue;
            if (canonicalize(Word{{gen, n}}, sig) == cw) return true;
        }
    }
    return false;
}

/// Hyperbolic holonomy and not conjugate to a boundary power.
inline bool is_essential(const Word& w, const FuchsianGroup& group, const Tolerances& tol = kDefaultTolerances) {
    const Signature& sig = group.signature;
    const Word c = cyclic_reduce(w, sig);
    if (c.empty() || is_symbolic_torsion(c, sig)) return false;
    const auto cl = hyp::classify(holonomy(group, c), tol.parabolic_band);
    if (cl.kind != hyp::IsometryKind::Hyperbolic) return false;
    return !is_peripheral(c, group, cl.length, tol);
}

inline bool is_primitive(const Word& w, const Signature& sig) {
    return root_of(canonicalize(w, sig), sig).second == 1;
}

namespace detail {
struct Letter {
    int gen;
    int sign;
    friend bool operator==(const Letter&, const Letter&) = default;
};

inline std::vector<Letter> letters(const Word& w) {
    std::vector<Letter> out;
    for (const Syllable& s : w)
        for (std::int64_t k = 0; k < (s.exp < 0 ? -s.exp : s.exp); ++k) out.push_back({s.gen, s.exp < 0 ? -1 : 1});
    return out;
}

inline Word from_letters(const std::vector<Letter>& ls) {
    Word w;
    for (const Letter& l : ls) w.push_back({l.gen, l.sign});
    return w;
}

inline std::vector<Letter> inverse_letters(std::vector<Letter> v) {
    std::reverse(v.begin(), v.end());
    for (Letter& l : v) l.sign = -l.sign;
    return v;
}
}  // namespace detail

/// Closed surface groups (genus >= 2, no cones, no boundary) have a long
/// relator, so the free cyclic normal form is not a conjugacy invariant there.
inline bool needs_geometric_key(const Signature& sig) { return sig.genus >= 2 && sig.r() == 0; }

namespace detail {

// Generic base point near i; its Dirichlet domain is a slight perturbation
// of the regular polygon, with extra small faces near the vertex cycle.
inline const hyp::PlanePoint& dirichlet_base() {
    static const hyp::PlanePoint p(0.0137, 1.0291);
    return p;
}

struct FacePairing {
    Word word;
    hyp::Isometry m;
    hyp::PlanePoint target;  // m^-1 applied to the base point
};

// Candidate face pairings: every cyclic subword of length <= half the long
// relator, of the relator and its inverse.
inline std::vector<FacePairing> face_pairings(const FuchsianGroup& group) {
    const Signature& sig = group.signature;
    const auto rel = letters(long_relator(sig));
    const std::size_t n = rel.size();
    std::vector<FacePairing> out;
    for (const auto& r : {rel, inverse_letters(rel)})
        for (std::size_t start = 0; start < n; ++start)
            for (std::size_t len = 1; len <= n / 2; ++len) {
                std::vector<Letter> sub;
                for (std::size_t k = 0; k < len; ++k) sub.push_back(r[(start + k) % n]);
                const Word w = reduce(from_letters(sub), sig);
                const hyp::Isometry m = holonomy(group, w);
                bool dup = false;
                for (const auto& f : out) dup = dup || hyp::same_isometry(f.m, m, 1e-9);
                if (!dup) out.push_back({w, m, hyp::apply(m.inverse(), dirichlet_base())});
            }
    return out;
}

}  // namespace detail

/// Cutting sequence of the closed geodesic of w through the Dirichlet domain
/// of a generic base point, returned as a word conjugate to w. The sequence
/// depends only on the closed geodesic, so canonicalizing it gives a complete
/// key for the unoriented conjugacy class.
inline Word geometric_word(const Word& w, const FuchsianGroup& group) {
    const Signature& sig = group.signature;
    const hyp::Isometry h = holonomy(group, w);
    const auto cl = hyp::classify(h);
    if (cl.kind != hyp::IsometryKind::Hyperbolic)
        throw Error(ErrorCode::InvalidArgument, "geometric_word needs a hyperbolic element");
    static thread_local std::vector<detail::FacePairing> faces;
    static thread_local Signature cached;
    static thread_local double cached_scale = -1.0;
    if (cached_scale != group.scale || !(cached == sig)) {
        faces = detail::face_pairings(group);
        cached = sig;
        cached_scale = group.scale;
    }
    const hyp::PlanePoint& base = detail::dirichlet_base();

    // Frame where the axis is the imaginary axis, from the eigenvectors of h;
    // fixed points computed as numbers blow up when the axis nearly passes
    // through infinity. Expanding direction first, so h moves i upward.
    const hyp::Isometry hn = h.trace() < 0.0 ? h.negated() : h;
    const double disc = std::sqrt(std::max(0.0, hn.trace() * hn.trace() - 4.0));
    auto eigvec = [&](double lam) {
        const std::array<double, 2> u{hn.b, lam - hn.a}, v{lam - hn.d, hn.c};
        return std::hypot(u[0], u[1]) >= std::hypot(v[0], v[1]) ? u : v;
    };
    const auto up = eigvec(0.5 * (hn.trace() + disc));
    auto dn = eigvec(0.5 * (hn.trace() - disc));
    double pdet = up[0] * dn[1] - dn[0] * up[1];
    if (pdet < 0.0) {
        dn = {-dn[0], -dn[1]};
        pdet = -pdet;
    }
    const double ps = 1.0 / std::sqrt(pdet);
    const hyp::Isometry S = hyp::Isometry{up[0] * ps, dn[0] * ps, up[1] * ps, dn[1] * ps}.inverse();
    const double sigma = 1.0;

    // Greedy reduction of the start point into the domain: gamma Q in D.
    hyp::Isometry gamma;
    hyp::PlanePoint X = hyp::apply(S.inverse(), hyp::PlanePoint(0.0, 1.0));
    for (int it = 0; it < 10000; ++it) {
        double best = hyp::dist(X, base);
        int pick = -1;
        for (std::size_t k = 0; k < faces.size(); ++k) {
            const double d = hyp::dist(hyp::apply(faces[k].m, X), base);
            if (d < best - 1e-12) {
                best = d;
                pick = static_cast<int>(k);
            }
        }
        if (pick < 0) break;
        X = hyp::apply(faces[static_cast<std::size_t>(pick)].m, X);
        gamma = faces[static_cast<std::size_t>(pick)].m * gamma;
    }
    const hyp::Isometry gamma0 = gamma;

    // Walk tau = sigma * t from 0 over one period; the tile containing q is
    // gamma^-1 D, seen in the standard frame through M = S gamma^-1.
    hyp::Isometry M = S * gamma.inverse();
    auto coeffs = [](const hyp::PlanePoint& c) {
        // cosh d(i e^tau, c) = (r^2 e^-tau + e^tau) / (2y)
        return std::pair<double, double>{(c.x * c.x + c.y * c.y) / (2.0 * c.y), 1.0 / (2.0 * c.y)};
    };
    double tau = 0.0;
    const double end = sigma * cl.length;
    std::vector<std::size_t> crossed;
    for (int guard = 0; guard < 100000; ++guard) {
        const auto [a0, b0] = coeffs(hyp::apply(M, base));
        double next = end;
        int pick = -1;
        for (std::size_t k = 0; k < faces.size(); ++k) {
            const auto [a1, b1] = coeffs(hyp::apply(M, faces[k].target));
            const double A = a0 - a1, B = b0 - b1;
            if (B == 0.0 || -A / B <= 0.0) continue;
            const double root = 0.5 * std::log(-A / B);
            const bool ahead = sigma > 0 ? (root > tau + 1e-13 && root < next) : (root < tau - 1e-13 && root > next);
            if (!ahead) continue;
            // leaving the tile: the neighbour becomes nearer past the root
            const double probe = root + sigma * 1e-9;
            if (A * std::exp(-probe) + B * std::exp(probe) <= 0.0) continue;
            next = root;
            pick = static_cast<int>(k);
        }
        if (pick < 0) break;
        tau = next;
        crossed.push_back(static_cast<std::size_t>(pick));
        M = M * faces[static_cast<std::size_t>(pick)].m.inverse();
        gamma = faces[static_cast<std::size_t>(pick)].m * gamma;
    }
    // gamma_end h = gamma0 when the walk saw every face it crossed
    if (hyp::projective_distance((gamma * h).normalized(), gamma0) > 1e-6 * std::max(1.0, gamma.max_abs() * h.max_abs()))
        throw Error(ErrorCode::InvalidArgument, "cutting sequence of " + format_word(w, sig) + " did not close");
    Word out;
    for (std::size_t k : crossed) out = concat(std::move(out), inverse(faces[k].word));
    return reduce(out, sig);
}

/// Conjugacy class of an essential-or-not word with cached data.
struct CurveClass {
    Word canonical;
    std::string key;
    double length = 0.0;
    bool essential = false;
    bool primitive = false;
};

inline CurveClass make_curve_class(const Word& w, const FuchsianGroup& group,
                                   const Tolerances& tol = kDefaultTolerances) {
    const Signature& sig = group.signature;
    CurveClass cc;
    cc.canonical = canonicalize(w, sig);
    auto cl = hyp::classify(holonomy(group, cc.canonical), tol.parabolic_band);
    const bool hyperbolic = cl.kind == hyp::IsometryKind::Hyperbolic;
    if (hyperbolic && needs_geometric_key(sig)) {
        // length from the key word, so equal keys carry identical lengths
        cc.canonical = canonicalize(geometric_word(cc.canonical, group), sig);
        cl = hyp::classify(holonomy(group, cc.canonical), tol.parabolic_band);
    }
    cc.key = format_word(cc.canonical, sig);
    cc.length = hyperbolic ? cl.length : 0.0;
    cc.essential = hyperbolic && !is_symbolic_torsion(cc.canonical, sig) &&
                   !(sig.boundary > 0 && is_peripheral(cc.canonical, group, cl.length, tol));
    cc.primitive = root_of(cc.canonical, sig).second == 1;
    return cc;
}


/// Sound identity test: Dehn reduction against the long relator and the
/// torsion relators. Returns true only when w reduces to the empty word; a
/// false answer is conclusive only in small-cancellation cases.
inline bool dehn_reduces_to_identity(const Word& w, const Signature& sig, int max_rounds = 10000) {
    using detail::Letter;
    std::vector<std::vector<Letter>> relators;
    // Each torsion syllable x^e also equals x^(e -+ m); words only carry the
    // normalized exponent, so every spelling of the long relator is needed.
    const Word base = long_relator(sig);
    std::vector<std::size_t> torsion;
    for (std::size_t i = 0; i < base.size(); ++i)
        if (generator_order(sig, base[i].gen) != 0) torsion.push_back(i);
    for (std::size_t mask = 0; mask < (std::size_t{1} << torsion.size()); ++mask) {
        Word v = base;
        for (std::size_t t = 0; t < torsion.size(); ++t)
            if (mask >> t & 1) v[torsion[t]].exp -= generator_order(sig, v[torsion[t]].gen);
        const auto rel = detail::letters(v);
        relators.push_back(rel);
        relators.push_back(detail::inverse_letters(rel));
    }
    for (int j = 0; j < sig.cone_count(); ++j) {
        const Word t{{cone_generator(sig, j), sig.cones[static_cast<std::size_t>(j)]}};
        relators.push_back(detail::letters(t));
        relators.push_back(detail::inverse_letters(detail::letters(t)));
    }
    std::vector<Letter> cur = detail::letters(reduce(w, sig));
    for (int round = 0; round < max_rounds && !cur.empty(); ++round) {
        bool changed = false;
        for (const auto& r : relators) {
            const std::size_t n = r.size();
            for (std::size_t len = n; len > n / 2 && !changed; --len) {
                if (len > cur.size()) continue;
                for (std::size_t start = 0; start < n && !changed; ++start) {
                    for (std::size_t pos = 0; pos + len <= cur.size() && !changed; ++pos) {
                        bool match = true;
                        for (std::size_t t = 0; t < len && match; ++t) match = cur[pos + t] == r[(start + t) % n];
                        if (!match) continue;
                        std::vector<Letter> complement;
                        for (std::size_t t = len; t < n; ++t) complement.push_back(r[(start + t) % n]);
                        std::vector<Letter> next(cur.begin(), cur.begin() + static_cast<std::ptrdiff_t>(pos));
                        const auto repl = detail::inverse_letters(complement);
                        next.insert(next.end(), repl.begin(), repl.end());
                        next.insert(next.end(), cur.begin() + static_cast<std::ptrdiff_t>(pos + len), cur.end());
                        cur = detail::letters(reduce(detail::from_letters(next), sig));
                        changed = true;
                    }
                }
            }
            if (changed) break;
        }
        if (!changed) {
            // cyclic pass: the identity is conjugation invariant
            const Word c = cyclic_reduce(detail::from_letters(cur), sig);
            const auto cl = detail::letters(c);
            if (cl.size() == cur.size()) break;
            cur = cl;
        }
    }
    return cur.empty();
}

struct DiscretenessReport {
    std::size_t words = 0;       // reduced words visited, the empty word included
    std::size_t identities = 0;  // numeric identities confirmed by Dehn reduction
    std::vector<std::pair<std::string, double>> disagreements;  // numeric identities Dehn cannot explain
    bool pass() const { return disagreements.empty(); }
};

/// Smoke test of discreteness: every reduced word of word-length at most n
/// whose holonomy lies within `probe` of +-I must reduce to the identity.
inline DiscretenessReport discreteness_scan(const FuchsianGroup& g, int n, double probe = kDefaultTolerances.identity_probe) {
    const Signature& s = g.signature;
    DiscretenessReport rep;
    Word w;
    std::function<void(const hyp::Isometry&, int)> rec = [&](const hyp::Isometry& m, int len) {
        ++rep.words;
        if (!w.empty()) {
            const double res = hyp::identity_residual(m.normalized());
            if (res <= probe) {
                if (dehn_reduces_to_identity(w, s)) ++rep.identities;
                else rep.disagreements.emplace_back(format_word(w, s), res);
            }
        }
        if (len == n) return;
        for (int gen = 0; gen < s.generator_count(); ++gen)
            for (int sign : {1, -1}) {
                // grow the last syllable or start a new one, staying in normal form
                const bool extend = !w.empty() && w.back().gen == gen;
                if (extend && (w.back().exp > 0) != (sign > 0)) continue;
                const std::int64_t next = extend ? w.back().exp + sign : sign;
                if (normalize_exponent(next, generator_order(s, gen)) != next) continue;
                const auto& gm = g.generator(gen);
                if (extend) w.back().exp = next;
                else w.push_back({gen, next});
                rec(m * (sign > 0 ? gm : gm.inverse()), len + 1);
                if (extend) w.back().exp -= sign;
                else w.pop_back();
            }
    };
    rec(hyp::Isometry::identity(), 0);
    return rep;
}

}  // namespace orbicount::words
