#pragma once

// Orbifold signatures and a Fuchsian group realizing each one, built from a
// one-parameter family of symmetric polygons centred at i.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>
#include <nlohmann/json.hpp>

#include "orbicount/config.hpp"
#include "orbicount/error.hpp"
#include "orbicount/hypgeom.hpp"

namespace orbicount {

/// Exact rational with positive denominator.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    static Rational make(std::int64_t n, std::int64_t d) {
        if (d < 0) { n = -n; d = -d; }
        const std::int64_t g = std::gcd(n < 0 ? -n : n, d);
        return g == 0 ? Rational{0, 1} : Rational{n / g, d / g};
    }
    friend Rational operator+(Rational x, Rational y) {
        const std::int64_t l = std::lcm(x.den, y.den);
        return make(x.num * (l / x.den) + y.num * (l / y.den), l);
    }
    friend Rational operator-(Rational x, Rational y) { return x + Rational{-y.num, y.den}; }
    friend bool operator==(const Rational&, const Rational&) = default;
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    std::string str() const {
        return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
    }
};

struct Signature {
    int genus = 0;
    std::vector<int> cones;
    int boundary = 0;

    int cone_count() const { return static_cast<int>(cones.size()); }
    /// Number of singular points plus ends.
    int r() const { return cone_count() + boundary; }
    int generator_count() const { return 2 * genus + cone_count() + boundary; }

    friend bool operator==(const Signature&, const Signature&) = default;

    void validate() const {
        if (genus < 0 || boundary < 0)
            throw Error(ErrorCode::InvalidSignature, "genus and boundary must be non-negative");
        for (int m : cones)
            if (m < 2) throw Error(ErrorCode::InvalidSignature, "cone orders must be at least 2");
    }

    /// Text form `g=1 cones=3 boundary=0`.
    std::string text() const {
        std::string s = "g=" + std::to_string(genus) + " cones=";
        if (cones.empty()) s += "-";
        for (std::size_t i = 0; i < cones.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(cones[i]);
        }
        return s + " boundary=" + std::to_string(boundary);
    }

    /// Short form (g; m1,...; b).
    std::string label() const {
        std::string s = "(" + std::to_string(genus) + ";";
        if (cones.empty()) s += "-";
        for (std::size_t i = 0; i < cones.size(); ++i) s += (i ? "," : "") + std::to_string(cones[i]);
        return s + ";" + std::to_string(boundary) + ")";
    }

    nlohmann::json to_json() const { return {{"genus", genus}, {"cones", cones}, {"boundary", boundary}}; }
};

namespace detail {
inline int parse_count(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    int n = 0;
    try {
        n = std::stoi(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty())
        throw Error(ErrorCode::InvalidSignature, "bad integer '" + v + "' for " + key);
    return n;
}
}  // namespace detail

/// Parses `g=1 cones=3,3 boundary=0`; missing keys default to zero/empty and
/// `cones=-` means no cone points.
inline Signature parse_signature(const std::string& text) {
    Signature sig;
    std::istringstream in(text);
    std::string tok;
    bool any = false;
    while (in >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::InvalidSignature, "expected key=value, got '" + tok + "'");
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        if (key == "g" || key == "genus") {
            sig.genus = detail::parse_count(key, val);
        } else if (key == "boundary" || key == "b") {
            sig.boundary = detail::parse_count(key, val);
        } else if (key == "cones") {
            sig.cones.clear();
            if (val != "-" && !val.empty()) {
                std::size_t start = 0;
                for (;;) {
                    const std::size_t comma = val.find(',', start);
                    sig.cones.push_back(detail::parse_count(key, val.substr(start, comma - start)));
                    if (comma == std::string::npos) break;
                    start = comma + 1;
                }
            }
        } else {
            throw Error(ErrorCode::InvalidSignature, "unknown key '" + key + "'");
        }
        any = true;
    }
    if (!any) throw Error(ErrorCode::InvalidSignature, "empty signature");
    sig.validate();
    return sig;
}

inline Signature signature_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidSignature, "signature must be a JSON object");
    Signature sig;
    try {
        sig.genus = j.value("genus", 0);
        sig.boundary = j.value("boundary", 0);
        if (j.contains("cones")) sig.cones = j.at("cones").get<std::vector<int>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidSignature, e.what());
    }
    sig.validate();
    return sig;
}

/// 2 - 2g - b - sum(1 - 1/m).
inline Rational euler_characteristic(const Signature& sig) {
    Rational chi{2 - 2 * sig.genus - sig.boundary, 1};
    for (int m : sig.cones) chi = chi - Rational::make(m - 1, m);
    return chi;
}

inline int counting_exponent(const Signature& sig) { return 6 * sig.genus - 6 + 2 * sig.r(); }

inline bool is_exceptional(const Signature& sig) { return sig.genus == 0 && sig.r() == 3; }

/// Generator order: a1 b1 a2 b2 ... x1 ... xk c1 ... cb.
inline std::vector<std::string> generator_names(const Signature& sig) {
    std::vector<std::string> names;
    for (int i = 1; i <= sig.genus; ++i) {
        names.push_back("a" + std::to_string(i));
        names.push_back("b" + std::to_string(i));
    }
    for (int j = 1; j <= sig.cone_count(); ++j) names.push_back("x" + std::to_string(j));
    for (int l = 1; l <= sig.boundary; ++l) names.push_back("c" + std::to_string(l));
    return names;
}

/// Name of one generator without building the whole list.
inline std::string generator_name(const Signature& sig, int gen) {
    if (gen < 2 * sig.genus) return (gen % 2 ? "b" : "a") + std::to_string(gen / 2 + 1);
    if (gen < 2 * sig.genus + sig.cone_count()) return "x" + std::to_string(gen - 2 * sig.genus + 1);
    return "c" + std::to_string(gen - 2 * sig.genus - sig.cone_count() + 1);
}

inline int cone_generator(const Signature& sig, int j) { return 2 * sig.genus + j; }
inline int boundary_generator(const Signature& sig, int l) { return 2 * sig.genus + sig.cone_count() + l; }

/// Order of a generator, 0 when it has infinite order.
inline int generator_order(const Signature& sig, int gen) {
    const int j = gen - 2 * sig.genus;
    if (j >= 0 && j < sig.cone_count()) return sig.cones[static_cast<std::size_t>(j)];
    return 0;
}

/// One syllable g^e of a group word; gen indexes generator_names().
struct Syllable {
    int gen = 0;
    std::int64_t exp = 1;
    friend bool operator==(const Syllable&, const Syllable&) = default;
};

using Word = std::vector<Syllable>;

/// Long relator [a1,b1]...[ag,bg] x1...xk c1...cb.
inline Word long_relator(const Signature& sig) {
    Word w;
    for (int i = 0; i < sig.genus; ++i) {
        w.push_back({2 * i, 1});
        w.push_back({2 * i + 1, 1});
        w.push_back({2 * i, -1});
        w.push_back({2 * i + 1, -1});
    }
    for (int j = 0; j < sig.cone_count(); ++j) w.push_back({cone_generator(sig, j), 1});
    for (int l = 0; l < sig.boundary; ++l) w.push_back({boundary_generator(sig, l), 1});
    return w;
}

struct FuchsianGroup {
    Signature signature;
    std::vector<std::string> names;
    std::vector<hyp::Isometry> generators;
    double relator_residual = 0.0;
    // Polygon scale parameter and the largest distance from the base point i
    // to a vertex of the (truncated) fundamental polygon.
    double scale = 0.0;
    double domain_radius = 0.0;

    const hyp::Isometry& generator(int gen) const {
        if (gen < 0 || gen >= static_cast<int>(generators.size()))
            throw Error(ErrorCode::UnknownGenerator, "generator index " + std::to_string(gen));
        return generators[static_cast<std::size_t>(gen)];
    }

    int index_of(const std::string& name) const {
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) throw Error(ErrorCode::UnknownGenerator, "no generator named '" + name + "'");
        return static_cast<int>(it - names.begin());
    }
};

/// Product of generator matrices; normalized once at the end.
inline hyp::Isometry holonomy(const FuchsianGroup& group, const Word& w) {
    hyp::Isometry m;
    for (const Syllable& s : w) {
        const hyp::Isometry& g = group.generator(s.gen);
        const hyp::Isometry step = s.exp > 0 ? g : g.inverse();
        for (std::int64_t k = 0; k < (s.exp > 0 ? s.exp : -s.exp); ++k) m = m * step;
    }
    return m.normalized();
}

/// Fixed point in the upper half-plane of an elliptic element.
inline hyp::PlanePoint elliptic_fixed_point(const hyp::Isometry& g) {
    const hyp::Isometry n = g.normalized();
    // c z^2 + (d - a) z - b = 0 with negative discriminant
    const double disc = n.trace() * n.trace() - 4.0;
    if (!(disc < 0.0) || n.c == 0.0)
        throw Error(ErrorCode::InvalidArgument, "elliptic_fixed_point needs an elliptic element");
    const double x = (n.a - n.d) / (2.0 * n.c);
    const double y = std::sqrt(-disc) / (2.0 * std::abs(n.c));
    return {x, y};
}

/// Cone point of x_j in the upper half-plane.
inline hyp::PlanePoint cone_point(const FuchsianGroup& group, int j) {
    return elliptic_fixed_point(group.generator(cone_generator(group.signature, j)));
}

/// Residuals of every defining relation: the long relator and x_j^{m_j}.
inline std::vector<double> relation_residuals(const FuchsianGroup& group) {
    std::vector<double> out{hyp::identity_residual(holonomy(group, long_relator(group.signature)))};
    for (int j = 0; j < group.signature.cone_count(); ++j) {
        const int m = group.signature.cones[static_cast<std::size_t>(j)];
        out.push_back(hyp::identity_residual(holonomy(group, {{cone_generator(group.signature, j), m}})));
    }
    return out;
}

namespace polygon {

using C = std::complex<double>;

/// Complex 2x2 matrix acting on the Poincare disk.
struct M2 {
    C a{1.0}, b{0.0}, c{0.0}, d{1.0};
    C apply(C z) const { return (a * z + b) / (c * z + d); }
    M2 inverse() const { return {d, -b, -c, a}; }
    friend M2 operator*(const M2& x, const M2& y) {
        return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
    }
};

// Disk isometry taking p to 0.
inline M2 to_origin(C p) {
    const double s = 1.0 / std::sqrt(1.0 - std::norm(p));
    return {C(s), -p * s, -std::conj(p) * s, C(s)};
}

inline M2 rotation(double phi) {
    return {std::polar(1.0, phi / 2.0), C(0.0), C(0.0), std::polar(1.0, -phi / 2.0)};
}

// Isometry taking p to 0 and q onto the positive real axis.
inline M2 frame(C p, C q) {
    const M2 t = to_origin(p);
    return rotation(-std::arg(t.apply(q))) * t;
}

// Isometry taking the segment p->q onto p2->q2 (equal lengths assumed).
inline M2 segment_map(C p, C q, C p2, C q2) { return frame(p2, q2).inverse() * frame(p, q); }

inline C polar(double r, double theta) { return std::polar(std::tanh(r / 2.0), theta); }

// Angle at u between the geodesics towards a and b.
inline double angle_at(C u, C a, C b) {
    const M2 t = to_origin(u);
    return std::abs(std::arg(t.apply(a) / t.apply(b)));
}

// Foot of the perpendicular from z onto the geodesic orthogonal to the ray of
// direction theta at distance dist from the origin (hyperboloid model).
inline C foot_on_perpendicular(C z, double dist, double theta) {
    const double r = 2.0 * std::atanh(std::abs(z));
    const double th = std::arg(z);
    const std::array<double, 3> x{std::cosh(r), std::sinh(r) * std::cos(th), std::sinh(r) * std::sin(th)};
    const std::array<double, 3> n{std::sinh(dist), std::cosh(dist) * std::cos(theta), std::cosh(dist) * std::sin(theta)};
    auto mink = [](const std::array<double, 3>& u, const std::array<double, 3>& v) {
        return -u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    };
    const double k = mink(x, n);
    std::array<double, 3> y{x[0] - k * n[0], x[1] - k * n[1], x[2] - k * n[2]};
    const double s = 1.0 / std::sqrt(-mink(y, y));
    for (double& v : y) v *= s;
    return polar(std::acosh(y[0]), std::atan2(y[2], y[1]));
}

enum class BlockKind { A, B, APrime, BPrime, Cone, Boundary };

struct Block {
    BlockKind kind;
    int index;
};

struct Layout {
    double angle_sum = 0.0;
    std::vector<Block> blocks;
    // Per block: the points needed for its side pairing.
    std::vector<std::vector<C>> points;
    std::vector<C> all_vertices;
};

// Sides: 1 unit per genus side, 2 per cone or boundary block, sum N units.
inline Layout layout(const Signature& sig, double R) {
    const int n_units = 4 * sig.genus + 2 * sig.cone_count() + 2 * sig.boundary;
    Layout out;
    for (int i = 0; i < sig.genus; ++i)
        for (BlockKind k : {BlockKind::A, BlockKind::B, BlockKind::APrime, BlockKind::BPrime})
            out.blocks.push_back({k, i});
    for (int j = 0; j < sig.cone_count(); ++j) out.blocks.push_back({BlockKind::Cone, j});
    for (int l = 0; l < sig.boundary; ++l) out.blocks.push_back({BlockKind::Boundary, l});

    std::vector<double> psi{0.0};
    for (const Block& b : out.blocks) {
        const int units = (b.kind == BlockKind::Cone || b.kind == BlockKind::Boundary) ? 2 : 1;
        psi.push_back(psi.back() + 2.0 * hyp::kPi * units / n_units);
    }
    const std::size_t nb = out.blocks.size();
    std::vector<C> verts(nb);
    for (std::size_t k = 0; k < nb; ++k) verts[k] = polar(R, psi[k]);

    const C origin(0.0);
    for (std::size_t k = 0; k < nb; ++k) {
        const C u = verts[k];
        const C w = verts[(k + 1) % nb];
        const double mid = 0.5 * (psi[k] + psi[k + 1]);
        const Block& blk = out.blocks[k];
        out.all_vertices.push_back(u);
        double beta = 0.0;
        if (blk.kind == BlockKind::Cone) {
            const int m = sig.cones[static_cast<std::size_t>(blk.index)];
            const double target = 2.0 * hyp::kPi / m;
            const double alpha = 0.5 * (psi[k + 1] - psi[k]);
            const double rc = std::atanh(std::tanh(R) * std::cos(alpha));
            auto f = [&](double r) { return angle_at(polar(r, mid), u, w) - target; };
            double r = rc;
            if (std::abs(f(rc)) > 1e-13) {
                const double hi = rc + 30.0;
                if (f(rc) * f(hi) > 0.0)
                    throw Error(ErrorCode::RootFindFailed,
                                "cone vertex not bracketed in [" + std::to_string(rc) + ", " +
                                    std::to_string(hi) + "]");
                boost::uintmax_t iters = 200;
                const auto [lo, up] = boost::math::tools::toms748_solve(
                    f, rc, hi, boost::math::tools::eps_tolerance<double>(52), iters);
                r = 0.5 * (lo + up);
            }
            const C v = polar(r, mid);
            beta = angle_at(u, origin, v);
            out.points.push_back({u, v, w});
            out.all_vertices.push_back(v);
        } else if (blk.kind == BlockKind::Boundary) {
            const double dist = 2.0 * R;
            const C p1 = foot_on_perpendicular(u, dist, mid);
            const C p2 = foot_on_perpendicular(w, dist, mid);
            beta = angle_at(u, origin, p1);
            out.points.push_back({u, p1, p2, w});
            out.all_vertices.push_back(p1);
            out.all_vertices.push_back(p2);
        } else {
            beta = angle_at(u, origin, w);
            out.points.push_back({u, w});
        }
        out.angle_sum += 2.0 * beta;
    }
    return out;
}

// Disk matrix to a real unimodular matrix acting on the upper half-plane.
inline hyp::Isometry realify(const M2& m) {
    const C i(0.0, 1.0);
    const M2 cay{C(1.0), -i, C(1.0), i};                               // z -> (z - i)/(z + i)
    const M2 cay_inv{i / (2.0 * i), i / (2.0 * i), C(-1.0) / (2.0 * i), C(1.0) / (2.0 * i)};
    M2 s = cay_inv * m * cay;
    C det = s.a * s.d - s.b * s.c;
    C k = 1.0 / std::sqrt(det);
    s = {s.a * k, s.b * k, s.c * k, s.d * k};
    const double imag = std::max({std::abs(s.a.imag()), std::abs(s.b.imag()), std::abs(s.c.imag()), std::abs(s.d.imag())});
    const double real = std::max({std::abs(s.a.real()), std::abs(s.b.real()), std::abs(s.c.real()), std::abs(s.d.real())});
    if (imag > real) s = {s.a * i, s.b * i, s.c * i, s.d * i};
    return hyp::Isometry{s.a.real(), s.b.real(), s.c.real(), s.d.real()}.normalized();
}

inline hyp::PlanePoint disk_to_plane(C w) {
    const C i(0.0, 1.0);
    return hyp::PlanePoint(i * (1.0 + w) / (1.0 - w));
}

}  // namespace polygon

/// Group for a fixed polygon scale R (no root finding).
inline FuchsianGroup group_for_scale(const Signature& sig, double R) {
    using namespace polygon;
    const Layout lay = layout(sig, R);
    FuchsianGroup group;
    group.signature = sig;
    group.names = generator_names(sig);
    group.generators.resize(static_cast<std::size_t>(sig.generator_count()));
    group.scale = R;

    for (std::size_t k = 0; k < lay.blocks.size(); ++k) {
        const Block& blk = lay.blocks[k];
        const auto& pts = lay.points[k];
        if (blk.kind == BlockKind::A) {
            // a: P3P2 -> P0P1, b: P1P2 -> P4P3 with P_i the genus block vertices.
            const C p0 = pts[0], p1 = pts[1];
            const C p2 = lay.points[k + 1][1], p3 = lay.points[k + 2][1], p4 = lay.points[k + 3][1];
            group.generators[static_cast<std::size_t>(2 * blk.index)] = realify(segment_map(p3, p2, p0, p1));
            group.generators[static_cast<std::size_t>(2 * blk.index + 1)] = realify(segment_map(p1, p2, p4, p3));
        } else if (blk.kind == BlockKind::Cone) {
            group.generators[static_cast<std::size_t>(cone_generator(sig, blk.index))] =
                realify(segment_map(pts[2], pts[1], pts[0], pts[1]));
        } else if (blk.kind == BlockKind::Boundary) {
            group.generators[static_cast<std::size_t>(boundary_generator(sig, blk.index))] =
                realify(segment_map(pts[3], pts[2], pts[0], pts[1]));
        }
    }
    const hyp::PlanePoint base(0.0, 1.0);
    for (const C& v : lay.all_vertices)
        group.domain_radius = std::max(group.domain_radius, hyp::dist(base, disk_to_plane(v)));
    const auto res = relation_residuals(group);
    group.relator_residual = *std::max_element(res.begin(), res.end());
    return group;
}

/// Solves for the polygon scale by bisection on the angle defect.
inline double solve_scale(const Signature& sig, const Tolerances& tol = kDefaultTolerances) {
    auto defect = [&](double R) { return polygon::layout(sig, R).angle_sum - 2.0 * hyp::kPi; };
    double lo = 1e-3, hi = 8.0;
    double flo = defect(lo), fhi = defect(hi);
    if (!(flo * fhi < 0.0))
        throw Error(ErrorCode::RootFindFailed, "angle defect not bracketed on [0.001, 8]");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = defect(mid);
        if (std::abs(fm) <= tol.polygon_bisection * 1e-3 || mid == lo || mid == hi) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    const double mid = 0.5 * (lo + hi);
    if (std::abs(defect(mid)) > tol.polygon_bisection)
        throw Error(ErrorCode::RootFindFailed, "bisection stalled in [" + std::to_string(lo) + ", " +
                                                   std::to_string(hi) + "]");
    return mid;
}

inline void check_hyperbolic(const Signature& sig) {
    sig.validate();
    const Rational chi = euler_characteristic(sig);
    if (chi.num >= 0)
        throw Error(ErrorCode::NonHyperbolic, sig.label() + " has Euler characteristic " + chi.str());
    if (4 * sig.genus + 2 * sig.cone_count() + 2 * sig.boundary < 3)
        throw Error(ErrorCode::NonHyperbolic, sig.label() + " has fewer than three polygon sides");
}

/// Root-found construction, no preset lookup.
inline FuchsianGroup build_group_fresh(const Signature& sig, const Tolerances& tol = kDefaultTolerances) {
    check_hyperbolic(sig);
    return group_for_scale(sig, solve_scale(sig, tol));
}

namespace presets {

struct Preset {
    Signature signature;
    double scale;
    double domain_radius;
    std::vector<std::array<double, 4>> generators;
};

// Output of build_group_fresh, printed with 17 significant digits.
inline const std::vector<Preset>& table() {
    static const std::vector<Preset> t = {
#include "orbicount/presets.inc"
    };
    return t;
}

}  // namespace presets

inline std::optional<FuchsianGroup> preset_group(const Signature& sig) {
    for (const auto& p : presets::table()) {
        if (!(p.signature == sig)) continue;
        FuchsianGroup g;
        g.signature = sig;
        g.names = generator_names(sig);
        for (const auto& m : p.generators) g.generators.push_back({m[0], m[1], m[2], m[3]});
        g.scale = p.scale;
        g.domain_radius = p.domain_radius;
        const auto res = relation_residuals(g);
        g.relator_residual = *std::max_element(res.begin(), res.end());
        return g;
    }
    return std::nullopt;
}

/// Preset when one is shipped for the signature, otherwise root-found.
inline FuchsianGroup build_group(const Signature& sig, const Tolerances& tol = kDefaultTolerances) {
    check_hyperbolic(sig);
    if (auto g = preset_group(sig)) return *g;
    return group_for_scale(sig, solve_scale(sig, tol));
}

/// Group summary used by the CLI: generators to 17 digits and flags.
inline nlohmann::json group_summary(const FuchsianGroup& g) {
    nlohmann::json gens = nlohmann::json::array();
    for (std::size_t i = 0; i < g.generators.size(); ++i) {
        const auto& m = g.generators[i];
        const auto cl = hyp::classify(m);
        nlohmann::json e = {{"name", g.names[i]}, {"matrix", {m.a, m.b, m.c, m.d}}, {"kind", hyp::kind_name(cl.kind)}};
        if (cl.kind == hyp::IsometryKind::Elliptic) e["angle"] = cl.angle;
        if (cl.kind == hyp::IsometryKind::Hyperbolic) e["length"] = cl.length;
        gens.push_back(e);
    }
    const Rational chi = euler_characteristic(g.signature);
    return {{"signature", g.signature.text()},
            {"euler_characteristic", chi.str()},
            {"exponent", counting_exponent(g.signature)},
            {"exceptional", is_exceptional(g.signature)},
            {"relator_residual", g.relator_residual},
            {"scale", g.scale},
            {"generators", gens}};
}

}  // namespace orbicount
