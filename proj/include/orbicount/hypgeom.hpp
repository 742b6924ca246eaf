#pragma once

// Hyperbolic plane primitives in the upper half-plane model: PSL(2,R)
// isometries, distances, classification, axes and geodesic distances.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include "orbicount/config.hpp"
#include "orbicount/error.hpp"

namespace orbicount::hyp {

using Complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;

/// Real 2x2 matrix of determinant one, taken up to sign.
struct Isometry {
    double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

    static constexpr Isometry identity() { return {}; }

    double det() const { return a * d - b * c; }
    double trace() const { return a + d; }
    Isometry inverse() const { return {d, -b, -c, a}; }
    Isometry negated() const { return {-a, -b, -c, -d}; }
    double max_abs() const { return std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)}); }

    /// Rescales by 1/sqrt(det) when the drift is larger than both the
    /// tolerance and the rounding error of the determinant itself. For large
    /// entries ad - bc is cancellation noise, so the matrix is left alone.
    Isometry normalized(double tol = kDefaultTolerances.det_drift) const {
        const double dt = det();
        const double size = std::abs(a * d) + std::abs(b * c);
        if (size > 1e6) return *this;
        const double rounding = 64.0 * std::numeric_limits<double>::epsilon() * size;
        if (std::abs(dt - 1.0) <= std::max(tol, rounding) || !(dt > 0.0)) return *this;
        const double s = 1.0 / std::sqrt(dt);
        return {a * s, b * s, c * s, d * s};
    }

    Complex apply(Complex z) const { return (a * z + b) / (c * z + d); }
};

inline Isometry operator*(const Isometry& g, const Isometry& h) {
    return {g.a * h.a + g.b * h.c, g.a * h.b + g.b * h.d,
            g.c * h.a + g.d * h.c, g.c * h.b + g.d * h.d};
}

/// Matrix product, renormalized.
inline Isometry compose(const Isometry& g, const Isometry& h) { return (g * h).normalized(); }

/// Max-norm distance between g and h, minimized over the sign of h.
inline double projective_distance(const Isometry& g, const Isometry& h) {
    const double plus = std::max({std::abs(g.a - h.a), std::abs(g.b - h.b),
                                  std::abs(g.c - h.c), std::abs(g.d - h.d)});
    const double minus = std::max({std::abs(g.a + h.a), std::abs(g.b + h.b),
                                   std::abs(g.c + h.c), std::abs(g.d + h.d)});
    return std::min(plus, minus);
}

inline bool same_isometry(const Isometry& g, const Isometry& h, double tol) {
    return projective_distance(g, h) <= tol;
}

/// Distance of g from +-I in the max norm.
inline double identity_residual(const Isometry& g) {
    return projective_distance(g.normalized(), Isometry::identity());
}

struct PlanePoint {
    double x = 0.0;
    double y = 1.0;

    PlanePoint() = default;
    PlanePoint(double x_, double y_) : x(x_), y(y_) {
        if (!(y > 0.0) || !std::isfinite(x) || !std::isfinite(y))
            throw Error(ErrorCode::InvalidPoint, "upper half-plane point needs y > 0");
    }
    explicit PlanePoint(Complex z) : PlanePoint(z.real(), z.imag()) {}

    Complex z() const { return {x, y}; }
};

// Im(gz) = Im z / |cz + d|^2 for det one; the direct quotient loses the
// imaginary part to cancellation when the entries are large.
inline PlanePoint apply(const Isometry& g, const PlanePoint& p) {
    const Complex den = g.c * p.z() + g.d;
    const double n2 = std::norm(den);
    return PlanePoint(((g.a * p.z() + g.b) * std::conj(den)).real() / n2, p.y / n2);
}

/// Hyperbolic distance; sinh(d/2) = |p - q| / (2 sqrt(y_p y_q)).
inline double dist(const PlanePoint& p, const PlanePoint& q) {
    const double chord = std::abs(p.z() - q.z());
    return 2.0 * std::asinh(chord / (2.0 * std::sqrt(p.y * q.y)));
}

enum class IsometryKind { Identity, Elliptic, Parabolic, Hyperbolic };

struct Classification {
    IsometryKind kind = IsometryKind::Identity;
    double angle = 0.0;   // rotation angle, elliptic only
    double length = 0.0;  // translation length, hyperbolic only
};

/// Classification by |trace|. Inside the band |tr| - 2 in [-band, band] the
/// result is Parabolic unless the matrix itself is +-I within the band.
inline Classification classify(const Isometry& g, double band = kDefaultTolerances.parabolic_band) {
    const Isometry n = g.normalized();
    const double t = std::abs(n.trace());
    if (std::abs(t - 2.0) <= band) {
        if (identity_residual(n) <= band) return {IsometryKind::Identity, 0.0, 0.0};
        return {IsometryKind::Parabolic, 0.0, 0.0};
    }
    if (t < 2.0) return {IsometryKind::Elliptic, 2.0 * std::acos(t / 2.0), 0.0};
    return {IsometryKind::Hyperbolic, 0.0, 2.0 * std::acosh(t / 2.0)};
}

inline const char* kind_name(IsometryKind k) {
    switch (k) {
        case IsometryKind::Identity: return "identity";
        case IsometryKind::Elliptic: return "elliptic";
        case IsometryKind::Parabolic: return "parabolic";
        case IsometryKind::Hyperbolic: return "hyperbolic";
    }
    return "?";
}

inline double translation_length(const Isometry& g) {
    const Classification cl = classify(g);
    if (cl.kind != IsometryKind::Hyperbolic)
        throw Error(ErrorCode::NotHyperbolic, std::string("isometry is ") + kind_name(cl.kind));
    return cl.length;
}

/// Point of the extended real line.
struct ExtendedReal {
    double value = 0.0;
    bool infinite = false;

    static ExtendedReal infinity() { return {0.0, true}; }
    static ExtendedReal finite(double v) { return {v, false}; }

    /// Position on the circle at infinity, in (-pi, pi].
    double circle_angle() const { return infinite ? kPi : 2.0 * std::atan(value); }

    friend bool operator==(const ExtendedReal& u, const ExtendedReal& v) {
        return u.infinite == v.infinite && (u.infinite || u.value == v.value);
    }
    friend bool operator<(const ExtendedReal& u, const ExtendedReal& v) {
        if (u.infinite) return false;
        if (v.infinite) return true;
        return u.value < v.value;
    }
};

/// Image of an extended real under a real Moebius map.
inline ExtendedReal moebius(const Isometry& g, const ExtendedReal& x) {
    if (x.infinite) {
        if (g.c == 0.0) return ExtendedReal::infinity();
        return ExtendedReal::finite(g.a / g.c);
    }
    const double den = g.c * x.value + g.d;
    if (den == 0.0) return ExtendedReal::infinity();
    return ExtendedReal::finite((g.a * x.value + g.b) / den);
}

/// Unoriented complete geodesic given by its endpoints, stored sorted with
/// infinity last.
class BoundaryGeodesic {
public:
    BoundaryGeodesic(ExtendedReal u, ExtendedReal v) {
        if (u == v) throw Error(ErrorCode::InvalidGeodesic, "geodesic endpoints must differ");
        if (v < u) std::swap(u, v);
        lo_ = u;
        hi_ = v;
    }
    BoundaryGeodesic(double u, double v)
        : BoundaryGeodesic(ExtendedReal::finite(u), ExtendedReal::finite(v)) {}

    const ExtendedReal& lo() const { return lo_; }
    const ExtendedReal& hi() const { return hi_; }

    friend bool operator==(const BoundaryGeodesic& g, const BoundaryGeodesic& h) {
        return g.lo_ == h.lo_ && g.hi_ == h.hi_;
    }

private:
    ExtendedReal lo_;
    ExtendedReal hi_;
};

inline BoundaryGeodesic transform(const Isometry& g, const BoundaryGeodesic& geo) {
    return {moebius(g, geo.lo()), moebius(g, geo.hi())};
}

/// Real fixed points of a hyperbolic isometry.
inline BoundaryGeodesic axis(const Isometry& g) {
    const Isometry n = g.normalized();
    if (classify(n).kind != IsometryKind::Hyperbolic)
        throw Error(ErrorCode::NotHyperbolic, "axis needs a hyperbolic isometry");
    // c z^2 + (d - a) z - b = 0
    const double scale = n.max_abs();
    if (std::abs(n.c) <= 1e-15 * scale)
        return {ExtendedReal::finite(n.b / (n.d - n.a)), ExtendedReal::infinity()};
    const double B = n.d - n.a;
    const double C = -n.b;
    const double disc = n.trace() * n.trace() - 4.0;
    const double root = std::sqrt(std::max(disc, 0.0));
    const double q = -0.5 * (B + std::copysign(root, B == 0.0 ? 1.0 : B));
    return {q / n.c, C / q};
}

/// True iff the endpoint pairs are linked on the circle at infinity.
inline bool cross(const BoundaryGeodesic& g, const BoundaryGeodesic& h) {
    if (g.lo() == h.lo() || g.lo() == h.hi() || g.hi() == h.lo() || g.hi() == h.hi()) return false;
    const double a1 = g.lo().circle_angle();
    const double a2 = g.hi().circle_angle();
    auto inside = [&](const ExtendedReal& x) {
        const double t = x.circle_angle();
        return a1 < t && t < a2;
    };
    return inside(h.lo()) != inside(h.hi());
}

/// Orientation-preserving isometry taking the geodesic onto the imaginary axis.
inline Isometry standardizing(const BoundaryGeodesic& geo) {
    Isometry m;
    if (geo.hi().infinite) {
        m = {1.0, -geo.lo().value, 0.0, 1.0};
    } else {
        const double p = geo.lo().value;
        const double q = geo.hi().value;
        // (z - p)/(z - q) has det p - q < 0; flip the numerator sign.
        m = {-1.0, p, 1.0, -q};
    }
    const double s = 1.0 / std::sqrt(m.det());
    return {m.a * s, m.b * s, m.c * s, m.d * s};
}

/// Distance between two complete geodesics; zero when they cross or are
/// asymptotic.
inline double geodesic_distance(const BoundaryGeodesic& g, const BoundaryGeodesic& h) {
    if (cross(g, h) || g == h) return 0.0;
    const Isometry m = standardizing(g);
    const ExtendedReal u = moebius(m, h.lo());
    const ExtendedReal v = moebius(m, h.hi());
    if (u.infinite || v.infinite || u.value == 0.0 || v.value == 0.0) return 0.0;
    if (u.value * v.value < 0.0) return 0.0;
    return std::acosh(std::abs(u.value + v.value) / std::abs(u.value - v.value));
}

/// Isometry z -> y z + x taking i to p.
inline Isometry moving_i_to(const PlanePoint& p) {
    const double s = std::sqrt(p.y);
    return {s, p.x / s, 0.0, 1.0 / s};
}

/// Counterclockwise rotation by angle about p.
inline Isometry rotation_about(const PlanePoint& p, double angle) {
    const Isometry m = moving_i_to(p);
    const Isometry r{std::cos(angle / 2.0), std::sin(angle / 2.0), -std::sin(angle / 2.0),
                     std::cos(angle / 2.0)};
    return compose(compose(m, r), m.inverse());
}

/// Point at distance r from center in direction theta; theta = 0 points
/// straight up (towards +i infinity) and angles increase counterclockwise.
inline PlanePoint polar_point(const PlanePoint& center, double r, double theta) {
    const Complex w = (std::polar(std::tanh(r / 2.0), theta));
    // disk -> half-plane around i: z = i (1 + w)/(1 - w)
    const Complex z = Complex(0.0, 1.0) * (1.0 + w) / (1.0 - w);
    return PlanePoint(moving_i_to(center).apply(z));
}

/// Inverse of polar_point: (r, theta) of z about center.
inline std::pair<double, double> polar_coords(const PlanePoint& center, const PlanePoint& z) {
    const Complex w = moving_i_to(center).inverse().apply(z.z());
    const Complex disk = (w - Complex(0.0, 1.0)) / (w + Complex(0.0, 1.0));
    return {dist(center, z), std::arg(disk)};
}

/// Point a fraction s in [0,1] of the way from p to q along the geodesic.
inline PlanePoint geodesic_interpolate(const PlanePoint& p, const PlanePoint& q, double s) {
    const auto [r, theta] = polar_coords(p, q);
    return polar_point(p, s * r, theta);
}

/// Complete geodesic through two distinct points.
inline BoundaryGeodesic geodesic_through(const PlanePoint& p, const PlanePoint& q) {
    const double dx = q.x - p.x;
    if (std::abs(dx) <= 1e-15 * (std::abs(p.x) + std::abs(q.x) + 1.0))
        return {ExtendedReal::finite(0.5 * (p.x + q.x)), ExtendedReal::infinity()};
    // centre on the real axis equidistant from p and q
    const double c = (q.x * q.x + q.y * q.y - p.x * p.x - p.y * p.y) / (2.0 * dx);
    const double rad = std::hypot(p.x - c, p.y);
    return {c - rad, c + rad};
}

/// Distance from a point to a complete geodesic.
inline double distance_to_geodesic(const PlanePoint& p, const BoundaryGeodesic& geo) {
    const Complex w = standardizing(geo).apply(p.z());
    return std::asinh(std::abs(w.real()) / w.imag());
}

/// Orthogonal projection of a point onto a complete geodesic.
inline PlanePoint project_to_geodesic(const PlanePoint& p, const BoundaryGeodesic& geo) {
    const Isometry m = standardizing(geo);
    const Complex w = m.apply(p.z());
    return PlanePoint(m.inverse().apply(Complex(0.0, std::abs(w))));
}

/// Nearest point of the geodesic segment [a, b] to p.
inline PlanePoint nearest_on_segment(const PlanePoint& p, const PlanePoint& a, const PlanePoint& b) {
    const BoundaryGeodesic geo = geodesic_through(a, b);
    const Isometry m = standardizing(geo);
    const Complex wa = m.apply(a.z());
    const Complex wb = m.apply(b.z());
    const Complex wp = m.apply(p.z());
    // On the imaginary axis points are ordered by log(imag part).
    const double ta = std::log(wa.imag());
    const double tb = std::log(wb.imag());
    const double tp = std::log(std::abs(wp));
    const double t = std::clamp(tp, std::min(ta, tb), std::max(ta, tb));
    return PlanePoint(m.inverse().apply(Complex(0.0, std::exp(t))));
}

inline double distance_to_segment(const PlanePoint& p, const PlanePoint& a, const PlanePoint& b) {
    return dist(p, nearest_on_segment(p, a, b));
}

/// Poincare disk coordinate of a half-plane point (i maps to 0).
inline Complex to_disk(const PlanePoint& p) {
    return (p.z() - Complex(0.0, 1.0)) / (p.z() + Complex(0.0, 1.0));
}

/// Klein (projective) model, where geodesics are straight chords.
inline std::array<double, 2> to_klein(const PlanePoint& p) {
    const Complex w = to_disk(p);
    const double s = 2.0 / (1.0 + std::norm(w));
    return {s * w.real(), s * w.imag()};
}

/// Ideal point of the extended real line in Klein coordinates.
inline std::array<double, 2> to_klein(const ExtendedReal& x) {
    const double t = x.circle_angle();
    // boundary point x maps to (x - i)/(x + i) on the unit circle
    if (x.infinite) return {1.0, 0.0};
    const Complex w = (Complex(x.value, 0.0) - Complex(0.0, 1.0)) / (Complex(x.value, 0.0) + Complex(0.0, 1.0));
    (void)t;
    return {w.real(), w.imag()};
}

namespace detail {
inline double orient(const std::array<double, 2>& p, const std::array<double, 2>& q,
                     const std::array<double, 2>& r) {
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
}
}  // namespace detail

/// Proper crossing of two straight segments (Klein model chords). Touching
/// at an endpoint counts when exactly one orientation vanishes.
inline bool chords_cross(const std::array<double, 2>& p1, const std::array<double, 2>& p2,
                         const std::array<double, 2>& q1, const std::array<double, 2>& q2) {
    const double o1 = detail::orient(p1, p2, q1);
    const double o2 = detail::orient(p1, p2, q2);
    const double o3 = detail::orient(q1, q2, p1);
    const double o4 = detail::orient(q1, q2, p2);
    const bool straddle_q = (o1 > 0.0 && o2 <= 0.0) || (o1 <= 0.0 && o2 > 0.0);
    const bool straddle_p = (o3 > 0.0 && o4 <= 0.0) || (o3 <= 0.0 && o4 > 0.0);
    return straddle_q && straddle_p;
}

}  // namespace orbicount::hyp
