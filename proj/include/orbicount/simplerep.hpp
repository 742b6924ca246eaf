#pragma once

// Numerical checks of the geometric machinery: constants epsilon and delta,
// the modified metric dr^2 + phi(r)^2 dtheta^2 around a cone point, radial
// crossings, quasigeodesic constants, rotation identities and heights.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/minima.hpp>
#include <nlohmann/json.hpp>

#include "orbicount/config.hpp"
#include "orbicount/error.hpp"
#include "orbicount/hypgeom.hpp"
#include "orbicount/orbifold.hpp"
#include "orbicount/words.hpp"

namespace orbicount::simplerep {

using hyp::PlanePoint;
using hyp::kPi;

// ---------------------------------------------------------------------------
// Group elements near the base point i.

/// Hyperbolic-distance deduplication of points, hashed on (x/y, log y).
class PointIndex {
public:
    explicit PointIndex(double tol = 1e-7) : tol_(tol) {}

    /// Index of an existing point within tol, or -1.
    std::ptrdiff_t find(const PlanePoint& p) const {
        const auto [cu, cv] = cell(p);
        for (std::int64_t du = -1; du <= 1; ++du)
            for (std::int64_t dv = -1; dv <= 1; ++dv) {
                const auto it = cells_.find(key(cu + du, cv + dv));
                if (it == cells_.end()) continue;
                for (std::size_t idx : it->second)
                    if (hyp::dist(points_[idx], p) < tol_) return static_cast<std::ptrdiff_t>(idx);
            }
        return -1;
    }

    /// Inserts p unless already present; returns true when inserted.
    bool insert(const PlanePoint& p) {
        if (find(p) >= 0) return false;
        const auto [cu, cv] = cell(p);
        cells_[key(cu, cv)].push_back(points_.size());
        points_.push_back(p);
        return true;
    }

    const std::vector<PlanePoint>& points() const { return points_; }

private:
    static constexpr double kCell = 1e-3;
    std::pair<std::int64_t, std::int64_t> cell(const PlanePoint& p) const {
        return {static_cast<std::int64_t>(std::floor(p.x / p.y / kCell)),
                static_cast<std::int64_t>(std::floor(std::log(p.y) / kCell))};
    }
    static std::uint64_t key(std::int64_t u, std::int64_t v) {
        return (static_cast<std::uint64_t>(u) * 0x9E3779B97F4A7C15ULL) ^ static_cast<std::uint64_t>(v);
    }
    double tol_;
    std::vector<PlanePoint> points_;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

struct ElementSet {
    std::vector<hyp::Isometry> elements;
    bool complete = true;
};

/// All g with d(i, g i) <= D. Tiles crossed by the segment [i, g i] have
/// centres within the domain radius of it, so a breadth-first search over
/// side pairings pruned at D + 2 rho finds every such g.
inline ElementSet elements_within(const FuchsianGroup& group, double D, std::size_t cap = 400000) {
    const PlanePoint o(0.0, 1.0);
    const double prune = D + 2.0 * group.domain_radius;
    std::vector<hyp::Isometry> moves;
    for (const auto& g : group.generators) {
        moves.push_back(g);
        moves.push_back(g.inverse());
    }
    ElementSet out;
    PointIndex index;
    std::vector<hyp::Isometry> all{hyp::Isometry::identity()};
    index.insert(o);
    for (std::size_t q = 0; q < all.size(); ++q) {
        for (const auto& s : moves) {
            const hyp::Isometry g = hyp::compose(all[q], s);
            const PlanePoint p = hyp::apply(g, o);
            if (hyp::dist(o, p) > prune) continue;
            if (!index.insert(p)) continue;
            all.push_back(g);
            if (all.size() > cap) {
                out.complete = false;
                q = all.size();
                break;
            }
        }
    }
    for (const auto& g : all)
        if (hyp::dist(o, hyp::apply(g, o)) <= D) out.elements.push_back(g);
    return out;
}

// ---------------------------------------------------------------------------
// Constants.

struct EpsilonDelta {
    double epsilon = 0.0;
    double delta = 0.0;
    double systole = HUGE_VAL;          // shortest closed geodesic
    double cone_separation = HUGE_VAL;  // closest pair of cone lifts
    double cone_boundary = HUGE_VAL;    // cone lift to boundary lift, infinite without boundary
    std::size_t elements_examined = 0;

    nlohmann::json to_json() const {
        auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json("inf"); };
        return {{"epsilon", epsilon},
                {"delta", delta},
                {"systole", num(systole)},
                {"cone_separation", num(cone_separation)},
                {"cone_boundary", num(cone_boundary)},
                {"margin_systole", num(systole / (200.0 * epsilon))},
                {"margin_cone_separation", num(cone_separation / (200.0 * epsilon))},
                {"margin_cone_boundary", num(cone_boundary / (200.0 * epsilon))},
                {"margin_hull_delta", std::pow(epsilon / 4.0, 3) / delta}};
    }
};

/// epsilon = (smallest quantity)/201, delta = 0.99 min(epsilon/4, (epsilon/4)^3).
inline EpsilonDelta constants_from_quantities(double systole_q, double separation_q, double boundary_q) {
    EpsilonDelta e;
    e.systole = systole_q;
    e.cone_separation = separation_q;
    e.cone_boundary = boundary_q;
    const double m = std::min({systole_q, separation_q, boundary_q});
    if (!(m > 0.0) || !std::isfinite(m))
        throw Error(ErrorCode::DomainError, "constants need a finite positive minimum quantity");
    e.epsilon = m / 201.0;
    e.delta = 0.99 * std::min(e.epsilon / 4.0, std::pow(e.epsilon / 4.0, 3));
    return e;
}

namespace detail {

// Minimizes f over elements within D, growing D until the minimum m
// satisfies m + slack <= D (so no farther element can do better).
template <class F>
double certified_minimum(const FuchsianGroup& group, double slack, double D, F f, std::size_t cap,
                         std::size_t& examined, const char* what) {
    for (int round = 0; round < 12; ++round) {
        const ElementSet set = elements_within(group, D, cap);
        examined = std::max(examined, set.elements.size());
        if (!set.complete)
            throw Error(ErrorCode::SystoleSearchInconclusive,
                        std::string(what) + ": element cap reached at radius " + std::to_string(D));
        double m = HUGE_VAL;
        for (const auto& g : set.elements) m = std::min(m, f(g));
        if (std::isfinite(m) && m + slack <= D) return m;
        D = std::isfinite(m) ? m + slack : 2.0 * D;
    }
    throw Error(ErrorCode::SystoleSearchInconclusive, std::string(what) + ": minimum did not settle");
}

}  // namespace detail

/// Shortest closed geodesic, certified: every class has a representative
/// moving i by at most its length plus twice the domain radius.
inline double systole(const FuchsianGroup& group, std::size_t cap, std::size_t& examined) {
    const double rho = group.domain_radius;
    double cand = HUGE_VAL;
    for (const auto& g : group.generators) {
        const auto cl = hyp::classify(g);
        if (cl.kind == hyp::IsometryKind::Hyperbolic) cand = std::min(cand, cl.length);
    }
    const double D = std::isfinite(cand) ? cand + 2.0 * rho : 4.0 * rho + 1.0;
    return detail::certified_minimum(
        group, 2.0 * rho, D,
        [](const hyp::Isometry& g) {
            const auto cl = hyp::classify(g);
            return cl.kind == hyp::IsometryKind::Hyperbolic ? cl.length : HUGE_VAL;
        },
        cap, examined, "systole");
}

inline std::vector<PlanePoint> cone_points(const FuchsianGroup& group) {
    std::vector<PlanePoint> ps;
    for (int j = 0; j < group.signature.cone_count(); ++j) ps.push_back(cone_point(group, j));
    return ps;
}

/// Systole, cone separation and cone-to-boundary distance, then epsilon and delta.
inline EpsilonDelta choose_constants(const FuchsianGroup& group, std::size_t cap = 400000) {
    const double rho = group.domain_radius;
    std::size_t examined = 0;
    const double c1 = systole(group, cap, examined);
    const auto cps = cone_points(group);
    double c2 = HUGE_VAL, c3 = HUGE_VAL;
    if (!cps.empty()) {
        c2 = detail::certified_minimum(
            group, 2.0 * rho, 4.0 * rho + 1.0,
            [&](const hyp::Isometry& g) {
                double m = HUGE_VAL;
                for (const auto& p : cps)
                    for (const auto& q : cps) {
                        const double d = hyp::dist(p, hyp::apply(g, q));
                        if (d > 1e-9) m = std::min(m, d);
                    }
                return m;
            },
            cap, examined, "cone separation");
    }
    if (!cps.empty() && group.signature.boundary > 0) {
        double lc = 0.0;
        std::vector<hyp::BoundaryGeodesic> axes;
        for (int l = 0; l < group.signature.boundary; ++l) {
            const auto& c = group.generator(boundary_generator(group.signature, l));
            lc = std::max(lc, hyp::translation_length(c));
            axes.push_back(hyp::axis(c));
        }
        c3 = detail::certified_minimum(
            group, 2.0 * rho + lc, 4.0 * rho + lc + 1.0,
            [&](const hyp::Isometry& g) {
                double m = HUGE_VAL;
                for (const auto& p : cps)
                    for (const auto& ax : axes) m = std::min(m, hyp::distance_to_geodesic(p, hyp::transform(g, ax)));
                return m;
            },
            cap, examined, "cone to boundary");
    }
    EpsilonDelta e = constants_from_quantities(c1, c2, c3);
    e.elements_examined = examined;
    return e;
}

// ---------------------------------------------------------------------------
// Radial metric profile.

/// phi(s) = sinh(s) + delta cosh(delta) I((s - delta)/delta) with
/// I(u) = int_u^1 (1 - S), S a smooth step flat at 0 and 1. Then
/// phi'(delta) = 0, phi'' = sinh(s) + cosh(delta) S'(u)/delta > 0 and
/// phi = sinh from 2 delta on.
class RadialMetricProfile {
public:
    RadialMetricProfile(double delta, int cells = 4096) : delta_(delta), cells_(cells) {
        if (!(delta > 0.0) || cells < 16) throw Error(ErrorCode::DomainError, "profile needs delta > 0 and a grid");
        table_.assign(static_cast<std::size_t>(cells) + 1, 0.0);
        for (int k = cells - 1; k >= 0; --k)
            table_[static_cast<std::size_t>(k)] =
                table_[static_cast<std::size_t>(k) + 1] + cell_integral(static_cast<double>(k) / cells, static_cast<double>(k + 1) / cells);
    }

    double delta() const { return delta_; }
    int cells() const { return cells_; }

    static double step(double u) {
        if (u <= 0.0) return 0.0;
        if (u >= 1.0) return 1.0;
        const double g = 1.0 / u - 1.0 / (1.0 - u);
        return g > 0.0 ? std::exp(-g) / (1.0 + std::exp(-g)) : 1.0 / (1.0 + std::exp(g));
    }
    static double step_derivative(double u) {
        if (u <= 0.0 || u >= 1.0) return 0.0;
        const double s = step(u);
        return s * (1.0 - s) * (1.0 / (u * u) + 1.0 / ((1.0 - u) * (1.0 - u)));
    }

    /// int_u^1 (1 - S).
    double tail_integral(double u) const {
        if (u >= 1.0) return 0.0;
        if (u <= 0.0) return table_[0];
        const auto k = std::min(static_cast<std::size_t>(u * cells_), static_cast<std::size_t>(cells_ - 1));
        return table_[k] - cell_integral(static_cast<double>(k) / cells_, u);
    }

    double phi(double s) const { return check(s), phi_extended(s); }
    double dphi(double s) const { return check(s), dphi_extended(s); }
    double ddphi(double s) const {
        check(s);
        return std::sinh(s) + std::cosh(delta_) * step_derivative((s - delta_) / delta_) / delta_;
    }

    // Same formulas continued below delta (phi' = cosh s - cosh delta there);
    // only the integrator's intermediate stages look there.
    double phi_extended(double s) const {
        return std::sinh(s) + delta_ * std::cosh(delta_) * tail_integral((s - delta_) / delta_);
    }
    double dphi_extended(double s) const {
        // cosh s - cosh delta (1 - S), written without cancellation
        return 2.0 * std::sinh(0.5 * (s + delta_)) * std::sinh(0.5 * (s - delta_)) +
               std::cosh(delta_) * step((s - delta_) / delta_);
    }

private:
    void check(double s) const {
        if (!(s >= delta_ * (1.0 - 1e-12)))
            throw Error(ErrorCode::DomainError, "profile evaluated inside the removed disk");
    }
    static double cell_integral(double a, double b) {
        return boost::math::quadrature::gauss<double, 8>::integrate([](double t) { return 1.0 - step(t); }, a, b);
    }

    double delta_;
    int cells_;
    std::vector<double> table_;
};

struct ProfileCheck {
    double min_second_derivative = 0.0;  // scaled by delta
    double first_derivative_at_delta = 0.0;
    double sinh_mismatch = 0.0;  // max |phi - sinh| / sinh on [2 delta, 3 delta]
    bool convex = false;
    bool flat_start = false;
    bool sinh_match = false;
    bool pass() const { return convex && flat_start && sinh_match; }
};

/// The three displayed profile conditions, evaluated on `samples` points of
/// [delta, 3 delta].
inline ProfileCheck verify_profile(const RadialMetricProfile& prof, int samples,
                                   const Tolerances& tol = kDefaultTolerances) {
    const double d = prof.delta();
    ProfileCheck c;
    c.min_second_derivative = HUGE_VAL;
    for (int i = 0; i <= samples; ++i) {
        const double s = d + 2.0 * d * i / samples;
        c.min_second_derivative = std::min(c.min_second_derivative, prof.ddphi(s));
        if (s >= 2.0 * d)
            c.sinh_mismatch = std::max(c.sinh_mismatch, std::abs(prof.phi(s) - std::sinh(s)) / std::sinh(s));
    }
    c.first_derivative_at_delta = prof.dphi(d);
    c.convex = c.min_second_derivative > 0.0;
    c.flat_start = std::abs(c.first_derivative_at_delta) <= 1e-12;
    c.sinh_match = c.sinh_mismatch <= tol.sinh_match;
    return c;
}

// ---------------------------------------------------------------------------
// Geodesics of dr^2 + phi(r)^2 dtheta^2.

struct AnnulusPath {
    std::vector<double> t, r, theta, rdot, thetadot;
    double clairaut = 0.0;        // phi^2 dtheta/dt at the start
    double clairaut_drift = 0.0;  // max deviation / phi(r_out)
    double energy_drift = 0.0;    // max |rdot^2 + phi^2 thetadot^2 - 1|
    bool clipped_inner = false;
    bool clipped_outer = false;
    double length() const { return t.empty() ? 0.0 : t.back(); }
};

struct IntegratorOptions {
    double r_out = 0.0;        // outer radius, 0 means 3 delta
    double step_fraction = 1.0 / 64.0;  // step = fraction * r
    int refinements = 4;       // halvings allowed before StepTooLarge
};

namespace detail {

struct State {
    double r, th, pr, pth;
};

inline State deriv(const RadialMetricProfile& prof, const State& s) {
    const double f = prof.phi_extended(s.r), fp = prof.dphi_extended(s.r);
    return {s.pr, s.pth, f * fp * s.pth * s.pth, -2.0 * (fp / f) * s.pr * s.pth};
}

inline State rk4(const RadialMetricProfile& prof, const State& s, double h) {
    auto add = [](const State& a, const State& b, double k) {
        return State{a.r + k * b.r, a.th + k * b.th, a.pr + k * b.pr, a.pth + k * b.pth};
    };
    const State k1 = deriv(prof, s);
    const State k2 = deriv(prof, add(s, k1, h / 2));
    const State k3 = deriv(prof, add(s, k2, h / 2));
    const State k4 = deriv(prof, add(s, k3, h));
    return {s.r + h / 6 * (k1.r + 2 * k2.r + 2 * k3.r + k4.r), s.th + h / 6 * (k1.th + 2 * k2.th + 2 * k3.th + k4.th),
            s.pr + h / 6 * (k1.pr + 2 * k2.pr + 2 * k3.pr + k4.pr),
            s.pth + h / 6 * (k1.pth + 2 * k2.pth + 2 * k3.pth + k4.pth)};
}

inline AnnulusPath integrate_once(const RadialMetricProfile& prof, double r0, double th0, double psi, double length,
                                  double r_out, double frac) {
    const double delta = prof.delta();
    const double inner = delta * (1.0 - 1e-12);
    AnnulusPath p;
    State s{r0, th0, std::cos(psi), std::sin(psi) / prof.phi(r0)};
    if (std::abs(psi - kPi / 2) < 1e-15 || std::abs(psi + kPi / 2) < 1e-15) s.pr = 0.0;
    p.clairaut = prof.phi(r0) * prof.phi(r0) * s.pth;
    const double scale = prof.phi(r_out);
    double t = 0.0;
    auto record = [&](const State& st, double tt) {
        p.t.push_back(tt);
        p.r.push_back(st.r);
        p.theta.push_back(st.th);
        p.rdot.push_back(st.pr);
        p.thetadot.push_back(st.pth);
        const double f = prof.phi_extended(st.r);
        p.clairaut_drift = std::max(p.clairaut_drift, std::abs(f * f * st.pth - p.clairaut) / scale);
        p.energy_drift = std::max(p.energy_drift, std::abs(st.pr * st.pr + f * f * st.pth * st.pth - 1.0));
    };
    record(s, t);
    while (t < length) {
        const double h = std::min(frac * s.r, length - t);
        State n = rk4(prof, s, h);
        if (n.r < inner || n.r > r_out) {
            // land on the boundary circle by bisection on the step size
            const bool in = n.r < inner;
            const double target = in ? delta : r_out;
            double lo = 0.0, hi = h;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                const State m = rk4(prof, s, mid);
                if ((in && m.r < target) || (!in && m.r > target)) hi = mid;
                else lo = mid;
            }
            n = rk4(prof, s, lo);
            t += lo;
            record(n, t);
            (in ? p.clipped_inner : p.clipped_outer) = true;
            return p;
        }
        s = n;
        t += h;
        record(s, t);
    }
    return p;
}

}  // namespace detail

/// Unit-speed geodesic from (r0, th0); psi is the angle of the initial
/// velocity from the outward radial direction, counterclockwise positive.
/// The path stops where it meets the circle of radius delta or r_out.
inline AnnulusPath integrate_geodesic(const RadialMetricProfile& prof, double r0, double th0, double psi, double length,
                                      IntegratorOptions opt = {}, const Tolerances& tol = kDefaultTolerances) {
    const double r_out = opt.r_out > 0.0 ? opt.r_out : 3.0 * prof.delta();
    if (r0 < prof.delta() * (1.0 - 1e-12) || r0 > r_out * (1.0 + 1e-12))
        throw Error(ErrorCode::DomainError, "start radius outside the annulus");
    double frac = opt.step_fraction;
    for (int attempt = 0; attempt <= opt.refinements; ++attempt, frac /= 2.0) {
        AnnulusPath p = detail::integrate_once(prof, r0, th0, psi, length, r_out, frac);
        if (p.clairaut_drift <= tol.clairaut_drift && p.energy_drift <= tol.energy_drift) return p;
    }
    throw Error(ErrorCode::StepTooLarge, "first integrals drift beyond tolerance at the finest step");
}

/// Hyperbolic geodesic in polar coordinates about a point: position after
/// arclength t from (r0, th0) with initial angle psi from the radial ray.
inline std::pair<double, double> hyperbolic_polar_geodesic(double r0, double th0, double psi, double t) {
    const double sa = std::sinh(r0) * std::sin(psi);
    const double a = std::asinh(std::abs(sa));              // distance of the geodesic from the centre
    const double c = std::cos(psi);
    const double t0 = std::atanh(std::tanh(r0) * std::abs(c)) * (c >= 0 ? 1.0 : -1.0);  // signed arclength from the foot
    const double tt = t0 + t;
    // cosh r = cosh a cosh tt, written through sinh^2 of half angles
    const double sh2 = std::sinh(a / 2) * std::sinh(a / 2) * std::cosh(tt) + std::sinh(tt / 2) * std::sinh(tt / 2);
    const double r = 2.0 * std::asinh(std::sqrt(sh2));
    if (a == 0.0) {
        // radial line through the centre
        return {r, tt >= 0 ? th0 : th0 + kPi};
    }
    const double sgn = sa > 0 ? 1.0 : -1.0;
    const double foot = th0 - sgn * std::atan2(std::tanh(t0), std::sinh(a));
    return {r, foot + sgn * std::atan2(std::tanh(tt), std::sinh(a))};
}

// ---------------------------------------------------------------------------
// Radial crossings.

struct CrossingReport {
    int max_count = 0;
    int rays = 0;
    double sweep = 0.0;  // total |dtheta|
    double length = 0.0;
    double length_bound = 0.0;
    bool simple = true;
    bool count_pass = false;
    bool length_pass = false;
    bool pass() const { return count_pass && length_pass; }
};

/// Crossings of the path with `rays` equally spaced rays from the centre.
/// A geodesic whose angle sweeps a full turn meets itself, so it is flagged
/// non-simple; the one-crossing property is only claimed for simple arcs.
inline CrossingReport radial_crossing_count(const AnnulusPath& path, double r_out, int rays = 720) {
    CrossingReport rep;
    rep.rays = rays;
    rep.length = path.length();
    rep.length_bound = 2.0 * kPi * std::sinh(r_out);
    const double th0 = path.theta.front();
    for (double th : path.theta) rep.sweep = std::max(rep.sweep, std::abs(th - th0));
    rep.simple = rep.sweep < 2.0 * kPi;
    for (int k = 0; k < rays; ++k) {
        const double alpha = 2.0 * kPi * k / rays;
        int count = 0;
        auto lap = [&](double th) { return std::floor((th - alpha) / (2.0 * kPi)); };
        if (std::fmod(std::abs(th0 - alpha), 2.0 * kPi) == 0.0) ++count;
        for (std::size_t i = 0; i + 1 < path.theta.size(); ++i)
            count += static_cast<int>(std::abs(lap(path.theta[i + 1]) - lap(path.theta[i])));
        rep.max_count = std::max(rep.max_count, count);
    }
    rep.count_pass = rep.max_count <= 1;
    rep.length_pass = rep.length <= rep.length_bound * (1.0 + 1e-3);
    return rep;
}

// ---------------------------------------------------------------------------
// Quasigeodesic constants.

struct QuasiReport {
    double A = 1.0;
    bool diverged = false;
    std::size_t pairs = 0;
};

/// Smallest A (bisection to `resolution`) with
/// A |t - s| + A >= d(a(s), a(t)) >= |t - s| / A - A on all sample pairs.
inline QuasiReport quasigeodesic_constant(const std::vector<PlanePoint>& pts, const std::vector<double>& params,
                                          double A_max = 1e3, double resolution = kDefaultTolerances.quasi_resolution) {
    if (pts.size() != params.size() || pts.size() < 2)
        throw Error(ErrorCode::DomainError, "quasigeodesic estimator needs matching samples");
    std::vector<std::pair<double, double>> pairs;  // (|t-s|, d)
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            pairs.emplace_back(std::abs(params[j] - params[i]), hyp::dist(pts[i], pts[j]));
    auto feasible = [&](double A) {
        for (const auto& [dt, d] : pairs)
            if (A * dt + A < d || d < dt / A - A) return false;
        return true;
    };
    QuasiReport rep;
    rep.pairs = pairs.size();
    if (feasible(1.0)) return rep;
    if (!feasible(A_max)) {
        rep.A = HUGE_VAL;
        rep.diverged = true;
        return rep;
    }
    double lo = 1.0, hi = A_max;
    while (hi - lo > resolution) {
        const double mid = 0.5 * (lo + hi);
        (feasible(mid) ? hi : lo) = mid;
    }
    rep.A = hi;
    return rep;
}

/// Closed form of the same constant: the largest per-pair requirement.
inline double quasigeodesic_constant_exact(const std::vector<PlanePoint>& pts, const std::vector<double>& params) {
    double A = 1.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            const double dt = std::abs(params[j] - params[i]);
            const double d = hyp::dist(pts[i], pts[j]);
            A = std::max({A, d / (dt + 1.0), 0.5 * (-d + std::sqrt(d * d + 4.0 * dt))});
        }
    return A;
}

struct SampledPath {
    std::vector<PlanePoint> points;
    std::vector<double> params;
};

/// Hyperbolic geodesic from p in polar direction theta, arclength parameter.
inline SampledPath geodesic_path(const PlanePoint& p, double theta, double length, int n) {
    SampledPath s;
    for (int i = 0; i <= n; ++i) {
        const double t = length * i / n;
        s.points.push_back(hyp::polar_point(p, t, theta));
        s.params.push_back(t);
    }
    return s;
}

/// Radial approach to the delta-circle around p, an arc of `arc` radians
/// along it and a radial exit; parameter is rho-arclength, so the arc has
/// speed phi(delta).
inline SampledPath detour_path(const PlanePoint& p, const RadialMetricProfile& prof, double approach, double arc,
                               int n_radial, int n_arc, double theta_in = 0.0) {
    const double d = prof.delta();
    SampledPath s;
    double t = 0.0;
    for (int i = 0; i <= n_radial; ++i) {
        const double r = d + approach * (1.0 - static_cast<double>(i) / n_radial);
        s.points.push_back(hyp::polar_point(p, r, theta_in));
        s.params.push_back(t + approach * i / n_radial);
    }
    t += approach;
    const double speed = prof.phi(d);
    for (int i = 1; i <= n_arc; ++i) {
        const double th = theta_in + arc * i / n_arc;
        s.points.push_back(hyp::polar_point(p, d, th));
        s.params.push_back(t + speed * arc * i / n_arc);
    }
    t += speed * arc;
    for (int i = 1; i <= n_radial; ++i) {
        const double r = d + approach * static_cast<double>(i) / n_radial;
        s.points.push_back(hyp::polar_point(p, r, theta_in + arc));
        s.params.push_back(t + approach * i / n_radial);
    }
    return s;
}

/// Curve spiralling onto the circle of radius r_limit about p:
/// r = r_limit (1 + exp(-theta / 2 pi)), parameter by cumulative length.
inline SampledPath spiral_path(const PlanePoint& p, double r_limit, double turns, int n) {
    SampledPath s;
    double t = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double th = 2.0 * kPi * turns * i / n;
        const PlanePoint q = hyp::polar_point(p, r_limit * (1.0 + std::exp(-th / (2.0 * kPi))), th);
        if (!s.points.empty()) t += hyp::dist(s.points.back(), q);
        s.points.push_back(q);
        s.params.push_back(t);
    }
    return s;
}

inline SampledPath transform(const hyp::Isometry& g, const SampledPath& s) {
    SampledPath out;
    out.params = s.params;
    for (const auto& q : s.points) out.points.push_back(hyp::apply(g, q));
    return out;
}

// ---------------------------------------------------------------------------
// Rotation identities around a cone point of angle theta.

struct RotationReport {
    double d = 0.0, theta = 0.0;
    double measured_distance = 0.0;       // minimized over the geodesic
    double closed_form_distance = 0.0;    // geodesic_distance of the pair
    double formula_distance = 0.0;        // 2 acosh(sin(theta/2) cosh d), 0 if crossing
    double measured_displacement = 0.0;
    double formula_displacement = 0.0;    // 2 asinh(sin(theta/2) sinh d)
    bool distance_match = false;
    bool displacement_bound = false;      // >= sqrt(3) d
    bool three_halves = true;             // d > 1, theta = 2pi/3: value >= 1.5 d
    bool pass() const { return distance_match && displacement_bound && three_halves; }
};

inline double rotated_geodesic_formula(double d, double theta) {
    const double arg = std::sin(theta / 2.0) * std::cosh(d);
    return arg <= 1.0 ? 0.0 : 2.0 * std::acosh(arg);
}

inline RotationReport rotation_identities(double d, double theta, double tol = 1e-6) {
    if (!(d > 0.0) || theta < 2.0 * kPi / 3.0 - 1e-12 || theta > 4.0 * kPi / 3.0 + 1e-12)
        throw Error(ErrorCode::DomainError, "need d > 0 and theta in [2pi/3, 4pi/3]");
    RotationReport r;
    r.d = d;
    r.theta = theta;
    const PlanePoint centre(0.0, 1.0);
    const double R = std::exp(d);
    const hyp::BoundaryGeodesic geo(-R, R);  // apex at i e^d, distance d from i
    const hyp::Isometry rot = hyp::rotation_about(centre, theta);
    const hyp::BoundaryGeodesic image = hyp::transform(rot, geo);
    r.closed_form_distance = hyp::geodesic_distance(geo, image);
    // numerical: minimize the distance from points of geo to the image
    auto f = [&](double s) {
        const PlanePoint q(R * std::tanh(s), R / std::cosh(s));
        return hyp::distance_to_geodesic(q, image);
    };
    const auto best = boost::math::tools::brent_find_minima(f, -30.0, 30.0, 52);
    // the two geodesics realize their distance at mirror points; the
    // measured value is twice the one-sided minimum only when disjoint
    r.measured_distance = best.second;
    r.formula_distance = rotated_geodesic_formula(d, theta);
    r.distance_match = std::abs(r.measured_distance - r.formula_distance) <= tol &&
                       std::abs(r.closed_form_distance - r.formula_distance) <= tol;
    const PlanePoint q = hyp::polar_point(centre, d, 0.3);
    r.measured_displacement = hyp::dist(q, hyp::apply(rot, q));
    r.formula_displacement = 2.0 * std::asinh(std::sin(theta / 2.0) * std::sinh(d));
    r.displacement_bound = r.measured_displacement >= std::sqrt(3.0) * d * (1.0 - 1e-12) &&
                           std::abs(r.measured_displacement - r.formula_displacement) <= tol;
    if (d > 1.0) r.three_halves = rotated_geodesic_formula(d, 2.0 * kPi / 3.0) >= 1.5 * d;
    return r;
}

// ---------------------------------------------------------------------------
// Heights and neighbourhoods.

struct HeightReport {
    double height = 0.0;
    double radius = 0.0;        // max(50 eps, h) + eps
    double max_distance = 0.0;  // max over samples of d(eta, gamma)
    std::size_t cone_lifts = 0;
    std::size_t crossing_lifts = 0;
    double box_radius = 0.0;
    bool enlarged = false;
    bool contained = false;
};

/// h_gamma(eta) from explicit cone lifts: the largest d(p, gamma) over lifts
/// whose gamma-outgoing ray crosses the sampled path eta.
inline HeightReport height_from_lifts(const std::vector<PlanePoint>& lifts, double epsilon, const PlanePoint& a,
                                      const PlanePoint& b, const std::vector<PlanePoint>& eta) {
    HeightReport rep;
    rep.cone_lifts = lifts.size();
    for (const auto& q : eta) rep.max_distance = std::max(rep.max_distance, hyp::distance_to_segment(q, a, b));
    std::vector<std::array<double, 2>> k;
    for (const auto& q : eta) k.push_back(hyp::to_klein(q));
    for (const auto& p : lifts) {
        const PlanePoint foot = hyp::nearest_on_segment(p, a, b);
        const double h = hyp::dist(p, foot);
        if (h < 1e-12) continue;
        auto [r, th] = hyp::polar_coords(foot, p);
        double reach = 0.0;
        for (const auto& q : eta) reach = std::max(reach, hyp::dist(p, q));
        const auto kp = hyp::to_klein(p);
        const auto ke = hyp::to_klein(hyp::polar_point(foot, r + reach + 1.0, th));
        bool hit = false;
        for (std::size_t i = 0; i + 1 < k.size() && !hit; ++i) hit = hyp::chords_cross(kp, ke, k[i], k[i + 1]);
        if (hit) {
            ++rep.crossing_lifts;
            rep.height = std::max(rep.height, h);
        }
    }
    rep.radius = std::max(50.0 * epsilon, rep.height) + epsilon;
    rep.contained = rep.max_distance <= rep.radius * (1.0 + 1e-12);
    return rep;
}

/// Cone lifts g p_j within `radius` of centre.
inline std::vector<PlanePoint> cone_lifts_near(const FuchsianGroup& group, const PlanePoint& centre, double radius,
                                               bool& complete, std::size_t cap = 400000) {
    const PlanePoint o(0.0, 1.0);
    const double D = hyp::dist(o, centre) + radius + group.domain_radius;
    const ElementSet set = elements_within(group, D, cap);
    complete = set.complete;
    PointIndex index(1e-7);
    std::vector<PlanePoint> out;
    for (const auto& g : set.elements)
        for (const auto& p : cone_points(group)) {
            const PlanePoint q = hyp::apply(g, p);
            if (hyp::dist(q, centre) <= radius && index.insert(q)) out.push_back(q);
        }
    return out;
}

/// Group version: lifts are enumerated in a box around gamma's midpoint of
/// radius H + |gamma|/2 + margin, which contains every lift whose outgoing
/// ray can reach eta. A box given too small is enlarged once.
inline HeightReport height_and_neighborhood(const FuchsianGroup& group, double epsilon, const PlanePoint& a,
                                            const PlanePoint& b, const std::vector<PlanePoint>& eta,
                                            double box = 0.0, std::size_t cap = 400000) {
    const PlanePoint mid = hyp::geodesic_interpolate(a, b, 0.5);
    double H = 0.0;
    for (const auto& q : eta) H = std::max(H, hyp::distance_to_segment(q, a, b));
    const double needed = H + 0.5 * hyp::dist(a, b) + 0.1;
    bool enlarged = false;
    if (box <= 0.0) box = needed;
    for (int attempt = 0; attempt < 2; ++attempt) {
        bool complete = false;
        const auto lifts = cone_lifts_near(group, mid, box, complete, cap);
        if (complete && box >= needed) {
            HeightReport rep = height_from_lifts(lifts, epsilon, a, b, eta);
            rep.box_radius = box;
            rep.enlarged = enlarged;
            return rep;
        }
        if (attempt == 0) {
            box = std::max(needed, complete ? box : box);
            enlarged = true;
            if (!complete) cap *= 2;
        }
    }
    throw Error(ErrorCode::ConePointEnumerationIncomplete,
                "cone lifts not enumerable within box radius " + std::to_string(box));
}

// ---------------------------------------------------------------------------
// Bounded as-simple-as-possible test.

struct SimplicityReport {
    double bound = 0.0;
    std::string justification;
    std::size_t translates = 0;
    std::size_t identical = 0;
    int max_crossings = 0;
    bool pass = false;
};

/// Intersections of a sampled path with its translates g.path over all g
/// that can bring the path back onto itself (d(i, g i) <= 2 max d(i, path)).
/// A translate is identical when its samples over the path's span lie on
/// the path (stabilizer elements of a closed curve's lift).
inline SimplicityReport as_simple_as_possible(const FuchsianGroup& group, const std::vector<PlanePoint>& path,
                                              std::size_t cap = 400000) {
    const PlanePoint o(0.0, 1.0);
    SimplicityReport rep;
    double reach = 0.0;
    for (const auto& q : path) reach = std::max(reach, hyp::dist(o, q));
    rep.bound = 2.0 * reach;
    rep.justification = "a translate meets the path only if d(i, g i) <= 2 max d(i, path)";
    const ElementSet set = elements_within(group, rep.bound, cap);
    if (!set.complete) throw Error(ErrorCode::ConePointEnumerationIncomplete, "translate enumeration hit its cap");

    // cheaper necessary condition around a central sample
    const PlanePoint c = path[path.size() / 2];
    double radius = 0.0;
    for (const auto& q : path) radius = std::max(radius, hyp::dist(c, q));
    const PlanePoint& front = path.front();
    const PlanePoint& back = path.back();

    std::vector<std::array<double, 2>> k;
    for (const auto& q : path) k.push_back(hyp::to_klein(q));
    for (const auto& g : set.elements) {
        if (hyp::identity_residual(g) < 1e-9) continue;
        ++rep.translates;
        if (hyp::dist(c, hyp::apply(g, c)) > 2.0 * radius + 1e-9) continue;
        std::vector<std::array<double, 2>> kg;
        std::size_t inside = 0;
        double offset = 0.0;
        for (const auto& q : path) {
            const PlanePoint gq = hyp::apply(g, q);
            kg.push_back(hyp::to_klein(gq));
            const PlanePoint foot = hyp::nearest_on_segment(gq, front, back);
            if (hyp::dist(foot, front) < 1e-9 || hyp::dist(foot, back) < 1e-9) continue;
            ++inside;
            double best = HUGE_VAL;
            for (std::size_t i = 0; i + 1 < path.size(); ++i)
                best = std::min(best, hyp::distance_to_segment(gq, path[i], path[i + 1]));
            offset = std::max(offset, best);
        }
        if (inside >= 2 && offset < 1e-7) {
            ++rep.identical;
            continue;
        }
        int crossings = 0;
        for (std::size_t i = 0; i + 1 < k.size(); ++i)
            for (std::size_t j = 0; j + 1 < kg.size(); ++j)
                if (hyp::chords_cross(k[i], k[i + 1], kg[j], kg[j + 1])) ++crossings;
        rep.max_crossings = std::max(rep.max_crossings, crossings);
    }
    rep.pass = rep.max_crossings <= 1;
    return rep;
}

/// Point at signed distance u from the imaginary axis above i e^t.
inline PlanePoint off_axis(double t, double u) { return {std::exp(t) * std::tanh(u), std::exp(t) / std::cosh(u)}; }

/// Samples of the axis of g over `periods` translation lengths, optionally
/// with a sinusoidal perpendicular wiggle (amplitude, wavelength).
inline std::vector<PlanePoint> axis_samples(const hyp::Isometry& g, double periods, int n, double amplitude = 0.0,
                                            double wavelength = 1.0) {
    const hyp::Isometry m = hyp::standardizing(hyp::axis(g));
    const hyp::Isometry back = m.inverse();
    const double len = hyp::translation_length(g);
    // centre the window on the point of the axis nearest i
    const double t_mid = std::log(std::abs(m.apply(hyp::Complex(0.0, 1.0))));
    std::vector<PlanePoint> out;
    for (int i = 0; i <= n; ++i) {
        const double t = t_mid + len * periods * (static_cast<double>(i) / n - 0.5);
        out.push_back(hyp::apply(back, off_axis(t, amplitude * std::sin(2.0 * kPi * t / wavelength))));
    }
    return out;
}

}  // namespace orbicount::simplerep
