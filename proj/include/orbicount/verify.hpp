#pragma once

// Geometry verification suite: runs every simplerep check for one scenario
// and collects PASS/FAIL verdicts with their margins into a JSON report.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "orbicount/config.hpp"
#include "orbicount/error.hpp"
#include "orbicount/hypgeom.hpp"
#include "orbicount/orbifold.hpp"
#include "orbicount/simplerep.hpp"
#include "orbicount/words.hpp"

namespace orbicount::verify {

using hyp::kPi;
using hyp::PlanePoint;
using nlohmann::json;

struct Scenario {
    std::string name = "default";
    Signature signature{1, {3}, 0};
    double metric_delta = 0.0;  // 0: use the delta chosen for the group
    int grid = 4096;
    int rays = 720;
    int directions = 12;
    int rotation_samples = 100;
    std::uint64_t seed = 20261018;
    std::size_t element_cap = 400000;
};

/// Reads a scenario object. Unknown keys are rejected so typos surface.
inline Scenario scenario_from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::ConfigError, "scenario must be a JSON object");
    static const std::vector<std::string> known{"name",  "signature",  "metric_delta",   "grid",
                                                "rays",  "directions", "rotation_samples", "seed",
                                                "element_cap"};
    for (const auto& [k, v] : j.items())
        if (std::find(known.begin(), known.end(), k) == known.end())
            throw Error(ErrorCode::ConfigError, "unknown scenario key '" + k + "'");
    Scenario s;
    try {
        s.name = j.value("name", s.name);
        if (j.contains("signature")) {
            const auto& sj = j.at("signature");
            s.signature = sj.is_string() ? parse_signature(sj.get<std::string>()) : signature_from_json(sj);
        }
        s.metric_delta = j.value("metric_delta", 0.0);
        s.grid = j.value("grid", s.grid);
        s.rays = j.value("rays", s.rays);
        s.directions = j.value("directions", s.directions);
        s.rotation_samples = j.value("rotation_samples", s.rotation_samples);
        s.seed = j.value("seed", s.seed);
        s.element_cap = j.value("element_cap", s.element_cap);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("scenario: ") + e.what());
    }
    if (s.metric_delta < 0.0 || s.grid < 16 || s.rays < 4 || s.directions < 2 || s.rotation_samples < 1)
        throw Error(ErrorCode::ConfigError, "scenario values out of range");
    return s;
}

namespace detail {

inline json check(const std::string& name, bool pass, json details = json::object()) {
    details["name"] = name;
    details["pass"] = pass;
    return details;
}

// Max |r - r_hyp| / delta and |theta - theta_hyp| while the path stays where
// phi = sinh.
inline std::pair<double, double> hyperbolic_mismatch(const simplerep::AnnulusPath& p, double delta, double r0,
                                                     double th0, double psi) {
    double er = 0.0, et = 0.0;
    for (std::size_t i = 0; i < p.t.size(); ++i) {
        if (p.r[i] < 2.0 * delta) break;
        const auto [r, th] = simplerep::hyperbolic_polar_geodesic(r0, th0, psi, p.t[i]);
        er = std::max(er, std::abs(r - p.r[i]) / delta);
        et = std::max(et, std::abs(th - p.theta[i]));
    }
    return {er, et};
}

// Inward angles whose geodesic from r_out turns around before the inner
// circle: |sin psi| > phi(delta) / phi(r_out).
inline std::vector<double> returning_angles(const simplerep::RadialMetricProfile& prof, double r_out, int n) {
    const double crit = std::asin(prof.phi(prof.delta()) / prof.phi(r_out));
    std::vector<double> out;
    for (int k = 1; k <= n; ++k) out.push_back(kPi - crit - (0.5 * kPi - crit) * k / (n + 1.0));
    return out;
}

}  // namespace detail

/// The metric checks for one profile; used twice for grid refinement.
inline json metric_checks(const simplerep::RadialMetricProfile& prof, const Scenario& sc,
                          const Tolerances& tol = kDefaultTolerances) {
    const double d = prof.delta();
    const double r_out = 3.0 * d;
    json checks = json::array();

    const auto pc = simplerep::verify_profile(prof, prof.cells());
    checks.push_back(detail::check("profile", pc.pass(),
                                   {{"min_phi_second_derivative", pc.min_second_derivative},
                                    {"phi_prime_at_delta", pc.first_derivative_at_delta},
                                    {"sinh_mismatch", pc.sinh_mismatch},
                                    {"convex", pc.convex},
                                    {"flat_start", pc.flat_start},
                                    {"sinh_match", pc.sinh_match}}));

    // first integrals over a fan of directions from the middle of the annulus
    double cl = 0.0, en = 0.0;
    bool fine = true;
    for (int k = 0; k < sc.directions; ++k) {
        const double psi = -kPi + 2.0 * kPi * (k + 0.5) / sc.directions;
        try {
            const auto p = simplerep::integrate_geodesic(prof, 2.0 * d, 0.0, psi, 20.0 * d, {}, tol);
            cl = std::max(cl, p.clairaut_drift);
            en = std::max(en, p.energy_drift);
        } catch (const Error&) {
            fine = false;
        }
    }
    checks.push_back(detail::check("first_integrals",
                                   fine && cl <= tol.clairaut_drift && en <= tol.energy_drift,
                                   {{"clairaut_drift", cl}, {"energy_drift", en}, {"paths", sc.directions}}));

    // radial crossings of simple arcs from r_out back to r_out, and a radial segment
    int worst = 0;
    double len_ratio = 0.0;
    bool arcs_ok = true;
    for (double psi : detail::returning_angles(prof, r_out, sc.directions)) {
        const auto p = simplerep::integrate_geodesic(prof, r_out, 0.0, psi, 100.0 * d, {}, tol);
        const auto cr = simplerep::radial_crossing_count(p, r_out, sc.rays);
        arcs_ok = arcs_ok && p.clipped_outer && !p.clipped_inner && cr.simple;
        worst = std::max(worst, cr.max_count);
        len_ratio = std::max(len_ratio, cr.length / cr.length_bound);
    }
    const auto radial = simplerep::integrate_geodesic(prof, d, 0.5, 0.0, 2.0 * d, {}, tol);
    const auto rc = simplerep::radial_crossing_count(radial, r_out, sc.rays);
    double radial_spread = 0.0;
    for (double th : radial.theta) radial_spread = std::max(radial_spread, std::abs(th - 0.5));
    // negative control: an arc followed by its own retrace, a closed non-geodesic loop
    simplerep::AnnulusPath loop = simplerep::integrate_geodesic(prof, r_out, 0.0, detail::returning_angles(prof, r_out, 3)[1],
                                                                100.0 * d, {}, tol);
    const double t_end = loop.t.back();
    for (std::size_t i = loop.theta.size() - 1; i-- > 0;) {
        loop.theta.push_back(loop.theta[i]);
        loop.r.push_back(loop.r[i]);
        loop.t.push_back(2.0 * t_end - loop.t[i]);
    }
    const auto neg = simplerep::radial_crossing_count(loop, r_out, sc.rays);
    checks.push_back(detail::check(
        "radial_crossings", arcs_ok && worst <= 1 && len_ratio <= 1.0 + 1e-3 && rc.max_count <= 1 && radial_spread == 0.0 &&
                                neg.max_count >= 2,
        {{"max_crossings", worst},
         {"length_over_bound", len_ratio},
         {"radial_max_crossings", rc.max_count},
         {"radial_theta_spread", radial_spread},
         {"negative_control_max_crossings", neg.max_count},
         {"rays", sc.rays}}));

    // the inner circle is a geodesic
    const auto b = simplerep::integrate_geodesic(prof, d, 0.0, kPi / 2.0, 2.0 * kPi * prof.phi(d), {}, tol);
    double dev = 0.0;
    for (double r : b.r) dev = std::max(dev, std::abs(r - d) / d);
    checks.push_back(detail::check("boundary_geodesic", dev <= tol.metric_match && !b.clipped_inner,
                                   {{"max_relative_radius_deviation", dev}, {"turned", b.theta.back()}}));

    // agreement with hyperbolic geodesics where phi = sinh
    double er = 0.0, et = 0.0;
    for (int k = 0; k < sc.directions; ++k) {
        const double psi = -0.5 * kPi + kPi * (k + 0.5) / sc.directions;
        const double r0 = 2.0 * d + d * k / sc.directions;
        const auto p = simplerep::integrate_geodesic(prof, r0, 0.3, psi, 4.0 * d, {}, tol);
        const auto [a, e] = detail::hyperbolic_mismatch(p, d, r0, 0.3, psi);
        er = std::max(er, a);
        et = std::max(et, e);
    }
    checks.push_back(detail::check("hyperbolic_match", er <= tol.metric_match && et <= tol.metric_match,
                                   {{"radius_error_over_delta", er}, {"angle_error", et}}));

    // reversing the final velocity retraces the path
    double back = 0.0;
    for (int k = 0; k < sc.directions; ++k) {
        const double psi = 1.0 + 1.2 * k / sc.directions;
        const auto p = simplerep::integrate_geodesic(prof, 2.5 * d, 0.0, psi, 3.0 * d, {}, tol);
        const std::size_t n = p.t.size() - 1;
        const double f = prof.phi(p.r[n]);
        const double rpsi = std::atan2(-f * p.thetadot[n], -p.rdot[n]);
        const auto q = simplerep::integrate_geodesic(prof, p.r[n], p.theta[n], rpsi, p.length(), {}, tol);
        back = std::max({back, std::abs(q.r.back() - 2.5 * d) / d, std::abs(q.theta.back())});
    }
    checks.push_back(detail::check("reversal", back <= tol.metric_match, {{"retrace_error", back}}));
    return checks;
}

inline std::vector<bool> verdicts(const json& checks) {
    std::vector<bool> v;
    for (const auto& c : checks) v.push_back(c.at("pass").get<bool>());
    return v;
}

/// Hyperbolic convex hull spot check: geodesics joining B(p, 2 delta) to N(gamma, r)
/// stay inside N(gamma, r) union B(p, eps/2). gamma is the imaginary axis.
inline json hull_check(double epsilon, double delta, std::mt19937_64& rng, int samples = 400) {
    const double r = 50.0 * epsilon;
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst = 0.0;  // max over hull samples of min(d(z,gamma)-r, d(z,p)-eps/2)
    for (int k = 0; k < samples; ++k) {
        const double t = 2.0 * delta * U(rng);
        const PlanePoint p = simplerep::off_axis(0.0, r + t);
        const PlanePoint x = hyp::polar_point(p, 2.0 * delta * U(rng), 2.0 * kPi * U(rng));
        const PlanePoint y = simplerep::off_axis(2.0 * (U(rng) - 0.5), r * U(rng));
        for (int i = 0; i <= 64; ++i) {
            const PlanePoint z = hyp::geodesic_interpolate(x, y, i / 64.0);
            const double dg = std::abs(std::asinh(z.x / z.y));
            worst = std::max(worst, std::min(dg - r, hyp::dist(z, p) - 0.5 * epsilon));
        }
    }
    return detail::check("convex_hull_sampled", worst <= 1e-12,
                         {{"r", r}, {"samples", samples}, {"worst_excess", worst},
                          {"note", "sampled pairs only; the hull condition on delta is not certified"}});
}

/// Chart-local convex hull spot check around one cone point: rho-geodesic
/// segments with both ends in the 2 delta annulus stay in it (hence inside
/// B(p, eps/2)) and never enter the delta disk.
inline json chart_convexity_check(const simplerep::RadialMetricProfile& prof, double epsilon, const Scenario& sc,
                          const Tolerances& tol = kDefaultTolerances) {
    const double d = prof.delta();
    int segments = 0;
    double rmax = 0.0, rmin = HUGE_VAL;
    for (int i = 0; i < sc.directions; ++i)
        for (int k = 0; k < sc.directions; ++k) {
            const double r0 = d * (1.0 + (i + 0.5) / sc.directions);
            const double psi = -kPi + 2.0 * kPi * (k + 0.5) / sc.directions;
            const auto p = simplerep::integrate_geodesic(prof, r0, 0.0, psi, 6.0 * d, {3.0 * d}, tol);
            std::size_t last = 0;
            for (std::size_t j = 0; j < p.r.size(); ++j)
                if (p.r[j] <= 2.0 * d) last = j;
            if (last == 0) continue;
            ++segments;
            for (std::size_t j = 0; j <= last; ++j) {
                rmax = std::max(rmax, p.r[j]);
                rmin = std::min(rmin, p.r[j]);
            }
        }
    return detail::check("chart_convexity", segments > 0 && rmax <= 2.0 * d * (1.0 + 1e-9) && rmin >= d * (1.0 - 1e-9),
                         {{"segments", segments},
                          {"max_radius_over_half_epsilon", rmax / (0.5 * epsilon)},
                          {"min_radius_over_delta", rmin / d},
                          {"note", "multi-chart configurations are not tested"}});
}

inline json quasigeodesic_checks(const FuchsianGroup& group, const simplerep::RadialMetricProfile& prof) {
    json out = json::array();
    // true geodesics
    double geo = 1.0;
    for (int k = 0; k < 6; ++k) {
        const auto s = simplerep::geodesic_path(PlanePoint(0.2 * k, 1.0 + 0.1 * k), 0.4 + k, 3.0 + k, 120);
        geo = std::max(geo, simplerep::quasigeodesic_constant(s.points, s.params).A);
    }
    out.push_back(detail::check("quasi_geodesic", geo <= 1.001, {{"A", geo}}));

    // detour around a cone point and its translate by each generator
    const PlanePoint cp = group.signature.cone_count() > 0 ? cone_point(group, 0) : PlanePoint(0.0, 1.0);
    const double d = prof.delta();
    const auto det = simplerep::detour_path(cp, prof, 20.0 * d, 0.75 * kPi, 40, 60, 0.2);
    const auto A = simplerep::quasigeodesic_constant(det.points, det.params);
    const double exact = simplerep::quasigeodesic_constant_exact(det.points, det.params);
    double spread = 0.0;
    for (const auto& g : group.generators) {
        const auto moved = simplerep::transform(g, det);
        spread = std::max(spread, std::abs(simplerep::quasigeodesic_constant_exact(moved.points, moved.params) - exact));
    }
    const bool finite = !A.diverged && std::isfinite(A.A);
    out.push_back(detail::check("quasi_detour", finite && spread <= 1e-6,
                                {{"A", A.A}, {"A_exact", exact}, {"equivariance_spread", spread}}));

    // spiral accumulating on a circle: A keeps growing with the window
    std::vector<double> As;
    for (int turns : {2, 4, 8, 16, 32}) {
        const auto s = simplerep::spiral_path(PlanePoint(0.0, 1.0), 1.0, turns, 60 * turns);
        As.push_back(simplerep::quasigeodesic_constant_exact(s.points, s.params));
    }
    bool growing = true;
    for (std::size_t i = 1; i < As.size(); ++i) growing = growing && As[i] > As[i - 1];
    out.push_back(detail::check("quasi_spiral_diverges", growing && As.back() > 2.0 * As.front(), {{"A_by_window", As}}));
    return out;
}

inline json rotation_check(int samples, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> D(0.01, 5.0), T(2.0 * kPi / 3.0, 4.0 * kPi / 3.0);
    int failures = 0;
    double worst = 0.0;
    for (int k = 0; k < samples; ++k) {
        const auto r = simplerep::rotation_identities(D(rng), T(rng));
        worst = std::max({worst, std::abs(r.measured_distance - r.formula_distance),
                          std::abs(r.closed_form_distance - r.formula_distance)});
        if (!r.pass()) ++failures;
    }
    return detail::check("rotation_identities", failures == 0, {{"samples", samples}, {"failures", failures}, {"max_distance_error", worst}});
}

/// Fixtures for heights plus the group version and its equivariance.
inline json height_checks(const FuchsianGroup& group, double epsilon, std::size_t cap) {
    const PlanePoint a = simplerep::off_axis(-1.0, 0.0), b = simplerep::off_axis(1.0, 0.0);
    auto bump = [](double height, int n) {
        std::vector<PlanePoint> eta;
        for (int i = 0; i <= n; ++i) {
            const double t = -1.0 + 2.0 * i / n;
            const double c = std::cos(0.5 * kPi * t);
            eta.push_back(simplerep::off_axis(t, height * c * c));
        }
        return eta;
    };
    json out = json::array();
    const auto flat = simplerep::height_from_lifts({}, epsilon, a, b, bump(0.0, 200));
    out.push_back(detail::check("height_eta_equals_gamma", flat.height == 0.0 && flat.contained,
                                {{"height", flat.height}, {"max_distance", flat.max_distance}}));
    const auto small = simplerep::height_from_lifts({simplerep::off_axis(0.0, -3.0)}, epsilon, a, b, bump(10.0 * epsilon, 200));
    out.push_back(detail::check("height_small_bump", small.height == 0.0 && small.contained &&
                                                         std::abs(small.radius - 51.0 * epsilon) < 1e-15,
                                {{"height", small.height}, {"radius", small.radius}, {"max_distance", small.max_distance}}));
    const auto tall = simplerep::height_from_lifts({simplerep::off_axis(0.0, 2.0)}, epsilon, a, b, bump(2.0 + 0.5 * epsilon, 400));
    out.push_back(detail::check("height_crossed_lift", std::abs(tall.height - 2.0) < 1e-9 && tall.contained,
                                {{"height", tall.height}, {"radius", tall.radius}, {"max_distance", tall.max_distance}}));

    // group configuration: gamma through i, eta a bump of height 25 eps;
    // reports must not change when everything is moved by a generator
    const PlanePoint ga(0.0, std::exp(-0.6)), gb(0.0, std::exp(0.6));
    std::vector<PlanePoint> eta;
    for (int i = 0; i <= 200; ++i) {
        const double t = -0.6 + 1.2 * i / 200.0;
        const double c = std::cos(kPi * t / 1.2);
        eta.push_back(simplerep::off_axis(t, 25.0 * epsilon * c * c));
    }
    const auto base = simplerep::height_and_neighborhood(group, epsilon, ga, gb, eta, 0.0, cap);
    const auto& g = group.generators.front();
    std::vector<PlanePoint> moved;
    for (const auto& q : eta) moved.push_back(hyp::apply(g, q));
    const auto image = simplerep::height_and_neighborhood(group, epsilon, hyp::apply(g, ga), hyp::apply(g, gb), moved, 0.0, cap);
    const double spread = std::abs(base.height - image.height) + std::abs(base.max_distance - image.max_distance);
    out.push_back(detail::check("height_group", base.contained && spread <= 1e-6,
                                {{"height", base.height},
                                 {"radius", base.radius},
                                 {"cone_lifts", base.cone_lifts},
                                 {"crossing_lifts", base.crossing_lifts},
                                 {"box_radius", base.box_radius},
                                 {"equivariance_spread", spread}}));
    return out;
}

/// Geodesic axis of a hyperbolic generator against its translates, and a
/// wiggled copy as the negative control.
inline json simplicity_check(const FuchsianGroup& group, std::size_t cap) {
    const hyp::Isometry* g = nullptr;
    for (const auto& s : group.generators)
        if (hyp::classify(s).kind == hyp::IsometryKind::Hyperbolic) {
            g = &s;
            break;
        }
    const hyp::Isometry h = g ? *g : hyp::compose(group.generators[0], group.generators[1]);
    const auto axis = simplerep::axis_samples(h, 3.0, 120);
    const auto rep = simplerep::as_simple_as_possible(group, axis, cap);
    const auto wiggle = simplerep::axis_samples(h, 3.0, 240, 0.05, 0.37 * hyp::translation_length(h));
    const auto neg = simplerep::as_simple_as_possible(group, wiggle, cap);
    return detail::check("as_simple_as_possible", rep.pass && !neg.pass,
                         {{"bound", rep.bound},
                          {"justification", rep.justification},
                          {"translates", rep.translates},
                          {"identical", rep.identical},
                          {"max_crossings", rep.max_crossings},
                          {"negative_control_max_crossings", neg.max_crossings}});
}

/// Full report for a scenario; "pass" is the conjunction of all checks.
inline json run_suite(const Scenario& sc, const Tolerances& tol = kDefaultTolerances) {
    const FuchsianGroup group = build_group(sc.signature, tol);
    const auto consts = simplerep::choose_constants(group, sc.element_cap);
    const double delta = sc.metric_delta > 0.0 ? sc.metric_delta : consts.delta;
    std::mt19937_64 rng(sc.seed);

    json report;
    report["scenario"] = sc.name;
    report["signature"] = sc.signature.to_json();
    report["seed"] = sc.seed;
    report["constants"] = consts.to_json();
    report["metric_delta"] = delta;

    json checks = json::array();
    const double eps = consts.epsilon, dl = consts.delta;
    checks.push_back(detail::check("constants",
                                   eps > 0.0 && 3.0 * dl < eps && dl < std::pow(eps / 4.0, 3) &&
                                       200.0 * eps < consts.systole && 200.0 * eps < consts.cone_separation &&
                                       200.0 * eps < consts.cone_boundary,
                                   {{"elements_examined", consts.elements_examined}}));

    const simplerep::RadialMetricProfile prof(delta, sc.grid);
    const json coarse = metric_checks(prof, sc, tol);
    const simplerep::RadialMetricProfile fine(delta, 2 * sc.grid);
    const json refined = metric_checks(fine, sc, tol);
    for (const auto& c : coarse) checks.push_back(c);
    const bool stable = verdicts(coarse) == verdicts(refined);
    report["grid_refinement"] = {{"grid", sc.grid}, {"refined", 2 * sc.grid}, {"stable", stable}};
    checks.push_back(detail::check("grid_refinement", stable));

    for (const auto& c : quasigeodesic_checks(group, prof)) checks.push_back(c);
    checks.push_back(rotation_check(sc.rotation_samples, rng));
    for (const auto& c : height_checks(group, eps, sc.element_cap)) checks.push_back(c);
    checks.push_back(simplicity_check(group, sc.element_cap));
    checks.push_back(hull_check(eps, dl, rng));
    checks.push_back(chart_convexity_check(prof, eps, sc, tol));

    bool all = true;
    for (const auto& c : checks) all = all && c.at("pass").get<bool>();
    report["checks"] = checks;
    report["notes"] = {"neighbourhood containment is verified chart-locally; global multi-cone configurations are untested",
                       "the convex hull condition on delta is tested on sampled configurations and not certified"};
    report["pass"] = all;
    return report;
}

}  // namespace orbicount::verify
