#include <cmath>
#include <functional>
#include <random>

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <gtest/gtest.h>

#include "orbicount/simplerep.hpp"
#include "orbicount/verify.hpp"

using namespace orbicount;
using namespace orbicount::simplerep;
using hyp::kPi;

namespace {

const Signature kTorus{1, {3}, 0};
const Signature kSphere{0, {2, 2, 2, 3}, 0};
const Signature kGenus2{2, {}, 0};

template <class F>
void expect_code(F&& f, ErrorCode code) {
    try {
        f();
        ADD_FAILURE() << "no error thrown";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

// Minimum translation length over all reduced words of at most max_letters
// letters, by depth-first search with incremental holonomy.
double brute_force_systole(const FuchsianGroup& g, int max_letters) {
    const Signature& sig = g.signature;
    double best = HUGE_VAL;
    Word w;
    std::function<void(const hyp::Isometry&, int)> dfs = [&](const hyp::Isometry& m, int letters) {
        const auto cl = hyp::classify(m);
        if (cl.kind == hyp::IsometryKind::Hyperbolic) best = std::min(best, cl.length);
        if (letters == max_letters) return;
        for (int gen = 0; gen < sig.generator_count(); ++gen)
            for (int e : {1, -1}) {
                if (e < 0 && generator_order(sig, gen) == 2) continue;  // x^-1 = x
                Word next = w;
                next.push_back({gen, e});
                const Word red = words::reduce(next, sig);
                if (words::word_length(red) != letters + 1) continue;  // not a geodesic spelling
                const Word saved = w;
                w = red;
                dfs(m * (e > 0 ? g.generator(gen) : g.generator(gen).inverse()), letters + 1);
                w = saved;
            }
    };
    dfs(hyp::Isometry::identity(), 0);
    return best;
}

}  // namespace

TEST(Constants, FormulaAndErrors) {
    const auto e = constants_from_quantities(2.01, 3.0, HUGE_VAL);
    EXPECT_DOUBLE_EQ(e.epsilon, 0.01);
    EXPECT_DOUBLE_EQ(e.delta, 0.99 * std::pow(0.0025, 3));
    EXPECT_LT(3.0 * e.delta, e.epsilon);
    expect_code([] { constants_from_quantities(HUGE_VAL, HUGE_VAL, HUGE_VAL); }, ErrorCode::DomainError);
    expect_code([] { constants_from_quantities(0.0, 1.0, 1.0); }, ErrorCode::DomainError);
}

class Systole : public ::testing::TestWithParam<std::pair<Signature, int>> {};

TEST_P(Systole, CertifiedSearchAgreesWithShortWords) {
    const auto& [sig, letters] = GetParam();
    const auto g = build_group(sig);
    std::size_t examined = 0;
    const double s = systole(g, 400000, examined);
    EXPECT_GT(examined, 0u);
    EXPECT_NEAR(s, brute_force_systole(g, letters), 1e-9) << sig.label();
}

// genus 2 has seven letters per step, so its word search stops at eight
INSTANTIATE_TEST_SUITE_P(Signatures, Systole,
                         ::testing::Values(std::pair{kTorus, 10}, std::pair{kSphere, 10}, std::pair{kGenus2, 8}));

TEST(Systole, CapRaisesInconclusive) {
    const auto g = build_group(kTorus);
    std::size_t examined = 0;
    expect_code([&] { systole(g, 3, examined); }, ErrorCode::SystoleSearchInconclusive);
}

TEST(Constants, ChosenForGroupsSatisfyTheInequalities) {
    for (const Signature& sig : {kTorus, kSphere, Signature{0, {3, 3}, 1}}) {
        const auto e = choose_constants(build_group(sig));
        EXPECT_GT(e.epsilon, 0.0) << sig.label();
        EXPECT_LT(200.0 * e.epsilon, e.systole);
        EXPECT_LT(200.0 * e.epsilon, e.cone_separation);
        EXPECT_LT(200.0 * e.epsilon, e.cone_boundary);
        EXPECT_LT(e.delta, std::pow(e.epsilon / 4.0, 3));
        EXPECT_LT(3.0 * e.delta, e.epsilon);
    }
}

TEST(ElementsWithin, ContainsEveryShortWord) {
    const auto g = build_group(kTorus);
    const double D = 5.0;
    const auto set = elements_within(g, D);
    ASSERT_TRUE(set.complete);
    PointIndex idx(1e-7);
    for (const auto& m : set.elements) idx.insert(hyp::apply(m, PlanePoint(0.0, 1.0)));
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> gen(0, g.signature.generator_count() - 1), sgn(0, 1), len(1, 6);
    int inside = 0;
    for (int k = 0; k < 3000; ++k) {
        Word w;
        for (int i = len(rng); i > 0; --i) w.push_back({gen(rng), sgn(rng) ? 1 : -1});
        const PlanePoint p = hyp::apply(holonomy(g, w), PlanePoint(0.0, 1.0));
        if (hyp::dist(PlanePoint(0.0, 1.0), p) > D) continue;
        ++inside;
        EXPECT_GE(idx.find(p), 0) << words::format_word(w, g.signature);
    }
    EXPECT_GT(inside, 100);
}

TEST(Profile, ConditionsHoldAtBothScales) {
    for (double delta : {0.05, 8.870606009878676e-09}) {
        const RadialMetricProfile prof(delta);
        const auto c = verify_profile(prof, 4096);
        EXPECT_TRUE(c.pass()) << delta;
        EXPECT_LE(std::abs(prof.dphi(delta)), 1e-12);
        EXPECT_DOUBLE_EQ(prof.phi(2.0 * delta), std::sinh(2.0 * delta));
        EXPECT_GT(prof.phi(delta), 0.0);
        expect_code([&] { prof.phi(0.5 * delta); }, ErrorCode::DomainError);
    }
    expect_code([] { RadialMetricProfile(0.0); }, ErrorCode::DomainError);
}

TEST(Profile, StepIsSmoothAndMonotone) {
    double prev = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        const double u = i / 1000.0;
        const double s = RadialMetricProfile::step(u);
        EXPECT_GE(s, prev);
        prev = s;
    }
    EXPECT_EQ(RadialMetricProfile::step(0.0), 0.0);
    EXPECT_EQ(RadialMetricProfile::step(1.0), 1.0);
    EXPECT_NEAR(RadialMetricProfile::step(0.5), 0.5, 1e-15);
    // derivative against a central difference
    for (double u : {0.2, 0.5, 0.7}) {
        const double h = 1e-6;
        const double fd = (RadialMetricProfile::step(u + h) - RadialMetricProfile::step(u - h)) / (2 * h);
        EXPECT_NEAR(RadialMetricProfile::step_derivative(u), fd, 1e-6);
    }
}

TEST(Integrator, FirstIntegralsAndInnerCircle) {
    const RadialMetricProfile prof(0.05);
    const auto p = integrate_geodesic(prof, 0.1, 0.0, 1.0, 1.0);
    EXPECT_LE(p.clairaut_drift, 1e-6);
    EXPECT_LE(p.energy_drift, 1e-6);
    const auto c = integrate_geodesic(prof, 0.05, 0.0, kPi / 2, 2.0 * kPi * prof.phi(0.05));
    for (double r : c.r) EXPECT_NEAR(r, 0.05, 1e-6 * 0.05);
    EXPECT_NEAR(c.theta.back(), 2.0 * kPi, 1e-6);
    expect_code([&] { integrate_geodesic(prof, 0.01, 0.0, 0.0, 1.0); }, ErrorCode::DomainError);
}

TEST(Integrator, StepTooLargeWhenTolerancesAreImpossible) {
    const RadialMetricProfile prof(0.05);
    Tolerances tol;
    tol.energy_drift = 0.0;
    tol.clairaut_drift = 0.0;
    IntegratorOptions o;
    o.refinements = 1;
    expect_code([&] { integrate_geodesic(prof, 0.1, 0.0, 1.0, 1.0, o, tol); }, ErrorCode::StepTooLarge);
}

TEST(Integrator, MatchesHyperbolicGeodesicsOutsideTwoDelta) {
    const double d = 0.05;
    const RadialMetricProfile prof(d);
    IntegratorOptions o;
    o.r_out = 0.5;
    for (double psi : {-1.0, -0.3, 0.0, 0.4, 1.2}) {
        const auto p = integrate_geodesic(prof, 0.2, 0.3, psi, 0.25, o);
        for (std::size_t i = 0; i < p.t.size(); ++i) {
            if (p.r[i] < 2.0 * d) break;
            const auto [r, th] = hyperbolic_polar_geodesic(0.2, 0.3, psi, p.t[i]);
            ASSERT_NEAR(p.r[i], r, 1e-8) << psi;
            ASSERT_NEAR(p.theta[i], th, 1e-8) << psi;
        }
    }
}

TEST(PolarGeodesic, IsUnitSpeedHyperbolicGeodesic) {
    const PlanePoint c(0.3, 1.7);
    for (double psi : {0.0, 0.5, 1.4, 2.5, -2.0}) {
        const auto at = [&](double t) {
            const auto [r, th] = hyperbolic_polar_geodesic(0.8, 0.4, psi, t);
            return hyp::polar_point(c, r, th);
        };
        const auto [r0, th0] = hyperbolic_polar_geodesic(0.8, 0.4, psi, 0.0);
        EXPECT_NEAR(r0, 0.8, 1e-12);
        EXPECT_NEAR(std::remainder(th0 - 0.4, 2 * kPi), 0.0, 1e-12);
        // distances along the curve equal parameter differences (a geodesic)
        for (double s : {0.3, 1.1, 2.6}) EXPECT_NEAR(hyp::dist(at(0.0), at(s)), s, 1e-9) << psi;
        EXPECT_NEAR(hyp::dist(at(-0.7), at(1.9)), 2.6, 1e-9) << psi;
    }
}

TEST(RadialCrossings, SimpleArcsOnceAndRetracedLoopTwice) {
    const double d = 0.05;
    const RadialMetricProfile prof(d);
    const double r_out = 3.0 * d;
    const double crit = std::asin(prof.phi(d) / prof.phi(r_out));
    const double psi = kPi - crit - 0.3 * (0.5 * kPi - crit);
    auto p = integrate_geodesic(prof, r_out, 0.0, psi, 100.0 * d);
    ASSERT_TRUE(p.clipped_outer);
    ASSERT_FALSE(p.clipped_inner);
    const auto rep = radial_crossing_count(p, r_out);
    EXPECT_TRUE(rep.simple);
    EXPECT_LE(rep.max_count, 1);
    EXPECT_TRUE(rep.pass());
    const double t_end = p.t.back();
    for (std::size_t i = p.theta.size() - 1; i-- > 0;) {
        p.theta.push_back(p.theta[i]);
        p.r.push_back(p.r[i]);
        p.t.push_back(2.0 * t_end - p.t[i]);
    }
    EXPECT_GE(radial_crossing_count(p, r_out).max_count, 2);
}

TEST(Quasigeodesic, GeodesicDetourAndSpiral) {
    const auto g = geodesic_path(PlanePoint(0.1, 1.3), 0.7, 6.0, 200);
    EXPECT_EQ(quasigeodesic_constant(g.points, g.params).A, 1.0);
    EXPECT_NEAR(quasigeodesic_constant_exact(g.points, g.params), 1.0, 1e-9);

    const RadialMetricProfile prof(0.05);
    const auto det = detour_path(PlanePoint(0.0, 1.0), prof, 1.0, 0.75 * kPi, 40, 60, 0.2);
    const auto rep = quasigeodesic_constant(det.points, det.params);
    EXPECT_FALSE(rep.diverged);
    EXPECT_NEAR(rep.A, quasigeodesic_constant_exact(det.points, det.params), 1e-3);

    double prev = 0.0;
    for (int turns : {2, 4, 8, 16}) {
        const auto s = spiral_path(PlanePoint(0.0, 1.0), 1.0, turns, 60 * turns);
        const double A = quasigeodesic_constant_exact(s.points, s.params);
        EXPECT_GT(A, prev) << turns;
        prev = A;
    }
    expect_code([] { quasigeodesic_constant({PlanePoint(0, 1)}, {0.0, 1.0}); }, ErrorCode::DomainError);
}

TEST(Rotation, CorrectedExampleAgainstHighPrecision) {
    using big = boost::multiprecision::cpp_dec_float_50;
    const big oracle = 2 * acosh(sqrt(big(3)) / 2 * cosh(big(1)));
    const double expected = oracle.convert_to<double>();
    EXPECT_NEAR(expected, 1.5975478, 5e-8);
    const auto r = rotation_identities(1.0, 2.0 * kPi / 3.0);
    EXPECT_NEAR(r.formula_distance, expected, 1e-12);
    EXPECT_NEAR(r.measured_distance, expected, 1e-6);
    EXPECT_NEAR(r.closed_form_distance, expected, 1e-9);
    EXPECT_GE(r.formula_distance, 1.5);
    EXPECT_TRUE(r.pass());
}

TEST(Rotation, RandomSamplesAndDomain) {
    std::mt19937_64 rng(20261018);
    std::uniform_real_distribution<double> D(0.01, 5.0), T(2.0 * kPi / 3.0, 4.0 * kPi / 3.0);
    for (int k = 0; k < 100; ++k) {
        const auto r = rotation_identities(D(rng), T(rng));
        EXPECT_TRUE(r.pass()) << r.d << " " << r.theta;
        EXPECT_GE(r.measured_displacement, std::sqrt(3.0) * r.d * (1.0 - 1e-12));
    }
    // small d: the image crosses, distance zero
    EXPECT_EQ(rotated_geodesic_formula(0.1, 2.0 * kPi / 3.0), 0.0);
    expect_code([] { rotation_identities(1.0, 1.0); }, ErrorCode::DomainError);
    expect_code([] { rotation_identities(0.0, kPi); }, ErrorCode::DomainError);
}

TEST(Height, FixturesAndEnumerationLimit) {
    const double eps = 0.01;
    const PlanePoint a = off_axis(-1.0, 0.0), b = off_axis(1.0, 0.0);
    std::vector<PlanePoint> line, bump;
    for (int i = 0; i <= 100; ++i) {
        const double t = -1.0 + 0.02 * i;
        const double c = std::cos(0.5 * kPi * t);
        line.push_back(off_axis(t, 0.0));
        bump.push_back(off_axis(t, (2.0 + 0.5 * eps) * c * c));
    }
    const auto flat = height_from_lifts({off_axis(0.0, 1.0)}, eps, a, b, line);
    EXPECT_EQ(flat.height, 0.0);
    EXPECT_TRUE(flat.contained);
    EXPECT_NEAR(flat.radius, 51.0 * eps, 1e-15);
    // a lift under the bump is crossed, one beyond it is not
    const auto tall = height_from_lifts({off_axis(0.0, 2.0), off_axis(0.0, 4.0)}, eps, a, b, bump);
    EXPECT_NEAR(tall.height, 2.0, 1e-9);
    EXPECT_EQ(tall.crossing_lifts, 1u);
    EXPECT_TRUE(tall.contained);

    const auto g = build_group(kTorus);
    expect_code([&] { height_and_neighborhood(g, eps, a, b, bump, 0.0, 2); }, ErrorCode::ConePointEnumerationIncomplete);
    const auto rep = height_and_neighborhood(g, eps, a, b, line, 0.05);
    EXPECT_TRUE(rep.enlarged);
    EXPECT_GE(rep.box_radius, 0.5 * hyp::dist(a, b));
}

TEST(Simplicity, AxisPassesAndWiggleFails) {
    const auto g = build_group(kTorus);
    const auto& a = g.generator(0);
    const auto axis = axis_samples(a, 3.0, 120);
    const auto rep = as_simple_as_possible(g, axis);
    EXPECT_TRUE(rep.pass);
    EXPECT_GT(rep.identical, 0u);
    EXPECT_FALSE(rep.justification.empty());
    const auto wiggle = axis_samples(a, 3.0, 240, 0.05, 0.37 * hyp::translation_length(a));
    EXPECT_FALSE(as_simple_as_possible(g, wiggle).pass);
}

TEST(Suite, ScenarioParsingAndFullRun) {
    using nlohmann::json;
    const auto sc = verify::scenario_from_json(json{{"name", "t"}, {"signature", "genus=1 cones=3"}, {"metric_delta", 0.05}});
    EXPECT_EQ(sc.signature, kTorus);
    expect_code([] { verify::scenario_from_json(json{{"metric_delt", 0.05}}); }, ErrorCode::ConfigError);
    expect_code([] { verify::scenario_from_json(json{{"grid", 3}}); }, ErrorCode::ConfigError);
    expect_code([] { verify::scenario_from_json(json::array()); }, ErrorCode::ConfigError);
    const auto report = verify::run_suite(sc);
    for (const auto& c : report.at("checks")) EXPECT_TRUE(c.at("pass").get<bool>()) << c.dump();
    EXPECT_TRUE(report.at("pass").get<bool>());
    EXPECT_TRUE(report.at("grid_refinement").at("stable").get<bool>());
}
