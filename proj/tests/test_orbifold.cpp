#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "orbicount/orbifold.hpp"
#include "orbicount/words.hpp"

using namespace orbicount;

namespace {

Signature sig(const std::string& s) { return parse_signature(s); }

// Relator product redone in long double from the raw generator entries.
long double independent_residual(const FuchsianGroup& g, const Word& w) {
    long double a = 1, b = 0, c = 0, d = 1;
    for (const Syllable& s : w) {
        const auto& m = g.generators[static_cast<std::size_t>(s.gen)];
        long double ga = m.a, gb = m.b, gc = m.c, gd = m.d;
        if (s.exp < 0) {
            std::swap(ga, gd);
            gb = -gb;
            gc = -gc;
        }
        for (std::int64_t k = 0; k < std::llabs(s.exp); ++k) {
            const long double na = a * ga + b * gc, nb = a * gb + b * gd;
            const long double nc = c * ga + d * gc, nd = c * gb + d * gd;
            a = na, b = nb, c = nc, d = nd;
        }
    }
    auto resid = [&](long double sgn) {
        return std::max({std::fabs(a - sgn), std::fabs(b), std::fabs(c), std::fabs(d - sgn)});
    };
    return std::min(resid(1), resid(-1));
}

std::vector<Word> defining_relations(const Signature& s) {
    std::vector<Word> out{long_relator(s)};
    for (int j = 0; j < s.cone_count(); ++j) out.push_back({{cone_generator(s, j), s.cones[static_cast<std::size_t>(j)]}});
    return out;
}

void expect_valid_group(const FuchsianGroup& g) {
    const Signature& s = g.signature;
    ASSERT_EQ(static_cast<int>(g.generators.size()), s.generator_count());
    EXPECT_LE(g.relator_residual, 1e-9) << s.label();
    for (const Word& r : defining_relations(s)) EXPECT_LE(independent_residual(g, r), 1e-9L) << s.label();
    for (int j = 0; j < s.cone_count(); ++j) {
        const auto cl = hyp::classify(g.generator(cone_generator(s, j)));
        ASSERT_EQ(cl.kind, hyp::IsometryKind::Elliptic) << s.label();
        EXPECT_NEAR(cl.angle, 2.0 * hyp::kPi / s.cones[static_cast<std::size_t>(j)], 1e-9) << s.label();
    }
    for (int i = 0; i < 2 * s.genus; ++i)
        EXPECT_EQ(hyp::classify(g.generator(i)).kind, hyp::IsometryKind::Hyperbolic) << s.label();
    for (int l = 0; l < s.boundary; ++l)
        EXPECT_EQ(hyp::classify(g.generator(boundary_generator(s, l))).kind, hyp::IsometryKind::Hyperbolic);
}

}  // namespace

TEST(Signature, ParseTextAndJson) {
    const Signature s = sig("g=1 cones=3 boundary=0");
    EXPECT_EQ(s.genus, 1);
    EXPECT_EQ(s.cones, std::vector<int>{3});
    EXPECT_EQ(s.boundary, 0);
    EXPECT_EQ(parse_signature(s.text()), s);
    EXPECT_EQ(sig("g=2 cones=-"), (Signature{2, {}, 0}));
    EXPECT_EQ(signature_from_json(nlohmann::json::parse(R"({"genus":1,"cones":[3],"boundary":0})")), s);
    EXPECT_EQ(signature_from_json(s.to_json()), s);
}

TEST(Signature, ParseErrors) {
    for (const char* t : {"", "g=x", "g=1 cones=3,1", "h=2", "g=-1", "g=1 cones=3,"}) {
        try {
            parse_signature(t);
            ADD_FAILURE() << "accepted '" << t << "'";
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::InvalidSignature) << t;
        }
    }
    EXPECT_THROW(signature_from_json(nlohmann::json::parse(R"({"genus":"one"})")), Error);
    EXPECT_THROW(signature_from_json(nlohmann::json::array()), Error);
}

TEST(EulerCharacteristic, Examples) {
    EXPECT_EQ(euler_characteristic(sig("g=1 cones=3")).str(), "-2/3");
    EXPECT_EQ(euler_characteristic(sig("g=0 cones=2,2,2,3")).str(), "-1/6");
    EXPECT_EQ(euler_characteristic(sig("g=2")).str(), "-2");
    EXPECT_EQ(euler_characteristic(sig("g=0 cones=2,3,7")).str(), "-1/42");
    EXPECT_EQ(euler_characteristic(sig("g=0 cones=2,2")).str(), "1");
    EXPECT_EQ(euler_characteristic(sig("g=1 boundary=1")).str(), "-1");
}

TEST(CountingExponent, Examples) {
    EXPECT_EQ(counting_exponent(sig("g=1 cones=3")), 2);
    EXPECT_EQ(counting_exponent(sig("g=0 cones=2,2,2,3")), 2);
    EXPECT_EQ(counting_exponent(sig("g=2")), 6);
    EXPECT_EQ(counting_exponent(sig("g=1 cones=2 boundary=1")), 4);
}

TEST(Exceptional, Examples) {
    EXPECT_TRUE(is_exceptional(sig("g=0 cones=2,3,7")));
    EXPECT_TRUE(is_exceptional(sig("g=0 cones=3 boundary=2")));
    EXPECT_FALSE(is_exceptional(sig("g=1 cones=3")));
    EXPECT_FALSE(is_exceptional(sig("g=0 cones=2,2,2,3")));
}

TEST(BuildGroup, NonHyperbolic) {
    for (const char* t : {"g=0 cones=2,2", "g=0 cones=2,2,2,2", "g=1", "g=0 cones=2,3,6", "g=0 boundary=2"}) {
        try {
            build_group(sig(t));
            ADD_FAILURE() << t;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::NonHyperbolic) << t;
        }
    }
}

TEST(BuildGroup, PresetsAreValidAndMatchTheRootFinder) {
    for (const char* t : {"g=1 cones=3", "g=0 cones=2,2,2,3", "g=2"}) {
        const Signature s = sig(t);
        const auto preset = preset_group(s);
        ASSERT_TRUE(preset.has_value()) << t;
        expect_valid_group(*preset);
        const FuchsianGroup fresh = build_group_fresh(s);
        expect_valid_group(fresh);
        EXPECT_NEAR(preset->scale, fresh.scale, 1e-12);
        for (std::size_t i = 0; i < fresh.generators.size(); ++i)
            EXPECT_LE(hyp::projective_distance(preset->generators[i], fresh.generators[i]), 1e-11) << t << " gen " << i;
    }
}

TEST(BuildGroup, RootFoundSignatures) {
    for (const char* t : {"g=0 cones=2,3,7", "g=0 cones=3,3 boundary=1", "g=1 boundary=1", "g=0 boundary=3",
                          "g=1 cones=2,2", "g=0 cones=5,5,5", "g=3", "g=0 cones=2,2,2,2,2", "g=1 cones=7"}) {
        SCOPED_TRACE(t);
        expect_valid_group(build_group_fresh(sig(t)));
    }
}

TEST(BuildGroup, SpecExamples) {
    const auto torus = build_group(sig("g=1 cones=3"));
    EXPECT_LE(torus.relator_residual, 1e-9);
    EXPECT_NEAR(hyp::classify(torus.generator(2)).angle, 2.0 * hyp::kPi / 3.0, 1e-9);
    const auto sphere = build_group(sig("g=0 cones=2,2,2,3"));
    EXPECT_LE(hyp::identity_residual(holonomy(sphere, long_relator(sphere.signature))), 1e-9);
    for (int j = 0; j < 4; ++j)
        EXPECT_EQ(hyp::classify(sphere.generator(j)).kind, hyp::IsometryKind::Elliptic);
}

TEST(Holonomy, Examples) {
    const auto g = build_group(sig("g=1 cones=3"));
    EXPECT_TRUE(hyp::same_isometry(holonomy(g, {}), hyp::Isometry::identity(), 0.0));
    EXPECT_LE(hyp::identity_residual(holonomy(g, {{2, 3}})), 1e-9);
    EXPECT_LE(hyp::projective_distance(holonomy(g, {{0, 1}}), g.generator(0)), 1e-15);
    EXPECT_LE(hyp::identity_residual(holonomy(g, {{0, 2}, {0, -2}})), 1e-12);
    try {
        holonomy(g, {{7, 1}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnknownGenerator);
    }
}

TEST(Holonomy, ConePointIsFixed) {
    const auto g = build_group(sig("g=0 cones=2,2,2,3"));
    for (int j = 0; j < 4; ++j) {
        const auto p = cone_point(g, j);
        EXPECT_LE(hyp::dist(p, hyp::apply(g.generator(j), p)), 1e-9);
    }
}

class Discreteness : public ::testing::TestWithParam<const char*> {};

TEST_P(Discreteness, NoUnexplainedIdentitiesThroughLengthEight) {
    const auto g = build_group(sig(GetParam()));
    const auto rep = words::discreteness_scan(g, 8);
    EXPECT_GT(rep.words, 1000u);
    // the long relator has word-length at most 8 for every group scanned
    EXPECT_GT(rep.identities, 0u);
    RecordProperty("words", std::to_string(rep.words));
    RecordProperty("identities", std::to_string(rep.identities));
    for (const auto& [word, res] : rep.disagreements) ADD_FAILURE() << word << " has holonomy residual " << res;
}

INSTANTIATE_TEST_SUITE_P(Groups, Discreteness,
                         ::testing::Values("g=1 cones=3", "g=0 cones=2,2,2,3", "g=2", "g=0 cones=3,3 boundary=1"));

TEST(Discreteness, RelatorsAreRecognized) {
    for (const char* t : {"g=1 cones=3", "g=0 cones=2,2,2,3", "g=2"}) {
        const Signature s = sig(t);
        const Word r = long_relator(s);
        for (std::size_t k = 0; k < r.size(); ++k) {
            Word rot(r.begin() + static_cast<std::ptrdiff_t>(k), r.end());
            rot.insert(rot.end(), r.begin(), r.begin() + static_cast<std::ptrdiff_t>(k));
            EXPECT_TRUE(words::dehn_reduces_to_identity(rot, s)) << t << " rotation " << k;
        }
    }
}

TEST(TranslationLength, ConstantOnConjugates) {
    std::mt19937_64 rng(20261018);
    for (const char* t : {"g=1 cones=3", "g=0 cones=2,2,2,3", "g=2"}) {
        const auto g = build_group(sig(t));
        const Signature& s = g.signature;
        std::uniform_int_distribution<int> gen(0, s.generator_count() - 1), len(1, 6), sign(0, 1);
        auto random_word = [&](int n) {
            Word w;
            for (int i = 0; i < n; ++i) w.push_back({gen(rng), sign(rng) ? 1 : -1});
            return words::reduce(w, s);
        };
        int tested = 0;
        while (tested < 10) {
            const Word w = random_word(len(rng) + 2);
            const auto cl = hyp::classify(holonomy(g, w));
            if (cl.kind != hyp::IsometryKind::Hyperbolic) continue;
            double lo = cl.length, hi = cl.length;
            for (int k = 0; k < 50; ++k) {
                const Word c = random_word(len(rng));
                const double l = hyp::translation_length(holonomy(g, words::concat(words::concat(c, w), words::inverse(c))));
                lo = std::min(lo, l);
                hi = std::max(hi, l);
            }
            EXPECT_LE(hi - lo, 1e-8) << t << " " << words::format_word(w, s);
            ++tested;
        }
    }
}

TEST(GroupSummary, Fields) {
    const auto j = group_summary(build_group(sig("g=0 cones=2,3,7")));
    EXPECT_EQ(j["euler_characteristic"], "-1/42");
    EXPECT_EQ(j["exceptional"], true);
    EXPECT_EQ(j["generators"].size(), 3u);
    EXPECT_EQ(j["generators"][2]["kind"], "elliptic");
}
