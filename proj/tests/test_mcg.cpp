#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "orbicount/mcg.hpp"

using namespace orbicount;
using namespace orbicount::mcg;
using words::CurveClass;

namespace {

const Signature kTorus{1, {3}, 0};
const Signature kSphere{0, {2, 2, 2, 3}, 0};
const Signature kGenus2{2, {}, 0};

Word W(const std::string& s, const Signature& sig) { return words::parse_word(s, sig); }

std::string temp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "orbicount_test_mcg";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

std::vector<std::string> keys(const std::vector<CurveClass>& v) {
    std::vector<std::string> out;
    for (const auto& c : v) out.push_back(c.key);
    return out;
}

std::vector<double> sorted_lengths(const std::vector<CurveClass>& v) {
    std::vector<double> out;
    for (const auto& c : v) out.push_back(c.length);
    std::sort(out.begin(), out.end());
    return out;
}

Word random_word(std::mt19937_64& rng, const Signature& sig, int n) {
    std::uniform_int_distribution<int> gen(0, sig.generator_count() - 1), sign(0, 1);
    Word w;
    for (int i = 0; i < n; ++i) w.push_back({gen(rng), sign(rng) ? 1 : -1});
    return words::reduce(w, sig);
}

// All classes reachable from seed within word-length-bounded reduced words.
std::set<std::string> brute_force_classes(const FuchsianGroup& g, int max_len, double L) {
    const Signature& s = g.signature;
    std::set<std::string> out;
    Word w;
    std::function<void(int)> rec = [&](int len) {
        if (!w.empty()) {
            const auto cc = words::make_curve_class(w, g);
            if (cc.essential && cc.primitive && cc.length <= L) out.insert(cc.key);
        }
        if (len == max_len) return;
        for (int gen = 0; gen < s.generator_count(); ++gen)
            for (int sign : {1, -1}) {
                if (!w.empty() && w.back().gen == gen) continue;  // syllables of exponent +-1 only
                if (generator_order(s, gen) == 2 && sign < 0) continue;
                w.push_back({gen, sign});
                rec(len + 1);
                w.pop_back();
            }
    };
    rec(0);
    return out;
}

}  // namespace

TEST(TwistGenerators, UnsupportedSignature) {
    try {
        twist_generators(Signature{0, {2, 3}, 0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnsupportedSignature);
    }
    EXPECT_THROW(twist_generators(Signature{1, {}, 1}), Error);
    EXPECT_THROW(coset_representatives(Signature{3, {}, 0}), Error);
}

TEST(TwistGenerators, TablesPassInvariants) {
    for (const Signature& sig : {kTorus, kSphere, kGenus2, Signature{1, {5}, 0}, Signature{0, {3, 3, 4, 5}, 0}}) {
        const auto autos = twist_generators(sig);
        EXPECT_EQ(autos.size(), sig.genus == 2 ? 5u : sig.genus == 1 ? 2u : 3u);
        const Word rel = long_relator(sig);
        for (const auto& f : autos) {
            EXPECT_EQ(validate(f, sig), "");
            EXPECT_EQ(validate(f.inverse(), sig), "");
            EXPECT_EQ(words::canonicalize(apply(f, rel, sig), sig), words::canonicalize(rel, sig)) << f.name;
            for (int g = 2 * sig.genus; g < sig.generator_count(); ++g)
                EXPECT_EQ(words::canonicalize(apply(f, Word{{g, 1}}, sig), sig), words::canonicalize(Word{{g, 1}}, sig));
            const auto id = compose(f, f.inverse(), sig);
            for (int g = 0; g < sig.generator_count(); ++g)
                EXPECT_EQ(id.images[static_cast<std::size_t>(g)], (Word{{g, 1}})) << f.name;
        }
    }
}

TEST(TwistGenerators, SpecExample) {
    const auto autos = twist_generators(kTorus);
    const Word comm = W("a1 b1 a1^-1 b1^-1", kTorus);
    const Word image = apply(autos[0], comm, kTorus);
    EXPECT_EQ(words::canonicalize(image, kTorus), words::canonicalize(comm, kTorus));
    EXPECT_EQ(autos[0].inverse().inverse().name, autos[0].name);
}

TEST(TwistGenerators, PreserveHolonomyRelator) {
    // images of the generators satisfy the defining relations numerically
    for (const Signature& sig : {kTorus, kSphere, kGenus2}) {
        const auto g = build_group(sig);
        for (const auto& f : twist_generators(sig)) {
            FuchsianGroup img = g;
            for (int k = 0; k < sig.generator_count(); ++k)
                img.generators[static_cast<std::size_t>(k)] = holonomy(g, f.images[static_cast<std::size_t>(k)]);
            for (double r : relation_residuals(img)) EXPECT_LE(r, 1e-8) << f.name;
        }
    }
}

TEST(Apply, IdentityAndInverse) {
    std::mt19937_64 rng(21);
    for (const Signature& sig : {kTorus, kSphere, kGenus2}) {
        const auto g = build_group(sig);
        const auto autos = twist_generators(sig);
        int tested = 0;
        while (tested < 50) {
            const auto cc = words::make_curve_class(random_word(rng, sig, 7), g);
            if (!cc.essential || !cc.primitive) continue;
            ++tested;
            EXPECT_EQ(apply(identity_automorphism(sig), cc, g).key, cc.key);
            for (const auto& f : autos) {
                const auto there = apply(f, cc, g);
                EXPECT_EQ(apply(f.inverse(), there, g).key, cc.key) << f.name;
                EXPECT_NEAR(there.length, hyp::translation_length(holonomy(g, apply(f, cc.canonical, sig))), 1e-8);
            }
        }
    }
}

TEST(Apply, TwistOfAMatchesNumericLength) {
    const auto g = build_group(kTorus);
    const auto tb = twist_generators(kTorus)[1];
    const auto a = words::make_curve_class(W("a1", kTorus), g);
    const auto img = apply(tb, a, g);
    EXPECT_EQ(img.key, words::format_word(words::canonicalize(W("a1 b1^-1", kTorus), kTorus), kTorus));
    EXPECT_NEAR(img.length, hyp::translation_length(g.generator(0) * g.generator(1).inverse()), 1e-8);
}

TEST(SignatureHash, StableHex) {
    const std::string h = signature_hash(kTorus);
    EXPECT_EQ(h.size(), 16u);
    EXPECT_EQ(h, signature_hash(Signature{1, {3}, 0}));
    EXPECT_NE(h, signature_hash(kSphere));
}

TEST(OrbitBall, RejectsBadSeeds) {
    const auto g = build_group(kTorus);
    const auto autos = twist_generators(kTorus);
    EXPECT_THROW(orbit_ball(words::make_curve_class(W("x1", kTorus), g), 5.0, g, autos), Error);
    EXPECT_THROW(orbit_ball(words::make_curve_class(W("a1^2", kTorus), g), 5.0, g, autos), Error);
    OrbitOptions o;
    o.slack = 0.5;
    EXPECT_THROW(orbit_ball(words::make_curve_class(W("a1", kTorus), g), 5.0, g, autos, o), Error);
}

TEST(OrbitBall, BelowSeedLengthIsEmpty) {
    const auto g = build_group(kTorus);
    const auto a = words::make_curve_class(W("a1", kTorus), g);
    const auto ball = orbit_ball(a, 0.5 * a.length, g, twist_generators(kTorus));
    EXPECT_TRUE(ball.members.empty());
    EXPECT_TRUE(ball.stabilized);
}

TEST(OrbitBall, AtSeedLengthMatchesBruteForce) {
    const auto g = build_group(kTorus);
    const auto autos = twist_generators(kTorus);
    const auto a = words::make_curve_class(W("a1", kTorus), g);
    const double L = a.length * (1 + 1e-12);
    const auto ball = orbit_ball(a, L, g, autos);
    ASSERT_TRUE(ball.stabilized);
    ASSERT_FALSE(ball.members.empty());
    const auto got = keys(ball.members);
    EXPECT_NE(std::find(got.begin(), got.end(), "a1"), got.end());
    // brute force: every short class of length <= L that lies in a wider orbit ball
    const auto wide = orbit_ball(a, 2.0 * a.length, g, autos);
    std::set<std::string> wide_keys;
    for (const auto& m : wide.members) wide_keys.insert(m.key);
    std::set<std::string> expected;
    for (const auto& k : brute_force_classes(g, 6, L))
        if (wide_keys.count(k)) expected.insert(k);
    for (const auto& k : expected) EXPECT_TRUE(std::count(got.begin(), got.end(), k)) << k;
    for (const auto& m : ball.members) EXPECT_LE(m.length, L);
}

TEST(OrbitBall, MembersAreEssentialPrimitiveAndMonotone) {
    const auto g = build_group(kTorus);
    const auto autos = twist_generators(kTorus);
    const auto a = words::make_curve_class(W("a1", kTorus), g);
    std::vector<std::string> prev;
    for (double L : {6.0, 8.0, 10.0, 12.0}) {
        const auto ball = orbit_ball(a, L, g, autos);
        ASSERT_TRUE(ball.stabilized);
        const auto cur = keys(ball.members);
        EXPECT_TRUE(std::is_sorted(cur.begin(), cur.end()));
        for (const auto& m : ball.members) {
            EXPECT_TRUE(m.essential && m.primitive) << m.key;
            EXPECT_LE(m.length, L);
        }
        EXPECT_TRUE(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end())) << L;
        EXPECT_GE(cur.size(), prev.size());
        prev = cur;
    }
    EXPECT_GT(prev.size(), 30u);
}

TEST(OrbitBall, SeedIndependence) {
    for (const Signature& sig : {kTorus, kSphere, kGenus2}) {
        const auto g = build_group(sig);
        const auto autos = twist_generators(sig);
        const std::string seed_text = sig.genus == 0 ? "x1 x2" : "a1";
        const auto s1 = words::make_curve_class(W(seed_text, sig), g);
        // another member of the same orbit: apply a few twists
        auto s2 = apply(autos.back(), s1, g);
        s2 = apply(autos[1], s2, g);
        s2 = apply(autos[0].inverse(), s2, g);
        ASSERT_NE(s1.key, s2.key) << sig.label();
        const double L = (sig.genus == 2 ? 1.5 : 3.0) * std::max(s1.length, s2.length);
        const auto b1 = orbit_ball(s1, L, g, autos);
        const auto b2 = orbit_ball(s2, L, g, autos);
        ASSERT_TRUE(b1.stabilized && b2.stabilized) << sig.label();
        EXPECT_EQ(keys(b1.members), keys(b2.members)) << sig.label();
        EXPECT_EQ(sorted_lengths(b1.members), sorted_lengths(b2.members));
        EXPECT_GE(b1.members.size(), 2u) << sig.label();
    }
}

TEST(OrbitBall, ThreadCountDoesNotChangeResult) {
    const auto g = build_group(kTorus);
    const auto autos = twist_generators(kTorus);
    const auto a = words::make_curve_class(W("a1", kTorus), g);
    OrbitOptions one, four;
    four.threads = 4;
    const auto x = orbit_ball(a, 12.0, g, autos, one);
    const auto y = orbit_ball(a, 12.0, g, autos, four);
    EXPECT_EQ(keys(x.members), keys(y.members));
    EXPECT_EQ(x.counts_per_slack, y.counts_per_slack);
}

TEST(OrbitBall, SlackCapReached) {
    const auto g = build_group(kTorus);
    const auto a = words::make_curve_class(W("a1", kTorus), g);
    OrbitOptions o;
    o.slack_cap = 1.0;
    try {
        orbit_ball(a, 10.0, g, twist_generators(kTorus), o);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SlackCapReached);
        EXPECT_NE(std::string(e.what()).find("["), std::string::npos);
    }
}

TEST(Checkpoint, RoundTripAndDeterminism) {
    const auto g = build_group(kTorus);
    const auto autos = twist_generators(kTorus);
    const auto a = words::make_curve_class(W("a1", kTorus), g);
    OrbitOptions o;
    o.checkpoint = temp_path("rt1.ckpt");
    const auto ball = orbit_ball(a, 11.0, g, autos, o);
    o.checkpoint = temp_path("rt2.ckpt");
    orbit_ball(a, 11.0, g, autos, o);
    auto slurp = [](const std::string& p) {
        std::ifstream in(p);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    EXPECT_EQ(slurp(temp_path("rt1.ckpt")), slurp(temp_path("rt2.ckpt")));
    const auto d = read_checkpoint(temp_path("rt1.ckpt"));
    EXPECT_EQ(d.signature_hash, signature_hash(kTorus));
    EXPECT_EQ(d.L, 11.0);
    EXPECT_EQ(d.slack, ball.slack);
    ASSERT_EQ(d.entries.size(), ball.members.size());
    for (std::size_t i = 0; i < d.entries.size(); ++i) {
        EXPECT_EQ(d.entries[i].first, ball.members[i].key);
        EXPECT_EQ(d.entries[i].second, ball.members[i].length);  // 17 digits round-trip
    }
    EXPECT_EQ(slurp(temp_path("rt1.ckpt")).substr(0, 16), "orbicount-orbit ");
}

TEST(Checkpoint, ResumeEqualsUninterrupted) {
    for (const Signature& sig : {kTorus, kSphere}) {
        const auto g = build_group(sig);
        const auto autos = twist_generators(sig);
        const auto seed = words::make_curve_class(W(sig.genus ? "a1" : "x1 x2", sig), g);
        const double L = sig.genus ? 12.0 : 14.0;
        const auto full = orbit_ball(seed, L, g, autos);
        ASSERT_TRUE(full.stabilized);
        for (std::size_t cut : {1u, 5u, 40u}) {
            OrbitOptions o;
            o.checkpoint = temp_path("partial.ckpt");
            o.max_expansions = cut;
            const auto part = orbit_ball(seed, L, g, autos, o);
            ASSERT_TRUE(part.interrupted);
            // a late cut may already hold every member, only the confirming slack is missing
            if (cut == 1u) {
                EXPECT_LT(part.members.size(), full.members.size());
            } else {
                EXPECT_LE(part.members.size(), full.members.size());
            }
            OrbitOptions r;
            r.resume = temp_path("partial.ckpt");
            const auto resumed = orbit_ball(seed, L, g, autos, r);
            EXPECT_TRUE(resumed.stabilized);
            EXPECT_EQ(keys(resumed.members), keys(full.members)) << sig.label() << " cut " << cut;
        }
    }
}

TEST(Checkpoint, Mismatches) {
    const auto g = build_group(kTorus);
    const auto autos = twist_generators(kTorus);
    const auto a = words::make_curve_class(W("a1", kTorus), g);
    OrbitOptions o;
    o.checkpoint = temp_path("mm.ckpt");
    orbit_ball(a, 9.0, g, autos, o);
    OrbitOptions r;
    r.resume = temp_path("mm.ckpt");
    try {
        orbit_ball(a, 9.5, g, autos, r);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::CheckpointMismatch);
    }
    const auto sg = build_group(kSphere);
    EXPECT_THROW(orbit_ball(words::make_curve_class(W("x1 x2", kSphere), sg), 9.0, sg, twist_generators(kSphere), r),
                 Error);
    {
        std::ofstream bad(temp_path("bad.ckpt"));
        bad << "orbicount-orbit v1 " << signature_hash(kTorus) << " L=9 slack=1\na1\t0.5\n";
    }
    r.resume = temp_path("bad.ckpt");
    EXPECT_THROW(orbit_ball(a, 9.0, g, autos, r), Error);  // length does not verify
    {
        std::ofstream bad(temp_path("garbage.ckpt"));
        bad << "not a checkpoint\n";
    }
    EXPECT_THROW(read_checkpoint(temp_path("garbage.ckpt")), Error);
    EXPECT_THROW(read_checkpoint(temp_path("missing.ckpt")), Error);
}

TEST(MapOrbit, CosetRepresentatives) {
    EXPECT_EQ(coset_representatives(kTorus).size(), 1u);
    EXPECT_EQ(coset_representatives(kGenus2).size(), 1u);
    // permutations of the three order-2 cone points
    const auto reps = coset_representatives(kSphere);
    EXPECT_EQ(reps.size(), 6u);
    const Word rel = long_relator(kSphere);
    for (const auto& h : reps) {
        EXPECT_EQ(words::canonicalize(apply(h, rel, kSphere), kSphere), words::canonicalize(rel, kSphere)) << h.name;
        // x4 is the only order-3 point and stays fixed up to conjugacy
        EXPECT_EQ(words::canonicalize(apply(h, W("x4", kSphere), kSphere), kSphere), W("x4", kSphere)) << h.name;
    }
}

TEST(MapOrbit, UnionOfPMapOrbits) {
    const auto g = build_group(kSphere);
    const auto autos = twist_generators(kSphere);
    const auto seed = words::make_curve_class(W("x1 x2", kSphere), g);
    const auto pmap = orbit_ball(seed, 12.0, g, autos);
    const auto map = map_orbit_ball(seed, 12.0, g, autos);
    EXPECT_EQ(map.representatives.size(), 6u);
    const auto mk = keys(map.members), pk = keys(pmap.members);
    EXPECT_TRUE(std::includes(mk.begin(), mk.end(), pk.begin(), pk.end()));
    EXPECT_GE(map.distinct_pmap_orbits, 2u);
    std::size_t total = 0;
    for (auto c : map.per_coset_counts) total += c;
    EXPECT_GE(total, mk.size());
}
