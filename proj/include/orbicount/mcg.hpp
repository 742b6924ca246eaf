#pragma once

// Pure mapping class group actions on curve classes and bounded orbit
// enumeration with slack escalation and checkpoints.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "orbicount/config.hpp"
#include "orbicount/error.hpp"
#include "orbicount/orbifold.hpp"
#include "orbicount/words.hpp"

namespace orbicount::mcg {

/// Automorphism of the orbifold fundamental group given by generator images.
struct Automorphism {
    std::string name;
    std::vector<Word> images;
    std::vector<Word> inverse_images;

    Automorphism inverse() const {
        const std::string n = name.size() > 3 && name.substr(name.size() - 3) == "^-1"
                                  ? name.substr(0, name.size() - 3)
                                  : name + "^-1";
        return {n, inverse_images, images};
    }
};

inline Word substitute(const std::vector<Word>& images, const Word& w, const Signature& sig) {
    Word out;
    for (const Syllable& s : w) {
        const Word& im = images.at(static_cast<std::size_t>(s.gen));
        for (std::int64_t k = 0; k < (s.exp < 0 ? -s.exp : s.exp); ++k) {
            if (s.exp > 0) {
                out.insert(out.end(), im.begin(), im.end());
            } else {
                for (auto it = im.rbegin(); it != im.rend(); ++it) out.push_back({it->gen, -it->exp});
            }
        }
    }
    return words::reduce(out, sig);
}

inline Automorphism identity_automorphism(const Signature& sig) {
    std::vector<Word> ims;
    for (int g = 0; g < sig.generator_count(); ++g) ims.push_back({{g, 1}});
    return {"id", ims, ims};
}

/// (f o g)(x) = f(g(x)).
inline Automorphism compose(const Automorphism& f, const Automorphism& g, const Signature& sig) {
    Automorphism h;
    h.name = f.name + "*" + g.name;
    for (const Word& w : g.images) h.images.push_back(substitute(f.images, w, sig));
    for (const Word& w : f.inverse_images) h.inverse_images.push_back(substitute(g.inverse_images, w, sig));
    return h;
}

inline Word apply(const Automorphism& f, const Word& w, const Signature& sig) {
    return substitute(f.images, w, sig);
}

inline words::CurveClass apply(const Automorphism& f, const words::CurveClass& cc, const FuchsianGroup& group,
                               const Tolerances& tol = kDefaultTolerances) {
    auto out = words::make_curve_class(apply(f, cc.canonical, group.signature), group, tol);
    if (cc.essential != out.essential || cc.primitive != out.primitive)
        throw Error(ErrorCode::InvalidArgument, "automorphism " + f.name + " changed curve flags of " + cc.key);
    return out;
}

/// Checks relator preservation, purity and inverse consistency; returns the
/// first failure or an empty string.
inline std::string validate(const Automorphism& f, const Signature& sig) {
    const Word rel = long_relator(sig);
    if (words::canonicalize(apply(f, rel, sig), sig) != words::canonicalize(rel, sig))
        return f.name + ": long relator not preserved";
    for (int g = 2 * sig.genus; g < sig.generator_count(); ++g) {
        const Word gw{{g, 1}};
        if (words::canonicalize(apply(f, gw, sig), sig) != words::canonicalize(gw, sig))
            return f.name + ": not pure on generator " + generator_names(sig)[static_cast<std::size_t>(g)];
    }
    for (int g = 0; g < sig.generator_count(); ++g) {
        const Word gw{{g, 1}};
        if (substitute(f.images, f.inverse_images[static_cast<std::size_t>(g)], sig) != gw ||
            substitute(f.inverse_images, f.images[static_cast<std::size_t>(g)], sig) != gw)
            return f.name + ": inverse images do not invert";
    }
    return {};
}

inline bool is_supported(const Signature& sig) {
    return (sig.genus == 1 && sig.cone_count() == 1 && sig.boundary == 0) ||
           (sig.genus == 0 && sig.cone_count() == 4 && sig.boundary == 0) ||
           (sig.genus == 2 && sig.cone_count() == 0 && sig.boundary == 0);
}

namespace detail {

inline Word w(std::initializer_list<Syllable> s) { return Word(s); }

// Artin generator sigma_i on four cone generators x0..x3 (0-based i).
inline Automorphism braid(int i, const Signature& sig) {
    Automorphism f = identity_automorphism(sig);
    f.name = "s" + std::to_string(i + 1);
    f.images[static_cast<std::size_t>(i)] = w({{i, 1}, {i + 1, 1}, {i, -1}});
    f.images[static_cast<std::size_t>(i + 1)] = w({{i, 1}});
    f.inverse_images[static_cast<std::size_t>(i)] = w({{i + 1, 1}});
    f.inverse_images[static_cast<std::size_t>(i + 1)] = w({{i + 1, -1}, {i, 1}, {i + 1, 1}});
    for (auto& im : f.images) im = words::reduce(im, sig);
    for (auto& im : f.inverse_images) im = words::reduce(im, sig);
    return f;
}

}  // namespace detail

/// Twist automorphisms generating the pure mapping class group (inverses are
/// applied by the orbit search separately).
inline std::vector<Automorphism> twist_generators(const Signature& sig) {
    if (!is_supported(sig))
        throw Error(ErrorCode::UnsupportedSignature, "no twist table for " + sig.label());
    using detail::w;
    std::vector<Automorphism> out;
    if (sig.genus == 1) {
        Automorphism t1 = identity_automorphism(sig), t2 = identity_automorphism(sig);
        t1.name = "Ta";
        t1.images[1] = w({{1, 1}, {0, 1}});
        t1.inverse_images[1] = w({{1, 1}, {0, -1}});
        t2.name = "Tb";
        t2.images[0] = w({{0, 1}, {1, -1}});
        t2.inverse_images[0] = w({{0, 1}, {1, 1}});
        out = {t1, t2};
    } else if (sig.genus == 0) {
        const Automorphism s1 = detail::braid(0, sig), s2 = detail::braid(1, sig);
        Automorphism t12 = compose(s1, s1, sig);
        Automorphism t23 = compose(s2, s2, sig);
        Automorphism t13 = compose(compose(s2, t12, sig), s2.inverse(), sig);
        t12.name = "T12";
        t23.name = "T23";
        t13.name = "T13";
        out = {t12, t23, t13};
    } else {
        // a1=0 b1=1 a2=2 b2=3; Tm twists along the curve joining the two handles
        Automorphism ta1 = identity_automorphism(sig), tb1 = ta1, tm = ta1, ta2 = ta1, tb2 = ta1;
        ta1.name = "Ta1";
        ta1.images[1] = w({{1, 1}, {0, 1}});
        ta1.inverse_images[1] = w({{1, 1}, {0, -1}});
        tb1.name = "Tb1";
        tb1.images[0] = w({{0, 1}, {1, -1}});
        tb1.inverse_images[0] = w({{0, 1}, {1, 1}});
        tm.name = "Tm";
        tm.images[1] = w({{0, -1}, {3, 1}, {1, 1}});
        tm.images[2] = w({{0, -1}, {3, 1}, {2, 1}});
        tm.inverse_images[1] = w({{3, -1}, {0, 1}, {1, 1}});
        tm.inverse_images[2] = w({{3, -1}, {0, 1}, {2, 1}});
        ta2.name = "Ta2";
        ta2.images[3] = w({{3, 1}, {2, 1}});
        ta2.inverse_images[3] = w({{3, 1}, {2, -1}});
        tb2.name = "Tb2";
        tb2.images[2] = w({{2, 1}, {3, -1}});
        tb2.inverse_images[2] = w({{2, 1}, {3, 1}});
        out = {ta1, tb1, tm, ta2, tb2};
    }
    for (const auto& f : out) {
        const std::string err = validate(f, sig);
        if (!err.empty()) throw Error(ErrorCode::InvalidArgument, "twist table rejected: " + err);
    }
    return out;
}

/// Representatives of Map/PMap: braids realizing each permutation of cone
/// points that preserves cone orders. Identity only when no such
/// permutation exists or the signature has at most one cone point.
inline std::vector<Automorphism> coset_representatives(const Signature& sig) {
    if (!is_supported(sig))
        throw Error(ErrorCode::UnsupportedSignature, "no coset table for " + sig.label());
    std::vector<Automorphism> reps{identity_automorphism(sig)};
    if (sig.cone_count() != 4) return reps;
    std::vector<int> perm{0, 1, 2, 3};
    const std::vector<Automorphism> s{detail::braid(0, sig), detail::braid(1, sig), detail::braid(2, sig)};
    while (std::next_permutation(perm.begin(), perm.end())) {
        bool ok = true;
        for (int i = 0; i < 4; ++i)
            ok = ok && sig.cones[static_cast<std::size_t>(i)] == sig.cones[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
        if (!ok) continue;
        // bubble sort the permutation into adjacent transpositions
        std::vector<int> p = perm;
        Automorphism f = identity_automorphism(sig);
        std::string name;
        for (int pass = 0; pass < 4; ++pass)
            for (int i = 0; i + 1 < 4; ++i)
                if (p[static_cast<std::size_t>(i)] > p[static_cast<std::size_t>(i + 1)]) {
                    std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(i + 1)]);
                    f = compose(f, s[static_cast<std::size_t>(i)], sig);
                    name += (name.empty() ? "" : "*") + s[static_cast<std::size_t>(i)].name;
                }
        f.name = name;
        reps.push_back(f);
    }
    return reps;
}

/// FNV-1a 64-bit hash of the signature text, as 16 hex digits.
inline std::string signature_hash(const Signature& sig) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : sig.text()) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct OrbitOptions {
    double slack = 1.0;          // first slack factor tried
    double slack_cap = 4.0;      // largest slack factor tried
    std::string checkpoint;      // streamed member file, empty for none
    std::string resume;          // checkpoint to resume from, empty for none
    std::size_t max_expansions = 0;  // simulated interruption, 0 for none
    unsigned threads = 1;
};

struct OrbitBall {
    std::string signature_hash;
    words::CurveClass seed;
    double L = 0.0;
    double slack = 1.0;
    std::vector<words::CurveClass> members;  // sorted by key
    std::vector<std::size_t> counts_per_slack;
    std::size_t visited = 0;
    std::size_t expanded = 0;
    std::size_t max_frontier = 0;
    bool stabilized = false;
    bool interrupted = false;
};

struct CheckpointData {
    std::string signature_hash;
    double L = 0.0;
    double slack = 1.0;
    std::vector<std::pair<std::string, double>> entries;
};

inline std::string checkpoint_header(const std::string& hash, double L, double slack) {
    return "orbicount-orbit v1 " + hash + " L=" + format_real(L) + " slack=" + format_real(slack);
}

inline CheckpointData read_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::CheckpointMismatch, "cannot open checkpoint " + path);
    CheckpointData d;
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::CheckpointMismatch, "empty checkpoint " + path);
    std::istringstream hs(line);
    std::string magic, version, lpart, spart;
    hs >> magic >> version >> d.signature_hash >> lpart >> spart;
    if (magic != "orbicount-orbit" || version != "v1" || lpart.rfind("L=", 0) != 0 || spart.rfind("slack=", 0) != 0)
        throw Error(ErrorCode::CheckpointMismatch, "bad checkpoint header: " + line);
    d.L = std::stod(lpart.substr(2));
    d.slack = std::stod(spart.substr(6));
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw Error(ErrorCode::CheckpointMismatch, "line " + std::to_string(lineno) + " has no tab");
        d.entries.emplace_back(line.substr(0, tab), std::stod(line.substr(tab + 1)));
    }
    return d;
}

inline void write_checkpoint(const std::string& path, const OrbitBall& ball, const Signature& sig) {
    std::ofstream out(path, std::ios::trunc);
    out << checkpoint_header(ball.signature_hash, ball.L, ball.slack) << '\n';
    for (const auto& m : ball.members)
        out << words::format_word(m.canonical, sig) << '\t' << format_real(m.length) << '\n';
    if (!out) throw Error(ErrorCode::CheckpointMismatch, "cannot write checkpoint " + path);
}

namespace detail {

struct PassResult {
    std::vector<words::CurveClass> members;
    std::size_t visited = 0;
    std::size_t expanded = 0;
    std::size_t max_frontier = 0;
    bool interrupted = false;
};

// Level-synchronous BFS; children of a level are computed (optionally in
// parallel) and merged in level order, so the result is schedule independent.
inline PassResult explore(const std::vector<words::CurveClass>& seeds, double L, double slack,
                          const FuchsianGroup& group, const std::vector<Automorphism>& moves,
                          const OrbitOptions& opt, std::ofstream* stream) {
    const Signature& sig = group.signature;
    PassResult res;
    std::unordered_set<std::string> seen;
    std::vector<words::CurveClass> level;
    auto admit = [&](const words::CurveClass& cc) {
        if (!seen.insert(cc.key).second) return false;
        if (cc.length <= L) {
            res.members.push_back(cc);
            if (stream) *stream << cc.key << '\t' << format_real(cc.length) << '\n';
        }
        return true;
    };
    for (const auto& s : seeds)
        if (admit(s)) level.push_back(s);

    const unsigned threads = std::max(1u, opt.threads);
    while (!level.empty()) {
        res.max_frontier = std::max(res.max_frontier, level.size());
        std::vector<std::size_t> expand;
        for (std::size_t i = 0; i < level.size(); ++i)
            if (level[i].length <= slack * L) expand.push_back(i);
        if (opt.max_expansions && res.expanded + expand.size() > opt.max_expansions) {
            expand.resize(opt.max_expansions - res.expanded);
            res.interrupted = true;
        }
        std::vector<std::vector<words::CurveClass>> children(expand.size());
        auto work = [&](std::size_t begin, std::size_t step) {
            for (std::size_t t = begin; t < expand.size(); t += step) {
                const auto& node = level[expand[t]];
                for (const auto& f : moves)
                    children[t].push_back(words::make_curve_class(apply(f, node.canonical, sig), group));
            }
        };
        if (threads == 1 || expand.size() < 64) {
            work(0, 1);
        } else {
            std::vector<std::jthread> pool;
            for (unsigned k = 0; k < threads; ++k) pool.emplace_back(work, k, threads);
        }
        res.expanded += expand.size();
        std::vector<words::CurveClass> next;
        for (auto& batch : children)
            for (auto& c : batch)
                if (admit(c)) next.push_back(std::move(c));
        if (res.interrupted) break;
        level = std::move(next);
    }
    res.visited = seen.size();
    std::sort(res.members.begin(), res.members.end(),
              [](const auto& x, const auto& y) { return x.key < y.key; });
    return res;
}

inline bool same_members(const std::vector<words::CurveClass>& x, const std::vector<words::CurveClass>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i].key != y[i].key) return false;
    return true;
}

}  // namespace detail

/// All twists and their inverses, in table order.
inline std::vector<Automorphism> moves_of(const std::vector<Automorphism>& autos) {
    std::vector<Automorphism> moves;
    for (const auto& f : autos) {
        moves.push_back(f);
        moves.push_back(f.inverse());
    }
    return moves;
}

/// Members of the orbit of seed with length at most L. The search is re-run
/// with slack s, s+1, ... until two consecutive slacks give the same member
/// set; exceeding the slack cap raises SlackCapReached.
inline OrbitBall orbit_ball(const words::CurveClass& seed, double L, const FuchsianGroup& group,
                            const std::vector<Automorphism>& autos, OrbitOptions opt = {},
                            const Tolerances& tol = kDefaultTolerances) {
    const Signature& sig = group.signature;
    if (!seed.essential || !seed.primitive)
        throw Error(ErrorCode::InvalidArgument, "seed " + seed.key + " must be essential and primitive");
    if (opt.slack < 1.0) throw Error(ErrorCode::InvalidArgument, "slack must be at least 1");

    OrbitBall ball;
    ball.signature_hash = signature_hash(sig);
    ball.seed = seed;
    ball.L = L;

    std::vector<words::CurveClass> seeds{seed};
    if (!opt.resume.empty()) {
        const CheckpointData d = read_checkpoint(opt.resume);
        if (d.signature_hash != ball.signature_hash)
            throw Error(ErrorCode::CheckpointMismatch, "checkpoint is for signature hash " + d.signature_hash);
        if (d.L != L)
            throw Error(ErrorCode::CheckpointMismatch, "checkpoint L=" + format_real(d.L) + " differs from " + format_real(L));
        opt.slack = std::max(opt.slack, d.slack);
        for (const auto& [key, len] : d.entries) {
            auto cc = words::make_curve_class(words::parse_word(key, sig), group, tol);
            if (std::abs(cc.length - len) > tol.length_match * std::max(1.0, len))
                throw Error(ErrorCode::CheckpointMismatch, "length of " + key + " does not verify");
            seeds.push_back(cc);
        }
    }

    const auto moves = moves_of(autos);
    std::vector<words::CurveClass> previous;
    bool have_previous = false;
    for (double s = opt.slack; s <= opt.slack_cap + 1e-12; s += 1.0) {
        std::ofstream stream;
        if (!opt.checkpoint.empty()) {
            stream.open(opt.checkpoint, std::ios::trunc);
            stream << checkpoint_header(ball.signature_hash, L, s) << '\n';
        }
        auto pass = detail::explore(seeds, L, s, group, moves, opt, stream.is_open() ? &stream : nullptr);
        stream.close();
        ball.counts_per_slack.push_back(pass.members.size());
        ball.visited = pass.visited;
        ball.expanded = pass.expanded;
        ball.max_frontier = pass.max_frontier;
        ball.slack = s;
        if (pass.interrupted) {
            ball.members = std::move(pass.members);
            ball.interrupted = true;
            return ball;
        }
        if (have_previous && detail::same_members(previous, pass.members)) {
            ball.members = std::move(pass.members);
            ball.stabilized = true;
            ball.slack = s - 1.0;
            if (!opt.checkpoint.empty()) write_checkpoint(opt.checkpoint, ball, sig);
            return ball;
        }
        previous = std::move(pass.members);
        have_previous = true;
    }
    std::string counts;
    for (auto c : ball.counts_per_slack) counts += (counts.empty() ? "" : ", ") + std::to_string(c);
    throw Error(ErrorCode::SlackCapReached,
                "member counts per slack [" + counts + "] did not stabilize by slack " + format_real(opt.slack_cap));
}

/// Map-orbit as the union of PMap-orbits of the coset images of the seed.
struct MapOrbit {
    std::vector<std::string> representatives;
    std::vector<std::size_t> per_coset_counts;
    std::vector<words::CurveClass> members;
    std::size_t distinct_pmap_orbits = 0;
};

inline MapOrbit map_orbit_ball(const words::CurveClass& seed, double L, const FuchsianGroup& group,
                               const std::vector<Automorphism>& autos, const OrbitOptions& opt = {}) {
    MapOrbit out;
    std::vector<std::vector<std::string>> orbit_keys;
    std::unordered_map<std::string, words::CurveClass> all;
    for (const auto& h : coset_representatives(group.signature)) {
        const auto image = apply(h, seed, group);
        auto ball = orbit_ball(image, L, group, autos, opt);
        out.representatives.push_back(h.name);
        out.per_coset_counts.push_back(ball.members.size());
        std::vector<std::string> keys;
        for (const auto& m : ball.members) {
            keys.push_back(m.key);
            all.emplace(m.key, m);
        }
        if (std::find(orbit_keys.begin(), orbit_keys.end(), keys) == orbit_keys.end()) orbit_keys.push_back(keys);
    }
    out.distinct_pmap_orbits = orbit_keys.size();
    for (auto& [k, v] : all) out.members.push_back(v);
    std::sort(out.members.begin(), out.members.end(), [](const auto& x, const auto& y) { return x.key < y.key; });
    return out;
}

}  // namespace orbicount::mcg
