#pragma once

// Counting functions N(L) over orbit balls, log-log exponent fits and the
// homogeneity ratio N(tL) / (t^e N(L)).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "orbicount/config.hpp"
#include "orbicount/error.hpp"
#include "orbicount/hypgeom.hpp"
#include "orbicount/mcg.hpp"
#include "orbicount/words.hpp"

namespace orbicount::counting {

enum class Functional { HyperbolicLength, WordLength };

inline const char* functional_name(Functional f) { return f == Functional::HyperbolicLength ? "hyp" : "word"; }

inline Functional parse_functional(const std::string& s) {
    if (s == "hyp") return Functional::HyperbolicLength;
    if (s == "word") return Functional::WordLength;
    throw Error(ErrorCode::InvalidArgument, "functional must be hyp or word, got '" + s + "'");
}

struct CountCurve {
    std::vector<double> grid;
    std::vector<std::int64_t> counts;
    Functional functional = Functional::HyperbolicLength;
};

struct FitReport {
    double exponent = 0.0;
    double constant = 0.0;
    double log_constant = 0.0;
    double residual = 0.0;  // RMS of log N residuals
    double window_lo = 0.0;
    double window_hi = 0.0;
    std::size_t points = 0;
};

/// Syllable-weighted letter count of the canonical word.
inline std::int64_t word_length_functional(const words::CurveClass& cc) { return words::word_length(cc.canonical); }

/// Largest displacement d(i, s i) over generators; every class satisfies
/// length <= (word length) * lambda.
inline double displacement_bound(const FuchsianGroup& group) {
    const hyp::PlanePoint o(0.0, 1.0);
    double lam = 0.0;
    for (const auto& g : group.generators) lam = std::max(lam, hyp::dist(o, hyp::apply(g, o)));
    return lam;
}

/// Sorted functional values with a counting query.
class Counter {
public:
    explicit Counter(std::vector<double> values) : v_(std::move(values)) { std::sort(v_.begin(), v_.end()); }
    std::int64_t operator()(double x) const {
        return static_cast<std::int64_t>(std::upper_bound(v_.begin(), v_.end(), x) - v_.begin());
    }
    const std::vector<double>& values() const { return v_; }

private:
    std::vector<double> v_;
};

inline std::vector<double> functional_values(const std::vector<words::CurveClass>& members, Functional f) {
    std::vector<double> out;
    out.reserve(members.size());
    for (const auto& m : members)
        out.push_back(f == Functional::HyperbolicLength ? m.length : static_cast<double>(word_length_functional(m)));
    return out;
}

/// Largest functional value for which the ball is complete: L itself for
/// lengths, L / lambda for word length.
inline double functional_limit(double L, Functional f, const FuchsianGroup& group) {
    return f == Functional::HyperbolicLength ? L : L / displacement_bound(group);
}

/// L_i = L0 q^i for i < n.
inline std::vector<double> geometric_grid(double L0, double q, int n) {
    if (!(L0 > 0.0) || !(q > 1.0) || n < 1)
        throw Error(ErrorCode::InvalidArgument, "grid needs L0 > 0, q > 1, n >= 1");
    std::vector<double> g;
    for (int i = 0; i < n; ++i) g.push_back(L0 * std::pow(q, i));
    return g;
}

/// Parses `L0:q:n`.
inline std::vector<double> parse_grid(const std::string& text) {
    std::istringstream in(text);
    std::string a, b, c;
    if (!std::getline(in, a, ':') || !std::getline(in, b, ':') || !std::getline(in, c) )
        throw Error(ErrorCode::InvalidArgument, "grid must be L0:q:n, got '" + text + "'");
    try {
        return geometric_grid(std::stod(a), std::stod(b), std::stoi(c));
    } catch (const std::logic_error&) {
        throw Error(ErrorCode::InvalidArgument, "grid must be L0:q:n, got '" + text + "'");
    }
}

inline CountCurve count_values(const Counter& counter, const std::vector<double>& grid, double limit, Functional f) {
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw Error(ErrorCode::InvalidArgument, "grid must be strictly increasing");
    if (!grid.empty() && grid.back() > limit * (1.0 + 1e-12))
        throw Error(ErrorCode::GridExceedsBall, "grid max " + mcg::format_real(grid.back()) +
                                                    " exceeds complete range " + mcg::format_real(limit));
    CountCurve c;
    c.grid = grid;
    c.functional = f;
    for (double x : grid) c.counts.push_back(counter(x));
    return c;
}

/// N(L_i) = #{members with functional <= L_i}.
inline CountCurve count_curve(const mcg::OrbitBall& ball, const std::vector<double>& grid, const FuchsianGroup& group,
                              Functional f = Functional::HyperbolicLength) {
    return count_values(Counter(functional_values(ball.members, f)), grid, functional_limit(ball.L, f, group), f);
}

/// Least squares of log N on log L over grid points in [lo, hi] with N > 0.
/// The window edges absorb relative rounding so grid points printed as 200 still match.
inline FitReport fit_exponent(const CountCurve& curve, double lo = 0.0, double hi = HUGE_VAL) {
    std::vector<double> xs, ys;
    FitReport r;
    r.window_lo = HUGE_VAL;
    r.window_hi = 0.0;
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        const double L = curve.grid[i];
        if (L < lo * (1.0 - 1e-12) || L > hi * (1.0 + 1e-12) || curve.counts[i] <= 0) continue;
        xs.push_back(std::log(L));
        ys.push_back(std::log(static_cast<double>(curve.counts[i])));
        r.window_lo = std::min(r.window_lo, L);
        r.window_hi = std::max(r.window_hi, L);
    }
    r.points = xs.size();
    if (xs.size() < 4)
        throw Error(ErrorCode::InsufficientData, "need at least 4 grid points with N > 0, have " + std::to_string(xs.size()));
    const double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    // compared on the integers: the mean of equal logs need not round back exactly
    if (std::all_of(ys.begin(), ys.end(), [&](double y) { return y == ys.front(); }))
        throw Error(ErrorCode::InsufficientData, "counts are constant on the window");
    if (sxx == 0.0) throw Error(ErrorCode::InsufficientData, "grid has no spread on the window");
    r.exponent = sxy / sxx;
    r.log_constant = my - r.exponent * mx;
    r.constant = std::exp(r.log_constant);
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ys[i] - (r.log_constant + r.exponent * xs[i]);
        ss += e * e;
    }
    r.residual = std::sqrt(ss / n);
    return r;
}

struct HomogeneityReport {
    double t = 2.0;
    int exponent = 2;
    std::vector<double> base;
    std::vector<double> ratios;
    double final_third_mean = 0.0;
    double tolerance = 0.25;
    bool pass = false;
};

/// Ratios N(t L_i) / (t^e N(L_i)); PASS when the mean over the final third
/// lies within [1 - tol, 1 + tol].
inline HomogeneityReport homogeneity_check(const Counter& counter, const std::vector<double>& base, double t, int e,
                                           double limit, double tol = kDefaultTolerances.homogeneity) {
    if (!(t > 1.0)) throw Error(ErrorCode::InvalidArgument, "homogeneity needs t > 1");
    HomogeneityReport r;
    r.t = t;
    r.exponent = e;
    r.tolerance = tol;
    for (double L : base) {
        if (t * L > limit * (1.0 + 1e-12))
            throw Error(ErrorCode::GridExceedsBall, "t*L = " + mcg::format_real(t * L) + " beyond " + mcg::format_real(limit));
        const auto n = counter(L);
        if (n == 0) continue;
        r.base.push_back(L);
        r.ratios.push_back(static_cast<double>(counter(t * L)) / (std::pow(t, e) * static_cast<double>(n)));
    }
    if (r.ratios.size() < 3) throw Error(ErrorCode::InsufficientData, "fewer than 3 usable homogeneity points");
    const std::size_t start = r.ratios.size() - r.ratios.size() / 3;
    double s = 0.0;
    for (std::size_t i = start; i < r.ratios.size(); ++i) s += r.ratios[i];
    r.final_third_mean = s / static_cast<double>(r.ratios.size() - start);
    r.pass = std::abs(r.final_third_mean - 1.0) <= tol;
    return r;
}

inline std::string to_csv(const CountCurve& c) {
    std::string s = "L,count,functional\n";
    for (std::size_t i = 0; i < c.grid.size(); ++i)
        s += mcg::format_real(c.grid[i]) + "," + std::to_string(c.counts[i]) + "," + functional_name(c.functional) + "\n";
    return s;
}

/// Parses the CSV written by to_csv.
inline CountCurve from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("L,count", 0) != 0)
        throw Error(ErrorCode::InvalidArgument, "CSV must start with header L,count,functional");
    CountCurve c;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string a, b, f;
        if (!std::getline(ls, a, ',') || !std::getline(ls, b, ','))
            throw Error(ErrorCode::InvalidArgument, "CSV line " + std::to_string(lineno) + " is malformed");
        std::getline(ls, f);
        try {
            c.grid.push_back(std::stod(a));
            c.counts.push_back(std::stoll(b));
        } catch (const std::logic_error&) {
            throw Error(ErrorCode::InvalidArgument, "CSV line " + std::to_string(lineno) + " is malformed");
        }
        if (!f.empty()) c.functional = parse_functional(f);
    }
    return c;
}

inline nlohmann::json to_json(const FitReport& r, bool stabilized) {
    return {{"exponent", r.exponent},
            {"constant", r.constant},
            {"residual", r.residual},
            {"window", {r.window_lo, r.window_hi}},
            {"points", r.points},
            {"stabilized", stabilized}};
}

}  // namespace orbicount::counting
