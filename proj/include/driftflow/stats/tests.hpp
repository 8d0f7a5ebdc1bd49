#pragma once

// Two-sample and normality hypothesis tests, plus correlation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "driftflow/error.hpp"
#include "driftflow/log.hpp"
#include "driftflow/stats/distributions.hpp"

namespace driftflow::stats {

inline constexpr double kDefaultAlpha = 0.05;

enum class TestName { shapiro_wilk, ks_normality, welch_t, student_t, wilcoxon, f_variance, levene };

inline std::string_view to_string(TestName t) {
    switch (t) {
        case TestName::shapiro_wilk: return "shapiro_wilk";
        case TestName::ks_normality: return "ks_normality";
        case TestName::welch_t: return "welch_t";
        case TestName::student_t: return "student_t";
        case TestName::wilcoxon: return "wilcoxon";
        case TestName::f_variance: return "f_variance";
        case TestName::levene: return "levene";
    }
    return "?";
}

struct TestResult {
    TestName test_name;
    double statistic = 0.0;
    double p_value = 1.0;
    double alpha = kDefaultAlpha;
    bool reject = false;
    /// Set when a degenerate-input convention decided the outcome.
    bool flagged = false;
    std::string note;
};

namespace detail {

inline TestResult make_result(TestName name, double statistic, double p, double alpha) {
    TestResult r;
    r.test_name = name;
    r.statistic = statistic;
    r.p_value = std::clamp(p, 0.0, 1.0);
    r.alpha = alpha;
    r.reject = r.p_value < alpha;
    return r;
}

inline double mean(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Unbiased sample variance (two-pass).
inline double variance(std::span<const double> x) {
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return ss / static_cast<double>(x.size() - 1);
}

inline bool is_constant(std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}

inline void require_finite(std::span<const double> x, std::string_view who) {
    for (double v : x)
        if (!std::isfinite(v)) throw Error(std::string(who) + ": non-finite value in sample");
}

// Coefficients of c0 + c1 x + ... evaluated by Horner.
template <std::size_t N>
double poly(const double (&c)[N], double x) {
    double r = 0.0;
    for (std::size_t i = N; i-- > 0;) r = r * x + c[i];
    return r;
}

}  // namespace detail

/// Mid-ranks (1-based) with ties averaged.
inline std::vector<double> midranks(std::span<const double> x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return x[i] < x[j]; });
    std::vector<double> rank(x.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
        i = j + 1;
    }
    return rank;
}

// ---------------------------------------------------------------------------
// Normality

/// Shapiro-Wilk W with Royston's (1995) coefficient and p-value approximations (AS R94).
inline TestResult shapiro_wilk(std::span<const double> sample, double alpha = kDefaultAlpha) {
    const std::size_t n = sample.size();
    if (n < 3 || n > 5000) throw Error("shapiro_wilk: sample size must be in [3, 5000]");
    detail::require_finite(sample, "shapiro_wilk");
    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    if (x.front() == x.back()) throw DegenerateSampleError("shapiro_wilk on a constant sample");

    const std::size_t half = n / 2;
    std::vector<double> a(half);
    const double an = static_cast<double>(n);
    if (n == 3) {
        a[0] = std::sqrt(0.5);
    } else {
        static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
        static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
        std::vector<double> m(half);
        double summ2 = 0.0;
        for (std::size_t i = 0; i < half; ++i) {
            m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) / (an + 0.25));
            summ2 += m[i] * m[i];
        }
        summ2 *= 2.0;
        const double ssumm2 = std::sqrt(summ2);
        const double rsn = 1.0 / std::sqrt(an);
        const double a1 = detail::poly(c1, rsn) - m[0] / ssumm2;
        std::size_t first;
        double fac;
        if (n > 5) {
            first = 2;
            const double a2 = -m[1] / ssumm2 + detail::poly(c2, rsn);
            fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
            a[1] = a2;
        } else {
            first = 1;
            fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
        }
        a[0] = a1;
        for (std::size_t i = first; i < half; ++i) a[i] = -m[i] / fac;
    }

    const double mu = detail::mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - mu) * (v - mu);
    double num = 0.0;
    for (std::size_t i = 0; i < half; ++i) num += a[i] * (x[n - 1 - i] - x[i]);
    const double w = std::min(1.0, num * num / ss);

    double p;
    if (n == 3) {
        p = 6.0 / std::numbers::pi * (std::asin(std::sqrt(w)) - std::numbers::pi / 3.0);
        p = std::max(p, 0.0);
    } else {
        const double w1 = 1.0 - w;
        double y = std::log(w1);
        double m, s;
        if (n <= 11) {
            static constexpr double g[] = {-2.273, 0.459};
            static constexpr double c3[] = {0.544, -0.39978, 0.025054, -6.714e-4};
            static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
            const double gamma = detail::poly(g, an);
            if (y >= gamma) return detail::make_result(TestName::shapiro_wilk, w, 1e-99, alpha);
            y = -std::log(gamma - y);
            m = detail::poly(c3, an);
            s = std::exp(detail::poly(c4, an));
        } else {
            static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
            static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};
            const double xx = std::log(an);
            m = detail::poly(c5, xx);
            s = std::exp(detail::poly(c6, xx));
        }
        p = w1 > 0.0 ? normal_sf((y - m) / s) : 1.0;
    }
    return detail::make_result(TestName::shapiro_wilk, w, p, alpha);
}

/// Kolmogorov-Smirnov distance between the sample and a normal with the sample's mean and sd.
inline double lilliefors_statistic(std::span<const double> sample) {
    const std::size_t n = sample.size();
    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    const double mu = detail::mean(x);
    const double sd = std::sqrt(detail::variance(x));
    const double dn = static_cast<double>(n);
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = normal_cdf((x[i] - mu) / sd);
        d = std::max({d, static_cast<double>(i + 1) / dn - f, f - static_cast<double>(i) / dn});
    }
    return d;
}

/// Replicates used to tabulate the Lilliefors null distribution.
inline constexpr std::size_t kLillieforsReplicates = 100000;

/// Seed of the null table for sample size n. Replicate r draws n consecutive
/// standard normals from std::mt19937_64 via std::normal_distribution<double>.
constexpr std::uint64_t lilliefors_null_seed(std::size_t n) noexcept { return 0x5EED'11F0'0000ULL + n; }

namespace detail {

inline std::vector<double> simulate_lilliefors_null(std::size_t n) {
    std::mt19937_64 rng(lilliefors_null_seed(n));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> stats(kLillieforsReplicates);
    std::vector<double> draw(n);
    for (auto& s : stats) {
        for (auto& v : draw) v = normal(rng);
        s = lilliefors_statistic(draw);
    }
    std::sort(stats.begin(), stats.end());
    return stats;
}

}  // namespace detail

/// Sorted simulated null statistics for size n, computed once per process.
inline std::shared_ptr<const std::vector<double>> lilliefors_null(std::size_t n) {
    static std::mutex mutex;
    static std::map<std::size_t, std::shared_ptr<const std::vector<double>>> cache;
    {
        std::lock_guard lock(mutex);
        if (auto it = cache.find(n); it != cache.end()) return it->second;
    }
    auto table = std::make_shared<const std::vector<double>>(detail::simulate_lilliefors_null(n));
    std::lock_guard lock(mutex);
    return cache.emplace(n, std::move(table)).first->second;
}

/// KS normality test with estimated parameters; the p-value is the Monte-Carlo
/// Lilliefors tail probability P(D_null >= D).
inline TestResult ks_normality(std::span<const double> sample, double alpha = kDefaultAlpha) {
    if (sample.size() < 4) throw Error("ks_normality: need at least 4 observations");
    detail::require_finite(sample, "ks_normality");
    if (detail::is_constant(sample)) throw DegenerateSampleError("ks_normality on a constant sample");
    const double d = lilliefors_statistic(sample);
    const auto null = lilliefors_null(sample.size());
    const auto at_least = static_cast<double>(null->end() - std::lower_bound(null->begin(), null->end(), d));
    return detail::make_result(TestName::ks_normality, d, at_least / static_cast<double>(null->size()), alpha);
}

// ---------------------------------------------------------------------------
// Location

enum class TTestVariant { welch, pooled };

/// Two-sided two-sample t-test; Welch-Satterthwaite df unless `pooled` is requested.
inline TestResult welch_t(std::span<const double> a, std::span<const double> b, double alpha = kDefaultAlpha,
                          TTestVariant variant = TTestVariant::welch) {
    if (a.size() < 2 || b.size() < 2) throw Error("t-test: each sample needs at least 2 observations");
    detail::require_finite(a, "t-test");
    detail::require_finite(b, "t-test");
    const TestName name = variant == TTestVariant::welch ? TestName::welch_t : TestName::student_t;
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double ma = detail::mean(a), mb = detail::mean(b);
    const double va = detail::variance(a), vb = detail::variance(b);
    double se2, df;
    if (variant == TTestVariant::welch) {
        se2 = va / na + vb / nb;
        const double qa = va / na, qb = vb / nb;
        df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    } else {
        df = na + nb - 2.0;
        const double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
        se2 = pooled * (1.0 / na + 1.0 / nb);
    }
    if (se2 == 0.0) {
        TestResult r;
        if (ma == mb) {
            r = detail::make_result(name, 0.0, 1.0, alpha);
            r.note = "both samples constant and equal";
        } else {
            r = detail::make_result(name, ma > mb ? INFINITY : -INFINITY, 0.0, alpha);
            r.note = "both samples constant and unequal";
            log_warning("t-test on two constant, unequal samples: rejecting with p = 0");
        }
        r.flagged = true;
        return r;
    }
    const double t = (ma - mb) / std::sqrt(se2);
    return detail::make_result(name, t, student_t_two_sided(t, df), alpha);
}

/// Largest combined size for which the rank-sum test uses the exact permutation distribution.
inline constexpr std::size_t kWilcoxonExactMaxPerSample = 20;

namespace detail {

// Exact two-sided permutation p-value of the rank sum of group a, ties included.
// Works on doubled mid-ranks so every rank is an integer.
inline double wilcoxon_exact_p(const std::vector<double>& ranks, std::size_t na) {
    const std::size_t n = ranks.size();
    std::vector<int> r2(n);
    int total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        r2[i] = static_cast<int>(std::lround(2.0 * ranks[i]));
        total += r2[i];
    }
    // dp[k][s]: number of k-subsets with doubled rank sum s.
    std::vector<std::vector<double>> dp(na + 1, std::vector<double>(static_cast<std::size_t>(total) + 1, 0.0));
    dp[0][0] = 1.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = std::min(na, i + 1); k >= 1; --k)
            for (int s = total; s >= r2[i]; --s) dp[k][static_cast<std::size_t>(s)] += dp[k - 1][static_cast<std::size_t>(s - r2[i])];
    int observed = 0;
    for (std::size_t i = 0; i < na; ++i) observed += r2[i];
    const auto center2 = static_cast<long>(na) * static_cast<long>(n + 1);  // doubled E[rank sum]
    const long dev = std::labs(observed - center2);
    double hit = 0.0, all = 0.0;
    for (int s = 0; s <= total; ++s) {
        const double c = dp[na][static_cast<std::size_t>(s)];
        all += c;
        if (std::labs(s - center2) >= dev) hit += c;
    }
    return hit / all;
}

}  // namespace detail

/// Two-sided Wilcoxon rank-sum (Mann-Whitney U) test. Exact when both samples
/// have at most kWilcoxonExactMaxPerSample observations, otherwise a normal
/// approximation with continuity and tie corrections. The statistic is U of `a`.
inline TestResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b,
                                    double alpha = kDefaultAlpha) {
    if (a.empty() || b.empty()) throw Error("wilcoxon: each sample needs at least 1 observation");
    detail::require_finite(a, "wilcoxon");
    detail::require_finite(b, "wilcoxon");
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranks = midranks(pooled);
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) rank_sum += ranks[i];
    const double u = rank_sum - na * (na + 1.0) / 2.0;

    if (detail::is_constant(pooled)) {
        auto r = detail::make_result(TestName::wilcoxon, u, 1.0, alpha);
        r.flagged = true;
        r.note = "all values tied";
        return r;
    }
    if (a.size() <= kWilcoxonExactMaxPerSample && b.size() <= kWilcoxonExactMaxPerSample)
        return detail::make_result(TestName::wilcoxon, u, detail::wilcoxon_exact_p(ranks, a.size()), alpha);

    const double n = na + nb;
    std::map<double, int> ties;
    for (double v : pooled) ++ties[v];
    double tie_term = 0.0;
    for (const auto& [v, t] : ties) tie_term += static_cast<double>(t) * t * t - t;
    const double sigma = std::sqrt(na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0))));
    const double dev = u - na * nb / 2.0;
    const double correction = dev > 0 ? 0.5 : (dev < 0 ? -0.5 : 0.0);
    const double z = (dev - correction) / sigma;
    const double p = 2.0 * std::min(normal_cdf(z), normal_sf(z));
    return detail::make_result(TestName::wilcoxon, u, p, alpha);
}

// ---------------------------------------------------------------------------
// Spread

/// Two-sided F test on var(a)/var(b).
inline TestResult f_variance(std::span<const double> a, std::span<const double> b, double alpha = kDefaultAlpha) {
    if (a.size() < 2 || b.size() < 2) throw Error("f_variance: each sample needs at least 2 observations");
    detail::require_finite(a, "f_variance");
    detail::require_finite(b, "f_variance");
    const double va = detail::variance(a), vb = detail::variance(b);
    if (va == 0.0 || vb == 0.0) throw DegenerateSampleError("f_variance with zero variance");
    const double f = va / vb;
    const double d1 = static_cast<double>(a.size() - 1), d2 = static_cast<double>(b.size() - 1);
    const double p = std::min(1.0, 2.0 * std::min(f_cdf(f, d1, d2), f_sf(f, d1, d2)));
    return detail::make_result(TestName::f_variance, f, p, alpha);
}

enum class LeveneCenter { mean, median };

/// Levene's test for equal variances (classic mean-centered by default).
inline TestResult levene(std::span<const double> a, std::span<const double> b, double alpha = kDefaultAlpha,
                         LeveneCenter center = LeveneCenter::mean) {
    if (a.size() < 3 || b.size() < 3) throw Error("levene: each sample needs at least 3 observations");
    detail::require_finite(a, "levene");
    detail::require_finite(b, "levene");
    auto deviations = [center](std::span<const double> x) {
        double c;
        if (center == LeveneCenter::mean) {
            c = detail::mean(x);
        } else {
            std::vector<double> s(x.begin(), x.end());
            std::sort(s.begin(), s.end());
            const std::size_t m = s.size();
            c = m % 2 ? s[m / 2] : 0.5 * (s[m / 2 - 1] + s[m / 2]);
        }
        std::vector<double> z;
        z.reserve(x.size());
        for (double v : x) z.push_back(std::abs(v - c));
        return z;
    };
    const auto za = deviations(a), zb = deviations(b);
    const double na = static_cast<double>(za.size()), nb = static_cast<double>(zb.size());
    const double ma = detail::mean(za), mb = detail::mean(zb);
    const double grand = (na * ma + nb * mb) / (na + nb);
    const double between = na * (ma - grand) * (ma - grand) + nb * (mb - grand) * (mb - grand);
    double within = 0.0;
    for (double v : za) within += (v - ma) * (v - ma);
    for (double v : zb) within += (v - mb) * (v - mb);
    const double d2 = na + nb - 2.0;
    if (within == 0.0) {
        if (between == 0.0) {
            auto r = detail::make_result(TestName::levene, 0.0, 1.0, alpha);
            r.flagged = true;
            r.note = "all absolute deviations equal";
            return r;
        }
        auto r = detail::make_result(TestName::levene, INFINITY, 0.0, alpha);
        r.flagged = true;
        r.note = "zero within-group spread of deviations";
        return r;
    }
    const double w = between / (within / d2);
    return detail::make_result(TestName::levene, w, f_sf(w, 1.0, d2), alpha);
}

// ---------------------------------------------------------------------------
// Correlation

struct Correlation {
    double r = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

/// Pearson r with a two-sided p from t = r sqrt((n-2)/(1-r^2)).
inline Correlation pearson_correlation(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error("pearson_correlation: length mismatch");
    if (x.size() < 3) throw Error("pearson_correlation: need at least 3 pairs");
    detail::require_finite(x, "pearson_correlation");
    detail::require_finite(y, "pearson_correlation");
    if (detail::is_constant(x) || detail::is_constant(y)) throw Error("undefined correlation: constant vector");
    const double mx = detail::mean(x), my = detail::mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Correlation c;
    c.n = x.size();
    c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double df = static_cast<double>(x.size()) - 2.0;
    if (std::abs(c.r) >= 1.0) {
        c.p_value = 0.0;
    } else {
        const double t = c.r * std::sqrt(df / (1.0 - c.r * c.r));
        c.p_value = student_t_two_sided(t, df);
    }
    return c;
}

/// Spearman rank correlation: Pearson on mid-ranks.
inline Correlation spearman_correlation(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error("spearman_correlation: length mismatch");
    const auto rx = midranks(x), ry = midranks(y);
    return pearson_correlation(rx, ry);
}

}  // namespace driftflow::stats
