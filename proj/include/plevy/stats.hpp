#pragma once
// Small statistics toolbox for the Monte Carlo harnesses: mean/standard
// error, batch means for correlated series, a Kolmogorov-Smirnov test, the
// Spearman trend test with exact permutation p-values for short sequences,
// and a paired slope test across refinement levels.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

#include "plevy/errors.hpp"

namespace plevy {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

inline MeanSe mean_se(const std::vector<double>& xs) {
    MeanSe out;
    out.n = xs.size();
    if (xs.empty()) return out;
    out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    if (xs.size() < 2) return out;
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / (xs.size() - 1) / xs.size());
    return out;
}

// Standard error of the mean of a serially correlated series via batch means.
inline double batch_means_se(const std::vector<double>& series, int n_batches = 16) {
    const std::size_t n = series.size();
    if (n < 4) return mean_se(series).se;
    n_batches = std::min<int>(n_batches, static_cast<int>(n / 2));
    const std::size_t m = n / n_batches;
    std::vector<double> batches;
    batches.reserve(n_batches);
    for (int b = 0; b < n_batches; ++b) {
        double s = 0.0;
        for (std::size_t i = b * m; i < (b + 1) * m; ++i) s += series[i];
        batches.push_back(s / m);
    }
    return mean_se(batches).se;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov one-sample test against a supplied CDF.
// ---------------------------------------------------------------------------

inline double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

inline double ks_pvalue(double d, std::size_t n) {
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
        sum += term;
        if (std::abs(term) < 1e-12) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Spearman rank correlation against the index 0..n-1, with a one-sided
// permutation p-value for a negative trend (exact for n <= 8).
// ---------------------------------------------------------------------------

struct SpearmanResult {
    double rho = 0.0;
    double p_negative = 1.0;  // P(rho_perm <= rho_observed)
};

namespace detail {

inline std::vector<double> ranks(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> r(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[idx[j + 1]] == xs[idx[i]]) ++j;
        const double avg = 0.5 * (i + j) + 1.0;  // average rank for ties
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace detail

inline SpearmanResult spearman_negative_trend(const std::vector<double>& values) {
    const std::size_t n = values.size();
    SpearmanResult out;
    if (n < 3) return out;
    std::vector<double> index(n);
    std::iota(index.begin(), index.end(), 0.0);
    const std::vector<double> rv = detail::ranks(values);
    out.rho = detail::pearson(index, rv);

    if (n <= 8) {
        // Exact permutation distribution of the rank correlation.
        std::vector<double> perm = rv;
        std::sort(perm.begin(), perm.end());
        std::size_t le = 0, total = 0;
        do {
            ++total;
            if (detail::pearson(index, perm) <= out.rho + 1e-12) ++le;
        } while (std::next_permutation(perm.begin(), perm.end()));
        out.p_negative = static_cast<double>(le) / total;
    } else {
        // Normal approximation.
        const double z = out.rho * std::sqrt(static_cast<double>(n - 1));
        out.p_negative = 0.5 * std::erfc(-z / std::sqrt(2.0));
    }
    return out;
}

// Ratio of means of paired samples with an influence-function standard error.
inline MeanSe paired_ratio(const std::vector<double>& num, const std::vector<double>& den) {
    if (num.size() != den.size() || num.empty()) throw DataError("paired_ratio: size mismatch");
    const double mean_num = std::accumulate(num.begin(), num.end(), 0.0) / num.size();
    const double mean_den = std::accumulate(den.begin(), den.end(), 0.0) / den.size();
    MeanSe out;
    out.n = num.size();
    out.mean = mean_num / mean_den;
    if (num.size() < 2) return out;
    double ss = 0.0;
    for (std::size_t i = 0; i < num.size(); ++i) {
        const double infl = (num[i] - out.mean * den[i]) / mean_den;
        ss += infl * infl;
    }
    out.se = std::sqrt(ss / (num.size() - 1) / num.size());
    return out;
}

// ---------------------------------------------------------------------------
// Paired trend across levels: least-squares slope per path, then a one-sided
// t-test of "mean slope <= 0". Used by the refinement certificate.
// ---------------------------------------------------------------------------

struct PairedSlopeTest {
    double mean_slope = 0.0;
    double se = 0.0;
    double tstat = 0.0;
    bool significant_upward = false;  // at the 95% one-sided level
};

// Slope test on independent level estimates carrying their own standard
// errors: least-squares slope against the level index, error propagated from
// the per-level se's.
struct LevelSlopeTest {
    double slope = 0.0;
    double se = 0.0;
    double tstat = 0.0;
    bool significant_upward = false;
};

inline LevelSlopeTest slope_test_independent(const std::vector<double>& estimates,
                                             const std::vector<double>& ses) {
    LevelSlopeTest out;
    const std::size_t n = estimates.size();
    if (n < 2 || ses.size() != n) return out;
    const double mean_x = 0.5 * (n - 1);
    double sxx = 0.0;
    for (std::size_t l = 0; l < n; ++l) sxx += (l - mean_x) * (l - mean_x);
    double slope = 0.0, var = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        const double w = (l - mean_x) / sxx;
        slope += w * estimates[l];
        var += w * w * ses[l] * ses[l];
    }
    out.slope = slope;
    out.se = std::sqrt(var);
    out.tstat = out.se > 0.0 ? slope / out.se : (slope > 0.0 ? 1e9 : 0.0);
    out.significant_upward = out.tstat > 1.645;
    return out;
}

inline PairedSlopeTest paired_slope_test(const std::vector<std::vector<double>>& per_path_levels) {
    PairedSlopeTest out;
    if (per_path_levels.empty()) return out;
    const std::size_t levels = per_path_levels.front().size();
    if (levels < 2) return out;
    std::vector<double> slopes;
    slopes.reserve(per_path_levels.size());
    const double mean_x = 0.5 * (levels - 1);
    double sxx = 0.0;
    for (std::size_t l = 0; l < levels; ++l) sxx += (l - mean_x) * (l - mean_x);
    for (const auto& ys : per_path_levels) {
        if (ys.size() != levels) throw DataError("paired_slope_test: ragged level data");
        double sxy = 0.0, my = 0.0;
        for (double y : ys) my += y;
        my /= levels;
        for (std::size_t l = 0; l < levels; ++l) sxy += (l - mean_x) * (ys[l] - my);
        slopes.push_back(sxy / sxx);
    }
    const MeanSe ms = mean_se(slopes);
    out.mean_slope = ms.mean;
    out.se = ms.se;
    out.tstat = ms.se > 0.0 ? ms.mean / ms.se : (ms.mean > 0.0 ? 1e9 : 0.0);
    out.significant_upward = out.tstat > 1.645 && slopes.size() >= 2;
    return out;
}

}  // namespace plevy
