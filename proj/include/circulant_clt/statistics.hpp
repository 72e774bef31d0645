/*
   Copyright 2026 The circulant_clt Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace circulant_clt {

[[nodiscard]] inline double normal_cdf(double x, double sd = 1.0) {
    return 0.5 * std::erfc(-x / (sd * std::numbers::sqrt2));
}

/// Survival function of chi-square with 2 degrees of freedom.
[[nodiscard]] inline double chi2_2_sf(double x) { return x <= 0.0 ? 1.0 : std::exp(-0.5 * x); }

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

/// Delete-block jackknife. `statistic(skip_begin, skip_end)` must evaluate the
/// estimator on all replicates outside [skip_begin, skip_end); (0, 0) means
/// the full sample. Blocks are contiguous in replicate order.
[[nodiscard]] inline Estimate jackknife(std::size_t replicates, std::size_t blocks,
                                        const std::function<double(std::size_t, std::size_t)>& statistic) {
    if (replicates < 2) throw std::invalid_argument("jackknife: need at least 2 replicates");
    blocks = std::clamp<std::size_t>(blocks, 2, replicates);
    Estimate e;
    e.value = statistic(0, 0);
    std::vector<double> leave_out(blocks);
    for (std::size_t b = 0; b < blocks; ++b) {
        const std::size_t lo = b * replicates / blocks;
        const std::size_t hi = (b + 1) * replicates / blocks;
        leave_out[b] = statistic(lo, hi);
    }
    double mean = 0.0;
    for (double v : leave_out) mean += v;
    mean /= static_cast<double>(blocks);
    double ss = 0.0;
    for (double v : leave_out) ss += (v - mean) * (v - mean);
    e.se = std::sqrt(ss * static_cast<double>(blocks - 1) / static_cast<double>(blocks));
    return e;
}

inline constexpr std::size_t kJackknifeBlocks = 100;

/// Mean of prod_i (x_i - mean(x_i)) over replicates outside [skip_begin, skip_end),
/// each factor centered on the same subsample. With two factors and
/// `unbiased` set this is the sample covariance with denominator N-1.
[[nodiscard]] inline double centered_product_mean(const std::vector<std::span<const double>>& factors,
                                                  std::size_t skip_begin, std::size_t skip_end,
                                                  bool unbiased = false) {
    if (factors.empty()) throw std::invalid_argument("centered_product_mean: no factors");
    const std::size_t R = factors.front().size();
    const double count = static_cast<double>(R - (skip_end - skip_begin));
    std::vector<double> means(factors.size(), 0.0);
    for (std::size_t f = 0; f < factors.size(); ++f) {
        double s = 0.0;
        for (std::size_t r = 0; r < R; ++r) {
            if (r >= skip_begin && r < skip_end) continue;
            s += factors[f][r];
        }
        means[f] = s / count;
    }
    double acc = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
        if (r >= skip_begin && r < skip_end) continue;
        double prod = 1.0;
        for (std::size_t f = 0; f < factors.size(); ++f) prod *= factors[f][r] - means[f];
        acc += prod;
    }
    return acc / (unbiased && factors.size() == 2 ? count - 1.0 : count);
}

/// Sample covariance with jackknife standard error.
[[nodiscard]] inline Estimate covariance_estimate(std::span<const double> a, std::span<const double> b,
                                                  std::size_t blocks = kJackknifeBlocks) {
    if (a.size() != b.size()) throw std::invalid_argument("covariance_estimate: size mismatch");
    const std::vector<std::span<const double>> f{a, b};
    return jackknife(a.size(), blocks,
                     [&](std::size_t lo, std::size_t hi) { return centered_product_mean(f, lo, hi, true); });
}

/// E[prod_i x_i] of empirically centered samples, with jackknife standard error.
[[nodiscard]] inline Estimate joint_moment_estimate(const std::vector<std::span<const double>>& factors,
                                                    std::size_t blocks = kJackknifeBlocks) {
    return jackknife(factors.front().size(), blocks, [&](std::size_t lo, std::size_t hi) {
        return centered_product_mean(factors, lo, hi, false);
    });
}

struct ShapeStatistics {
    double mean = 0.0;
    double variance = 0.0;  ///< denominator N
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
};

[[nodiscard]] inline ShapeStatistics shape_statistics(std::span<const double> x) {
    const double N = static_cast<double>(x.size());
    ShapeStatistics s;
    for (double v : x) s.mean += v;
    s.mean /= N;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double v : x) {
        const double d = v - s.mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= N;
    m3 /= N;
    m4 /= N;
    s.variance = m2;
    if (m2 > 0.0) {
        s.skewness = m3 / std::pow(m2, 1.5);
        s.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return s;
}

/// One-sample Kolmogorov-Smirnov distance to N(0, variance).
[[nodiscard]] inline double ks_distance_normal(std::span<const double> x, double variance) {
    if (!(variance > 0.0)) throw std::invalid_argument("ks_distance_normal: variance must be positive");
    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    const double N = static_cast<double>(sorted.size());
    const double sd = std::sqrt(variance);
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double F = normal_cdf(sorted[i], sd);
        d = std::max({d, static_cast<double>(i + 1) / N - F, F - static_cast<double>(i) / N});
    }
    return d;
}

inline constexpr std::size_t kMinNormalitySamples = 1000;
inline constexpr double kJarqueBeraAlpha = 0.01;
inline constexpr double kKsCoefficient = 1.63;

struct NormalityVerdict {
    std::size_t samples = 0;
    double theory_variance = 0.0;
    double skewness = 0.0;
    double skewness_z = 0.0;
    double excess_kurtosis = 0.0;
    double kurtosis_z = 0.0;
    double jarque_bera = 0.0;
    double jb_pvalue = 0.0;
    double ks_distance = 0.0;
    double ks_band = 0.0;
    bool pass = false;
};

/// Passes iff the Jarque-Bera p-value is >= 0.01 and the KS distance to
/// N(0, theory_variance) is within 1.63/sqrt(R).
[[nodiscard]] inline NormalityVerdict normality_verdict(std::span<const double> samples,
                                                        double theory_variance) {
    if (samples.size() < kMinNormalitySamples) {
        throw std::invalid_argument("normality_verdict: need at least " +
                                    std::to_string(kMinNormalitySamples) + " samples, got " +
                                    std::to_string(samples.size()));
    }
    if (!(theory_variance > 0.0)) {
        throw std::invalid_argument("normality_verdict: theory variance must be positive");
    }
    const double N = static_cast<double>(samples.size());
    const ShapeStatistics shape = shape_statistics(samples);
    NormalityVerdict v;
    v.samples = samples.size();
    v.theory_variance = theory_variance;
    v.skewness = shape.skewness;
    v.excess_kurtosis = shape.excess_kurtosis;
    v.skewness_z = shape.skewness / std::sqrt(6.0 / N);
    v.kurtosis_z = shape.excess_kurtosis / std::sqrt(24.0 / N);
    v.jarque_bera = N / 6.0 * (shape.skewness * shape.skewness +
                               0.25 * shape.excess_kurtosis * shape.excess_kurtosis);
    v.jb_pvalue = chi2_2_sf(v.jarque_bera);
    v.ks_distance = ks_distance_normal(samples, theory_variance);
    v.ks_band = kKsCoefficient / std::sqrt(N);
    v.pass = v.jb_pvalue >= kJarqueBeraAlpha && v.ks_distance <= v.ks_band;
    return v;
}

}  // namespace circulant_clt
