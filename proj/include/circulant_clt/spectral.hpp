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

#include <cmath>
#include <cstring>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace circulant_clt {

/// Neumaier-compensated accumulator. Used wherever high powers of
/// eigenvalues are summed, because cancellation grows with the power.
class CompensatedSum {
public:
    void add(double v) noexcept {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) {
            carry_ += (sum_ - t) + v;
        } else {
            carry_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    [[nodiscard]] double value() const noexcept { return sum_ + carry_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

/// Largest index j for which x_j enters the cosine sum of the eigenvalue
/// formula: (n-1)/2 for odd n, n/2-1 for even n. For even n the entry
/// x_{n/2} is carried separately with the alternating sign (-1)^l.
[[nodiscard]] constexpr std::size_t cosine_terms(std::size_t n) noexcept {
    return n % 2 == 1 ? (n - 1) / 2 : (n == 0 ? 0 : n / 2 - 1);
}

/// Symmetric circulant matrix of order n held implicitly through its
/// first-row parameters x_0 .. x_{floor(n/2)}. Entry (i, j) of the
/// implied matrix is x_d with d = min(|i-j|, n-|i-j|).
class SpectralMatrix {
public:
    SpectralMatrix(std::size_t n, std::vector<double> x) : n_(n), x_(std::move(x)) {
        if (n_ == 0) {
            throw std::invalid_argument("SpectralMatrix: order n must be positive");
        }
        if (x_.size() != n_ / 2 + 1) {
            throw std::invalid_argument("SpectralMatrix: expected " + std::to_string(n_ / 2 + 1) +
                                        " entries for n=" + std::to_string(n_) + ", got " +
                                        std::to_string(x_.size()));
        }
    }

    [[nodiscard]] std::size_t order() const noexcept { return n_; }
    [[nodiscard]] std::span<const double> entries() const noexcept { return x_; }
    [[nodiscard]] double entry(std::size_t j) const { return x_.at(j); }

    /// Value at circular distance of (row, col).
    [[nodiscard]] double at(std::size_t row, std::size_t col) const noexcept {
        const std::size_t d = row > col ? row - col : col - row;
        return x_[std::min(d, n_ - d)];
    }

private:
    std::size_t n_;
    std::vector<double> x_;
};

struct EigenSpectrum {
    std::size_t n = 0;
    std::vector<double> lambda;
};

namespace detail {

// cos(2*pi*k/n) for k = 0..n-1, evaluated once per residue so that
// l*j products index the table modulo n.
inline std::vector<double> cosine_table(std::size_t n) {
    std::vector<double> table(n);
    const double step = 2.0 * std::numbers::pi / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        table[k] = std::cos(step * static_cast<double>(k));
    }
    return table;
}

inline double integer_power(double base, unsigned p) noexcept {
    double result = 1.0;
    while (p != 0) {
        if (p & 1u) result *= base;
        base *= base;
        p >>= 1u;
    }
    return result;
}

}  // namespace detail

/// lambda_l = x_0 + 2 sum_{j=1}^{J} x_j cos(2 pi l j / n) (+ (-1)^l x_{n/2} for even n),
/// with J = cosine_terms(n). Direct summation, O(n * J).
[[nodiscard]] inline EigenSpectrum eigenvalues(const SpectralMatrix& m) {
    const std::size_t n = m.order();
    const auto x = m.entries();
    const std::size_t terms = cosine_terms(n);
    const auto table = detail::cosine_table(n);

    EigenSpectrum s;
    s.n = n;
    s.lambda.resize(n);
    for (std::size_t l = 0; l < n; ++l) {
        double acc = 0.0;
        std::size_t idx = 0;
        for (std::size_t j = 1; j <= terms; ++j) {
            idx += l;
            if (idx >= n) idx -= n;
            acc += x[j] * table[idx];
        }
        double v = x[0] + 2.0 * acc;
        if (n % 2 == 0) {
            v += (l % 2 == 0 ? 1.0 : -1.0) * x[n / 2];
        }
        s.lambda[l] = v;
    }
    return s;
}

/// Row-major dense matrix, only produced for oracle use.
struct DenseMatrix {
    std::size_t n = 0;
    std::vector<double> data;
    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const noexcept { return data[i * n + j]; }
    double& operator()(std::size_t i, std::size_t j) noexcept { return data[i * n + j]; }
};

inline constexpr std::size_t kDenseOrderCap = 256;

[[nodiscard]] inline DenseMatrix materialize_dense(const SpectralMatrix& m,
                                                   std::size_t cap = kDenseOrderCap) {
    const std::size_t n = m.order();
    if (n > cap) {
        throw std::length_error("materialize_dense: n=" + std::to_string(n) +
                                " exceeds the dense cap " + std::to_string(cap));
    }
    DenseMatrix d{n, std::vector<double>(n * n)};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            d(i, j) = m.at(i, j);
        }
    }
    return d;
}

/// sum_l lambda_l^p. p = 0 returns n exactly. Powers p >= 4 use compensated
/// accumulation. Overflow surfaces as a non-finite result.
[[nodiscard]] inline double trace_power(const EigenSpectrum& s, unsigned p) {
    if (p == 0) return static_cast<double>(s.n);
    if (p >= 4) {
        CompensatedSum acc;
        for (double l : s.lambda) acc.add(detail::integer_power(l, p));
        return acc.value();
    }
    double acc = 0.0;
    for (double l : s.lambda) acc += detail::integer_power(l, p);
    return acc;
}

/// Limits for the exponential-cost trace oracle below.
struct CombinatorialTraceLimits {
    std::size_t max_order = 15;
    unsigned max_power = 5;
};

/// Tr(SC_n^p) evaluated through signed index tuples instead of eigenvalues.
///
/// Odd n:  n * sum_k C(p,k) x_0^{p-k} S_k, where S_k sums x_{j_1}..x_{j_k} over
///         every (j, eps) with sum eps_i j_i = 0 (mod n), 1 <= j_i <= (n-1)/2.
/// Even n: (n/2) * sum_k C(p,k) [Y_k S_k + Ytilde_k T_k] with
///         Y_k = (x_0+x_{n/2})^{p-k} + (x_0-x_{n/2})^{p-k},
///         Ytilde_k = (x_0+x_{n/2})^{p-k} - (x_0-x_{n/2})^{p-k},
///         and T_k summing tuples with sum = n/2 (mod n), 1 <= j_i <= n/2-1.
/// S_0 = 1 and T_0 = 0 (the empty sum is 0, hence divisible by n).
[[nodiscard]] inline double trace_power_combinatorial(const SpectralMatrix& m, unsigned p,
                                                      CombinatorialTraceLimits limits = {}) {
    const std::size_t n = m.order();
    if (p == 0) {
        throw std::invalid_argument("trace_power_combinatorial: p must be positive");
    }
    if (n > limits.max_order || p > limits.max_power) {
        throw std::length_error("trace_power_combinatorial: (n=" + std::to_string(n) + ", p=" +
                                std::to_string(p) + ") exceeds the oracle caps");
    }
    const auto x = m.entries();
    const long terms = static_cast<long>(cosine_terms(n));
    const long modulus = static_cast<long>(n);

    // sums[k][r]: sum of products over signed k-tuples whose signed sum is r mod n.
    std::vector<std::vector<double>> sums(p + 1, std::vector<double>(n, 0.0));
    sums[0][0] = 1.0;
    // Enumerate tuples explicitly, one odometer per length.
    for (unsigned k = 1; k <= p; ++k) {
        if (terms == 0) break;
        std::vector<long> signed_index(k, -terms);
        while (true) {
            double prod = 1.0;
            long total = 0;
            bool valid = true;
            for (long v : signed_index) {
                if (v == 0) {
                    valid = false;
                    break;
                }
                prod *= x[static_cast<std::size_t>(v < 0 ? -v : v)];
                total += v;
            }
            if (valid) {
                const long r = ((total % modulus) + modulus) % modulus;
                sums[k][static_cast<std::size_t>(r)] += prod;
            }
            std::size_t pos = 0;
            while (pos < k) {
                if (++signed_index[pos] <= terms) break;
                signed_index[pos] = -terms;
                ++pos;
            }
            if (pos == k) break;
        }
    }

    double binom = 1.0;
    double trace = 0.0;
    for (unsigned k = 0; k <= p; ++k) {
        if (k > 0) binom = binom * static_cast<double>(p - k + 1) / static_cast<double>(k);
        const unsigned rest = p - k;
        if (n % 2 == 1) {
            trace += binom * detail::integer_power(x[0], rest) * sums[k][0];
        } else {
            const double plus = detail::integer_power(x[0] + x[n / 2], rest);
            const double minus = detail::integer_power(x[0] - x[n / 2], rest);
            trace += binom * ((plus + minus) * sums[k][0] + (plus - minus) * sums[k][n / 2]);
        }
    }
    return n % 2 == 1 ? static_cast<double>(n) * trace : 0.5 * static_cast<double>(n) * trace;
}

/// (Tr_r - mean(Tr)) / sqrt(n) per replicate. The batch mean stands in for
/// E[Tr(SC_n^p)], which has no closed form at finite n.
[[nodiscard]] inline std::vector<double> fluctuation_statistic(std::span<const double> traces,
                                                               std::size_t n) {
    if (traces.size() < 2) {
        throw std::invalid_argument("fluctuation_statistic: need at least 2 replicates");
    }
    if (n == 0) {
        throw std::invalid_argument("fluctuation_statistic: n must be positive");
    }
    CompensatedSum total;
    for (double t : traces) total.add(t);
    const double mean = total.value() / static_cast<double>(traces.size());
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<double> w(traces.size());
    for (std::size_t r = 0; r < traces.size(); ++r) {
        w[r] = (traces[r] - mean) * scale;
    }
    return w;
}

/// Batched half-spectrum kernel used by the Monte Carlo engine. Eigenvalues
/// satisfy lambda_l = lambda_{n-l}, so only l = 0..floor(n/2) are formed and
/// weighted by their multiplicity when traces are accumulated.
namespace detail {

// out[r*8 + b] = sum_j c[r*terms + j] * x[j*8 + b] for r < Rows.
using lane4 = double __attribute__((vector_size(32)));

template <int Rows>
void cosine_rows(const double* c, std::size_t terms, const double* x, double* out) {
    lane4 acc[Rows][2] = {};
    for (std::size_t j = 0; j < terms; ++j) {
        lane4 lo;
        lane4 hi;
        std::memcpy(&lo, x + j * 8, sizeof lo);
        std::memcpy(&hi, x + j * 8 + 4, sizeof hi);
        for (int r = 0; r < Rows; ++r) {
            const double u = c[r * terms + j];
            acc[r][0] += u * lo;
            acc[r][1] += u * hi;
        }
    }
    for (int r = 0; r < Rows; ++r) {
        std::memcpy(out + r * 8, &acc[r][0], sizeof(lane4));
        std::memcpy(out + r * 8 + 4, &acc[r][1], sizeof(lane4));
    }
}

}  // namespace detail

class TraceKernel {
public:
    static constexpr std::size_t kBatch = 8;

    explicit TraceKernel(std::size_t n) : n_(n), terms_(cosine_terms(n)), rows_(n / 2 + 1) {
        if (n_ < 1) throw std::invalid_argument("TraceKernel: n must be positive");
        const auto table = detail::cosine_table(n_);
        cos2_.resize(rows_ * terms_);
        for (std::size_t l = 0; l < rows_; ++l) {
            for (std::size_t j = 1; j <= terms_; ++j) {
                cos2_[l * terms_ + (j - 1)] = 2.0 * table[(l * j) % n_];
            }
        }
        weight_.assign(rows_, 2.0);
        weight_[0] = 1.0;
        if (n_ % 2 == 0) weight_[rows_ - 1] = 1.0;
    }

    [[nodiscard]] std::size_t order() const noexcept { return n_; }
    [[nodiscard]] std::size_t input_length() const noexcept { return n_ / 2 + 1; }

    /// x is laid out coordinate-major: x[j * kBatch + b] holds x_j of batch
    /// member b. traces receives Tr(SC^k) for k = 1..max_power at
    /// traces[b * max_power + (k-1)].
    void traces(std::span<const double> x, unsigned max_power, std::span<double> traces) const {
        std::vector<double> lambda(rows_ * kBatch);
        std::size_t l = 0;
        for (; l + kTile <= rows_; l += kTile) detail::cosine_rows<kTile>(cos2_.data() + l * terms_, terms_, x.data() + kBatch, lambda.data() + l * kBatch);
        for (; l < rows_; ++l) detail::cosine_rows<1>(cos2_.data() + l * terms_, terms_, x.data() + kBatch, lambda.data() + l * kBatch);
        for (l = 0; l < rows_; ++l) {
            for (std::size_t b = 0; b < kBatch; ++b) {
                double v = x[b] + lambda[l * kBatch + b];
                if (n_ % 2 == 0) v += (l % 2 == 0 ? 1.0 : -1.0) * x[(n_ / 2) * kBatch + b];
                lambda[l * kBatch + b] = v;
            }
        }
        for (std::size_t b = 0; b < kBatch; ++b) {
            std::vector<CompensatedSum> acc(max_power);
            for (std::size_t l = 0; l < rows_; ++l) {
                const double v = lambda[l * kBatch + b];
                double term = weight_[l];
                for (unsigned k = 0; k < max_power; ++k) {
                    term *= v;
                    acc[k].add(term);
                }
            }
            for (unsigned k = 0; k < max_power; ++k) {
                traces[b * max_power + k] = acc[k].value();
            }
        }
    }

private:
    static constexpr int kTile = 8;

    std::size_t n_;
    std::size_t terms_;
    std::size_t rows_;
    std::vector<double> cos2_;
    std::vector<double> weight_;
};

}  // namespace circulant_clt
