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
#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace circulant_clt {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

enum class Variant {
    A,       ///< signed sum = 0 (mod n)
    A_tilde  ///< signed sum = 0 (mod n/2) but != 0 (mod n); even n only
};

/// Upper end of the index range 1..J used when enumerating tuples.
enum class IndexRange {
    half_floor,  ///< J = floor(n/2), the set definitions as written
    trace_exact  ///< J = (n-1)/2 odd, n/2-1 even: the range the trace identity needs
};

[[nodiscard]] constexpr long index_upper(long n, IndexRange range) noexcept {
    if (range == IndexRange::half_floor || n % 2 == 1) return n / 2;
    return n / 2 - 1;
}

/// Describes one of the tuple families A_p, A_p^{(k)}, A_{p,s}^{(k)}, A_tilde_p.
/// Tuples (j_1..j_p) and sign vectors eps are counted with multiplicity.
/// sign_split = k fixes eps = (+1 x k, -1 x (p-k)); without it every one of the
/// 2^p sign vectors contributes. exact_sum = s replaces the congruence with
/// sum eps_i j_i = s * n.
struct ConstraintSetSpec {
    long n = 0;
    int p = 0;
    Variant variant = Variant::A;
    std::optional<int> sign_split;
    std::optional<long> exact_sum;
    IndexRange range = IndexRange::half_floor;
};

class budget_exceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CountBudget {
    double max_steps = 1e9;
};

namespace detail {

inline void validate(const ConstraintSetSpec& spec, CountBudget budget) {
    if (spec.n < 1) throw std::invalid_argument("count: n must be positive");
    if (spec.p < 1) throw std::invalid_argument("count: tuple length p must be positive");
    if (spec.sign_split && (*spec.sign_split < 0 || *spec.sign_split > spec.p)) {
        throw std::invalid_argument("count: sign split k=" + std::to_string(*spec.sign_split) +
                                    " outside 0.." + std::to_string(spec.p));
    }
    if (spec.variant == Variant::A_tilde) {
        if (spec.n % 2 != 0) {
            throw std::invalid_argument("count: A_tilde requires even n, got n=" +
                                        std::to_string(spec.n));
        }
        if (spec.exact_sum) {
            throw std::invalid_argument("count: exact sums are defined for variant A only");
        }
    }
    const double steps = static_cast<double>(spec.p) * static_cast<double>(spec.n) *
                         static_cast<double>(spec.n / 2);
    if (steps > budget.max_steps) {
        throw budget_exceeded("count: p*n*floor(n/2) = " + std::to_string(steps) +
                              " exceeds the budget of " + std::to_string(budget.max_steps));
    }
}

/// One DP layer over residues mod n: out[r] = sum over admissible signed
/// values v of in[(r - v) mod n]. The values are {+1..+J}, {-1..-J} or both.
inline std::vector<BigInt> residue_layer(const std::vector<BigInt>& in, long J, bool plus,
                                         bool minus) {
    const long n = static_cast<long>(in.size());
    // prefix[i] = sum of in[t mod n] for t in [0, i), over two periods.
    std::vector<BigInt> prefix(2 * n + 1);
    for (long i = 0; i < 2 * n; ++i) prefix[i + 1] = prefix[i] + in[i % n];
    std::vector<BigInt> out(n);
    for (long r = 0; r < n; ++r) {
        BigInt acc = 0;
        if (plus) acc += prefix[r + n] - prefix[r + n - J];  // in[r-J .. r-1]
        if (minus) acc += prefix[r + J + 1] - prefix[r + 1];  // in[r+1 .. r+J]
        out[r] = std::move(acc);
    }
    return out;
}

/// One DP layer over exact integer sums stored with an offset.
inline std::vector<BigInt> sum_layer(const std::vector<BigInt>& in, long J, bool plus,
                                     bool minus) {
    const long width = static_cast<long>(in.size());
    std::vector<BigInt> prefix(width + 1);
    for (long i = 0; i < width; ++i) prefix[i + 1] = prefix[i] + in[i];
    auto range_sum = [&](long lo, long hi) -> BigInt {  // inclusive, clipped
        lo = std::max(lo, 0L);
        hi = std::min(hi, width - 1);
        if (lo > hi) return 0;
        return prefix[hi + 1] - prefix[lo];
    };
    std::vector<BigInt> out(width);
    for (long r = 0; r < width; ++r) {
        BigInt acc = 0;
        if (plus) acc += range_sum(r - J, r - 1);
        if (minus) acc += range_sum(r + 1, r + J);
        out[r] = std::move(acc);
    }
    return out;
}

inline bool position_is_plus(const ConstraintSetSpec& spec, int i) {
    return i < *spec.sign_split;
}

}  // namespace detail

/// Exact cardinality by dynamic programming over residues (or exact sums).
/// Cost is O(p * n) big-integer additions per layer thanks to prefix sums.
[[nodiscard]] inline BigInt count_exact(const ConstraintSetSpec& spec, CountBudget budget = {}) {
    detail::validate(spec, budget);
    const long n = spec.n;
    const long J = index_upper(n, spec.range);
    if (J < 1) return 0;

    if (spec.exact_sum) {
        const long half_width = static_cast<long>(spec.p) * J;
        const long target = *spec.exact_sum * n;
        if (target < -half_width || target > half_width) return 0;
        std::vector<BigInt> hist(2 * half_width + 1);
        hist[half_width] = 1;
        for (int i = 0; i < spec.p; ++i) {
            const bool split = spec.sign_split.has_value();
            const bool plus = !split || detail::position_is_plus(spec, i);
            const bool minus = !split || !detail::position_is_plus(spec, i);
            hist = detail::sum_layer(hist, J, plus, minus);
        }
        return hist[target + half_width];
    }

    std::vector<BigInt> hist(n);
    hist[0] = 1;
    for (int i = 0; i < spec.p; ++i) {
        const bool split = spec.sign_split.has_value();
        const bool plus = !split || detail::position_is_plus(spec, i);
        const bool minus = !split || !detail::position_is_plus(spec, i);
        hist = detail::residue_layer(hist, J, plus, minus);
    }
    return spec.variant == Variant::A ? hist[0] : hist[n / 2];
}

namespace detail {

// All set partitions of {0..k-1} as block-label vectors (restricted growth strings).
inline void set_partitions(int k, std::vector<int>& labels, int next, int used,
                           const std::function<void(const std::vector<int>&, int)>& visit) {
    if (next == k) {
        visit(labels, used);
        return;
    }
    for (int b = 0; b <= used; ++b) {
        labels[next] = b;
        set_partitions(k, labels, next + 1, b == used ? used + 1 : used, visit);
    }
}

inline BigInt factorial(int m) {
    BigInt f = 1;
    for (int i = 2; i <= m; ++i) f *= i;
    return f;
}

// One residue layer with a general coefficient: out[r] = sum_{j=1}^{J} in[(r - c*j) mod n].
inline std::vector<BigInt> scaled_layer(const std::vector<BigInt>& in, long J, long c) {
    const long n = static_cast<long>(in.size());
    std::vector<BigInt> out(n);
    std::vector<long> shift(J);
    for (long j = 1; j <= J; ++j) shift[j - 1] = (((c * j) % n) + n) % n;
    for (long r = 0; r < n; ++r) {
        BigInt acc = 0;
        for (long s : shift) acc += in[(r - s + n) % n];
        out[r] = std::move(acc);
    }
    return out;
}

}  // namespace detail

/// |A'^{(k)}_p|: tuples of A_p^{(k)} whose first k coordinates are pairwise
/// distinct. Inclusion-exclusion over set partitions pi of the first k
/// coordinates with Moebius weight prod_B (-1)^{|B|-1} (|B|-1)!; each merged
/// block of size b contributes the value b*j to the signed sum.
[[nodiscard]] inline BigInt count_distinct_prefix(const ConstraintSetSpec& spec,
                                                  CountBudget budget = {}) {
    detail::validate(spec, budget);
    if (spec.variant != Variant::A) {
        throw std::invalid_argument("count_distinct_prefix: variant A only");
    }
    if (!spec.sign_split) {
        throw std::invalid_argument("count_distinct_prefix: sign split k is required");
    }
    if (spec.exact_sum) {
        throw std::invalid_argument("count_distinct_prefix: exact sums are not supported");
    }
    const long n = spec.n;
    const long J = index_upper(n, spec.range);
    const int k = *spec.sign_split;
    if (J < 1) return 0;

    // Tail of -1 signed coordinates is shared by every partition.
    std::vector<BigInt> tail(n);
    tail[0] = 1;
    for (int i = k; i < spec.p; ++i) tail = detail::residue_layer(tail, J, false, true);

    BigInt total = 0;
    std::vector<int> labels(k, 0);
    auto visit = [&](const std::vector<int>& lab, int blocks) {
        std::vector<long> size(blocks, 0);
        for (int b : lab) ++size[b];
        BigInt weight = 1;
        std::vector<BigInt> hist = tail;
        for (long s : size) {
            weight *= detail::factorial(static_cast<int>(s - 1));
            if ((s - 1) % 2 == 1) weight = -weight;
            hist = detail::scaled_layer(hist, J, s);
        }
        total += weight * hist[0];
    };
    if (k == 0) {
        return tail[0];
    }
    detail::set_partitions(k, labels, 1, 1, visit);
    return total;
}

/// Limit of |A_d^{(s)}| / n^{d-1}:
///   h_d(s) = 1/(d-1)! sum_{i=-ceil((d-s)/2)}^{floor(s/2)} sum_{j=0}^{2i+d-s}
///            (-1)^j C(d,j) ((2i+d-s-j)/2)^{d-1}.
/// The inner sum is accumulated exactly in integers (scaled by 2^{d-1}).
/// d = 1 is the empty family (j = 0 mod n has no solution in 1..floor(n/2)),
/// so h_1 = 0 for both s.
[[nodiscard]] inline BigRational h_closed_exact(int d, int s) {
    if (d < 1) throw std::invalid_argument("h_closed: d must be >= 1");
    if (s < 0 || s > d) throw std::invalid_argument("h_closed: s must lie in 0..d");
    if (d == 1) return 0;
    const int lo = -((d - s + 1) / 2);
    const int hi = s / 2;
    BigInt acc = 0;
    for (int i = lo; i <= hi; ++i) {
        const int top = 2 * i + d - s;
        BigInt binom = 1;
        for (int j = 0; j <= top; ++j) {
            if (j > 0) binom = binom * (d - j + 1) / j;
            if (j > d) break;
            BigInt term = boost::multiprecision::pow(BigInt(top - j), static_cast<unsigned>(d - 1));
            acc += (j % 2 == 0 ? term : BigInt(-term)) * binom;
        }
    }
    assert(acc >= 0);
    const BigInt denom = detail::factorial(d - 1) * (BigInt(1) << (d - 1));
    return BigRational(acc, denom);
}

[[nodiscard]] inline double h_closed(int d, int s) {
    return h_closed_exact(d, s).convert_to<double>();
}

/// count_exact(A, n, d, k = s) / n^{d-1}.
[[nodiscard]] inline double h_empirical(int d, int s, long n, CountBudget budget = {}) {
    ConstraintSetSpec spec{n, d, Variant::A, s, std::nullopt, IndexRange::half_floor};
    const BigInt c = count_exact(spec, budget);
    return BigRational(c, boost::multiprecision::pow(BigInt(n), static_cast<unsigned>(d - 1)))
        .convert_to<double>();
}

namespace detail {

inline BigInt binomial(int a, int b) {
    if (b < 0 || b > a) return 0;
    BigInt r = 1;
    for (int i = 1; i <= b; ++i) r = r * (a - b + i) / i;
    return r;
}

// C(p, p-m) C(p-m, (p-m)/2) ((p-m)/2)!: ways to pair-match the p-m coordinates
// outside the shared block with opposite signs.
inline BigInt pairing_factor(int p, int m) {
    const int rest = p - m;
    if (rest < 0 || rest % 2 != 0) {
        throw std::invalid_argument("pairing factor: p-m must be even and nonnegative (p=" +
                                    std::to_string(p) + ", m=" + std::to_string(m) + ")");
    }
    return binomial(p, rest) * binomial(rest, rest / 2) * factorial(rest / 2);
}

}  // namespace detail

[[nodiscard]] inline BigInt coefficient_a(int p, int q, int r) {
    if (r < 0) throw std::invalid_argument("coefficient_a: r must be nonnegative");
    return detail::pairing_factor(p, 2 * r) * detail::pairing_factor(q, 2 * r);
}

[[nodiscard]] inline BigInt coefficient_b(int p, int q, int r) {
    if (r < 0) throw std::invalid_argument("coefficient_b: r must be nonnegative");
    return detail::pairing_factor(p, 2 * r + 1) * detail::pairing_factor(q, 2 * r + 1);
}

/// Which closed form the covariance evaluation uses.
///
/// closed_form evaluates the three-case expression term by term as stated.
/// reversal_corrected doubles every shared-block term (the a_1 fourth-moment
/// term and the h-weighted sums). For a generic shared block the second
/// tuple can reproduce it either with the same signs or with all signs
/// reversed; the stated matching count C(m,s)^2 s!(m-s)! only counts the
/// former. The boundary term from the X_0-carrying coordinates is unchanged.
/// Monte Carlo at n ~ 10^3 agrees with reversal_corrected (e.g. Var(w_2) -> 2(EX^4-1)).
enum class CovarianceForm { closed_form, reversal_corrected };

/// The two pieces of sigma_{p,q}: terms driven by the shared coordinates and
/// the odd-odd boundary term. sigma = shared + boundary for closed_form.
struct SigmaParts {
    double shared = 0.0;
    double boundary = 0.0;
};

namespace detail {

inline double shared_block_sum(int m) {
    // sum_{s=0}^{m} C(m,s)^2 s! (m-s)! h_m(s), exact.
    BigRational acc = 0;
    for (int s = 0; s <= m; ++s) {
        const BigInt c = binomial(m, s);
        acc += BigRational(c * c * factorial(s) * factorial(m - s)) * h_closed_exact(m, s);
    }
    return acc.convert_to<double>();
}

inline double pow2(int e) { return std::ldexp(1.0, e); }

}  // namespace detail

/// Term-by-term pieces of the limiting covariance for p, q >= 1. p = 1 or
/// q = 1 is the natural extension: the h_1 sums vanish and the boundary term
/// reduces to the covariance of w_1 = X_0 with w_q.
[[nodiscard]] inline SigmaParts sigma_parts(int p, int q, double fourth_moment) {
    if (p < 1 || q < 1) throw std::invalid_argument("sigma: powers must be >= 1");
    SigmaParts parts;
    if ((p + q) % 2 != 0) return parts;
    if (p % 2 == 0) {
        if (p < 2 || q < 2) return parts;
        parts.shared = coefficient_a(p, q, 1).convert_to<double>() / detail::pow2((p + q - 4) / 2) *
                       (fourth_moment - 1.0);
        for (int r = 2; r <= std::min(p, q) / 2; ++r) {
            parts.shared += coefficient_a(p, q, r).convert_to<double>() /
                            detail::pow2((p + q - 4 * r) / 2) * detail::shared_block_sum(2 * r);
        }
        return parts;
    }
    for (int r = 0; r <= std::min(p - 1, q - 1) / 2; ++r) {
        parts.shared += coefficient_b(p, q, r).convert_to<double>() /
                        detail::pow2((p + q - 4 * r - 2) / 2) * detail::shared_block_sum(2 * r + 1);
    }
    const BigInt boundary = BigInt(p) * q * detail::binomial(p - 1, (p - 1) / 2) *
                            detail::binomial(q - 1, (q - 1) / 2) * detail::factorial((p - 1) / 2) *
                            detail::factorial((q - 1) / 2);
    parts.boundary = boundary.convert_to<double>() / detail::pow2((p + q) / 2 - 1);
    return parts;
}

/// Limiting covariance sigma_{p,q} of (w_p, w_q), p, q >= 2.
[[nodiscard]] inline double sigma_pq(int p, int q, double fourth_moment,
                                     CovarianceForm form = CovarianceForm::closed_form) {
    if (p < 2 || q < 2) {
        throw std::invalid_argument("sigma_pq: powers must be >= 2 (got p=" + std::to_string(p) +
                                    ", q=" + std::to_string(q) + ")");
    }
    if (!(fourth_moment >= 1.0)) {
        throw std::invalid_argument("sigma_pq: fourth moment must be >= 1");
    }
    const SigmaParts parts = sigma_parts(p, q, fourth_moment);
    const double shared = form == CovarianceForm::reversal_corrected ? 2.0 * parts.shared
                                                                     : parts.shared;
    return shared + parts.boundary;
}

/// Q(x) = sum_{k=1}^{d} a_k x^k, coefficients stored from a_1 upward.
class TestPolynomial {
public:
    explicit TestPolynomial(std::vector<double> coefficients) : a_(std::move(coefficients)) {
        while (!a_.empty() && a_.back() == 0.0) a_.pop_back();
        if (a_.size() < 2) {
            throw std::invalid_argument("TestPolynomial: degree must be >= 2");
        }
    }
    [[nodiscard]] int degree() const noexcept { return static_cast<int>(a_.size()); }
    /// a_k for k = 1..degree().
    [[nodiscard]] double coefficient(int k) const { return a_.at(static_cast<std::size_t>(k - 1)); }
    [[nodiscard]] const std::vector<double>& coefficients() const noexcept { return a_; }

    [[nodiscard]] TestPolynomial scaled(double c) const {
        std::vector<double> b = a_;
        for (double& v : b) v *= c;
        return TestPolynomial(std::move(b));
    }

private:
    std::vector<double> a_;
};

/// Covariance used inside sigma_Q for indices that may equal 1.
/// sigma_{1,1} = 1 (w_1 = X_0); sigma_{1,q} is the boundary term at p = 1,
/// zero for even q and q C(q-1,(q-1)/2) ((q-1)/2)! / 2^{(q-1)/2} for odd q.
[[nodiscard]] inline double sigma_extended(int p, int q, double fourth_moment,
                                           CovarianceForm form = CovarianceForm::closed_form) {
    if (p >= 2 && q >= 2) return sigma_pq(p, q, fourth_moment, form);
    return sigma_parts(p, q, fourth_moment).boundary;
}

/// sigma_Q^2 = sum_{l,k} a_l a_k sigma_{l,k}.
[[nodiscard]] inline double sigma_Q(const TestPolynomial& poly, double fourth_moment,
                                    CovarianceForm form = CovarianceForm::closed_form) {
    if (!(fourth_moment >= 1.0)) {
        throw std::invalid_argument("sigma_Q: fourth moment must be >= 1");
    }
    double total = 0.0;
    for (int l = 1; l <= poly.degree(); ++l) {
        for (int k = 1; k <= poly.degree(); ++k) {
            const double al = poly.coefficient(l);
            const double ak = poly.coefficient(k);
            if (al == 0.0 || ak == 0.0) continue;
            total += al * ak * sigma_extended(l, k, fourth_moment, form);
        }
    }
    if (total < -1e-12 * std::max(1.0, std::abs(total))) {
        throw std::logic_error("sigma_Q: negative variance " + std::to_string(total));
    }
    return std::max(total, 0.0);
}

/// Limit covariance matrix over a sorted list of powers.
struct CovarianceModel {
    std::vector<int> powers;
    double fourth_moment = 3.0;
    CovarianceForm form = CovarianceForm::closed_form;
    std::vector<double> sigma;  // row-major, powers.size()^2

    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const {
        return sigma.at(i * powers.size() + j);
    }
};

[[nodiscard]] inline CovarianceModel covariance_model(std::vector<int> powers, double fourth_moment,
                                                      CovarianceForm form = CovarianceForm::closed_form) {
    std::sort(powers.begin(), powers.end());
    powers.erase(std::unique(powers.begin(), powers.end()), powers.end());
    CovarianceModel model{powers, fourth_moment, form, {}};
    const std::size_t k = powers.size();
    model.sigma.assign(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i; j < k; ++j) {
            const double v = sigma_pq(powers[i], powers[j], fourth_moment, form);
            model.sigma[i * k + j] = v;
            model.sigma[j * k + i] = v;
        }
    }
    return model;
}

struct TildeOrderRow {
    long n = 0;
    BigInt tilde_count;
    BigInt a_count;
    double ratio = 0.0;  ///< |A_tilde_k| / n^{k-2}
    bool strictly_less = false;
};

/// |A_tilde_k| against |A_k| (all sign vectors, indices 1..floor(n/2)) for each n.
[[nodiscard]] inline std::vector<TildeOrderRow> tilde_cardinality_order_check(
    int k, const std::vector<long>& n_list, CountBudget budget = {}) {
    for (long n : n_list) {
        if (n % 2 != 0) {
            throw std::invalid_argument("tilde_cardinality_order_check: odd n=" + std::to_string(n));
        }
    }
    std::vector<TildeOrderRow> rows;
    for (long n : n_list) {
        TildeOrderRow row;
        row.n = n;
        row.tilde_count = count_exact({n, k, Variant::A_tilde, std::nullopt, std::nullopt,
                                       IndexRange::half_floor},
                                      budget);
        row.a_count = count_exact({n, k, Variant::A, std::nullopt, std::nullopt,
                                   IndexRange::half_floor},
                                  budget);
        row.ratio = row.tilde_count.convert_to<double>() / std::pow(static_cast<double>(n), k - 2);
        row.strictly_less = row.tilde_count < row.a_count;
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace circulant_clt
