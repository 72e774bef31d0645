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

// Brute-force reference implementations. Nothing on the production paths
// calls into this header; it backs the unit tests and the acceptance suite.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "combinatorics.hpp"
#include "spectral.hpp"

namespace circulant_clt::oracle {

/// Tr(D^p) by repeated dense multiplication, O(p n^3).
[[nodiscard]] inline double dense_trace_power(const DenseMatrix& d, unsigned p) {
    const std::size_t n = d.n;
    if (p == 0) return static_cast<double>(n);
    DenseMatrix power = d;
    for (unsigned step = 1; step < p; ++step) {
        DenseMatrix next{n, std::vector<double>(n * n, 0.0)};
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < n; ++k) {
                const double a = power(i, k);
                for (std::size_t j = 0; j < n; ++j) next(i, j) += a * d(k, j);
            }
        }
        power = std::move(next);
    }
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) t += power(i, i);
    return t;
}

/// Walks every tuple of signed values v_i in {-J..-1, 1..J} (restricted to
/// the sign pattern when one is fixed) and tests the defining condition directly.
[[nodiscard]] inline std::uint64_t naive_count(const ConstraintSetSpec& spec) {
    if (spec.n < 1 || spec.p < 1) throw std::invalid_argument("naive_count: bad spec");
    const long n = spec.n;
    const long J = index_upper(n, spec.range);
    if (J < 1) return 0;
    const int p = spec.p;
    std::vector<long> v(static_cast<std::size_t>(p));
    auto first_value = [&](int i) -> long {
        if (spec.sign_split) return i < *spec.sign_split ? 1 : -J;
        return -J;
    };
    auto last_value = [&](int i) -> long {
        if (spec.sign_split) return i < *spec.sign_split ? J : -1;
        return J;
    };
    for (int i = 0; i < p; ++i) v[static_cast<std::size_t>(i)] = first_value(i);
    std::uint64_t count = 0;
    while (true) {
        bool valid = true;
        long total = 0;
        for (long x : v) {
            if (x == 0) valid = false;
            total += x;
        }
        if (valid) {
            bool member = false;
            if (spec.exact_sum) {
                member = total == *spec.exact_sum * n;
            } else if (spec.variant == Variant::A) {
                member = total % n == 0;
            } else {
                member = total % (n / 2) == 0 && total % n != 0;
            }
            if (member) ++count;
        }
        int pos = 0;
        while (pos < p) {
            auto& x = v[static_cast<std::size_t>(pos)];
            if (x < last_value(pos)) {
                ++x;
                break;
            }
            x = first_value(pos);
            ++pos;
        }
        if (pos == p) break;
    }
    return count;
}

/// |A'^{(k)}_p| by enumeration with an explicit pairwise-distinct test.
[[nodiscard]] inline std::uint64_t naive_distinct_prefix(long n, int p, int k,
                                                         IndexRange range = IndexRange::half_floor) {
    const long J = index_upper(n, range);
    if (J < 1) return 0;
    std::vector<long> j(static_cast<std::size_t>(p), 1);
    std::uint64_t count = 0;
    while (true) {
        long total = 0;
        for (int i = 0; i < p; ++i) total += i < k ? j[i] : -j[i];
        bool distinct = true;
        for (int a = 0; a < k && distinct; ++a) {
            for (int b = a + 1; b < k; ++b) {
                if (j[a] == j[b]) {
                    distinct = false;
                    break;
                }
            }
        }
        if (distinct && total % n == 0) ++count;
        int pos = 0;
        while (pos < p) {
            if (j[pos] < J) {
                ++j[pos];
                break;
            }
            j[pos] = 1;
            ++pos;
        }
        if (pos == p) break;
    }
    return count;
}

}  // namespace circulant_clt::oracle
