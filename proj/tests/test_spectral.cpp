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

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <catch_amalgamated.hpp>

#include "circulant_clt/oracles.hpp"
#include "circulant_clt/spectral.hpp"

using namespace circulant_clt;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<double> random_entries(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(n / 2 + 1);
    for (double& v : x) v = u(rng);
    return x;
}

bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * (1.0 + std::abs(b)); }

}  // namespace

TEST_CASE("eigenvalues of small hand-built matrices", "[spectral]") {
    SECTION("n=3 identity-like") {
        const auto s = eigenvalues(SpectralMatrix(3, {1.0, 0.0}));
        for (double l : s.lambda) CHECK(l == 1.0);
    }
    SECTION("n=4 alternating term") {
        const auto s = eigenvalues(SpectralMatrix(4, {0.0, 0.0, 1.0}));
        REQUIRE(s.lambda.size() == 4);
        CHECK(s.lambda[0] == 1.0);
        CHECK(s.lambda[1] == -1.0);
        CHECK(s.lambda[2] == 1.0);
        CHECK(s.lambda[3] == -1.0);
    }
    SECTION("n=5 against a dense symmetric eigensolver") {
        const SpectralMatrix m(5, {0.0, 1.0, 0.0});
        const auto s = eigenvalues(m);
        for (std::size_t l = 0; l < 5; ++l) {
            CHECK_THAT(s.lambda[l], WithinAbs(2.0 * std::cos(2.0 * std::numbers::pi * double(l) / 5.0), 1e-14));
        }
        const DenseMatrix d = materialize_dense(m);
        Eigen::MatrixXd e(5, 5);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) e(i, j) = d(std::size_t(i), std::size_t(j));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(e);
        std::vector<double> ours = s.lambda;
        std::sort(ours.begin(), ours.end());
        for (int i = 0; i < 5; ++i) CHECK_THAT(ours[std::size_t(i)], WithinAbs(solver.eigenvalues()(i), 1e-12));
    }
}

TEST_CASE("eigenvalues agree with a dense eigensolver on random inputs", "[spectral]") {
    std::mt19937_64 rng(11);
    for (std::size_t n : {6u, 7u, 16u, 31u, 64u}) {
        const SpectralMatrix m(n, random_entries(n, rng));
        auto ours = eigenvalues(m).lambda;
        std::sort(ours.begin(), ours.end());
        const DenseMatrix d = materialize_dense(m);
        Eigen::MatrixXd e(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) e(long(i), long(j)) = d(i, j);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(e);
        for (std::size_t i = 0; i < n; ++i) CHECK_THAT(ours[i], WithinAbs(solver.eigenvalues()(long(i)), 1e-11));
    }
}

TEST_CASE("malformed matrices are rejected", "[spectral]") {
    CHECK_THROWS_AS(SpectralMatrix(0, {}), std::invalid_argument);
    CHECK_THROWS_AS(SpectralMatrix(5, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(SpectralMatrix(4, {1.0, 2.0}), std::invalid_argument);
    CHECK_NOTHROW(SpectralMatrix(1, {3.0}));
}

TEST_CASE("spectrum invariants", "[spectral]") {
    std::mt19937_64 rng(5);
    for (std::size_t n = 1; n <= 80; ++n) {
        const auto x = random_entries(n, rng);
        const auto s = eigenvalues(SpectralMatrix(n, x));
        double sum = 0.0;
        for (double l : s.lambda) sum += l;
        CHECK_THAT(sum, WithinAbs(double(n) * x[0], 1e-11 * double(n)));
        for (std::size_t l = 1; l < n; ++l) CHECK_THAT(s.lambda[l], WithinAbs(s.lambda[n - l], 1e-12));
    }
}

TEST_CASE("materialize_dense unrolls the definition", "[spectral]") {
    const double a = 1.5, b = -2.0, c = 0.25;
    SECTION("n=3") {
        const auto d = materialize_dense(SpectralMatrix(3, {a, b}));
        const double want[3][3] = {{a, b, b}, {b, a, b}, {b, b, a}};
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) CHECK(d(i, j) == want[i][j]);
    }
    SECTION("n=4") {
        const auto d = materialize_dense(SpectralMatrix(4, {a, b, c}));
        const double want[4][4] = {{a, b, c, b}, {b, a, b, c}, {c, b, a, b}, {b, c, b, a}};
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) CHECK(d(i, j) == want[i][j]);
    }
    SECTION("index formula, symmetry and cyclic shift for random n") {
        std::mt19937_64 rng(3);
        for (std::size_t n : {5u, 6u, 9u, 12u}) {
            const auto x = random_entries(n, rng);
            const auto d = materialize_dense(SpectralMatrix(n, x));
            const long h = long(n / 2);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    const long diff = std::abs(long(i) - long(j));
                    // n/2 - |n/2 - diff| with n/2 kept exact, written over integers.
                    CHECK(d(i, j) == x[std::size_t((long(n) - std::abs(long(n) - 2 * diff)) / 2)]);
                    if (n % 2 == 0) CHECK(d(i, j) == x[std::size_t(h - std::abs(h - diff))]);
                    CHECK(d(i, j) == d(j, i));
                    if (i > 0) CHECK(d(i, j) == d(i - 1, (j + n - 1) % n));
                }
            }
        }
    }
    SECTION("cap") {
        CHECK_THROWS_AS(materialize_dense(SpectralMatrix(257, std::vector<double>(129, 0.0))), std::length_error);
        CHECK_THROWS_AS(materialize_dense(SpectralMatrix(9, std::vector<double>(5, 0.0)), 8), std::length_error);
    }
}

TEST_CASE("trace_power examples", "[spectral]") {
    std::mt19937_64 rng(1);
    CHECK(trace_power(eigenvalues(SpectralMatrix(7, random_entries(7, rng))), 0) == 7.0);
    CHECK_THAT(trace_power(eigenvalues(SpectralMatrix(3, {1.0, 0.0})), 5), WithinAbs(3.0, 1e-14));
    const SpectralMatrix m(8, random_entries(8, rng));
    const double t = trace_power(eigenvalues(m), 3);
    CHECK_THAT(t, WithinRel(oracle::dense_trace_power(materialize_dense(m), 3), 1e-10));
}

TEST_CASE("trace_power matches dense matrix powers (n <= 64, p <= 6)", "[spectral]") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> order(1, 64);
    for (int c = 0; c < 250; ++c) {
        const std::size_t n = order(rng);
        const unsigned p = unsigned(c % 7);
        const SpectralMatrix m(n, random_entries(n, rng));
        const double dense = oracle::dense_trace_power(materialize_dense(m), p);
        CHECK(close(trace_power(eigenvalues(m), p), dense, 1e-8));
    }
}

TEST_CASE("signed-tuple trace identity", "[spectral]") {
    SECTION("n=3, only x_0") {
        const double c = 1.7;
        CHECK_THAT(trace_power_combinatorial(SpectralMatrix(3, {c, 0.0}), 2), WithinRel(3 * c * c, 1e-14));
    }
    SECTION("n=5 and n=4 against the spectral path") {
        std::mt19937_64 rng(9);
        const SpectralMatrix odd(5, random_entries(5, rng));
        CHECK(close(trace_power_combinatorial(odd, 3), trace_power(eigenvalues(odd), 3), 1e-8));
        const SpectralMatrix even(4, random_entries(4, rng));
        CHECK(close(trace_power_combinatorial(even, 2), trace_power(eigenvalues(even), 2), 1e-8));
    }
    SECTION("randomized over the admissible domain") {
        std::mt19937_64 rng(77);
        std::uniform_int_distribution<std::size_t> order(1, 15);
        std::uniform_int_distribution<unsigned> power(1, 5);
        int cases = 0;
        for (; cases < 220; ++cases) {
            const std::size_t n = order(rng);
            const unsigned p = power(rng);
            const SpectralMatrix m(n, random_entries(n, rng));
            CHECK(close(trace_power_combinatorial(m, p), trace_power(eigenvalues(m), p), 1e-8));
        }
        CHECK(cases >= 200);
    }
    SECTION("caps") {
        CHECK_THROWS_AS(trace_power_combinatorial(SpectralMatrix(16, std::vector<double>(9, 0.1)), 2),
                        std::length_error);
        CHECK_THROWS_AS(trace_power_combinatorial(SpectralMatrix(5, {1, 1, 1}), 6), std::length_error);
        CHECK_THROWS_AS(trace_power_combinatorial(SpectralMatrix(5, {1, 1, 1}), 0), std::invalid_argument);
    }
}

TEST_CASE("fluctuation_statistic", "[spectral]") {
    const std::vector<double> flat{4.0, 4.0, 4.0};
    for (double w : fluctuation_statistic(flat, 4)) CHECK(w == 0.0);
    const auto w = fluctuation_statistic(std::vector<double>{0.0, 2.0}, 1);
    CHECK(w[0] == -1.0);
    CHECK(w[1] == 1.0);
    CHECK_THROWS_AS(fluctuation_statistic(std::vector<double>{1.0}, 3), std::invalid_argument);
}

TEST_CASE("w_0 vanishes and w_1 reproduces X_0", "[spectral]") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g;
    for (std::size_t n : {5u, 6u}) {
        std::vector<double> t0, t1, x0;
        for (int r = 0; r < 50; ++r) {
            std::vector<double> x(n / 2 + 1);
            for (double& v : x) v = g(rng) / std::sqrt(double(n));
            const auto s = eigenvalues(SpectralMatrix(n, x));
            t0.push_back(trace_power(s, 0));
            // Exact centering: E Tr(SC_n) = n E x_0 = 0.
            t1.push_back(trace_power(s, 1) / std::sqrt(double(n)));
            x0.push_back(x[0] * std::sqrt(double(n)));
        }
        for (double w : fluctuation_statistic(t0, n)) CHECK(w == 0.0);
        for (std::size_t r = 0; r < t1.size(); ++r) CHECK_THAT(t1[r], WithinAbs(x0[r], 1e-12));
    }
}

TEST_CASE("batched kernel matches the per-matrix path", "[spectral]") {
    std::mt19937_64 rng(99);
    constexpr std::size_t B = TraceKernel::kBatch;
    for (std::size_t n : {1u, 2u, 3u, 4u, 9u, 16u, 17u, 33u, 100u, 257u}) {
        const TraceKernel kernel(n);
        const std::size_t len = kernel.input_length();
        std::vector<std::vector<double>> xs(B);
        std::vector<double> packed(len * B);
        for (std::size_t b = 0; b < B; ++b) {
            xs[b] = random_entries(n, rng);
            for (std::size_t j = 0; j < len; ++j) packed[j * B + b] = xs[b][j];
        }
        const unsigned P = 6;
        std::vector<double> out(B * P);
        kernel.traces(packed, P, out);
        for (std::size_t b = 0; b < B; ++b) {
            const auto s = eigenvalues(SpectralMatrix(n, xs[b]));
            for (unsigned k = 1; k <= P; ++k) CHECK(close(out[b * P + k - 1], trace_power(s, k), 1e-10));
        }
    }
}

TEST_CASE("compensated summation recovers cancelled terms", "[spectral]") {
    CompensatedSum s;
    s.add(1e16);
    s.add(1.0);
    s.add(-1e16);
    CHECK(s.value() == 1.0);
}
