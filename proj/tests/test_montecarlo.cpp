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
#include <string>
#include <vector>

#include <catch_amalgamated.hpp>

#include "circulant_clt/experiment.hpp"

using namespace circulant_clt;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

constexpr auto kCorrected = CovarianceForm::reversal_corrected;

std::vector<double> normal_draws(std::size_t N, std::uint64_t seed) {
    const CounterStream s(seed);
    std::vector<double> x(N);
    for (std::size_t i = 0; i < N; ++i) x[i] = standard_normal(s.cell(i, 0));
    return x;
}

bool within(const Estimate& e, double target, double tol) { return std::abs(e.value - target) <= tol * e.se; }

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.law = "gaussian";
    cfg.n_list = {128};
    cfg.powers = {2, 3};
    cfg.replicates = 3000;
    cfg.seed = 42;
    return cfg;
}

}  // namespace

TEST_CASE("Philox4x32-10 known answers", "[montecarlo]") {
    using W = Philox4x32::counter_type;
    CHECK(Philox4x32::block({0, 0, 0, 0}, {0, 0}) == W{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          W{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("random cells are pure functions of their key", "[montecarlo]") {
    const CounterStream a(7), b(7), c(8);
    CHECK(a.cell(5, 3, 1).words == b.cell(5, 3, 1).words);
    CHECK(a.cell(5, 3, 1).words != c.cell(5, 3, 1).words);
    CHECK(a.cell(5, 3, 1).words != a.cell(5, 4, 1).words);
    CHECK(a.cell(5, 3, 1).words != a.cell(5, 3, 2).words);
    CHECK(a.cell(1ull << 32, 0).words != a.cell(0, 0).words);
    for (std::uint32_t i = 0; i < 1000; ++i) {
        const auto u = a.cell(i, 0).uniform0();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("shipped input laws", "[montecarlo]") {
    const auto& reg = law_registry();
    REQUIRE(reg.size() == 4);
    for (const auto& law : reg) {
        INFO(law.name);
        CHECK(verify_law(law, 200'000, 99).pass);
        CHECK(!law.moment_bound_note.empty());
    }
    CHECK(find_law("rademacher").fourth_moment == 1.0);
    CHECK(find_law("uniform").fourth_moment == 9.0 / 5.0);
    CHECK(find_law("two_point").fourth_moment == 6.0);
    CHECK_THROWS_WITH(find_law("cauchy"), ContainsSubstring("unknown input law"));
}

TEST_CASE("jackknife standard error of a mean", "[montecarlo]") {
    const auto x = normal_draws(20000, 3);
    const Estimate e = jackknife(x.size(), kJackknifeBlocks, [&](std::size_t lo, std::size_t hi) {
        double s = 0;
        std::size_t c = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (i >= lo && i < hi) continue;
            s += x[i];
            ++c;
        }
        return s / double(c);
    });
    CHECK_THAT(e.se, WithinAbs(1.0 / std::sqrt(20000.0), 0.2 / std::sqrt(20000.0)));
    const Estimate v = covariance_estimate(x, x);
    CHECK_THAT(v.value, WithinAbs(1.0, 4 * v.se));
}

TEST_CASE("normality verdict", "[montecarlo]") {
    const auto z = normal_draws(10000, 11);
    CHECK(normality_verdict(z, 1.0).pass);

    const CounterStream s(12);
    std::vector<double> expo(10000);
    for (std::size_t i = 0; i < expo.size(); ++i) expo[i] = -std::log(s.cell(i, 0).uniform0()) - 1.0;
    const auto v = normality_verdict(expo, 1.0);
    CHECK_FALSE(v.pass);
    CHECK(v.skewness_z > 10.0);

    CHECK_THROWS_AS(normality_verdict(std::vector<double>(999, 0.0), 1.0), std::invalid_argument);
    CHECK_THROWS_AS(normality_verdict(z, 0.0), std::invalid_argument);
}

TEST_CASE("experiment validation", "[montecarlo]") {
    auto cfg = small_config();
    CHECK_NOTHROW(validate(cfg));
    cfg.powers = {1, 2};
    CHECK_THROWS_WITH(validate(cfg), ContainsSubstring("w_1 = X_0"));
    cfg = small_config();
    cfg.replicates = 1;
    CHECK_THROWS_WITH(validate(cfg), ContainsSubstring("replicates must be >= 2"));
    cfg = small_config();
    cfg.n_list = {2};
    CHECK_THROWS_AS(validate(cfg), config_error);
    cfg = small_config();
    cfg.law = "nope";
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg = small_config();
    cfg.replicates = 100'000'000;
    cfg.n_list = {8192};
    CHECK_THROWS_AS(validate(cfg), budget_exceeded);
}

TEST_CASE("simulation is deterministic and independent of thread count", "[montecarlo]") {
    const auto& law = find_law("gaussian");
    const SampleSet a = simulate(law, 97, 4, 1001, 5, 1);
    const SampleSet b = simulate(law, 97, 4, 1001, 5, 4);
    const SampleSet c = simulate(law, 97, 4, 1001, 6, 1);
    for (unsigned k = 1; k <= 4; ++k) {
        const auto ta = a.traces(k), tb = b.traces(k), tc = c.traces(k);
        CHECK(std::equal(ta.begin(), ta.end(), tb.begin()));
        CHECK_FALSE(std::equal(ta.begin(), ta.end(), tc.begin()));
    }
    auto cfg = small_config();
    const auto r1 = run_experiment(cfg);
    cfg.parallel_width = 3;
    const auto r2 = run_experiment(cfg);
    REQUIRE(r1.reports.size() == r2.reports.size());
    for (std::size_t i = 0; i < r1.reports.size(); ++i) {
        CHECK(r1.reports[i].variance.value == r2.reports[i].variance.value);
        CHECK(r1.reports[i].variance.se == r2.reports[i].variance.se);
        CHECK(r1.reports[i].raw_moments[3].value == r2.reports[i].raw_moments[3].value);
    }
}

TEST_CASE("simulated traces equal the per-matrix spectral path", "[montecarlo]") {
    const auto& law = find_law("uniform");
    const long n = 20;
    const SampleSet set = simulate(law, n, 3, 12, 9);
    const CounterStream stream(9);
    for (std::size_t r = 0; r < 12; ++r) {
        std::vector<double> x(n / 2 + 1);
        for (std::size_t j = 0; j < x.size(); ++j) {
            x[j] = law.sample(stream.cell(r, std::uint32_t(j), std::uint32_t(n))) / std::sqrt(double(n));
        }
        const auto s = eigenvalues(SpectralMatrix(n, x));
        for (unsigned k = 1; k <= 3; ++k) CHECK_THAT(set.traces(k)[r], WithinAbs(trace_power(s, k), 1e-12));
    }
}

TEST_CASE("Var(w_2) tracks the fourth moment", "[montecarlo]") {
    double previous = -1.0;
    for (const char* name : {"rademacher", "uniform", "gaussian", "two_point"}) {
        const auto& law = find_law(name);
        const SampleSet set = simulate(law, 512, 2, 20000, 17);
        const Estimate v = covariance_estimate(set.w(2), set.w(2));
        INFO(name << " var " << v.value << " +- " << v.se);
        const double target = sigma_pq(2, 2, law.fourth_moment, kCorrected);
        if (target == 0.0) CHECK(v.value <= 3.0 * v.se + kDegenerateVariance);
        else CHECK(within(v, target, 3.0));
        CHECK(v.value > previous);
        previous = v.value;
    }
}

TEST_CASE("covariance structure at moderate n", "[montecarlo]") {
    const auto& law = find_law("gaussian");
    for (long n : {511L, 512L}) {
        const SampleSet set = simulate(law, n, 4, 20000, 23);
        const Estimate c33 = covariance_estimate(set.w(3), set.w(3));
        const Estimate c23 = covariance_estimate(set.w(2), set.w(3));
        const Estimate c13 = covariance_estimate(set.w(1), set.w(3));
        const Estimate c24 = covariance_estimate(set.w(2), set.w(4));
        INFO("n=" << n << " c33=" << c33.value << " c23=" << c23.value << " c13=" << c13.value << " c24=" << c24.value);
        CHECK(within(c33, sigma_pq(3, 3, 3.0, kCorrected), 3.0));
        // The estimate sides with the two-part formula, not the shared block alone.
        CHECK(std::abs(c33.value - 2.0 * sigma_parts(3, 3, 3.0).shared) > 5.0 * c33.se);
        CHECK(within(c23, 0.0, 3.0));
        CHECK(within(c13, sigma_extended(1, 3, 3.0, kCorrected), 3.0));
        CHECK(within(c24, sigma_pq(2, 4, 3.0, kCorrected), 3.0));
    }
}

TEST_CASE("scaling a polynomial scales its variance exactly", "[montecarlo]") {
    const SampleSet set = simulate(find_law("gaussian"), 256, 3, 4000, 31);
    const TestPolynomial q({0.0, 1.0, -0.5});
    const auto base = set.combine(q.coefficients());
    const auto twice = set.combine(q.scaled(2.0).coefficients());
    const Estimate a = covariance_estimate(base, base);
    const Estimate b = covariance_estimate(twice, twice);
    CHECK(b.value == 4.0 * a.value);
    CHECK(b.se == 4.0 * a.se);
}

TEST_CASE("variance agreement holds across 20 disjoint seeds", "[montecarlo]") {
    int passed = 0;
    for (std::uint64_t seed = 1000; seed < 1020; ++seed) {
        const SampleSet set = simulate(find_law("gaussian"), 256, 2, 4000, seed);
        if (within(covariance_estimate(set.w(2), set.w(2)), sigma_pq(2, 2, 3.0, kCorrected), 3.0)) ++passed;
    }
    CHECK(passed >= 19);
}

TEST_CASE("degenerate limit is routed away from the normality test", "[montecarlo]") {
    ExperimentConfig cfg = small_config();
    cfg.law = "rademacher";
    cfg.powers = {2};
    cfg.replicates = 2000;
    const auto r = run_experiment(cfg);
    REQUIRE(r.reports.size() == 1);
    CHECK(r.reports[0].degenerate);
    CHECK_FALSE(r.reports[0].normality.has_value());
    CHECK(r.reports[0].variance_pass);
}

TEST_CASE("Wick joint moments", "[montecarlo]") {
    const SampleSet set = simulate(find_law("gaussian"), 512, 3, 20000, 77);
    const TheoryModel th{3.0, kCorrected, 0.0};
    const auto four = wick_joint_check(set, {2, 2, 2, 2}, th);
    CHECK(four.target == 3.0 * 16.0);
    CHECK(wick_joint_check(set, {2, 2, 3, 3}, th).target == 4.0 * 21.0);
    CHECK(wick_joint_check(set, {2, 3, 3}, th).target == 0.0);
    CHECK_THROWS_AS(wick_joint_check(set, {2, 2}, th), std::invalid_argument);
    CHECK_THROWS_AS(wick_joint_check(set, {2, 2, 4}, th), std::invalid_argument);
    CHECK_THROWS_AS(wick_joint_check(set, {1, 2, 2}, th), std::invalid_argument);
}

TEST_CASE("odd and even orders agree", "[montecarlo]") {
    ExperimentConfig cfg;
    cfg.n_list = {63, 64};
    cfg.powers = {2};
    cfg.replicates = 20000;
    cfg.seed = 3;
    cfg.tolerance_se = 4.0;
    cfg.form = kCorrected;
    const auto rows = parity_consistency_check(cfg);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].agree);
    cfg.n_list = {64, 128};
    CHECK_THROWS_AS(parity_consistency_check(cfg), config_error);
}
