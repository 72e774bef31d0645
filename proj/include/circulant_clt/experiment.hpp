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
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "combinatorics.hpp"
#include "input_law.hpp"
#include "rng.hpp"
#include "spectral.hpp"
#include "statistics.hpp"

namespace circulant_clt {

class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::string law = "gaussian";
    std::vector<long> n_list;
    std::vector<int> powers;
    std::vector<TestPolynomial> polynomials;
    std::size_t replicates = 0;
    std::uint64_t seed = 0;
    unsigned parallel_width = 1;
    double tolerance_se = 3.0;
    CovarianceForm form = CovarianceForm::closed_form;
    /// Test hook: added to every sigma_{p,q} with p, q >= 2.
    double sigma_perturbation = 0.0;
};

struct ExperimentBudget {
    long max_order = 8192;
    double max_work = 5e12;  ///< sum over n of R * (n/2+1) * floor-cosine-terms
};

inline void validate(const ExperimentConfig& cfg, ExperimentBudget budget = {}) {
    if (cfg.replicates < 2) {
        throw config_error("replicates must be >= 2 (empirical centering needs two replicates), got " +
                           std::to_string(cfg.replicates));
    }
    if (cfg.n_list.empty()) throw config_error("n: at least one matrix order is required");
    for (long n : cfg.n_list) {
        if (n < 3) throw config_error("n: matrix order must be >= 3, got " + std::to_string(n));
        if (n > budget.max_order) {
            throw budget_exceeded("n=" + std::to_string(n) + " exceeds the order budget " +
                                  std::to_string(budget.max_order));
        }
    }
    if (cfg.powers.empty() && cfg.polynomials.empty()) {
        throw config_error("powers: at least one power or polynomial is required");
    }
    for (int p : cfg.powers) {
        if (p < 2) {
            throw config_error("powers: p=" + std::to_string(p) +
                               " is excluded; w_0 is identically 0 and w_1 = X_0 carries no "
                               "n-dependent fluctuation, so only p >= 2 is studied");
        }
        if (p > 20) throw config_error("powers: p=" + std::to_string(p) + " exceeds 20");
    }
    for (const auto& q : cfg.polynomials) {
        if (q.degree() > 20) throw config_error("polynomial: degree exceeds 20");
    }
    if (cfg.parallel_width < 1) throw config_error("threads must be >= 1");
    if (!(cfg.tolerance_se > 0.0)) throw config_error("tolerance_se must be positive");
    double work = 0.0;
    for (long n : cfg.n_list) {
        work += static_cast<double>(cfg.replicates) * static_cast<double>(n / 2 + 1) *
                static_cast<double>(cosine_terms(static_cast<std::size_t>(n)));
    }
    if (work > budget.max_work) {
        throw budget_exceeded("estimated work " + std::to_string(work) + " exceeds the budget " +
                              std::to_string(budget.max_work));
    }
    (void)find_law(cfg.law);
}

/// Centered statistics w_1..w_D for one matrix order, replicate-major per power.
class SampleSet {
public:
    SampleSet(long n, std::size_t replicates, unsigned max_power)
        : n_(n), replicates_(replicates), traces_(max_power, std::vector<double>(replicates)) {}

    [[nodiscard]] long order() const noexcept { return n_; }
    [[nodiscard]] std::size_t replicates() const noexcept { return replicates_; }
    [[nodiscard]] unsigned max_power() const noexcept { return static_cast<unsigned>(traces_.size()); }

    [[nodiscard]] std::span<const double> traces(unsigned k) const { return traces_.at(k - 1); }
    [[nodiscard]] std::span<double> traces_mut(unsigned k) { return traces_.at(k - 1); }

    /// w_k = (Tr_k - mean) / sqrt(n).
    [[nodiscard]] std::span<const double> w(unsigned k) const {
        if (w_.empty()) {
            w_.resize(traces_.size());
            for (std::size_t i = 0; i < traces_.size(); ++i) {
                w_[i] = fluctuation_statistic(traces_[i], static_cast<std::size_t>(n_));
            }
        }
        return w_.at(k - 1);
    }

    /// sum_k coef[k-1] * w_k.
    [[nodiscard]] std::vector<double> combine(const std::vector<double>& coef) const {
        std::vector<double> out(replicates_, 0.0);
        for (std::size_t k = 1; k <= coef.size(); ++k) {
            if (coef[k - 1] == 0.0) continue;
            const auto wk = w(static_cast<unsigned>(k));
            for (std::size_t r = 0; r < replicates_; ++r) out[r] += coef[k - 1] * wk[r];
        }
        return out;
    }

private:
    long n_;
    std::size_t replicates_;
    std::vector<std::vector<double>> traces_;
    mutable std::vector<std::vector<double>> w_;
};

/// Draws R input vectors (X_0..X_{floor(n/2)}) / sqrt(n) from `law` and records
/// Tr(SC_n^k) for k = 1..max_power. Entry (r, j) uses the Philox cell keyed by
/// (seed; r, j, n), and replicates are processed in fixed blocks of eight, so
/// the output is bitwise independent of `threads`.
[[nodiscard]] inline SampleSet simulate(const InputLaw& law, long n, unsigned max_power,
                                        std::size_t replicates, std::uint64_t seed,
                                        unsigned threads = 1) {
    if (n < 1 || max_power < 1 || replicates < 2) {
        throw std::invalid_argument("simulate: need n >= 1, max_power >= 1, replicates >= 2");
    }
    SampleSet set(n, replicates, max_power);
    const TraceKernel kernel(static_cast<std::size_t>(n));
    const CounterStream stream(seed);
    constexpr std::size_t B = TraceKernel::kBatch;
    const std::size_t coords = kernel.input_length();
    const std::size_t blocks = (replicates + B - 1) / B;
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        std::vector<double> x(coords * B);
        std::vector<double> tr(B * max_power);
        while (true) {
            const std::size_t block = next.fetch_add(1);
            if (block >= blocks) break;
            for (std::size_t b = 0; b < B; ++b) {
                const std::size_t r = block * B + b;
                for (std::size_t j = 0; j < coords; ++j) {
                    x[j * B + b] = r < replicates
                                       ? scale * law.sample(stream.cell(r, static_cast<std::uint32_t>(j),
                                                                        static_cast<std::uint32_t>(n)))
                                       : 0.0;
                }
            }
            kernel.traces(x, max_power, tr);
            for (std::size_t b = 0; b < B; ++b) {
                const std::size_t r = block * B + b;
                if (r >= replicates) break;
                for (unsigned k = 1; k <= max_power; ++k) set.traces_mut(k)[r] = tr[b * max_power + (k - 1)];
            }
        }
    };
    const unsigned width = std::max(1u, threads);
    if (width == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(width);
        for (unsigned t = 0; t < width; ++t) pool.emplace_back(worker);
    }
    return set;
}

/// A linear eigenvalue statistic sum_k coef_k w_k with a printable label.
struct StatisticSpec {
    std::string label;
    std::vector<double> coef;  // coef[k-1] multiplies w_k
};

[[nodiscard]] inline std::string format_number(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

[[nodiscard]] inline StatisticSpec power_statistic(int p) {
    StatisticSpec s{"w" + std::to_string(p), std::vector<double>(static_cast<std::size_t>(p), 0.0)};
    s.coef.back() = 1.0;
    return s;
}

[[nodiscard]] inline StatisticSpec polynomial_statistic(const TestPolynomial& q) {
    std::string label = "Q=";
    bool first = true;
    for (int k = 1; k <= q.degree(); ++k) {
        const double a = q.coefficient(k);
        if (a == 0.0) continue;
        if (!first) label += a < 0 ? "-" : "+";
        else if (a < 0) label += "-";
        const double mag = std::abs(a);
        if (mag != 1.0) label += format_number(mag);
        label += k == 1 ? "x" : "x^" + std::to_string(k);
        first = false;
    }
    return {label, q.coefficients()};
}

/// Limit covariances used as targets: sigma_{p,q} (closed form or corrected)
/// extended to index 1, plus the perturbation hook.
struct TheoryModel {
    double fourth_moment = 3.0;
    CovarianceForm form = CovarianceForm::closed_form;
    double perturbation = 0.0;

    [[nodiscard]] double sigma(int p, int q) const {
        if (p >= 2 && q >= 2) return sigma_pq(p, q, fourth_moment, form) + perturbation;
        return sigma_extended(p, q, fourth_moment, form);
    }

    [[nodiscard]] double covariance(const StatisticSpec& a, const StatisticSpec& b) const {
        double total = 0.0;
        for (std::size_t l = 1; l <= a.coef.size(); ++l) {
            for (std::size_t k = 1; k <= b.coef.size(); ++k) {
                if (a.coef[l - 1] == 0.0 || b.coef[k - 1] == 0.0) continue;
                total += a.coef[l - 1] * b.coef[k - 1] * sigma(static_cast<int>(l), static_cast<int>(k));
            }
        }
        return total;
    }
};

inline constexpr double kDegenerateVariance = 1e-9;

[[nodiscard]] inline double zscore(double estimate, double target, double se) {
    const double diff = estimate - target;
    if (se > 0.0) return diff / se;
    if (diff == 0.0) return 0.0;
    return diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
}

struct CovarianceCheck {
    std::string other;
    Estimate estimate;
    double theory = 0.0;
    double z = 0.0;
    bool pass = false;
};

struct StatisticReport {
    long n = 0;
    std::string label;
    std::size_t replicates = 0;
    Estimate variance;
    double theory_variance = 0.0;
    double variance_z = 0.0;
    bool variance_pass = false;
    bool degenerate = false;
    std::vector<CovarianceCheck> covariances;
    std::optional<NormalityVerdict> normality;  ///< empty when degenerate or R < 1000
    std::array<Estimate, 6> raw_moments{};     ///< E[w^k], k = 1..6, empirically centered

    [[nodiscard]] bool pass() const {
        if (!variance_pass) return false;
        for (const auto& c : covariances) {
            if (!c.pass) return false;
        }
        return !normality || normality->pass;
    }
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<StatisticReport> reports;

    [[nodiscard]] bool pass() const {
        return std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.pass(); });
    }
};

[[nodiscard]] inline std::vector<StatisticSpec> statistics_of(const ExperimentConfig& cfg) {
    std::vector<StatisticSpec> specs;
    std::vector<int> powers = cfg.powers;
    std::sort(powers.begin(), powers.end());
    powers.erase(std::unique(powers.begin(), powers.end()), powers.end());
    for (int p : powers) specs.push_back(power_statistic(p));
    for (const auto& q : cfg.polynomials) specs.push_back(polynomial_statistic(q));
    return specs;
}

[[nodiscard]] inline unsigned max_power_of(const std::vector<StatisticSpec>& specs) {
    std::size_t m = 1;
    for (const auto& s : specs) m = std::max(m, s.coef.size());
    return static_cast<unsigned>(m);
}

/// Variance, cross-covariances, shape diagnostics and raw moments of each
/// statistic on one sample set.
[[nodiscard]] inline std::vector<StatisticReport> analyse(const SampleSet& set,
                                                          const std::vector<StatisticSpec>& specs,
                                                          const TheoryModel& theory, double tolerance_se) {
    std::vector<std::vector<double>> values;
    values.reserve(specs.size());
    for (const auto& s : specs) values.push_back(set.combine(s.coef));

    std::vector<StatisticReport> reports;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        StatisticReport rep;
        rep.n = set.order();
        rep.label = specs[i].label;
        rep.replicates = set.replicates();
        rep.variance = covariance_estimate(values[i], values[i]);
        rep.theory_variance = theory.covariance(specs[i], specs[i]);
        rep.variance_z = zscore(rep.variance.value, rep.theory_variance, rep.variance.se);
        rep.degenerate = rep.theory_variance < kDegenerateVariance;
        if (rep.degenerate) {
            rep.variance_pass = rep.variance.value <= tolerance_se * rep.variance.se + kDegenerateVariance;
        } else {
            rep.variance_pass = std::abs(rep.variance_z) <= tolerance_se;
        }
        for (std::size_t j = 0; j < specs.size(); ++j) {
            if (j == i) continue;
            CovarianceCheck c;
            c.other = specs[j].label;
            c.estimate = covariance_estimate(values[i], values[j]);
            c.theory = theory.covariance(specs[i], specs[j]);
            c.z = zscore(c.estimate.value, c.theory, c.estimate.se);
            c.pass = std::abs(c.z) <= tolerance_se ||
                     std::abs(c.estimate.value - c.theory) <= kDegenerateVariance;
            rep.covariances.push_back(std::move(c));
        }
        if (!rep.degenerate && set.replicates() >= kMinNormalitySamples) {
            rep.normality = normality_verdict(values[i], rep.theory_variance);
        }
        for (std::size_t k = 1; k <= rep.raw_moments.size(); ++k) {
            const std::vector<std::span<const double>> f(k, std::span<const double>(values[i]));
            rep.raw_moments[k - 1] = joint_moment_estimate(f);
        }
        reports.push_back(std::move(rep));
    }
    return reports;
}

[[nodiscard]] inline TheoryModel theory_for(const ExperimentConfig& cfg) {
    return TheoryModel{find_law(cfg.law).fourth_moment, cfg.form, cfg.sigma_perturbation};
}

/// Runs every (n, statistic) of the configuration. Deterministic per
/// (config, seed) and independent of parallel_width.
[[nodiscard]] inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                                     ExperimentBudget budget = {}) {
    validate(cfg, budget);
    const InputLaw& law = find_law(cfg.law);
    const auto specs = statistics_of(cfg);
    const TheoryModel theory = theory_for(cfg);
    ExperimentResult result{cfg, {}};
    for (long n : cfg.n_list) {
        const SampleSet set = simulate(law, n, max_power_of(specs), cfg.replicates, cfg.seed, cfg.parallel_width);
        auto reps = analyse(set, specs, theory, cfg.tolerance_se);
        for (auto& r : reps) result.reports.push_back(std::move(r));
    }
    return result;
}

struct WickReport {
    std::vector<int> powers;
    long n = 0;
    Estimate estimate;
    double target = 0.0;
    double z = 0.0;
    bool pass = false;
};

inline constexpr double kWickToleranceSe = 4.0;

/// E[w_{p_1} ... w_{p_l}] against the pair-partition value: 0 for l = 3,
/// sum over the three pairings of sigma sigma for l = 4.
[[nodiscard]] inline WickReport wick_joint_check(const SampleSet& set, const std::vector<int>& powers,
                                                 const TheoryModel& theory,
                                                 double tolerance_se = kWickToleranceSe) {
    if (powers.size() != 3 && powers.size() != 4) {
        throw std::invalid_argument("wick_joint_check: only products of 3 or 4 statistics are supported");
    }
    for (int p : powers) {
        if (p < 2) throw std::invalid_argument("wick_joint_check: powers must be >= 2");
        if (static_cast<unsigned>(p) > set.max_power()) {
            throw std::invalid_argument("wick_joint_check: power " + std::to_string(p) + " not simulated");
        }
    }
    WickReport rep;
    rep.powers = powers;
    rep.n = set.order();
    std::vector<std::span<const double>> f;
    for (int p : powers) f.push_back(set.w(static_cast<unsigned>(p)));
    rep.estimate = joint_moment_estimate(f);
    if (powers.size() == 4) {
        const auto s = [&](int a, int b) { return theory.sigma(powers[a], powers[b]); };
        rep.target = s(0, 1) * s(2, 3) + s(0, 2) * s(1, 3) + s(0, 3) * s(1, 2);
    }
    rep.z = zscore(rep.estimate.value, rep.target, rep.estimate.se);
    rep.pass = std::abs(rep.z) <= tolerance_se;
    return rep;
}

[[nodiscard]] inline WickReport wick_joint_check(const ExperimentConfig& cfg, const std::vector<int>& powers) {
    ExperimentConfig local = cfg;
    local.powers = powers;
    validate(local);
    const SampleSet set = simulate(find_law(cfg.law), cfg.n_list.front(),
                                   static_cast<unsigned>(*std::max_element(powers.begin(), powers.end())),
                                   cfg.replicates, cfg.seed, cfg.parallel_width);
    return wick_joint_check(set, powers, theory_for(cfg));
}

struct ParityRow {
    int p = 0, q = 0;
    long n_odd = 0, n_even = 0;
    Estimate odd, even;
    double theory = 0.0;
    bool agree = false;    ///< |odd - even| <= tol * (se_odd + se_even)
    bool odd_ok = false;   ///< odd within tol * se_odd of theory
    bool even_ok = false;  ///< even within tol * se_even of theory
    [[nodiscard]] bool pass() const { return agree && odd_ok && even_ok; }
};

[[nodiscard]] inline ParityRow parity_row(const SampleSet& odd, const SampleSet& even, int p, int q,
                                          const TheoryModel& theory, double tolerance_se) {
    ParityRow row;
    row.p = p;
    row.q = q;
    row.n_odd = odd.order();
    row.n_even = even.order();
    row.odd = covariance_estimate(odd.w(static_cast<unsigned>(p)), odd.w(static_cast<unsigned>(q)));
    row.even = covariance_estimate(even.w(static_cast<unsigned>(p)), even.w(static_cast<unsigned>(q)));
    row.theory = theory.sigma(p, q);
    row.agree = std::abs(row.odd.value - row.even.value) <= tolerance_se * (row.odd.se + row.even.se);
    row.odd_ok = std::abs(zscore(row.odd.value, row.theory, row.odd.se)) <= tolerance_se;
    row.even_ok = std::abs(zscore(row.even.value, row.theory, row.even.se)) <= tolerance_se;
    return row;
}

/// Compares covariance estimates at one odd and one even order (the first of
/// each parity in n_list) with each other and with the limit.
[[nodiscard]] inline std::vector<ParityRow> parity_consistency_check(const ExperimentConfig& cfg) {
    validate(cfg);
    const auto odd_it = std::find_if(cfg.n_list.begin(), cfg.n_list.end(), [](long n) { return n % 2 == 1; });
    const auto even_it = std::find_if(cfg.n_list.begin(), cfg.n_list.end(), [](long n) { return n % 2 == 0; });
    if (odd_it == cfg.n_list.end() || even_it == cfg.n_list.end()) {
        throw config_error("parity_consistency_check: n list needs at least one odd and one even order");
    }
    if (cfg.powers.empty()) throw config_error("parity_consistency_check: powers are required");
    const InputLaw& law = find_law(cfg.law);
    const unsigned top = static_cast<unsigned>(*std::max_element(cfg.powers.begin(), cfg.powers.end()));
    const SampleSet odd = simulate(law, *odd_it, top, cfg.replicates, cfg.seed, cfg.parallel_width);
    const SampleSet even = simulate(law, *even_it, top, cfg.replicates, cfg.seed, cfg.parallel_width);
    const TheoryModel theory = theory_for(cfg);
    std::vector<ParityRow> rows;
    for (std::size_t i = 0; i < cfg.powers.size(); ++i) {
        for (std::size_t j = i; j < cfg.powers.size(); ++j) {
            rows.push_back(parity_row(odd, even, cfg.powers[i], cfg.powers[j], theory, cfg.tolerance_se));
        }
    }
    return rows;
}

}  // namespace circulant_clt
