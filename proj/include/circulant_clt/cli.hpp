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

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "acceptance.hpp"
#include "combinatorics.hpp"
#include "config.hpp"
#include "experiment.hpp"
#include "report.hpp"

namespace circulant_clt::cli {

enum ExitCode : int { kSuccess = 0, kVerdictFailure = 1, kUsageError = 2 };

class usage_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct GlobalOptions {
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string format = "csv";
};

[[nodiscard]] inline std::vector<double> parse_coefficients(const std::string& text) {
    std::vector<double> a;
    for (const auto& t : circulant_clt::detail::split_list(text)) {
        a.push_back(circulant_clt::detail::parse_real(t, "--poly"));
    }
    return a;
}

struct SigmaArgs {
    std::vector<int> powers;
    double m4 = 3.0;
    std::vector<std::string> polys;
    std::string form = "closed_form";
};

inline int cmd_sigma(const SigmaArgs& a, const GlobalOptions& g, std::ostream& out) {
    if (a.powers.empty()) throw usage_error("sigma: --powers is required");
    for (int p : a.powers) {
        if (p < 2 || p > 20) throw usage_error("sigma: power " + std::to_string(p) + " outside 2..20");
    }
    if (!(a.m4 >= 1.0)) throw usage_error("sigma: --m4 must be >= 1, got " + format_number(a.m4));
    const CovarianceForm form = parse_form(a.form, "--form");
    std::vector<TestPolynomial> polys;
    for (const auto& s : a.polys) {
        try {
            polys.emplace_back(parse_coefficients(s));
        } catch (const std::invalid_argument& e) {
            throw usage_error(std::string("sigma: --poly ") + s + ": " + e.what());
        }
        if (polys.back().degree() > 20) throw usage_error("sigma: --poly degree exceeds 20");
    }
    std::vector<int> powers = a.powers;
    const CovarianceModel model = covariance_model(powers, a.m4, form);
    const std::size_t k = model.powers.size();
    if (g.format == "json") {
        nlohmann::ordered_json j;
        j["fourth_moment"] = a.m4;
        j["theory"] = form_name(form);
        j["powers"] = model.powers;
        j["sigma"] = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < k; ++i) {
            std::vector<double> row(k);
            for (std::size_t c = 0; c < k; ++c) row[c] = model(i, c);
            j["sigma"].push_back(row);
        }
        j["polynomials"] = nlohmann::ordered_json::array();
        for (const auto& q : polys) {
            j["polynomials"].push_back({{"label", polynomial_statistic(q).label},
                                        {"coefficients", q.coefficients()},
                                        {"sigma_Q", sigma_Q(q, a.m4, form)}});
        }
        out << j.dump(2) << '\n';
        return kSuccess;
    }
    out << "# fourth_moment: " << format_number(a.m4) << "\n# theory: " << form_name(form) << "\np";
    for (int p : model.powers) out << ',' << p;
    out << '\n';
    for (std::size_t i = 0; i < k; ++i) {
        out << model.powers[i];
        for (std::size_t c = 0; c < k; ++c) out << ',' << format_number(model(i, c));
        out << '\n';
    }
    if (!polys.empty()) {
        out << "\npolynomial,sigma_Q\n";
        for (const auto& q : polys) {
            out << circulant_clt::detail::csv_field(polynomial_statistic(q).label) << ','
                << format_number(sigma_Q(q, a.m4, form)) << '\n';
        }
    }
    return kSuccess;
}

struct CountArgs {
    std::string variant = "A";
    long n = 0;
    std::optional<int> p;
    std::optional<int> k;
    std::optional<long> s;
    std::string range = "half_floor";
    bool distinct = false;
};

/// Count line: the exact integer, then ", ratio r, h=h" when a sign split is
/// given for variant A without an exact sum.
inline int cmd_count(const CountArgs& a, std::ostream& out) {
    ConstraintSetSpec spec;
    spec.n = a.n;
    if (a.variant == "A") {
        spec.variant = Variant::A;
    } else if (a.variant == "A_tilde") {
        spec.variant = Variant::A_tilde;
    } else {
        throw usage_error("count: --variant must be A or A_tilde, got '" + a.variant + "'");
    }
    if (a.range == "half_floor") {
        spec.range = IndexRange::half_floor;
    } else if (a.range == "trace_exact") {
        spec.range = IndexRange::trace_exact;
    } else {
        throw usage_error("count: --range must be half_floor or trace_exact, got '" + a.range + "'");
    }
    if (a.p) {
        spec.p = *a.p;
    } else if (spec.variant == Variant::A_tilde && a.k) {
        spec.p = *a.k;
    } else {
        throw usage_error("count: --p is required");
    }
    spec.sign_split = a.k;
    spec.exact_sum = a.s;
    BigInt count;
    try {
        if (a.distinct) {
            if (!a.k) throw usage_error("count: --distinct needs --k");
            count = count_distinct_prefix(spec);
        } else {
            count = count_exact(spec);
        }
    } catch (const budget_exceeded&) {
        throw;
    } catch (const usage_error&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw usage_error(e.what());
    }
    out << count.str();
    if (a.k && spec.variant == Variant::A && !a.s && !a.distinct) {
        const double ratio = count.convert_to<double>() / std::pow(static_cast<double>(spec.n), spec.p - 1);
        std::ostringstream os;
        os.precision(6);
        os << ", ratio " << ratio << ", h=" << h_closed(spec.p, *a.k);
        out << os.str();
    }
    out << '\n';
    return kSuccess;
}

inline int cmd_simulate(const std::string& source, const GlobalOptions& g, std::ostream& out) {
    const std::string started = utc_timestamp();
    ExperimentConfig cfg = load_config(source);
    resolve_seed(cfg, g.seed);
    if (g.threads) cfg.parallel_width = *g.threads;
    validate(cfg);
    const ExperimentResult result = run_experiment(cfg);
    const auto files = write_experiment(g.out, result, RunManifest{"simulate", cfg, started, {}, {}});
    for (const auto& r : result.reports) {
        out << (r.pass() ? "pass" : "fail") << "  n=" << r.n << " " << r.label << " var "
            << format_number(r.variance.value) << " +- " << format_number(r.variance.se) << " theory "
            << format_number(r.theory_variance) << '\n';
    }
    for (const auto& f : files) out << "wrote " << f << '\n';
    return result.pass() ? kSuccess : kVerdictFailure;
}

struct AcceptArgs {
    bool list = false;
    std::vector<int> only;
    double perturb = 0.0;
    std::string scratch;
};

inline int cmd_accept(const AcceptArgs& a, const GlobalOptions& g, std::ostream& out) {
    if (a.list) {
        for (const auto& c : acceptance::criteria()) out << c.id << "  " << c.title << '\n';
        return kSuccess;
    }
    for (int id : a.only) {
        if (id < 1 || id > static_cast<int>(acceptance::criteria().size())) {
            throw usage_error("accept: no criterion " + std::to_string(id));
        }
    }
    acceptance::Options opt;
    if (g.seed) opt.seed = *g.seed;
    if (g.threads) opt.threads = *g.threads;
    opt.only = a.only;
    opt.sigma_perturbation = a.perturb;
    opt.scratch = a.scratch;
    const auto results = acceptance::run(opt, out);
    std::size_t passed = 0;
    for (const auto& r : results) passed += r.pass ? 1 : 0;
    out << passed << " of " << results.size() << " criteria passed\n";
    return acceptance::all_pass(results) ? kSuccess : kVerdictFailure;
}

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Symmetric circulant eigenvalue-statistic toolkit", "circulant-clt"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    app.add_option("--out", g.out, "Output directory")->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed, "Seed (overrides config and CIRCULANT_CLT_SEED)");
    auto* threads_opt = app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

    SigmaArgs sa;
    auto* sigma = app.add_subcommand("sigma", "Print the limiting covariance matrix");
    sigma->add_option("--powers", sa.powers, "Powers p (comma separated)")->delimiter(',')->required();
    sigma->add_option("--m4", sa.m4, "Fourth moment E X^4")->capture_default_str();
    sigma->add_option("--poly", sa.polys, "Polynomial coefficients a_1,..,a_d (repeatable)");
    sigma->add_option("--form", sa.form, "closed_form or reversal_corrected")->capture_default_str();

    CountArgs ca;
    int p = 0, k = 0;
    long s = 0;
    auto* count = app.add_subcommand("count", "Count signed index tuples");
    count->add_option("--variant", ca.variant, "A or A_tilde")->capture_default_str();
    count->add_option("--n", ca.n, "Modulus n")->required();
    auto* p_opt = count->add_option("--p", p, "Tuple length");
    auto* k_opt = count->add_option("--k", k, "Number of +1 signs");
    auto* s_opt = count->add_option("--s", s, "Exact sum multiple: sum eps_i j_i = s n");
    count->add_option("--range", ca.range, "half_floor or trace_exact")->capture_default_str();
    count->add_flag("--distinct", ca.distinct, "Require distinct first k indices");

    std::string source;
    auto* simulate_cmd = app.add_subcommand("simulate", "Run a Monte Carlo experiment");
    simulate_cmd->add_option("config", source, "Config file or 'quickcheck'")->required();

    AcceptArgs aa;
    auto* accept = app.add_subcommand("accept", "Run the acceptance suite");
    accept->add_flag("--list", aa.list, "List criteria without running");
    accept->add_option("--only", aa.only, "Criterion ids (comma separated)")->delimiter(',');
    accept->add_option("--perturb-sigma", aa.perturb, "Add this to every sigma_{p,q} (mutation check)");
    accept->add_option("--scratch", aa.scratch, "Directory for determinism runs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsageError;
    }
    if (*seed_opt) g.seed = seed;
    if (*threads_opt) g.threads = threads;
    if (*p_opt) ca.p = p;
    if (*k_opt) ca.k = k;
    if (*s_opt) ca.s = s;

    try {
        if (*sigma) return cmd_sigma(sa, g, out);
        if (*count) return cmd_count(ca, out);
        if (*simulate_cmd) return cmd_simulate(source, g, out);
        if (*accept) return cmd_accept(aa, g, out);
    } catch (const config_error& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const usage_error& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const budget_exceeded& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kVerdictFailure;
    }
    return kUsageError;
}

}  // namespace circulant_clt::cli
