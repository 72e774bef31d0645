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

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "experiment.hpp"

#ifndef CIRCULANT_CLT_VERSION
#define CIRCULANT_CLT_VERSION "0.0.0"
#endif

namespace circulant_clt {

inline constexpr const char* kVersion = CIRCULANT_CLT_VERSION;

/// One line of a result table. Missing numeric cells are written empty.
struct CsvRow {
    long n = 0;
    std::string statistic;
    std::optional<double> estimate, stderr_, theory, zscore;
    std::string verdict;

    bool operator==(const CsvRow&) const = default;
};

struct CsvTable {
    std::vector<std::pair<std::string, std::string>> manifest;  ///< "# key: value" lines
    std::vector<CsvRow> rows;

    bool operator==(const CsvTable&) const = default;
};

inline constexpr const char* kCsvHeader = "n,statistic,estimate,stderr,theory,zscore,verdict";

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

inline std::string csv_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

inline std::vector<std::string> csv_split(const std::string& line) {
    std::vector<std::string> out(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                out.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                out.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.emplace_back();
        } else {
            out.back() += c;
        }
    }
    if (quoted) throw std::runtime_error("csv: unterminated quote");
    return out;
}

inline std::optional<double> csv_parse_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) throw std::runtime_error("csv: bad number '" + s + "'");
    return v;
}

}  // namespace detail

inline void write_csv(std::ostream& os, const CsvTable& t) {
    for (const auto& [k, v] : t.manifest) os << "# " << k << ": " << v << '\n';
    os << kCsvHeader << '\n';
    for (const auto& r : t.rows) {
        os << r.n << ',' << detail::csv_field(r.statistic) << ',' << detail::csv_number(r.estimate) << ','
           << detail::csv_number(r.stderr_) << ',' << detail::csv_number(r.theory) << ','
           << detail::csv_number(r.zscore) << ',' << detail::csv_field(r.verdict) << '\n';
    }
}

[[nodiscard]] inline std::string to_csv(const CsvTable& t) {
    std::ostringstream os;
    write_csv(os, t);
    return os.str();
}

[[nodiscard]] inline CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (!header && line.rfind("# ", 0) == 0) {
            const auto colon = line.find(": ", 2);
            if (colon == std::string::npos) throw std::runtime_error("csv: bad manifest line");
            t.manifest.emplace_back(line.substr(2, colon - 2), line.substr(colon + 2));
            continue;
        }
        if (!header) {
            if (line != kCsvHeader) throw std::runtime_error("csv: unexpected header '" + line + "'");
            header = true;
            continue;
        }
        const auto f = detail::csv_split(line);
        if (f.size() != 7) throw std::runtime_error("csv: expected 7 fields in '" + line + "'");
        CsvRow r;
        r.n = std::stol(f[0]);
        r.statistic = f[1];
        r.estimate = detail::csv_parse_number(f[2]);
        r.stderr_ = detail::csv_parse_number(f[3]);
        r.theory = detail::csv_parse_number(f[4]);
        r.zscore = detail::csv_parse_number(f[5]);
        r.verdict = f[6];
        t.rows.push_back(std::move(r));
    }
    if (!header) throw std::runtime_error("csv: missing header");
    return t;
}

[[nodiscard]] inline CsvTable parse_csv(const std::string& text) {
    std::istringstream in(text);
    return read_csv(in);
}

[[nodiscard]] inline std::string join_list(const std::vector<long>& v) {
    std::string s;
    for (long x : v) s += (s.empty() ? "" : " ") + std::to_string(x);
    return s;
}

[[nodiscard]] inline std::string join_list(const std::vector<int>& v) {
    std::string s;
    for (int x : v) s += (s.empty() ? "" : " ") + std::to_string(x);
    return s;
}

/// Manifest entries that are a pure function of (config, seed, version).
/// Wall-clock times and the worker count live only in the JSON summary so
/// the CSV files stay byte-identical between runs.
[[nodiscard]] inline std::vector<std::pair<std::string, std::string>> stable_manifest(
    const std::string& command, const ExperimentConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> m{
        {"command", command},
        {"version", kVersion},
        {"config", cfg.name},
        {"law", cfg.law},
        {"n", join_list(cfg.n_list)},
        {"powers", join_list(cfg.powers)},
    };
    for (const auto& q : cfg.polynomials) m.emplace_back("polynomial", polynomial_statistic(q).label);
    m.emplace_back("replicates", std::to_string(cfg.replicates));
    m.emplace_back("seed", std::to_string(cfg.seed));
    m.emplace_back("tolerance_se", format_number(cfg.tolerance_se));
    m.emplace_back("theory", form_name(cfg.form));
    return m;
}

namespace detail {

inline const char* verdict(bool pass) { return pass ? "pass" : "fail"; }

inline std::optional<double> finite_or_empty(double v) {
    if (std::isfinite(v)) return v;
    return std::nullopt;
}

}  // namespace detail

/// Rows for one (n, statistic): variance check, cross-covariances, shape
/// diagnostics and raw moments.
[[nodiscard]] inline std::vector<CsvRow> report_rows(const StatisticReport& r) {
    std::vector<CsvRow> rows;
    const std::string& w = r.label;
    rows.push_back({r.n, "var(" + w + ")", r.variance.value, r.variance.se, r.theory_variance,
                    detail::finite_or_empty(r.variance_z), detail::verdict(r.variance_pass)});
    for (const auto& c : r.covariances) {
        rows.push_back({r.n, "cov(" + w + "," + c.other + ")", c.estimate.value, c.estimate.se, c.theory,
                        detail::finite_or_empty(c.z), detail::verdict(c.pass)});
    }
    if (r.normality) {
        const auto& v = *r.normality;
        const std::string verdict = detail::verdict(v.pass);
        rows.push_back({r.n, "skewness(" + w + ")", v.skewness, std::nullopt, 0.0, v.skewness_z, "info"});
        rows.push_back({r.n, "excess_kurtosis(" + w + ")", v.excess_kurtosis, std::nullopt, 0.0, v.kurtosis_z,
                        "info"});
        rows.push_back({r.n, "jarque_bera(" + w + ")", v.jarque_bera, std::nullopt, std::nullopt, std::nullopt,
                        "info"});
        rows.push_back({r.n, "jb_pvalue(" + w + ")", v.jb_pvalue, std::nullopt, kJarqueBeraAlpha, std::nullopt,
                        verdict});
        rows.push_back({r.n, "ks_distance(" + w + ")", v.ks_distance, std::nullopt, v.ks_band, std::nullopt,
                        verdict});
    } else {
        const std::string why = r.degenerate ? "skipped" : "info";
        rows.push_back({r.n, "normality(" + w + ")", std::nullopt, std::nullopt, std::nullopt, std::nullopt, why});
    }
    for (std::size_t k = 0; k < r.raw_moments.size(); ++k) {
        rows.push_back({r.n, "moment" + std::to_string(k + 1) + "(" + w + ")", r.raw_moments[k].value,
                        r.raw_moments[k].se, std::nullopt, std::nullopt, "info"});
    }
    return rows;
}

[[nodiscard]] inline std::string file_stem(const std::string& s) {
    std::string out;
    for (char c : s) {
        const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                          c == '_' || c == '-' || c == '.';
        out += keep ? c : '_';
    }
    return out;
}

[[nodiscard]] inline std::string csv_file_name(const std::string& config_name, long n, const std::string& label) {
    return file_stem(config_name) + "_n" + std::to_string(n) + "_" + file_stem(label) + ".csv";
}

[[nodiscard]] inline nlohmann::ordered_json row_json(const CsvRow& r) {
    nlohmann::ordered_json j;
    j["n"] = r.n;
    j["statistic"] = r.statistic;
    auto num = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nullptr; };
    j["estimate"] = num(r.estimate);
    j["stderr"] = num(r.stderr_);
    j["theory"] = num(r.theory);
    j["zscore"] = num(r.zscore);
    j["verdict"] = r.verdict;
    return j;
}

struct RunManifest {
    std::string command;
    ExperimentConfig config;
    std::string started;
    std::string finished;
    std::vector<std::string> outputs;
};

[[nodiscard]] inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

[[nodiscard]] inline nlohmann::ordered_json manifest_json(const RunManifest& m) {
    nlohmann::ordered_json j;
    for (const auto& [k, v] : stable_manifest(m.command, m.config)) {
        if (k == "polynomial") j["polynomials"].push_back(v);
        else j[k] = v;
    }
    j["threads"] = m.config.parallel_width;
    j["started"] = m.started;
    j["finished"] = m.finished;
    j["outputs"] = m.outputs;
    return j;
}

/// Writes one CSV per (n, statistic) and a JSON summary into `dir`.
/// Returns the paths written, summary last.
inline std::vector<std::string> write_experiment(const std::filesystem::path& dir, const ExperimentResult& result,
                                                 RunManifest manifest) {
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json results = nlohmann::ordered_json::array();
    for (const auto& r : result.reports) {
        CsvTable t{stable_manifest(manifest.command, result.config), report_rows(r)};
        const auto path = dir / csv_file_name(result.config.name, r.n, r.label);
        std::ofstream os(path, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + path.string());
        write_csv(os, t);
        manifest.outputs.push_back(path.string());
        nlohmann::ordered_json entry;
        entry["n"] = r.n;
        entry["statistic"] = r.label;
        entry["pass"] = r.pass();
        entry["rows"] = nlohmann::ordered_json::array();
        for (const auto& row : t.rows) entry["rows"].push_back(row_json(row));
        results.push_back(std::move(entry));
    }
    const auto summary = dir / (file_stem(result.config.name) + "_summary.json");
    manifest.outputs.push_back(summary.string());
    if (manifest.finished.empty()) manifest.finished = utc_timestamp();
    nlohmann::ordered_json j;
    j["manifest"] = manifest_json(manifest);
    j["pass"] = result.pass();
    j["results"] = std::move(results);
    std::ofstream os(summary, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + summary.string());
    os << j.dump(2) << '\n';
    return manifest.outputs;
}

}  // namespace circulant_clt
