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

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "experiment.hpp"

namespace circulant_clt {

// Config files are flat "key = value" lines. '#' starts a comment, blank
// lines are ignored. Lists accept commas or whitespace as separators.
//
//   name         = quickcheck
//   law          = gaussian | rademacher | uniform | two_point
//   n            = 1023, 1024
//   powers       = 2, 3
//   polynomial   = 0, 1, 1          (a_1 .. a_d, repeatable)
//   replicates   = 2000
//   seed         = 20260101
//   threads      = 1
//   tolerance_se = 3
//   theory       = closed_form | reversal_corrected

inline constexpr const char* kSeedEnvironment = "CIRCULANT_CLT_SEED";

inline constexpr std::string_view kQuickcheckConfig =
    "# bundled smoke configuration\n"
    "name = quickcheck\n"
    "law = gaussian\n"
    "n = 256\n"
    "powers = 2, 3\n"
    "replicates = 2000\n"
    "seed = 20260101\n"
    "threads = 1\n";

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

template <class T>
T parse_integer(const std::string& s, const std::string& where) {
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw config_error(where + ": expected an integer, got '" + s + "'");
    }
    return v;
}

inline double parse_real(const std::string& s, const std::string& where) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
        throw config_error(where + ": expected a number, got '" + s + "'");
    }
    return v;
}

}  // namespace detail

[[nodiscard]] inline std::uint64_t parse_seed(const std::string& s, const std::string& where) {
    return detail::parse_integer<std::uint64_t>(detail::trim(s), where);
}

[[nodiscard]] inline CovarianceForm parse_form(const std::string& s, const std::string& where) {
    if (s == "closed_form") return CovarianceForm::closed_form;
    if (s == "reversal_corrected") return CovarianceForm::reversal_corrected;
    throw config_error(where + ": theory must be closed_form or reversal_corrected, got '" + s + "'");
}

[[nodiscard]] inline const char* form_name(CovarianceForm f) {
    return f == CovarianceForm::closed_form ? "closed_form" : "reversal_corrected";
}

/// Parses a config stream. Errors carry "source:line: key: message".
[[nodiscard]] inline ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>") {
    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string body = detail::trim(line);
        if (body.empty()) continue;
        const std::string at = source + ":" + std::to_string(lineno);
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw config_error(at + ": expected 'key = value'");
        const std::string key = detail::trim(std::string_view(body).substr(0, eq));
        const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
        const std::string where = at + ": " + key;
        if (value.empty()) throw config_error(where + ": missing value");

        if (key == "name") {
            cfg.name = value;
        } else if (key == "law") {
            cfg.law = value;
        } else if (key == "n") {
            cfg.n_list.clear();
            for (const auto& t : detail::split_list(value)) cfg.n_list.push_back(detail::parse_integer<long>(t, where));
        } else if (key == "powers") {
            cfg.powers.clear();
            for (const auto& t : detail::split_list(value)) cfg.powers.push_back(detail::parse_integer<int>(t, where));
        } else if (key == "polynomial") {
            std::vector<double> a;
            for (const auto& t : detail::split_list(value)) a.push_back(detail::parse_real(t, where));
            try {
                cfg.polynomials.emplace_back(std::move(a));
            } catch (const std::invalid_argument& e) {
                throw config_error(where + ": " + e.what());
            }
        } else if (key == "replicates") {
            cfg.replicates = detail::parse_integer<std::size_t>(value, where);
        } else if (key == "seed") {
            cfg.seed = parse_seed(value, where);
        } else if (key == "threads") {
            cfg.parallel_width = detail::parse_integer<unsigned>(value, where);
        } else if (key == "tolerance_se") {
            cfg.tolerance_se = detail::parse_real(value, where);
        } else if (key == "theory") {
            cfg.form = parse_form(value, where);
        } else {
            throw config_error(where + ": unknown key");
        }
    }
    return cfg;
}

[[nodiscard]] inline ExperimentConfig parse_config_text(std::string_view text, const std::string& source) {
    std::istringstream in{std::string(text)};
    return parse_config(in, source);
}

/// "quickcheck" names the bundled preset; anything else is a file path.
[[nodiscard]] inline ExperimentConfig load_config(const std::string& path_or_preset) {
    if (path_or_preset == "quickcheck") return parse_config_text(kQuickcheckConfig, "quickcheck");
    std::ifstream in(path_or_preset);
    if (!in) throw config_error(path_or_preset + ": cannot open config file");
    return parse_config(in, path_or_preset);
}

/// Seed precedence: explicit flag, then CIRCULANT_CLT_SEED, then the file.
inline void resolve_seed(ExperimentConfig& cfg, std::optional<std::uint64_t> flag) {
    if (flag) {
        cfg.seed = *flag;
        return;
    }
    if (const char* env = std::getenv(kSeedEnvironment); env != nullptr && *env != '\0') {
        cfg.seed = parse_seed(env, kSeedEnvironment);
    }
}

}  // namespace circulant_clt
