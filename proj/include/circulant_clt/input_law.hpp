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
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rng.hpp"

namespace circulant_clt {

/// A mean-0, variance-1 entry distribution with every moment finite.
struct InputLaw {
    std::string name;
    double (*sample)(const RandomCell&) = nullptr;
    double fourth_moment = 0.0;
    std::string moment_bound_note;
};

namespace laws {

inline double gaussian(const RandomCell& c) { return standard_normal(c); }

inline double rademacher(const RandomCell& c) { return (c.words[0] & 1u) ? 1.0 : -1.0; }

inline double uniform(const RandomCell& c) {
    const double half_width = std::sqrt(3.0);
    return (2.0 * c.uniform0() - 1.0) * half_width;
}

// P(X = a) = q, P(X = -b) = 1 - q with a = sqrt((1-q)/q), b = sqrt(q/(1-q)).
// EX^4 = 1/(q(1-q)) - 3, so q(1-q) = 1/9 gives EX^4 = 6.
inline constexpr double kTwoPointMass = 0.12732200375003505;  // (1 - sqrt(5)/3) / 2

inline double two_point(const RandomCell& c) {
    const double q = kTwoPointMass;
    return c.uniform0() < q ? std::sqrt((1.0 - q) / q) : -std::sqrt(q / (1.0 - q));
}

}  // namespace laws

struct LawCheck {
    double mean = 0.0, mean_se = 0.0;
    double second = 0.0, second_se = 0.0;
    double fourth = 0.0, fourth_se = 0.0;
    bool pass = false;
};

/// Sample-moment check of E X = 0, E X^2 = 1 and E X^4 against the declared
/// value, each within `tolerance_se` standard errors.
[[nodiscard]] inline LawCheck verify_law(const InputLaw& law, std::uint64_t samples = 1'000'000,
                                         std::uint64_t seed = 0x5eed'1a57ULL,
                                         double tolerance_se = 5.0) {
    const CounterStream stream(seed);
    double s1 = 0, s2 = 0, s4 = 0, s8 = 0;
    for (std::uint64_t i = 0; i < samples; ++i) {
        const double x = law.sample(stream.cell(i, 0, 0x1a57));
        const double x2 = x * x;
        s1 += x;
        s2 += x2;
        s4 += x2 * x2;
        s8 += x2 * x2 * x2 * x2;
    }
    const double N = static_cast<double>(samples);
    LawCheck c;
    c.mean = s1 / N;
    c.second = s2 / N;
    c.fourth = s4 / N;
    c.mean_se = std::sqrt(std::max(c.second - c.mean * c.mean, 0.0) / N);
    c.second_se = std::sqrt(std::max(c.fourth - c.second * c.second, 0.0) / N);
    c.fourth_se = std::sqrt(std::max(s8 / N - c.fourth * c.fourth, 0.0) / N);
    auto within = [&](double est, double target, double se) {
        return std::abs(est - target) <= tolerance_se * se + 1e-12;
    };
    c.pass = within(c.mean, 0.0, c.mean_se) && within(c.second, 1.0, c.second_se) &&
             within(c.fourth, law.fourth_moment, c.fourth_se);
    return c;
}

/// Shipped laws. Each one is checked by verify_law the first time the
/// registry is touched.
[[nodiscard]] inline const std::vector<InputLaw>& law_registry() {
    static const std::vector<InputLaw> registry = [] {
        std::vector<InputLaw> r{
            {"gaussian", &laws::gaussian, 3.0, "all absolute moments finite"},
            {"rademacher", &laws::rademacher, 1.0, "bounded by 1"},
            {"uniform", &laws::uniform, 9.0 / 5.0, "bounded by sqrt(3)"},
            {"two_point", &laws::two_point, 6.0, "bounded by sqrt((1-q)/q) ~ 2.62"},
        };
        for (const auto& law : r) {
            if (!verify_law(law).pass) {
                throw std::logic_error("input law '" + law.name + "' failed its moment check");
            }
        }
        return r;
    }();
    return registry;
}

[[nodiscard]] inline const InputLaw& find_law(std::string_view name) {
    for (const auto& law : law_registry()) {
        if (law.name == name) return law;
    }
    std::string known;
    for (const auto& law : law_registry()) known += (known.empty() ? "" : ", ") + law.name;
    throw std::invalid_argument("unknown input law '" + std::string(name) + "' (known: " + known + ")");
}

}  // namespace circulant_clt
