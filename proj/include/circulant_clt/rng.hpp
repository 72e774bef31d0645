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

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace circulant_clt {

/// Philox4x32-10 counter-based generator. Every draw is a pure function of
/// (key, counter), so a sample stream keyed by (seed, replicate, coordinate)
/// does not depend on how work is scheduled across threads.
class Philox4x32 {
public:
    using counter_type = std::array<std::uint32_t, 4>;
    using key_type = std::array<std::uint32_t, 2>;

    static constexpr counter_type block(counter_type ctr, key_type key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// 128 random bits for one (replicate, coordinate, stream) cell.
struct RandomCell {
    std::array<std::uint32_t, 4> words{};

    /// Uniform on the open interval (0, 1) from words (w0, w1), 53 bits.
    [[nodiscard]] double uniform0() const noexcept { return to_unit(words[0], words[1]); }
    /// Independent second uniform from words (w2, w3).
    [[nodiscard]] double uniform1() const noexcept { return to_unit(words[2], words[3]); }

    static constexpr double to_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
        const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }
};

/// Stream of random cells keyed by a 64-bit seed. The counter packs
/// (replicate low, replicate high, coordinate, stream tag).
class CounterStream {
public:
    explicit constexpr CounterStream(std::uint64_t seed) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    [[nodiscard]] constexpr RandomCell cell(std::uint64_t replicate, std::uint32_t coordinate,
                                            std::uint32_t tag = 0) const noexcept {
        const Philox4x32::counter_type ctr{static_cast<std::uint32_t>(replicate),
                                           static_cast<std::uint32_t>(replicate >> 32),
                                           coordinate, tag};
        return RandomCell{Philox4x32::block(ctr, key_)};
    }

private:
    Philox4x32::key_type key_;
};

/// Standard normal from one cell via Box-Muller (cosine branch).
[[nodiscard]] inline double standard_normal(const RandomCell& c) noexcept {
    const double radius = std::sqrt(-2.0 * std::log(c.uniform0()));
    return radius * std::cos(2.0 * std::numbers::pi * c.uniform1());
}

}  // namespace circulant_clt
