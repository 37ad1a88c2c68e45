// SPDX-License-Identifier: Apache-2.0
//
// fdxsic: digital self-interference cancellation simulation library
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "core.hpp"

namespace fdxsic {

namespace detail {

// splitmix64 finalizer; the mixing behind stream-key derivation and seeding.
inline constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t rotl64(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
}

} // namespace detail

// Well-known per-use stream tags. Every independent consumer of randomness
// derives its own generator from (master seed, tag, indices), so no two work
// units ever share generator state.
namespace streams {
inline constexpr std::uint64_t noise      = 0x01;
inline constexpr std::uint64_t pilot      = 0x02;
inline constexpr std::uint64_t payload    = 0x03;
inline constexpr std::uint64_t si_symbols = 0x04;
inline constexpr std::uint64_t net_init   = 0x05;
inline constexpr std::uint64_t net_split  = 0x06;
} // namespace streams

/// Derive an independent sub-seed from a master seed and a stream id.
inline constexpr std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t id) noexcept {
    return detail::mix64(detail::mix64(seed) ^ detail::mix64(id ^ 0x6a09e667f3bcc908ULL));
}

inline constexpr std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t a,
                                             std::uint64_t b) noexcept {
    return derive_stream(derive_stream(seed, a), b);
}

inline constexpr std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                                             std::uint64_t c) noexcept {
    return derive_stream(derive_stream(seed, a, b), c);
}

/// xoshiro256++ with an explicit algorithm so sequences are identical across
/// platforms and standard libraries. Not cryptographic.
class rng {
public:
    explicit rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept {
        std::uint64_t x = derive_stream(seed, stream);
        for (auto& word : state_)
            word = detail::mix64(x++);
    }

    std::uint64_t next() noexcept {
        const std::uint64_t result = detail::rotl64(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl64(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1), 53 mantissa bits.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n); n must be positive.
    std::uint64_t uniform_below(std::uint64_t n) noexcept {
        // rejection sampling keeps the draw exactly uniform
        const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
        std::uint64_t x = next();
        while (x >= limit)
            x = next();
        return x % n;
    }

    /// Standard normal via Box-Muller; pairs are cached.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log1p(-uniform()));
        const double phi = 2.0 * pi * uniform();
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

    /// Circularly symmetric complex Gaussian with E|z|^2 = variance.
    cplx complex_normal(double variance) noexcept {
        const double r = std::sqrt(-variance * std::log1p(-uniform()));
        const double phi = 2.0 * pi * uniform();
        return {r * std::cos(phi), r * std::sin(phi)};
    }

private:
    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

template <typename T>
void shuffle(std::vector<T>& v, rng& g) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[g.uniform_below(i)]);
}

} // namespace fdxsic
