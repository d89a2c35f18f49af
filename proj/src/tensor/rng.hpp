// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

#include <cstdint>

namespace sgnn {

// Counter-based generator: every draw is a SplitMix64 finalizer applied to
// (key + counter * golden gamma). Streams derived with `split` are
// independent of draw order, so per-graph generation can run in any order
// and stays bit-identical across platforms.
class Rng
{
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : seed_ { seed },
        key_ { mix(mix(seed) ^ mix(stream + stream_gamma)) }
    {}

    auto next_u64() noexcept -> std::uint64_t
    {
        return mix(key_ + (counter_++) * golden_gamma);
    }

    // Uniform on [0, 1) with 53 random bits.
    auto uniform() noexcept -> double
    {
        return static_cast<double>(next_u64() >> 11U) * 0x1.0p-53;
    }

    auto uniform(double lo, double hi) noexcept -> double
    {
        return lo + (hi - lo) * uniform();
    }

    // Unbiased integer on [0, n); n must be positive.
    auto below(std::uint64_t n) noexcept -> std::uint64_t
    {
        const std::uint64_t limit = (~std::uint64_t { 0 }) - ((~std::uint64_t { 0 }) % n);
        std::uint64_t x = next_u64();
        while (x >= limit) {
            x = next_u64();
        }
        return x % n;
    }

    auto bernoulli(double p) noexcept -> bool
    {
        return uniform() < p;
    }

    [[nodiscard]] auto split(std::uint64_t stream) const noexcept -> Rng
    {
        return Rng { key_, stream };
    }

    [[nodiscard]] auto seed() const noexcept -> std::uint64_t
    {
        return seed_;
    }

    [[nodiscard]] auto counter() const noexcept -> std::uint64_t
    {
        return counter_;
    }

    static constexpr auto mix(std::uint64_t z) noexcept -> std::uint64_t
    {
        z = (z ^ (z >> 30U)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27U)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31U);
    }

private:
    static constexpr std::uint64_t golden_gamma = 0x9e3779b97f4a7c15ULL;
    static constexpr std::uint64_t stream_gamma = 0xd1b54a32d192ed03ULL;

    std::uint64_t seed_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace sgnn
