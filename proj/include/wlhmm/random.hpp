#pragma once

#include <cstdint>
#include <random>

namespace wlhmm {

using Rng = std::mt19937_64;

/// Independent generator for sub-stream `stream` of a user seed.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    auto rng = make_rng(seed, stream);
    return rng();
}

}  // namespace wlhmm
