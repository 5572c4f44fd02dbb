#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <boost/random/normal_distribution.hpp>

#include "raydiff/common/types.hpp"

namespace raydiff {

using Rng = std::mt19937_64;
/// Ziggurat sampler; same sequence on every platform, unlike std::normal_distribution.
using NormalDist = boost::random::normal_distribution<double>;

/// SplitMix64 finalizer; bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t z);

/// Seed for the stream addressed by (master, tags...). Realization i of an
/// ensemble always gets the same generator, whichever worker runs it.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags);

inline Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
    return Rng(derive_seed(master, tags));
}

Vec standard_normal_vector(Rng& rng, int dim);
Vec uniform_on_sphere(Rng& rng, int dim);

// Stream tags, kept distinct so that sub-experiments never share draws.
namespace stream {
inline constexpr std::uint64_t medium = 0x6d656469756dULL;
inline constexpr std::uint64_t sde = 0x736465ULL;
inline constexpr std::uint64_t probe = 0x70726f6265ULL;
inline constexpr std::uint64_t sphere = 0x737068657265ULL;
}  // namespace stream

}  // namespace raydiff
