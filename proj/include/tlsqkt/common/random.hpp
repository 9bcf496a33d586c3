// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tlsqkt {

/// Derives an independent seed for a named stream ("split", "init",
/// "shuffle", "dropout", ...) from one master seed.
std::uint64_t stream_seed(std::uint64_t master, std::string_view name);

inline std::mt19937_64 make_stream(std::uint64_t master, std::string_view name) {
  return std::mt19937_64(stream_seed(master, name));
}

/// Uniform double in [0, 1) built from the top 53 bits.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, bound).
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  return rng() % bound;
}

}  // namespace tlsqkt
