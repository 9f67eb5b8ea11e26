#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace regpf {

/// The random stream used throughout the library. Every stochastic routine takes one by reference.
using Rng = std::mt19937_64;

/// Builds an independent stream from a base seed and a list of tags (run index, stream purpose, ...).
/// Distinct tag lists give statistically unrelated streams; equal lists give identical streams.
inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags = {}) {
  std::seed_seq::result_type words[16];
  std::size_t k = 0;
  words[k++] = static_cast<std::uint32_t>(seed);
  words[k++] = static_cast<std::uint32_t>(seed >> 32);
  for (auto tag : tags) {
    if (k + 2 > std::size(words)) break;
    words[k++] = static_cast<std::uint32_t>(tag);
    words[k++] = static_cast<std::uint32_t>(tag >> 32);
  }
  std::seed_seq seq(words, words + k);
  return Rng(seq);
}

// Stream purposes used with make_stream.
inline constexpr std::uint64_t kDataStream = 0x64617461;    // "data"
inline constexpr std::uint64_t kInitStream = 0x696e6974;    // "init"
inline constexpr std::uint64_t kFilterStream = 0x66696c74;  // "filt"

}  // namespace regpf
