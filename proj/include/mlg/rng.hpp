#pragma once

// Counter-based random number generation. Every variate is addressed by a
// (seed, level, path_index, stream_tag, position) tuple, so generation is a
// pure function of the key: any worker can produce any sample's draws in any
// order and get identical bits.
//
// Generator: Philox4x64-10 (Salmon et al. 2011), pinned by known-answer
// vectors from an independent reference implementation in the unit tests.
// Layout, fixed forever:
//   counter = { path_index, (level << 32) | stream_tag, block_index, CTR_SALT }
//   key     = { seed, KEY_SALT }
// Each block yields 4 uint64 words; word i of the stream is block i/4, lane
// i%4. Uniforms map a word w to ((w >> 12) + 0.5) * 2^-52, which is exact in
// double and lies in (0,1) strictly. Normals are inv_norm_cdf(uniform).

#include <cstdint>
#include <span>
#include <vector>

namespace mlg {

enum class StreamTag : std::uint32_t { path = 0, split = 1, bridge = 2 };

struct SampleKey {
  std::uint64_t seed = 0;
  std::uint32_t level = 0;
  std::uint64_t path_index = 0;
  StreamTag tag = StreamTag::path;
};

struct PhiloxBlock {
  std::uint64_t w[4];
};

// One application of the Philox4x64 10-round bijection.
PhiloxBlock philox4x64(const std::uint64_t ctr[4], const std::uint64_t key[2]);

// Raw uniform words for a key, positions [0, out.size()).
void uniform_stream(const SampleKey& key, std::span<double> out);
std::vector<double> uniform_stream(const SampleKey& key, std::size_t count);

void normal_stream(const SampleKey& key, std::span<double> out);
std::vector<double> normal_stream(const SampleKey& key, std::size_t count);

// Increment i is sqrt(step_widths[i]) times a standard normal. Throws
// std::invalid_argument on a non-positive width.
void brownian_increments(const SampleKey& key, std::span<const double> step_widths,
                         std::span<double> out);
std::vector<double> brownian_increments(const SampleKey& key, std::size_t n_steps,
                                        std::span<const double> step_widths);

// Pairwise sums: out[j] = fine[2j] + fine[2j+1]. Throws on odd length.
void coarsen(std::span<const double> fine, std::span<double> out);
std::vector<double> coarsen(std::span<const double> fine);

}  // namespace mlg
