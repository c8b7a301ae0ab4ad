#include "mlg/rng.hpp"

#include <cmath>
#include <stdexcept>

#include "mlg/normal.hpp"

namespace mlg {

namespace {

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

// Domain-separation salts (binary digits of pi and e). They keep the engine's
// counter/key spaces away from the all-zeros corner without affecting the
// bijection.
constexpr std::uint64_t kCtrSalt = 0x243F6A8885A308D3ULL;
constexpr std::uint64_t kKeySalt = 0xB7E151628AED2A6AULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                    std::uint64_t& lo) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

// Centered 52-bit mapping: exact in double and strictly inside (0,1) even at
// the extreme words, so the inverse normal cdf can never see an endpoint.
inline double to_unit(std::uint64_t w) {
  return (static_cast<double>(w >> 12) + 0.5) * 0x1.0p-52;
}

inline PhiloxBlock block_for(const SampleKey& key, std::uint64_t block_index) {
  const std::uint64_t ctr[4] = {
      key.path_index,
      (static_cast<std::uint64_t>(key.level) << 32) |
          static_cast<std::uint64_t>(key.tag),
      block_index, kCtrSalt};
  const std::uint64_t k[2] = {key.seed, kKeySalt};
  return philox4x64(ctr, k);
}

template <typename F>
void fill_stream(const SampleKey& key, std::span<double> out, F&& map) {
  std::size_t i = 0;
  std::uint64_t block_index = 0;
  while (i < out.size()) {
    const PhiloxBlock b = block_for(key, block_index++);
    for (int lane = 0; lane < 4 && i < out.size(); ++lane, ++i)
      out[i] = map(b.w[lane]);
  }
}

}  // namespace

PhiloxBlock philox4x64(const std::uint64_t ctr[4], const std::uint64_t key[2]) {
  std::uint64_t c0 = ctr[0], c1 = ctr[1], c2 = ctr[2], c3 = ctr[3];
  std::uint64_t k0 = key[0], k1 = key[1];
  for (int round = 0; round < 10; ++round) {
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c0, hi0, lo0);
    mulhilo(kMul1, c2, hi1, lo1);
    c0 = hi1 ^ c1 ^ k0;
    c1 = lo1;
    c2 = hi0 ^ c3 ^ k1;
    c3 = lo0;
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return {{c0, c1, c2, c3}};
}

void uniform_stream(const SampleKey& key, std::span<double> out) {
  fill_stream(key, out, [](std::uint64_t w) { return to_unit(w); });
}

std::vector<double> uniform_stream(const SampleKey& key, std::size_t count) {
  std::vector<double> out(count);
  uniform_stream(key, std::span<double>(out));
  return out;
}

void normal_stream(const SampleKey& key, std::span<double> out) {
  fill_stream(key, out,
              [](std::uint64_t w) { return inv_norm_cdf(to_unit(w)); });
}

std::vector<double> normal_stream(const SampleKey& key, std::size_t count) {
  std::vector<double> out(count);
  normal_stream(key, std::span<double>(out));
  return out;
}

void brownian_increments(const SampleKey& key, std::span<const double> step_widths,
                         std::span<double> out) {
  normal_stream(key, out.first(step_widths.size()));
  for (std::size_t i = 0; i < step_widths.size(); ++i) {
    if (!(step_widths[i] > 0.0))
      throw std::invalid_argument("brownian_increments: step width must be > 0");
    out[i] *= std::sqrt(step_widths[i]);
  }
}

std::vector<double> brownian_increments(const SampleKey& key, std::size_t n_steps,
                                        std::span<const double> step_widths) {
  if (step_widths.size() != n_steps)
    throw std::invalid_argument("brownian_increments: widths/n_steps mismatch");
  std::vector<double> out(n_steps);
  brownian_increments(key, step_widths, std::span<double>(out));
  return out;
}

void coarsen(std::span<const double> fine, std::span<double> out) {
  if (fine.size() % 2 != 0)
    throw std::invalid_argument("coarsen: odd number of fine increments");
  for (std::size_t j = 0; j < fine.size() / 2; ++j)
    out[j] = fine[2 * j] + fine[2 * j + 1];
}

std::vector<double> coarsen(std::span<const double> fine) {
  if (fine.size() % 2 != 0)
    throw std::invalid_argument("coarsen: odd number of fine increments");
  std::vector<double> out(fine.size() / 2);
  coarsen(fine, std::span<double>(out));
  return out;
}

}  // namespace mlg
