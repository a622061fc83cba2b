#include "vrclip/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace vrclip {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void round_once(std::array<std::uint32_t, 4>& c,
                       const std::array<std::uint32_t, 2>& k) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

std::array<std::uint32_t, 4> RngStream::philox4x32_10(
    std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key) {
  for (int r = 0; r < 10; ++r) {
    round_once(counter, key);
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return counter;
}

void RngStream::refill() {
  const std::array<std::uint32_t, 2> key = {
      static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
  const std::array<std::uint32_t, 4> counter = {
      static_cast<std::uint32_t>(counter_),
      static_cast<std::uint32_t>(counter_ >> 32),
      static_cast<std::uint32_t>(stream_),
      static_cast<std::uint32_t>(stream_ >> 32)};
  block_ = philox4x32_10(counter, key);
  ++counter_;
  pos_ = 0;
}

double RngStream::normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log1p(-u1));  // 1-u1 in (0,1]
  const double a = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(a);
  has_spare_normal_ = true;
  return r * std::cos(a);
}

BatchIndices sample_batch(RngStream& rng, int n, int size, Sampling mode) {
  if (n < 1) throw ParamError("sample_batch: n must be >= 1");
  if (size < 1) throw ParamError("sample_batch: size must be >= 1");

  BatchIndices batch;
  batch.mode = mode;
  batch.indices.reserve(static_cast<std::size_t>(size));

  if (mode == Sampling::with_replacement) {
    for (int i = 0; i < size; ++i) {
      batch.indices.push_back(static_cast<int>(rng.uniform_int(n)));
    }
    return batch;
  }

  if (size > n) {
    throw ParamError("sample_batch: size " + std::to_string(size) +
                     " exceeds n " + std::to_string(n) +
                     " without replacement");
  }
  if (size == n) {
    batch.indices.resize(static_cast<std::size_t>(n));
    std::iota(batch.indices.begin(), batch.indices.end(), 0);
    return batch;
  }

  // Partial Fisher-Yates over a scratch identity array.
  std::vector<int> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < size; ++i) {
    const auto j = i + rng.uniform_int(n - i);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    batch.indices.push_back(pool[static_cast<std::size_t>(i)]);
  }
  return batch;
}

}  // namespace vrclip
