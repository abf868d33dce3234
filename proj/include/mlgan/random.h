#ifndef MLGAN_RANDOM_H_
#define MLGAN_RANDOM_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace mlgan {

// Deterministically derives an independent stream seed from a root seed and
// a stream name (splitmix64 over the seed mixed with an FNV-1a hash).
std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view stream);

// Explicit generator state. All distributions are computed here from raw
// 64-bit draws so results do not depend on the standard library's
// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double Uniform();
  // Uniform on the open interval (0, 1).
  double UniformOpen();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Standard normal (Box-Muller, one value per call).
  double Normal();
  // Uniform integer in [0, n); unbiased.
  std::uint64_t Below(std::uint64_t n);
  bool Bernoulli(double p) { return Uniform() < p; }

  std::uint64_t Next() { return engine_(); }

  // A child generator whose stream depends on this one's next draw and tag.
  Rng Fork(std::string_view tag) { return Rng(DeriveSeed(Next(), tag)); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mlgan

#endif  // MLGAN_RANDOM_H_
