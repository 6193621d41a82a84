#ifndef LATE_RANDOM_H_
#define LATE_RANDOM_H_

#include <cstdint>
#include <random>

namespace late {

// splitmix64 finalizer; a bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t z);

// Substream seed for (master seed, dataset, replication). Any evaluation
// order yields the same seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t dataset, std::uint64_t rep);

// mt19937_64 with hand-written conversions so draws do not depend on the
// standard library's distribution implementations.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Standard normal by the polar (Marsaglia) method; the second variate of
  // each accepted pair is kept for the next call.
  double normal();
  // Uniform integer in [0, bound), bound > 0, by rejection.
  std::uint64_t bounded(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace late

#endif  // LATE_RANDOM_H_
