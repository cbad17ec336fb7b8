#pragma once

#include <cstdint>
#include <random>

namespace pooled {

// Identifies one reproducible random stream. The engine is std::mt19937_64
// seeded with mix_seed(master_seed, stream_id); every distribution below is
// implemented here so the draw sequence does not depend on the standard
// library vendor.
struct RngHandle {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;

  // Child stream for sub-task `index` (grid point, trial, ...).
  RngHandle derive(std::uint64_t index) const;

  friend bool operator==(const RngHandle&, const RngHandle&) = default;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t mix_seed(std::uint64_t master_seed, std::uint64_t stream_id);

class Rng {
 public:
  explicit Rng(RngHandle handle);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, bound), bound >= 1 (Lemire's nearly divisionless
  // method with rejection, so the result is exactly uniform).
  std::uint64_t uniform_below(std::uint64_t bound);

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  bool bernoulli(double probability) { return uniform01() < probability; }

  // Standard normal variate (Marsaglia polar method).
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace pooled
