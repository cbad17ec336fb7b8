#include "rng.hpp"

#include <cmath>

namespace pooled {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t master_seed, std::uint64_t stream_id) {
  return splitmix64(splitmix64(master_seed) ^ (stream_id * 0xd1b54a32d192ed03ULL + 0x8bb84b93962eacc9ULL));
}

RngHandle RngHandle::derive(std::uint64_t index) const {
  return {master_seed, splitmix64(stream_id ^ splitmix64(index + 0x632be59bd9b4e019ULL))};
}

Rng::Rng(RngHandle handle) : engine_(mix_seed(handle.master_seed, handle.stream_id)) {}

std::uint64_t Rng::uniform_below(std::uint64_t bound) {
  unsigned __int128 product = static_cast<unsigned __int128>(engine_()) * bound;
  auto low = static_cast<std::uint64_t>(product);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      product = static_cast<unsigned __int128>(engine_()) * bound;
      low = static_cast<std::uint64_t>(product);
    }
  }
  return static_cast<std::uint64_t>(product >> 64);
}

double Rng::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u = 0.0;
  double v = 0.0;
  double s = 0.0;
  do {
    u = 2.0 * uniform01() - 1.0;
    v = 2.0 * uniform01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * factor;
  has_spare_ = true;
  return u * factor;
}

}  // namespace pooled
