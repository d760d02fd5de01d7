#include "metricprop/rng.hpp"

#include <cmath>

namespace mprop {

namespace {

// FNV-1a over the stage name, mixed into the seed. Stable across platforms.
std::uint64_t hash_stage(std::uint64_t seed, const std::string& stage) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : stage) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  // splitmix64 finalizer to decorrelate nearby seeds
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * h;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng Rng::for_stage(std::uint64_t seed, const std::string& stage) {
  return Rng(hash_stage(seed, stage));
}

double Rng::uniform() {
  // 53 random bits -> [0,1) with full double resolution
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_int(std::uint64_t bound) {
  if (bound == 0) return 0;
  // rejection sampling on the top of the range to avoid modulo bias
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

}  // namespace mprop
