#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace mprop {

// The single randomness source for the whole pipeline. Every stochastic stage
// derives a child generator from the one user-facing seed plus a stage name,
// so runs are reproducible bit-for-bit regardless of stage order or thread
// count. The name/version pair is part of the output contract: changing the
// algorithm below means bumping kRngVersion.
//
// All distributions are implemented explicitly (Box-Muller for normals,
// fixed-point rejection for bounded ints) because the standard library's
// distribution objects are implementation-defined and would break golden
// files across toolchains.
class Rng {
 public:
  static constexpr const char* kRngName = "metricprop-rng";
  static constexpr int kRngVersion = 1;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Child generator for a named pipeline stage.
  static Rng for_stage(std::uint64_t seed, const std::string& stage);

  // Uniform on [0, 1).
  double uniform();

  // Uniform integer in [0, bound), bias-free.
  std::uint64_t uniform_int(std::uint64_t bound);

  // Standard normal via Box-Muller (both halves used).
  double normal();

  // Fisher-Yates shuffle of v, deterministic for a given state.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mprop
