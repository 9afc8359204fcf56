#pragma once

#include <cstdint>

#include "cdspec/types.hpp"

namespace cdspec {

// Deterministic generator (splitmix64). We avoid <random> distributions so
// that streams are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // Uniform in [0,1) with 53 random bits.
  double uniform01();
  // Uniform in [a,b).
  double uniform(double a, double b);
  // Standard normal (Box-Muller, no caching: one fresh pair per call, first
  // component returned; keeps the stream position independent of call mix).
  double normal();
  cplx complex_normal();
  // Integer in [0,n).
  std::uint64_t below(std::uint64_t n);

  Rng fork(std::uint64_t stream_id) const;

 private:
  std::uint64_t state_;
};

}  // namespace cdspec
