#pragma once

#include <memory>
#include <span>
#include <vector>

#include "cdspec/pointset.hpp"
#include "cdspec/types.hpp"

namespace cdspec {

// Finite sequence indexed by a PointSet.
struct Seq {
  std::shared_ptr<const PointSet> index;
  std::vector<cplx> values;

  Seq() = default;
  Seq(std::shared_ptr<const PointSet> idx, std::vector<cplx> vals);

  int size() const { return static_cast<int>(values.size()); }
};

// |x|^p with the p<1 branch short-circuited at zero, so 0^p never produces a
// NaN through exp(p log 0).
double abs_pow(double x, double p);

// (sum |a_j|^p)^{1/p}; max for p = inf. p <= 0 is a parameter error.
double lp_quasinorm(std::span<const cplx> a, double p);
double lp_quasinorm(const Seq& a, double p);

// Conjugate exponent with the convention q' = inf for q <= 1.
double conjugate_exponent(double q);

// Full discrete convolution of two sequences supported on integer lattice
// sections; the result lives on the Minkowski sum, ordered lexicographically.
Seq convolve(const Seq& a, const Seq& b);

Seq random_seq(std::shared_ptr<const PointSet> idx, class Rng& rng);

}  // namespace cdspec
