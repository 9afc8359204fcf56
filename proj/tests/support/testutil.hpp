#pragma once

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "cdspec/pointset.hpp"
#include "cdspec/rng.hpp"
#include "cdspec/sequence.hpp"

namespace testutil {

inline std::shared_ptr<const cdspec::PointSet> z_section(double radius, double step = 1.0) {
  cdspec::RectangularLattice lat;
  lat.dim = 1;
  lat.steps = {step};
  lat.radius = radius;
  return std::make_shared<const cdspec::PointSet>(cdspec::enumerate_lattice(lat));
}

inline bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace testutil
