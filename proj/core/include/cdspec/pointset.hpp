#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cdspec/types.hpp"

namespace cdspec {

// Finite truncation of a relatively separated subset of R^D. Points are kept
// in a fixed deterministic order (lexicographic in generator coordinates for
// lattice sections) so that matrix indexing is reproducible across runs.
class PointSet {
 public:
  PointSet() = default;
  PointSet(int dim, std::vector<double> flat_points, double truncation_radius);

  int dim() const { return dim_; }
  int size() const { return dim_ ? static_cast<int>(coords_.size()) / dim_ : 0; }
  double truncation_radius() const { return radius_; }

  const double* point(int i) const { return coords_.data() + static_cast<size_t>(i) * dim_; }
  const std::vector<double>& coords() const { return coords_; }

  // Step hints of the generating lattice (empty for free point clouds); used
  // to pick difference-grid resolutions.
  const std::vector<double>& lattice_steps() const { return steps_; }
  void set_lattice_steps(std::vector<double> steps) { steps_ = std::move(steps); }

  PointSet translated(const std::vector<double>& shift) const;

  bool operator==(const PointSet& other) const;

 private:
  int dim_ = 0;
  std::vector<double> coords_;  // size * dim, row per point
  double radius_ = 0.0;
  std::vector<double> steps_;
};

struct RectangularLattice {
  int dim = 1;
  std::vector<double> steps;  // one positive step per axis
  double radius = 0.0;
};

// All lattice points with Euclidean norm <= radius, lexicographic in the
// integer coordinates. Throws std::invalid_argument on nonpositive steps or
// negative radius.
PointSet enumerate_lattice(const RectangularLattice& lattice);

// Box truncation |x_i| <= radius per axis; used by the Gabor layer where full
// phase-space coverage matters. The result still sits inside the closed
// Euclidean ball of radius sqrt(D)*radius, which is what gets recorded.
PointSet enumerate_lattice_box(const RectangularLattice& lattice);

// rel(S) = sup_x #(S cap B_1(x)) over open unit balls.
// Exact for D <= 2 (sliding window / candidate-center enumeration); for
// higher D the value is bracketed by grid refinement and `exact` reports
// whether the bracket closed.
struct RelSepResult {
  double lower = 0.0;
  double upper = 0.0;
  bool exact = true;
  double value() const { return upper; }
};
RelSepResult relsep_bracket(const PointSet& s);
double relsep(const PointSet& s);

// Plain text round trip: header "D R", then one point per line.
void save_pointset(const PointSet& s, std::ostream& os);
PointSet load_pointset(std::istream& is);
void save_pointset_file(const PointSet& s, const std::string& path);
PointSet load_pointset_file(const std::string& path);

}  // namespace cdspec
