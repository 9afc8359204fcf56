#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "cdspec/pointset.hpp"
#include "cdspec/sequence.hpp"
#include "cdspec/types.hpp"

namespace cdspec {

// Nonnegative function tabulated on the grid {h*k : |h*k|_inf <= R}, extended
// by zero outside. Stored row-major over the integer multi-index.
class Envelope {
 public:
  Envelope() = default;
  Envelope(int dim, double grid_step, double coverage_radius);

  static Envelope from_function(int dim, double grid_step, double coverage_radius,
                                const std::function<double(const double*)>& f);

  int dim() const { return dim_; }
  double grid_step() const { return h_; }
  double coverage_radius() const { return half_span_ * h_; }
  long nodes_per_axis() const { return 2 * half_span_ + 1; }
  long half_span() const { return half_span_; }
  size_t node_count() const { return values_.size(); }

  double& at_index(const std::vector<long>& k);
  double at_index(const std::vector<long>& k) const;
  // Nearest-node evaluation; zero outside coverage.
  double value_at(const double* x) const;
  double value_at(const std::vector<double>& x) const { return value_at(x.data()); }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  // Multi-index iteration helper: node k for a flat offset.
  std::vector<long> unflatten(size_t flat) const;
  size_t flatten(const std::vector<long>& k) const;
  bool in_range(const std::vector<long>& k) const;

  Envelope scaled(double factor) const;
  Envelope pow(double exponent) const;
  static Envelope max(const Envelope& a, const Envelope& b);
  static Envelope sum(const Envelope& a, const Envelope& b);

 private:
  int dim_ = 0;
  double h_ = 1.0;
  long half_span_ = 0;   // nodes per axis = 2*half_span_+1
  std::vector<double> values_;
};

// Discrete W(C_b, L^{p0}) quasi-norm with K = B_1(0): local sups realized as
// maxima over grid nodes in x + B_1(0), aggregated by a Riemann sum over x.
// Empty envelope gives 0. p0 = inf degenerates to the global max.
double amalgam_quasinorm(const Envelope& h, double p0);

// One-sided variant: the local sup is taken over all grid cells meeting the
// inflated ball B_{1 + step*sqrt(D)/2}(x), so the result certifiably
// dominates the continuum amalgam norm of the cell-constant extension. Used
// wherever an inequality must hold with zero violations.
double amalgam_quasinorm_upper(const Envelope& h, double p0);

struct SampledSeq {
  Seq seq;
  int outside_count = 0;  // points that fell outside coverage (evaluated as 0)
};
SampledSeq sample_on_pointset(const Envelope& h, std::shared_ptr<const PointSet> s);

// Delta aggregate: sum over t in Z^D with |eps*t - s|_inf <= 5 of the sup of
// H^q over grid nodes in the closed unit cell [0,1]^D + t. Closed cells keep
// the aggregate exactly symmetric under s -> -s for even envelopes.
double delta_envelope(const Envelope& h, double eps, double q, const std::vector<long>& s);

// Sum of the delta aggregate over |s| > 6*sqrt(D) within the coverage-implied
// range of s.
double tail_sum(const Envelope& h, double eps, double q);

// Sampling constant of the amalgam-to-sequence embedding tracked through the
// covering argument: alpha = 1/(2 sqrt(D)) gives alpha^{-D} = 2^D D^{D/2}.
double sampling_constant(int dim);

// CSV round trip: header "D h R", then "k_1 ... k_D value" rows.
void save_envelope(const Envelope& h, std::ostream& os);
Envelope load_envelope(std::istream& is);
void save_envelope_file(const Envelope& h, const std::string& path);
Envelope load_envelope_file(const std::string& path);

}  // namespace cdspec
