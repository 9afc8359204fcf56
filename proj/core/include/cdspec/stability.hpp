#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdspec/cdmatrix.hpp"
#include "cdspec/envelope.hpp"
#include "cdspec/sequence.hpp"

namespace cdspec {

// Smooth bump on [-1,1]: convolution of the indicator of [-1/2,1/2] with a
// normalized C^inf mollifier supported in [-1/2,1/2]. Integer translates sum
// to one exactly (telescoping CDF differences), 0 <= phi1 <= 1, phi1 even and
// unimodal. Tabulated once at high resolution with an analytic derivative for
// Hermite-cubic interpolation.
class BumpTable {
 public:
  static const BumpTable& instance();

  double cdf(double x) const;       // CDF of the mollifier, clamped to [0,1]
  double phi1(double u) const;      // cdf(u+1/2) - cdf(u-1/2)
  double phi1_deriv(double u) const;
  double lipschitz() const { return lipschitz_; }
  double phi_sq_sum_min() const { return phi_sq_sum_min_; }  // min of sum_k phi1(u-k)^2

 private:
  BumpTable();
  double mollifier(double y) const;

  std::vector<double> cdf_;
  double step_ = 0.0;
  double norm_ = 1.0;
  double lipschitz_ = 0.0;
  double phi_sq_sum_min_ = 0.0;
};

// Partition of unity {phi(eps x - k)}_{k in Z^D} with phi a product of the
// bump above; supp phi = [-1,1]^D, sum_k phi(. - k) = 1.
class PartitionOfUnity {
 public:
  PartitionOfUnity(int dim, double eps);

  int dim() const { return dim_; }
  double eps() const { return eps_; }

  double phi(const double* x) const;          // product bump at x
  double phi_k(const double* x, const long* k) const;  // phi(eps x - k)
  // sup of phi over the inf-ball of radius 1 around y (componentwise by
  // unimodality); dominates every phi(y + delta), |delta|_inf < 1.
  double phi_sup_ball(const double* y) const;

  double lipschitz() const;     // per-axis Lipschitz constant of the bump
  double phi_min_sq_sum() const;  // min_x sum_k phi_k(x)^2 = (1D min)^D
  // K = max_x (sum_k phi_k(x)^2)^{-min(1,p)}
  double k_constant(double p) const;
  // eta from the covering count: sup_x #{k : phi(eps x - k) != 0} = 2^D.
  double eta() const;

  // Number of points of s in the support of phi^eps_k, maximized over k
  // (the N constant entering the localized norm equivalence).
  int max_support_count(const PointSet& s) const;

  // Integer box of k with supp phi^eps_k meeting the truncated set.
  std::vector<long> k_box_halfwidth(const PointSet& s) const;

 private:
  int dim_;
  double eps_;
};

Seq multiply_op(const PartitionOfUnity& pou, const std::vector<long>& k, const Seq& c);

struct LocalizedProfile {
  std::vector<std::vector<long>> ks;
  std::vector<double> norms;  // ||phi^eps_k c||_p per k
};
LocalizedProfile localized_norm_profile(const PartitionOfUnity& pou, const Seq& c, double p);

// Entries -a_{l,r} phi^eps_j(r) (phi^eps_k(l) - phi^eps_k(r)).
CdMatrix commutator_matrix(const CdMatrix& a, const PartitionOfUnity& pou,
                           const std::vector<long>& j, const std::vector<long>& k);

// S-p norm (p <= 1) or Schur norm (p > 1) of the commutator block.
double v_eps(const CdMatrix& a, const PartitionOfUnity& pou, const std::vector<long>& j,
             const std::vector<long>& k, double p);

// Integer index box and the full table of commutator norms over it.
struct VTable {
  std::vector<long> halfwidth;       // per-axis k-box halfwidth
  int dim = 1;
  std::vector<double> values;        // dense over (j,k) pairs in the box
  long box_size = 0;

  long index_of(const std::vector<long>& k) const;
  std::vector<long> k_of_index(long idx) const;
  double at(long j_idx, long k_idx) const { return values[j_idx * box_size + k_idx]; }

  double sup() const;
  double sup_j_sum_k(double expnt) const;  // sup_j sum_k V^expnt
  double sup_k_sum_j(double expnt) const;
};
VTable build_v_table(const CdMatrix& a, const PartitionOfUnity& pou, double p);

struct EpsSearchError : std::runtime_error {
  double achieved_budget;
  double floor;
  EpsSearchError(const std::string& msg, double budget, double flr)
      : std::runtime_error(msg), achieved_budget(budget), floor(flr) {}
};

enum class BudgetKind {
  sum_power,   // K^{q/p} sup_j sum_k V^{q/p}                (p <= 1, q < p)
  sum_plain,   // K max(sup_j sum_k V, sup_k sum_j V)        (q >= p branches)
  neumann_s1,  // || (K V)^{p0/min(1,p)-power} ||_{S-1}      (inverse envelope)
};

struct EpsSearch {
  bool success = false;
  double eps = 0.0;
  double budget = kInf;
  std::vector<std::pair<double, double>> trace;  // (eps, budget)
};

struct EpsOptions {
  double threshold = 0.5;
  double floor = 1.0 / 4096.0;  // 2^-12
  double start = 1.0;
};

EpsSearch choose_eps(const CdMatrix& a, double p, double q, double p0, BudgetKind kind,
                     const EpsOptions& opts = {});

struct StabilityCertificate {
  double p_source = 0.0;
  double q_target = 0.0;
  double eps_chosen = 0.0;
  double schur_budget = 0.0;    // achieved value against the 1/2 threshold
  double constant = 0.0;        // certified lower-bound constant C_q
  std::string branch;           // "banach" | "down" | "up" | "via_one"
  std::map<std::string, double> diagnostics;
};

struct TransferOptions {
  EpsOptions eps;
  int lower_bound_starts = 200;
  int lower_bound_iters = 200;
  std::uint64_t seed = 1234;
};

// Lower-bound transfer: given ||Ac||_p >= c0 ||c||_p (verified empirically:
// smallest singular value at p = 2, multi-start random search otherwise),
// produces a certified constant for the target exponent q. Throws
// EpsSearchError when no epsilon meets the budget, std::runtime_error when
// the source premise fails empirically.
StabilityCertificate stability_transfer(const CdMatrix& a, double p, double c0, double q,
                                        const TransferOptions& opts = {});

std::string certificate_to_json(const StabilityCertificate& cert);

struct InverseEnvelopeResult {
  double eps = 0.0;
  double budget = 0.0;        // ||V~||_{S-1} at the accepted eps
  double psi_budget = 0.0;    // the coarser aggregate bound, for reference
  double tail_bound = 0.0;    // geometric tail appended after truncation
  int series_terms = 0;
  double eta = 0.0;
  Matrix w_matrix;            // accumulated geometric series on the k-box
  std::vector<long> k_halfwidth;
  Envelope w;                 // integer-grid envelope of the series
  Envelope h_tilde;           // smoothed envelope on the difference grid;
                              // |(A^{-1})_{r,l}| <= h_tilde(r-l)^{1/p0}
  std::map<std::string, double> diagnostics;
};

InverseEnvelopeResult neumann_inverse_envelope(const CdMatrix& a, double p, double p0,
                                               const EpsOptions& opts = {});

struct InverseEnvelopeReport {
  double condition_number = 0.0;
  double max_violation_ratio = 0.0;  // max |B| / h_tilde^{1/p0} on the block
  int checked_pairs = 0;
  bool pass = false;
};

InverseEnvelopeReport verify_inverse_envelope(const CdMatrix& a, const Envelope& h_tilde,
                                              double p0, double margin_fraction = 0.25);

}  // namespace cdspec
