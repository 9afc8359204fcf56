#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

#include "cdspec/envelope.hpp"
#include "cdspec/linalg.hpp"
#include "cdspec/pointset.hpp"
#include "cdspec/rng.hpp"
#include "cdspec/sequence.hpp"

namespace cdspec {

// Finite section of a convolution-dominated matrix: dense entries indexed by
// two point sets. Immutable after construction; the Schur norm is computed
// eagerly, the minimal envelope on first use.
class CdMatrix {
 public:
  CdMatrix() = default;
  CdMatrix(std::shared_ptr<const PointSet> rows, std::shared_ptr<const PointSet> cols,
           Matrix entries);

  static CdMatrix identity(std::shared_ptr<const PointSet> pts);
  static CdMatrix toeplitz(std::shared_ptr<const PointSet> pts,
                           const std::function<cplx(const std::vector<double>&)>& kernel);

  const PointSet& row_set() const { return *rows_; }
  const PointSet& col_set() const { return *cols_; }
  std::shared_ptr<const PointSet> row_set_ptr() const { return rows_; }
  std::shared_ptr<const PointSet> col_set_ptr() const { return cols_; }
  const Matrix& entries() const { return m_; }

  Seq apply(const Seq& b) const;

  // sup_col sum_row |a| + sup_row sum_col |a|
  double schur_norm() const { return schur_norm_; }
  // sup over columns of sum |entry|^p, for 0 < p <= 1.
  double sp_norm(double p) const;

  // Pointwise-minimal grid-constant envelope on the difference grid; step
  // defaults to the finest lattice step of the index sets.
  const Envelope& min_envelope() const;
  double min_envelope_step() const;

  // amalgam_quasinorm(min_envelope, p0): upper-bound proxy of the C^{p0}
  // quasi-norm (exact within the grid-constant class).
  double cd_norm_estimate(double p0) const;

 private:
  std::shared_ptr<const PointSet> rows_, cols_;
  Matrix m_;
  double schur_norm_ = 0.0;
  mutable std::optional<Envelope> env_;
};

struct OperatorNormBound {
  double bound = 0.0;
  double amalgam_upper = 0.0;  // certified upper amalgam norm of the envelope
  double rel_rows = 0.0;
  double rel_cols = 0.0;
  double constant = 0.0;  // everything except rel^{1/q} rel^{1/q'} cdnorm
};

// Bound on the l^q -> l^q operator norm tracked through the Hoelder/Young
// proof, with q' = inf for q <= 1. Requires p0 <= q.
OperatorNormBound operator_norm_bound(const CdMatrix& a, double q, double p0);

// Empirical operator norm: best ratio over random vectors, plus a power
// iteration refinement when q = 2.
double empirical_operator_norm(const CdMatrix& a, double q, int n_random, Rng& rng);

// Empirical lower bound min ||Ac||_q / ||c||_q by multi-start projected random
// search (an upper bound for the true infimum). q = 2 admits the exact
// smallest singular value; callers choose.
double empirical_lower_bound(const CdMatrix& a, double q, int starts, int iters, Rng& rng);

// Sub-section keeping only index points whose coordinates stay `margin` away
// from the per-axis extremes of their point set. Used to keep truncation
// boundary pollution out of interior-block diagnostics.
CdMatrix interior_block(const CdMatrix& a, double margin);

// CSV: "# rows cols" header then "i,j,re,im" per entry; loading re-attaches
// the caller's index sets.
void save_cdmatrix(const CdMatrix& a, std::ostream& os);
void save_cdmatrix_file(const CdMatrix& a, const std::string& path);
CdMatrix load_cdmatrix_file(const std::string& path, std::shared_ptr<const PointSet> rows,
                            std::shared_ptr<const PointSet> cols);

}  // namespace cdspec
