#include "cdspec/cdmatrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "cdspec/rng.hpp"

namespace cdspec {

CdMatrix::CdMatrix(std::shared_ptr<const PointSet> rows, std::shared_ptr<const PointSet> cols,
                   Matrix entries)
    : rows_(std::move(rows)), cols_(std::move(cols)), m_(std::move(entries)) {
  if (!rows_ || !cols_) throw std::invalid_argument("CdMatrix: null index set");
  if (rows_->dim() != cols_->dim()) throw std::invalid_argument("CdMatrix: dimension mismatch");
  if (m_.rows() != rows_->size() || m_.cols() != cols_->size())
    throw std::invalid_argument("CdMatrix: entry shape does not match index sets");

  double col_max = 0.0, row_max = 0.0;
  for (int j = 0; j < m_.cols(); ++j) {
    double s = 0.0;
    for (int i = 0; i < m_.rows(); ++i) s += std::abs(m_(i, j));
    col_max = std::max(col_max, s);
  }
  for (int i = 0; i < m_.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < m_.cols(); ++j) s += std::abs(m_(i, j));
    row_max = std::max(row_max, s);
  }
  schur_norm_ = col_max + row_max;
}

CdMatrix CdMatrix::identity(std::shared_ptr<const PointSet> pts) {
  Matrix m = Matrix::identity(pts->size());
  return CdMatrix(pts, pts, std::move(m));
}

CdMatrix CdMatrix::toeplitz(std::shared_ptr<const PointSet> pts,
                            const std::function<cplx(const std::vector<double>&)>& kernel) {
  const int n = pts->size();
  const int d = pts->dim();
  Matrix m(n, n);
  std::vector<double> diff(d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < d; ++k) diff[k] = pts->point(i)[k] - pts->point(j)[k];
      m(i, j) = kernel(diff);
    }
  return CdMatrix(pts, pts, std::move(m));
}

Seq CdMatrix::apply(const Seq& b) const {
  if (!b.index || !(*b.index == *cols_))
    throw std::invalid_argument("CdMatrix::apply: index set mismatch");
  return Seq(rows_, matvec(m_, b.values));
}

double CdMatrix::sp_norm(double p) const {
  if (!(p > 0) || p > 1.0) throw std::invalid_argument("sp_norm: p must be in (0,1]");
  double best = 0.0;
  for (int j = 0; j < m_.cols(); ++j) {
    double s = 0.0;
    for (int i = 0; i < m_.rows(); ++i) s += abs_pow(std::abs(m_(i, j)), p);
    best = std::max(best, s);
  }
  return best;
}

double CdMatrix::min_envelope_step() const {
  double step = kInf;
  for (double s : rows_->lattice_steps()) step = std::min(step, s);
  for (double s : cols_->lattice_steps()) step = std::min(step, s);
  if (!(step < kInf)) step = 1.0;
  return step;
}

const Envelope& CdMatrix::min_envelope() const {
  if (env_) return *env_;
  const double step = min_envelope_step();
  const double cover = rows_->truncation_radius() + cols_->truncation_radius() + step;
  Envelope e(rows_->dim(), step, cover);
  const int d = rows_->dim();
  std::vector<long> k(d);
  for (int i = 0; i < m_.rows(); ++i) {
    const double* pi = rows_->point(i);
    for (int j = 0; j < m_.cols(); ++j) {
      const double* pj = cols_->point(j);
      for (int t = 0; t < d; ++t) k[t] = std::llround((pi[t] - pj[t]) / step);
      double& slot = e.at_index(k);
      slot = std::max(slot, std::abs(m_(i, j)));
    }
  }
  env_ = std::move(e);
  return *env_;
}

double CdMatrix::cd_norm_estimate(double p0) const {
  if (!(p0 > 0) || p0 > 1.0) throw std::invalid_argument("cd_norm_estimate: p0 in (0,1]");
  return amalgam_quasinorm(min_envelope(), p0);
}

OperatorNormBound operator_norm_bound(const CdMatrix& a, double q, double p0) {
  if (!(p0 > 0) || p0 > 1.0) throw std::invalid_argument("operator_norm_bound: p0 in (0,1]");
  if (q < p0) throw std::invalid_argument("operator_norm_bound: q < p0");
  OperatorNormBound out;
  out.rel_rows = relsep(a.row_set());
  out.rel_cols = relsep(a.col_set());
  out.amalgam_upper = amalgam_quasinorm_upper(a.min_envelope(), p0);
  const double csamp = sampling_constant(a.row_set().dim());
  const double qc = conjugate_exponent(q);

  // Sampling inequality: sum over the section of H(l - r)^{p0} is at most
  // csamp * rel * ||H||_W^{p0}, hence every row/column p0-sum is bounded by
  // (csamp rel)^{1/p0} ||H||_W, and the 1-sums are no larger.
  double bound;
  if (q >= 1.0) {
    const double c_rows = std::pow(csamp * out.rel_rows, 1.0 / p0);
    const double c_cols = std::pow(csamp * out.rel_cols, 1.0 / p0);
    const double inv_q = is_inf(q) ? 0.0 : 1.0 / q;
    const double inv_qc = is_inf(qc) ? 0.0 : 1.0 / qc;
    bound = std::pow(c_rows, inv_q) * std::pow(c_cols, inv_qc) * out.amalgam_upper;
  } else {
    bound = std::pow(csamp * out.rel_rows, 1.0 / p0) * out.amalgam_upper;
  }
  out.bound = bound;

  const double inv_q = is_inf(q) ? 0.0 : 1.0 / q;
  const double inv_qc = is_inf(qc) ? 0.0 : 1.0 / qc;
  const double rel_part =
      std::pow(out.rel_rows, inv_q) * std::pow(out.rel_cols, inv_qc) * a.cd_norm_estimate(p0);
  out.constant = rel_part > 0 ? bound / rel_part : 0.0;
  return out;
}

double empirical_operator_norm(const CdMatrix& a, double q, int n_random, Rng& rng) {
  double best = 0.0;
  std::vector<cplx> b(a.col_set().size());
  for (int t = 0; t < n_random; ++t) {
    for (auto& v : b) v = rng.complex_normal();
    const double nb = lp_quasinorm(std::span<const cplx>(b), q);
    if (nb == 0.0) continue;
    auto ab = matvec(a.entries(), b);
    best = std::max(best, lp_quasinorm(std::span<const cplx>(ab), q) / nb);
  }
  if (q == 2.0) best = std::max(best, largest_singular_value(a.entries(), 200, rng.next_u64()));
  return best;
}

double empirical_lower_bound(const CdMatrix& a, double q, int starts, int iters, Rng& rng) {
  const int n = a.col_set().size();
  double best = kInf;
  std::vector<cplx> c(n), trial(n);

  auto ratio = [&](const std::vector<cplx>& x) {
    const double nx = lp_quasinorm(std::span<const cplx>(x), q);
    if (nx == 0.0) return kInf;
    auto ax = matvec(a.entries(), x);
    return lp_quasinorm(std::span<const cplx>(ax), q) / nx;
  };

  for (int s = 0; s < starts; ++s) {
    // mix of structured starts (atoms concentrate l^q mass for small q) and
    // random ones
    if (s < n && s % 3 == 0) {
      std::fill(c.begin(), c.end(), cplx{});
      c[(s / 3) % n] = 1.0;
    } else {
      for (auto& v : c) v = rng.complex_normal();
    }
    double cur = ratio(c);
    double step = 0.5;
    for (int it = 0; it < iters; ++it) {
      trial = c;
      const int touches = 1 + static_cast<int>(rng.below(3));
      for (int t = 0; t < touches; ++t)
        trial[rng.below(static_cast<std::uint64_t>(n))] += step * rng.complex_normal();
      const double r = ratio(trial);
      if (r < cur) {
        cur = r;
        c = trial;
      } else {
        step *= 0.97;
        if (step < 1e-6) break;
      }
    }
    best = std::min(best, cur);
  }
  return best;
}

namespace {

std::vector<int> interior_indices(const PointSet& s, double margin) {
  const int d = s.dim();
  std::vector<double> axis_max(d, 0.0);
  for (int i = 0; i < s.size(); ++i)
    for (int k = 0; k < d; ++k) axis_max[k] = std::max(axis_max[k], std::abs(s.point(i)[k]));
  std::vector<int> keep;
  for (int i = 0; i < s.size(); ++i) {
    bool ok = true;
    for (int k = 0; k < d; ++k)
      if (std::abs(s.point(i)[k]) > axis_max[k] - margin + 1e-12) {
        ok = false;
        break;
      }
    if (ok) keep.push_back(i);
  }
  return keep;
}

}  // namespace

CdMatrix interior_block(const CdMatrix& a, double margin) {
  auto rows = interior_indices(a.row_set(), margin);
  auto cols = interior_indices(a.col_set(), margin);
  if (rows.empty() || cols.empty())
    throw std::invalid_argument("interior_block: margin leaves no interior points");
  const int d = a.row_set().dim();
  auto pick = [&](const PointSet& s, const std::vector<int>& idx) {
    std::vector<double> flat;
    double radius = 0.0;
    for (int i : idx) {
      double n2 = 0.0;
      for (int k = 0; k < d; ++k) {
        flat.push_back(s.point(i)[k]);
        n2 += s.point(i)[k] * s.point(i)[k];
      }
      radius = std::max(radius, std::sqrt(n2));
    }
    PointSet out(d, std::move(flat), radius);
    out.set_lattice_steps(s.lattice_steps());
    return out;
  };
  auto rset = std::make_shared<const PointSet>(pick(a.row_set(), rows));
  auto cset = std::make_shared<const PointSet>(pick(a.col_set(), cols));
  Matrix m(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < cols.size(); ++j) m(static_cast<int>(i), static_cast<int>(j)) = a.entries()(rows[i], cols[j]);
  return CdMatrix(std::move(rset), std::move(cset), std::move(m));
}

void save_cdmatrix(const CdMatrix& a, std::ostream& os) {
  os << "# " << a.row_set().size() << " " << a.col_set().size() << "\n";
  os << "i,j,re,im\n";
  for (int i = 0; i < a.row_set().size(); ++i)
    for (int j = 0; j < a.col_set().size(); ++j) {
      const cplx v = a.entries()(i, j);
      os << i << "," << j << "," << std::setprecision(17) << v.real() << "," << v.imag() << "\n";
    }
}

void save_cdmatrix_file(const CdMatrix& a, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  save_cdmatrix(a, os);
}

CdMatrix load_cdmatrix_file(const std::string& path, std::shared_ptr<const PointSet> rows,
                            std::shared_ptr<const PointSet> cols) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(is, line);  // "# rows cols"
  int nr = 0, nc = 0;
  if (std::sscanf(line.c_str(), "# %d %d", &nr, &nc) != 2)
    throw std::runtime_error("bad matrix header: " + line);
  if (nr != rows->size() || nc != cols->size())
    throw std::invalid_argument("load_cdmatrix_file: index sets do not match the header");
  std::getline(is, line);  // column names
  Matrix m(nr, nc);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    int i, j;
    double re, im;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf", &i, &j, &re, &im) != 4)
      throw std::runtime_error("bad matrix row: " + line);
    if (i < 0 || i >= nr || j < 0 || j >= nc) throw std::runtime_error("matrix index range");
    m(i, j) = cplx(re, im);
  }
  return CdMatrix(std::move(rows), std::move(cols), std::move(m));
}

}  // namespace cdspec
