#include "cdspec/stability.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cdspec/rng.hpp"

namespace cdspec {

// ---------------------------------------------------------------------------
// BumpTable

namespace {
constexpr int kBumpSamples = 1 << 14;
}

const BumpTable& BumpTable::instance() {
  static BumpTable table;
  return table;
}

double BumpTable::mollifier(double y) const {
  const double t = 2.0 * y;
  if (std::abs(t) >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - t * t)) / norm_;
}

BumpTable::BumpTable() {
  // normalize the raw bump exp(-1/(1-(2y)^2)) on [-1/2,1/2]
  norm_ = 1.0;
  step_ = 1.0 / kBumpSamples;
  const int panels = 8;
  double mass = 0.0;
  cdf_.resize(kBumpSamples + 1);
  cdf_[0] = 0.0;
  for (int i = 0; i < kBumpSamples; ++i) {
    const double a = -0.5 + i * step_;
    double seg = 0.0;
    const double hh = step_ / panels;
    for (int p = 0; p < panels; ++p) {
      const double x0 = a + p * hh;
      seg += hh / 6.0 * (mollifier(x0) + 4.0 * mollifier(x0 + hh / 2) + mollifier(x0 + hh));
    }
    mass += seg;
    cdf_[i + 1] = mass;
  }
  norm_ = mass;  // from here on `mollifier` integrates to one
  for (auto& v : cdf_) v /= mass;
  cdf_.back() = 1.0;

  double lip = 0.0;
  for (int i = 0; i <= 4096; ++i) {
    const double u = -1.0 + 2.0 * i / 4096.0;
    lip = std::max(lip, std::abs(phi1_deriv(u)));
  }
  lipschitz_ = lip;

  double mn = kInf;
  for (int i = 0; i <= 8192; ++i) {
    const double u = static_cast<double>(i) / 8192.0;
    const double a = phi1(u), b = phi1(u - 1.0);
    mn = std::min(mn, a * a + b * b);
  }
  phi_sq_sum_min_ = mn;
}

double BumpTable::cdf(double x) const {
  if (x <= -0.5) return 0.0;
  if (x >= 0.5) return 1.0;
  const double t = (x + 0.5) / step_;
  const int i = std::min(static_cast<int>(t), kBumpSamples - 1);
  const double s = t - i;
  const double x0 = -0.5 + i * step_;
  // Hermite cubic using the analytic density at the knots
  const double f0 = cdf_[i], f1 = cdf_[i + 1];
  const double d0 = mollifier(x0) * step_, d1 = mollifier(x0 + step_) * step_;
  const double s2 = s * s, s3 = s2 * s;
  return f0 * (2 * s3 - 3 * s2 + 1) + d0 * (s3 - 2 * s2 + s) + f1 * (-2 * s3 + 3 * s2) +
         d1 * (s3 - s2);
}

double BumpTable::phi1(double u) const { return cdf(u + 0.5) - cdf(u - 0.5); }

double BumpTable::phi1_deriv(double u) const { return mollifier(u + 0.5) - mollifier(u - 0.5); }

// ---------------------------------------------------------------------------
// PartitionOfUnity

PartitionOfUnity::PartitionOfUnity(int dim, double eps) : dim_(dim), eps_(eps) {
  if (dim <= 0) throw std::invalid_argument("PartitionOfUnity: dim must be positive");
  if (!(eps > 0)) throw std::invalid_argument("PartitionOfUnity: eps must be positive");
}

double PartitionOfUnity::phi(const double* x) const {
  const auto& b = BumpTable::instance();
  double v = 1.0;
  for (int i = 0; i < dim_; ++i) {
    v *= b.phi1(x[i]);
    if (v == 0.0) return 0.0;
  }
  return v;
}

double PartitionOfUnity::phi_k(const double* x, const long* k) const {
  const auto& b = BumpTable::instance();
  double v = 1.0;
  for (int i = 0; i < dim_; ++i) {
    v *= b.phi1(eps_ * x[i] - k[i]);
    if (v == 0.0) return 0.0;
  }
  return v;
}

double PartitionOfUnity::phi_sup_ball(const double* y) const {
  const auto& b = BumpTable::instance();
  double v = 1.0;
  for (int i = 0; i < dim_; ++i) {
    const double a = std::abs(y[i]);
    v *= (a <= 1.0) ? 1.0 : b.phi1(a - 1.0);
    if (v == 0.0) return 0.0;
  }
  return v;
}

double PartitionOfUnity::lipschitz() const { return BumpTable::instance().lipschitz(); }

double PartitionOfUnity::phi_min_sq_sum() const {
  return std::pow(BumpTable::instance().phi_sq_sum_min(), dim_);
}

double PartitionOfUnity::k_constant(double p) const {
  return std::pow(phi_min_sq_sum(), -std::min(1.0, p));
}

double PartitionOfUnity::eta() const { return std::pow(2.0, dim_); }

int PartitionOfUnity::max_support_count(const PointSet& s) const {
  auto hw = k_box_halfwidth(s);
  std::vector<long> k(dim_, 0);
  int best = 0;
  bool done = false;
  for (int i = 0; i < dim_; ++i) k[i] = -hw[i];
  while (!done) {
    int cnt = 0;
    for (int i = 0; i < s.size(); ++i)
      if (phi_k(s.point(i), k.data()) != 0.0) ++cnt;
    best = std::max(best, cnt);
    int axis = dim_ - 1;
    while (axis >= 0) {
      if (++k[axis] <= hw[axis]) break;
      k[axis] = -hw[axis];
      --axis;
    }
    if (axis < 0) done = true;
  }
  return best;
}

std::vector<long> PartitionOfUnity::k_box_halfwidth(const PointSet& s) const {
  std::vector<long> hw(dim_, 1);
  for (int i = 0; i < s.size(); ++i)
    for (int d = 0; d < dim_; ++d)
      hw[d] = std::max(hw[d],
                       static_cast<long>(std::floor(std::abs(eps_ * s.point(i)[d]) + 1.0)) + 1);
  return hw;
}

Seq multiply_op(const PartitionOfUnity& pou, const std::vector<long>& k, const Seq& c) {
  if (static_cast<int>(k.size()) != pou.dim() || c.index->dim() != pou.dim())
    throw std::invalid_argument("multiply_op: dimension mismatch");
  std::vector<cplx> vals(c.values);
  for (int i = 0; i < c.size(); ++i) vals[i] *= pou.phi_k(c.index->point(i), k.data());
  return Seq(c.index, std::move(vals));
}

LocalizedProfile localized_norm_profile(const PartitionOfUnity& pou, const Seq& c, double p) {
  LocalizedProfile out;
  const auto hw = pou.k_box_halfwidth(*c.index);
  const int d = pou.dim();
  std::vector<long> k(d);
  for (int i = 0; i < d; ++i) k[i] = -hw[i];
  bool done = false;
  while (!done) {
    Seq loc = multiply_op(pou, k, c);
    out.ks.push_back(k);
    out.norms.push_back(lp_quasinorm(loc, p));
    int axis = d - 1;
    while (axis >= 0) {
      if (++k[axis] <= hw[axis]) break;
      k[axis] = -hw[axis];
      --axis;
    }
    if (axis < 0) done = true;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commutator norms

CdMatrix commutator_matrix(const CdMatrix& a, const PartitionOfUnity& pou,
                           const std::vector<long>& j, const std::vector<long>& k) {
  const PointSet& rows = a.row_set();
  const PointSet& cols = a.col_set();
  Matrix m(rows.size(), cols.size());
  for (int c = 0; c < cols.size(); ++c) {
    const double pj = pou.phi_k(cols.point(c), j.data());
    if (pj == 0.0) continue;
    const double pkc = pou.phi_k(cols.point(c), k.data());
    for (int r = 0; r < rows.size(); ++r) {
      const double pkr = pou.phi_k(rows.point(r), k.data());
      m(r, c) = -a.entries()(r, c) * pj * (pkr - pkc);
    }
  }
  return CdMatrix(a.row_set_ptr(), a.col_set_ptr(), std::move(m));
}

namespace {

struct PhiCache {
  std::vector<double> on_rows;
  std::vector<double> on_cols;
  std::vector<int> row_support;
  std::vector<int> col_support;
};

PhiCache phi_cache(const CdMatrix& a, const PartitionOfUnity& pou, const std::vector<long>& k) {
  PhiCache c;
  const PointSet& rows = a.row_set();
  const PointSet& cols = a.col_set();
  c.on_rows.resize(rows.size());
  c.on_cols.resize(cols.size());
  for (int i = 0; i < rows.size(); ++i) {
    c.on_rows[i] = pou.phi_k(rows.point(i), k.data());
    if (c.on_rows[i] != 0.0) c.row_support.push_back(i);
  }
  for (int i = 0; i < cols.size(); ++i) {
    c.on_cols[i] = pou.phi_k(cols.point(i), k.data());
    if (c.on_cols[i] != 0.0) c.col_support.push_back(i);
  }
  return c;
}

// S-p norm (p <= 1) or Schur norm (p > 1) of [A, phi_k] phi_j without
// materializing the commutator.
double v_eps_cached(const CdMatrix& a, const PhiCache& j, const PhiCache& k, double p) {
  const Matrix& m = a.entries();
  const int nrows = m.rows();
  if (p <= 1.0) {
    double best = 0.0;
    for (int c : j.col_support) {
      const double pj = j.on_cols[c];
      const double pkc = k.on_cols[c];
      double s = 0.0;
      if (pkc == 0.0) {
        for (int r : k.row_support) s += abs_pow(std::abs(m(r, c)) * pj * k.on_rows[r], p);
      } else {
        for (int r = 0; r < nrows; ++r) {
          const double diff = std::abs(k.on_rows[r] - pkc);
          if (diff == 0.0) continue;
          s += abs_pow(std::abs(m(r, c)) * pj * diff, p);
        }
      }
      best = std::max(best, s);
    }
    return best;
  }
  double col_best = 0.0;
  std::vector<double> row_sums(nrows, 0.0);
  for (int c : j.col_support) {
    const double pj = j.on_cols[c];
    const double pkc = k.on_cols[c];
    double s = 0.0;
    if (pkc == 0.0) {
      for (int r : k.row_support) {
        const double v = std::abs(m(r, c)) * pj * k.on_rows[r];
        s += v;
        row_sums[r] += v;
      }
    } else {
      for (int r = 0; r < nrows; ++r) {
        const double v = std::abs(m(r, c)) * pj * std::abs(k.on_rows[r] - pkc);
        s += v;
        row_sums[r] += v;
      }
    }
    col_best = std::max(col_best, s);
  }
  double row_best = 0.0;
  for (double v : row_sums) row_best = std::max(row_best, v);
  return col_best + row_best;
}

}  // namespace

double v_eps(const CdMatrix& a, const PartitionOfUnity& pou, const std::vector<long>& j,
             const std::vector<long>& k, double p) {
  auto cj = phi_cache(a, pou, j);
  auto ck = phi_cache(a, pou, k);
  return v_eps_cached(a, cj, ck, p);
}

long VTable::index_of(const std::vector<long>& k) const {
  long idx = 0;
  for (int i = 0; i < dim; ++i) idx = idx * (2 * halfwidth[i] + 1) + (k[i] + halfwidth[i]);
  return idx;
}

std::vector<long> VTable::k_of_index(long idx) const {
  std::vector<long> k(dim);
  for (int i = dim - 1; i >= 0; --i) {
    const long n = 2 * halfwidth[i] + 1;
    k[i] = idx % n - halfwidth[i];
    idx /= n;
  }
  return k;
}

double VTable::sup() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, v);
  return m;
}

double VTable::sup_j_sum_k(double expnt) const {
  double best = 0.0;
  for (long j = 0; j < box_size; ++j) {
    double s = 0.0;
    for (long k = 0; k < box_size; ++k) s += abs_pow(at(j, k), expnt);
    best = std::max(best, s);
  }
  return best;
}

double VTable::sup_k_sum_j(double expnt) const {
  double best = 0.0;
  for (long k = 0; k < box_size; ++k) {
    double s = 0.0;
    for (long j = 0; j < box_size; ++j) s += abs_pow(at(j, k), expnt);
    best = std::max(best, s);
  }
  return best;
}

VTable build_v_table(const CdMatrix& a, const PartitionOfUnity& pou, double p) {
  VTable t;
  t.dim = pou.dim();
  auto hw_rows = pou.k_box_halfwidth(a.row_set());
  auto hw_cols = pou.k_box_halfwidth(a.col_set());
  t.halfwidth.resize(t.dim);
  for (int i = 0; i < t.dim; ++i) t.halfwidth[i] = std::max(hw_rows[i], hw_cols[i]);
  t.box_size = 1;
  for (int i = 0; i < t.dim; ++i) t.box_size *= 2 * t.halfwidth[i] + 1;
  t.values.assign(static_cast<size_t>(t.box_size) * t.box_size, 0.0);

  std::vector<PhiCache> caches(t.box_size);
  for (long idx = 0; idx < t.box_size; ++idx) caches[idx] = phi_cache(a, pou, t.k_of_index(idx));
  for (long j = 0; j < t.box_size; ++j) {
    if (caches[j].col_support.empty()) continue;
    for (long k = 0; k < t.box_size; ++k)
      t.values[j * t.box_size + k] = v_eps_cached(a, caches[j], caches[k], p);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Epsilon search

namespace {

double budget_of(const VTable& vt, const PartitionOfUnity& pou, double p, double q, double p0,
                 BudgetKind kind) {
  switch (kind) {
    case BudgetKind::sum_power: {
      const double k = pou.k_constant(p);
      const double e = q / p;
      return std::pow(k, e) * vt.sup_j_sum_k(e);
    }
    case BudgetKind::sum_plain: {
      const double k = pou.k_constant(p);
      return k * std::max(vt.sup_j_sum_k(1.0), vt.sup_k_sum_j(1.0));
    }
    case BudgetKind::neumann_s1: {
      const double k = pou.k_constant(p);
      const double e = p <= 1.0 ? p0 / p : p0;
      double best = 0.0;
      for (long kk = 0; kk < vt.box_size; ++kk) {
        double s = 0.0;
        for (long j = 0; j < vt.box_size; ++j) s += abs_pow(k * vt.at(j, kk), e);
        best = std::max(best, s);
      }
      return best;
    }
  }
  return kInf;
}

}  // namespace

EpsSearch choose_eps(const CdMatrix& a, double p, double q, double p0, BudgetKind kind,
                     const EpsOptions& opts) {
  EpsSearch out;
  for (double eps = opts.start; eps >= opts.floor * (1 - 1e-12); eps /= 2) {
    PartitionOfUnity pou(a.row_set().dim(), eps);
    VTable vt = build_v_table(a, pou, p);
    const double b = budget_of(vt, pou, p, q, p0, kind);
    out.trace.emplace_back(eps, b);
    if (b < opts.threshold) {
      out.success = true;
      out.eps = eps;
      out.budget = b;
      return out;
    }
    out.budget = std::min(out.budget, b);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stability transfer

namespace {

double smin_of(double q, double eta) {
  if (q <= 1.0) return 1.0;  // phi^q >= phi and the translates sum to one
  return std::pow(eta, 1.0 - q);
}

double smax_of(double q, double eta) {
  if (q == 1.0) return 1.0;  // exact partition of unity
  if (q < 1.0) return eta;
  return 1.0;
}

struct BranchConstants {
  double e_low = 1.0, e_up = 1.0, factor = 1.0, c_q = 0.0;
};

BranchConstants assemble_constants(double c0, double p, double q, double eta, double n_cols,
                                   double n_rows, double branch_factor) {
  BranchConstants bc;
  bc.factor = branch_factor;
  if (is_inf(q)) {
    bc.e_low = 1.0 / eta;
    bc.e_up = std::pow(n_rows, is_inf(p) ? 0.0 : 1.0 / p);
    bc.c_q = c0 * bc.e_low / bc.e_up * branch_factor;
    return bc;
  }
  const double inv_p = is_inf(p) ? 0.0 : 1.0 / p;
  bc.e_low = smin_of(q, eta) * std::pow(n_cols, -q * std::max(0.0, 1.0 / q - inv_p));
  bc.e_up = smax_of(q, eta) * std::pow(n_rows, q * std::max(0.0, inv_p - 1.0 / q));
  bc.c_q = c0 * std::pow(bc.e_low / bc.e_up, 1.0 / q) * branch_factor;
  return bc;
}

StabilityCertificate transfer_one_leg(const CdMatrix& a, double p, double c0, double q,
                                      const TransferOptions& opts) {
  StabilityCertificate cert;
  cert.p_source = p;
  cert.q_target = q;

  // rescale so that ||A~ c||_p >= ||c||_p
  Matrix scaled = cplx(1.0 / c0) * a.entries();
  CdMatrix at(a.row_set_ptr(), a.col_set_ptr(), std::move(scaled));

  BudgetKind kind;
  double branch_factor;
  if (p <= 1.0 && q < p) {
    cert.branch = "down";
    kind = BudgetKind::sum_power;
    branch_factor = std::pow(2.0, -1.0 / q);
  } else if (p <= 1.0) {
    cert.branch = "up";
    kind = BudgetKind::sum_plain;
    branch_factor = std::pow(2.0, -1.0 / p);
  } else {
    cert.branch = "banach";
    kind = BudgetKind::sum_plain;
    branch_factor = 0.5;
  }

  auto search = choose_eps(at, p, q, 0.0, kind, opts.eps);
  if (!search.success)
    throw EpsSearchError("epsilon search failed (budget " + std::to_string(search.budget) +
                             " at floor " + std::to_string(opts.eps.floor) + ")",
                         search.budget, opts.eps.floor);
  cert.eps_chosen = search.eps;
  cert.schur_budget = search.budget;

  PartitionOfUnity pou(a.row_set().dim(), search.eps);
  const double eta = pou.eta();
  const double n_cols = pou.max_support_count(a.col_set());
  const double n_rows = pou.max_support_count(a.row_set());
  auto bc = assemble_constants(c0, p, q, eta, n_cols, n_rows, branch_factor);
  cert.constant = bc.c_q;

  cert.diagnostics["eta"] = eta;
  cert.diagnostics["n_support_cols"] = n_cols;
  cert.diagnostics["n_support_rows"] = n_rows;
  cert.diagnostics["k_constant"] = pou.k_constant(p);
  cert.diagnostics["phi_min_sq_sum"] = pou.phi_min_sq_sum();
  cert.diagnostics["e_low"] = bc.e_low;
  cert.diagnostics["e_up"] = bc.e_up;
  cert.diagnostics["branch_factor"] = bc.factor;
  cert.diagnostics["c0"] = c0;
  return cert;
}

}  // namespace

StabilityCertificate stability_transfer(const CdMatrix& a, double p, double c0, double q,
                                        const TransferOptions& opts) {
  if (!(c0 > 0)) throw std::invalid_argument("stability_transfer: c0 must be positive");
  if (a.row_set().size() == 0 || a.col_set().size() == 0)
    throw std::invalid_argument("stability_transfer: empty section");

  double measured;
  if (p == 2.0 && a.entries().rows() == a.entries().cols()) {
    measured = smallest_singular_value(a.entries());
  } else {
    Rng rng(opts.seed);
    measured = empirical_lower_bound(a, p, opts.lower_bound_starts, opts.lower_bound_iters, rng);
  }
  if (measured < c0 * (1 - 1e-9))
    throw std::runtime_error("stability_transfer: empirical lower bound at p (" +
                             std::to_string(measured) + ") is below the claimed c0");

  StabilityCertificate cert;
  if (q == p) {
    cert.p_source = p;
    cert.q_target = q;
    cert.eps_chosen = opts.eps.start;
    cert.schur_budget = 0.0;
    cert.constant = c0;
    cert.branch = "identity";
  } else if (p > 1.0 && q < 1.0) {
    // route through l^1: Banach-case transfer, then the quasi-Banach descent
    auto leg1 = transfer_one_leg(a, p, c0, 1.0, opts);
    auto leg2 = transfer_one_leg(a, 1.0, leg1.constant, q, opts);
    cert = leg2;
    cert.p_source = p;
    cert.branch = "via_one";
    cert.diagnostics["leg1_eps"] = leg1.eps_chosen;
    cert.diagnostics["leg1_budget"] = leg1.schur_budget;
    cert.diagnostics["leg1_constant"] = leg1.constant;
  } else {
    cert = transfer_one_leg(a, p, c0, q, opts);
  }
  cert.diagnostics["measured_lower_bound_at_p"] = measured;
  return cert;
}

std::string certificate_to_json(const StabilityCertificate& cert) {
  std::ostringstream os;
  os.precision(17);
  os << "{\n";
  os << "  \"p_source\": " << cert.p_source << ",\n";
  os << "  \"q_target\": " << (is_inf(cert.q_target) ? -1.0 : cert.q_target) << ",\n";
  os << "  \"eps\": " << cert.eps_chosen << ",\n";
  os << "  \"schur_budget\": " << cert.schur_budget << ",\n";
  os << "  \"constant\": " << cert.constant << ",\n";
  os << "  \"branch\": \"" << cert.branch << "\",\n";
  os << "  \"diagnostics\": {";
  bool first = true;
  for (const auto& [k, v] : cert.diagnostics) {
    os << (first ? "\n" : ",\n") << "    \"" << k << "\": " << v;
    first = false;
  }
  os << "\n  }\n}\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Inverse envelope via the Neumann series

InverseEnvelopeResult neumann_inverse_envelope(const CdMatrix& a, double p, double p0,
                                               const EpsOptions& opts) {
  if (!(p0 > 0) || p0 > 1.0)
    throw std::invalid_argument("neumann_inverse_envelope: p0 must lie in (0,1]");
  InverseEnvelopeResult out;

  auto search = choose_eps(a, p, p, p0, BudgetKind::neumann_s1, opts);
  if (!search.success)
    throw EpsSearchError("epsilon search failed for the Neumann budget (achieved " +
                             std::to_string(search.budget) + ")",
                         search.budget, opts.floor);
  out.eps = search.eps;
  out.budget = search.budget;

  const int d = a.row_set().dim();
  PartitionOfUnity pou(d, search.eps);
  VTable vt = build_v_table(a, pou, p);
  const double kconst = pou.k_constant(p);
  const double expnt = p <= 1.0 ? p0 / p : p0;
  out.eta = pou.eta();

  const long n = vt.box_size;
  Matrix vtil(static_cast<int>(n), static_cast<int>(n));
  for (long j = 0; j < n; ++j)
    for (long k = 0; k < n; ++k) vtil(static_cast<int>(j), static_cast<int>(k)) =
        abs_pow(kconst * vt.at(j, k), expnt);

  // reference bound combining the near block (uniform sup) with the delta
  // aggregate of the section envelope beyond the 6 sqrt(d) cutoff
  {
    const Envelope& env = a.min_envelope();
    const double sup_v = abs_pow(kconst * vt.sup(), expnt);
    const double cutoff = 6.0 * std::sqrt(static_cast<double>(d));
    double psi_sum = 0.0;
    const long smax = static_cast<long>(std::ceil(search.eps * (env.coverage_radius() + 1))) + 7;
    std::vector<long> s(d, -smax);
    bool done = false;
    while (!done) {
      double n2 = 0.0;
      for (long c : s) n2 += static_cast<double>(c) * static_cast<double>(c);
      if (std::sqrt(n2) > cutoff)
        psi_sum += delta_envelope(env, search.eps, p0, s);
      else
        psi_sum += sup_v;
      int axis = d - 1;
      while (axis >= 0) {
        if (++s[axis] <= smax) break;
        s[axis] = -smax;
        --axis;
      }
      if (axis < 0) done = true;
    }
    out.psi_budget = psi_sum;
  }

  // geometric series W~ = sum_{m >= 1} V~^m, truncated in the S-1 norm
  auto s1norm = [](const Matrix& m) {
    double best = 0.0;
    for (int k = 0; k < m.cols(); ++k) {
      double s = 0.0;
      for (int j = 0; j < m.rows(); ++j) s += std::abs(m(j, k));
      best = std::max(best, s);
    }
    return best;
  };

  Matrix wsum = vtil;
  Matrix term = vtil;
  out.series_terms = 1;
  while (true) {
    term = matmul(term, vtil);
    const double inc = s1norm(term);
    if (inc < 1e-10 || out.series_terms > 300) {
      out.tail_bound = inc / std::max(1e-300, 1.0 - out.budget);
      break;
    }
    wsum = wsum + term;
    ++out.series_terms;
  }

  // integer-grid envelope: W(l) >= W~_{jk} whenever k - j = l
  long span = 0;
  for (long h : vt.halfwidth) span = std::max(span, h);
  Envelope w(d, 1.0, static_cast<double>(2 * span + 1));
  std::vector<long> diff(d);
  for (long j = 0; j < n; ++j) {
    auto kj = vt.k_of_index(j);
    for (long k = 0; k < n; ++k) {
      auto kk = vt.k_of_index(k);
      for (int i = 0; i < d; ++i) diff[i] = kk[i] - kj[i];
      double& slot = w.at_index(diff);
      slot = std::max(slot, std::abs(wsum(static_cast<int>(j), static_cast<int>(k))));
    }
  }
  out.w_matrix = std::move(wsum);
  out.k_halfwidth = vt.halfwidth;

  // Smoothed envelope eta * (psi(eps x) + sum_l W(l) psi(eps x - l)), psi a
  // radial cutoff equal to one on |y| <= 4 and vanishing beyond |y| = 5. The
  // leading term carries the near-diagonal block, where the phi-term of the
  // localized estimate does not vanish.
  auto psi = [](double r2) {
    const double r = std::sqrt(r2);
    if (r <= 4.0) return 1.0;
    if (r >= 5.0) return 0.0;
    const double t = std::cos((r - 4.0) * kPi / 2);
    return t * t;
  };

  const double step = a.min_envelope_step();
  // the smoothed envelope is a function on all of R^d; its grid must cover
  // the natural support (5 + span of W)/eps, not just the section
  const double eps = search.eps;
  double wspan = 0.0;
  for (size_t flat = 0; flat < w.node_count(); ++flat) {
    if (w.values()[flat] <= 0.0) continue;
    auto l = w.unflatten(flat);
    for (long c : l) wspan = std::max(wspan, static_cast<double>(std::abs(c)));
  }
  const double cover =
      std::max(a.row_set().truncation_radius() + a.col_set().truncation_radius() + step,
               (5.0 + wspan) / eps + step);
  const Envelope& wref = w;
  const double eta = out.eta;
  out.h_tilde = Envelope::from_function(d, step, cover, [&](const double* x) {
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) {
      const double y = eps * x[i];
      r2 += y * y;
    }
    double acc = psi(r2);
    std::vector<long> l(d);
    const long hspan = wref.half_span();
    for (int i = 0; i < d; ++i) l[i] = -hspan;
    bool done = false;
    while (!done) {
      const double wl = wref.at_index(l);
      if (wl > 0.0) {
        double rr = 0.0;
        for (int i = 0; i < d; ++i) {
          const double t = eps * x[i] - l[i];
          rr += t * t;
        }
        acc += wl * psi(rr);
      }
      int axis = d - 1;
      while (axis >= 0) {
        if (++l[axis] <= hspan) break;
        l[axis] = -hspan;
        --axis;
      }
      if (axis < 0) done = true;
    }
    return eta * acc;
  });
  out.w = std::move(w);

  out.diagnostics["k_constant"] = kconst;
  out.diagnostics["exponent"] = expnt;
  out.diagnostics["box_size"] = static_cast<double>(n);
  return out;
}

InverseEnvelopeReport verify_inverse_envelope(const CdMatrix& a, const Envelope& h_tilde,
                                              double p0, double margin_fraction) {
  if (a.entries().rows() != a.entries().cols())
    throw std::invalid_argument("verify_inverse_envelope: square section required");
  InverseEnvelopeReport rep;
  const Matrix& m = a.entries();
  const double smin = smallest_singular_value(m);
  const double smax = largest_singular_value(m);
  rep.condition_number = smin > 0 ? smax / smin : kInf;

  Matrix b = inverse(m);
  const PointSet& rows = a.row_set();
  const PointSet& cols = a.col_set();
  const double r_inner_rows = rows.truncation_radius() * (1.0 - margin_fraction);
  const double r_inner_cols = cols.truncation_radius() * (1.0 - margin_fraction);
  const int d = rows.dim();

  auto inside = [&](const double* pt, double radius) {
    double n2 = 0.0;
    for (int i = 0; i < d; ++i) n2 += pt[i] * pt[i];
    return std::sqrt(n2) <= radius + 1e-12;
  };

  std::vector<double> diff(d);
  double worst = 0.0;
  int checked = 0;
  // B maps row-indexed sequences back to column points: entry (rho, lambda)
  // has rho from the column set and lambda from the row set of A.
  for (int r = 0; r < cols.size(); ++r) {
    if (!inside(cols.point(r), r_inner_cols)) continue;
    for (int l = 0; l < rows.size(); ++l) {
      if (!inside(rows.point(l), r_inner_rows)) continue;
      for (int i = 0; i < d; ++i) diff[i] = cols.point(r)[i] - rows.point(l)[i];
      const double cap = abs_pow(h_tilde.value_at(diff.data()), 1.0 / p0);
      const double val = std::abs(b(r, l));
      ++checked;
      if (cap == 0.0) {
        if (val > 1e-13) worst = kInf;
        continue;
      }
      worst = std::max(worst, val / cap);
    }
  }
  rep.max_violation_ratio = worst;
  rep.checked_pairs = checked;
  rep.pass = worst <= 1.0 + 1e-9;
  return rep;
}

}  // namespace cdspec
