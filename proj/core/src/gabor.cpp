#include "cdspec/gabor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <stdexcept>

namespace cdspec {

FuncGrid FuncGrid::make(double h, double r) {
  if (!(h > 0) || !(r > 0)) throw std::invalid_argument("FuncGrid: positive step and radius");
  FuncGrid g;
  g.step = h;
  g.radius = r;
  const double counted = 2 * r / h;
  g.n = static_cast<int>(std::llround(counted)) + 1;
  if (std::abs(counted - std::llround(counted)) > 1e-9)
    throw std::invalid_argument("FuncGrid: radius must be a multiple of the step");
  return g;
}

int FuncGrid::index_of(double x) const {
  return static_cast<int>(std::llround((x + radius) / step));
}

SampledFunction::SampledFunction(FuncGrid g, std::vector<cplx> vals)
    : grid(g), v(std::move(vals)) {
  if (static_cast<int>(v.size()) != grid.n)
    throw std::invalid_argument("SampledFunction: sample count mismatch");
}

void save_sampled_function(const SampledFunction& f, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << std::setprecision(17) << f.grid.step << " " << f.grid.radius << "\n";
  os << "t,re,im\n";
  for (int i = 0; i < f.grid.n; ++i)
    os << std::setprecision(17) << f.grid.point(i) << "," << f.v[i].real() << ","
       << f.v[i].imag() << "\n";
}

SampledFunction load_sampled_function(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  double h = 0, r = 0;
  is >> h >> r;
  FuncGrid grid = FuncGrid::make(h, r);
  std::string line;
  std::getline(is, line);  // rest of header
  std::getline(is, line);  // column names
  std::vector<cplx> v(grid.n);
  for (int i = 0; i < grid.n; ++i) {
    if (!std::getline(is, line)) throw std::runtime_error("truncated sample file");
    double t, re, im;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &re, &im) != 3)
      throw std::runtime_error("bad sample row: " + line);
    v[i] = cplx(re, im);
  }
  return SampledFunction(grid, std::move(v));
}

double l2_norm(const SampledFunction& f) {
  double s = 0.0;
  for (const auto& z : f.v) s += std::norm(z);
  return std::sqrt(s * f.grid.step);
}

cplx inner(const SampledFunction& f, const SampledFunction& g) {
  if (!(f.grid == g.grid)) throw std::invalid_argument("inner: grid mismatch");
  cplx s{};
  for (int i = 0; i < f.grid.n; ++i) s += f.v[i] * std::conj(g.v[i]);
  return s * f.grid.step;
}

SampledFunction gaussian_window(const FuncGrid& grid) {
  std::vector<cplx> v(grid.n);
  const double c = std::pow(2.0, 0.25);
  for (int i = 0; i < grid.n; ++i) {
    const double t = grid.point(i);
    v[i] = c * std::exp(-kPi * t * t);
  }
  return SampledFunction(grid, std::move(v));
}

SampledFunction hermite_function(const FuncGrid& grid, int n) {
  if (n < 0) throw std::invalid_argument("hermite_function: order must be nonnegative");
  // orthonormal Hermite recurrence in x = sqrt(2 pi) t, then grid renormalization
  std::vector<cplx> v(grid.n);
  const double scale = std::sqrt(2.0 * kPi);
  for (int i = 0; i < grid.n; ++i) {
    const double x = scale * grid.point(i);
    double h0 = std::pow(kPi, -0.25) * std::exp(-x * x / 2);
    double h1 = std::sqrt(2.0) * x * h0;
    double cur = n == 0 ? h0 : h1;
    for (int m = 2; m <= n; ++m) {
      const double next = x * std::sqrt(2.0 / m) * h1 - std::sqrt((m - 1.0) / m) * h0;
      h0 = h1;
      h1 = next;
      cur = next;
    }
    v[i] = cur;
  }
  SampledFunction f(grid, std::move(v));
  const double nrm = l2_norm(f);
  if (nrm == 0.0) throw std::runtime_error("hermite_function: vanishing sample");
  for (auto& z : f.v) z /= nrm;
  return f;
}

SampledFunction tf_shift(const SampledFunction& f, double x, double xi, double* snap_err) {
  const FuncGrid& g = f.grid;
  const long shift = std::llround(x / g.step);
  if (snap_err) *snap_err = std::abs(x - shift * g.step);
  std::vector<cplx> v(g.n);
  for (int i = 0; i < g.n; ++i) {
    const long src = i - shift;
    if (src < 0 || src >= g.n) continue;
    const double t = g.point(i);
    v[i] = f.v[src] * std::polar(1.0, kTwoPi * xi * t);
  }
  return SampledFunction(g, std::move(v));
}

FineGrid fine_grid_of(const FuncGrid& g) {
  FineGrid f;
  f.step = g.step / 2;
  f.radius = g.radius;
  f.n = 2 * (g.n - 1);
  return f;
}

int FineGrid::wrap_index(double x) const {
  long i = std::llround((x + radius) / step);
  i %= n;
  if (i < 0) i += n;
  return static_cast<int>(i);
}

std::vector<cplx> upsample_fine(const SampledFunction& f) {
  // spectrum of the 2R-periodic extension; the +R endpoint duplicates -R and
  // is dropped (all supported families are negligible there anyway)
  const int n = f.grid.n - 1;
  const double period = 2 * f.grid.radius;
  std::vector<cplx> spec(n);
  for (int k = -n / 2; k < n - n / 2; ++k) {
    cplx s{};
    for (int j = 0; j < n; ++j) {
      const double t = f.grid.point(j);
      s += f.v[j] * std::polar(1.0, -kTwoPi * k * t / period);
    }
    spec[k + n / 2] = s / static_cast<double>(n);
  }
  const int m = 2 * n;
  std::vector<cplx> out(m);
  for (int i = 0; i < m; ++i) {
    const double t = -f.grid.radius + i * f.grid.step / 2;
    cplx s{};
    for (int k = -n / 2; k < n - n / 2; ++k)
      s += spec[k + n / 2] * std::polar(1.0, kTwoPi * k * t / period);
    out[i] = s;
  }
  return out;
}

PointSet gabor_lattice(const FuncGrid& grid, double alpha, double beta, double radius,
                       double xi_radius) {
  if (!(alpha > 0) || !(beta > 0) || !(radius >= 0))
    throw std::invalid_argument("gabor_lattice: bad parameters");
  if (xi_radius <= 0) xi_radius = radius;
  // Modulations at +-Nyquist coincide on the sampling grid, so the frequency
  // range keeps strictly inside the open Nyquist band.
  const double nyquist = 1.0 / (2 * grid.step);
  const long kx = static_cast<long>(std::floor(radius / alpha + 1e-9));
  long kxi = static_cast<long>(std::floor(xi_radius / beta + 1e-9));
  const long alias = static_cast<long>(std::ceil(nyquist / beta - 1e-9)) - 1;
  kxi = std::min(kxi, alias);
  std::vector<double> flat;
  flat.reserve(static_cast<size_t>(2 * kx + 1) * (2 * kxi + 1) * 2);
  for (long i = -kx; i <= kx; ++i)
    for (long j = -kxi; j <= kxi; ++j) {
      flat.push_back(i * alpha);
      flat.push_back(j * beta);
    }
  PointSet out(2, std::move(flat),
               std::sqrt(kx * alpha * kx * alpha + kxi * beta * kxi * beta));
  out.set_lattice_steps({alpha, beta});
  return out;
}

SymbolGrid SymbolGrid::for_func_grid(const FuncGrid& g) {
  SymbolGrid s;
  s.x_step = g.step / 2;
  s.x_radius = g.radius;
  s.nx = 2 * (g.n - 1);
  const double nyquist = 1.0 / (2 * g.step);
  const long count = std::llround(2.0 / (g.step * g.step));
  s.nxi = static_cast<int>(count);
  s.xi_step = 2 * nyquist / s.nxi;
  s.xi_radius = nyquist;
  return s;
}

int SymbolGrid::x_index_wrap(double v) const {
  long i = std::llround((v + x_radius) / x_step);
  i %= nx;
  if (i < 0) i += nx;
  return static_cast<int>(i);
}

SampledSymbol::SampledSymbol(SymbolGrid g, std::vector<cplx> vals) : grid(g), v(std::move(vals)) {
  if (v.size() != static_cast<size_t>(grid.nx) * grid.nxi)
    throw std::invalid_argument("SampledSymbol: sample count mismatch");
}

SampledSymbol symbol_from_function(const SymbolGrid& grid,
                                   const std::function<cplx(double, double)>& f) {
  std::vector<cplx> v(static_cast<size_t>(grid.nx) * grid.nxi);
  for (int i = 0; i < grid.nx; ++i)
    for (int j = 0; j < grid.nxi; ++j)
      v[static_cast<size_t>(i) * grid.nxi + j] = f(grid.x(i), grid.xi(j));
  return SampledSymbol(grid, std::move(v));
}

SampledSymbol stft(const SampledFunction& f, const SampledFunction& g) {
  if (!(f.grid == g.grid)) throw std::invalid_argument("stft: grid mismatch");
  const SymbolGrid sg = SymbolGrid::for_func_grid(f.grid);
  const FineGrid fine = fine_grid_of(f.grid);
  auto ff = upsample_fine(f);
  auto gg = upsample_fine(g);

  std::vector<cplx> phase(static_cast<size_t>(fine.n) * sg.nxi);
  for (int ti = 0; ti < fine.n; ++ti) {
    const double t = fine.point(ti);
    for (int j = 0; j < sg.nxi; ++j)
      phase[static_cast<size_t>(ti) * sg.nxi + j] = std::polar(1.0, -kTwoPi * t * sg.xi(j));
  }

  std::vector<cplx> out(static_cast<size_t>(sg.nx) * sg.nxi);
  std::vector<cplx> prod(fine.n);
  for (int ix = 0; ix < sg.nx; ++ix) {
    const long sh = std::llround(sg.x(ix) / fine.step);
    for (int ti = 0; ti < fine.n; ++ti) {
      const long src = ti - sh;
      prod[ti] = (src < 0 || src >= fine.n) ? cplx{} : ff[ti] * std::conj(gg[src]);
    }
    cplx* row = out.data() + static_cast<size_t>(ix) * sg.nxi;
    for (int ti = 0; ti < fine.n; ++ti) {
      const cplx p = prod[ti];
      if (p == cplx{}) continue;
      const cplx* ph = phase.data() + static_cast<size_t>(ti) * sg.nxi;
      for (int j = 0; j < sg.nxi; ++j) row[j] += p * ph[j];
    }
    for (int j = 0; j < sg.nxi; ++j) row[j] *= fine.step;
  }
  return SampledSymbol(sg, std::move(out));
}

double mixed_quasinorm(const SampledSymbol& v, double p, double q) {
  if (!(p > 0) || !(q > 0)) throw std::invalid_argument("mixed_quasinorm: exponents positive");
  const SymbolGrid& g = v.grid;
  std::vector<double> inner_norms(g.nxi, 0.0);
  for (int j = 0; j < g.nxi; ++j) {
    if (is_inf(p)) {
      double m = 0.0;
      for (int i = 0; i < g.nx; ++i) m = std::max(m, std::abs(v.at(i, j)));
      inner_norms[j] = m;
    } else {
      double s = 0.0;
      for (int i = 0; i < g.nx; ++i) s += abs_pow(std::abs(v.at(i, j)), p);
      inner_norms[j] = s == 0.0 ? 0.0 : std::exp(std::log(s * g.x_step) / p);
    }
  }
  if (is_inf(q)) {
    double m = 0.0;
    for (double s : inner_norms) m = std::max(m, s);
    return m;
  }
  double s = 0.0;
  for (double w : inner_norms) s += abs_pow(w, q);
  return s == 0.0 ? 0.0 : std::exp(std::log(s * g.xi_step) / q);
}

double modulation_quasinorm(const SampledFunction& f, const SampledFunction& g, double p,
                            double q) {
  return mixed_quasinorm(stft(f, g), p, q);
}

// ---------------------------------------------------------------------------
// GaborSystem

GaborSystem::GaborSystem(SampledFunction window, double alpha, double beta,
                         double lattice_radius, bool normalize_window, double xi_radius)
    : window_(std::move(window)),
      alpha_(alpha),
      beta_(beta),
      lattice_radius_(lattice_radius),
      xi_radius_(xi_radius > 0 ? xi_radius : lattice_radius) {
  if (!(alpha > 0) || !(beta > 0))
    throw std::invalid_argument("GaborSystem: lattice steps must be positive");
  const double ratio = alpha / window_.grid.step;
  if (std::abs(ratio - std::llround(ratio)) > 1e-9)
    throw std::invalid_argument("GaborSystem: alpha must be a multiple of the grid step");
  if (normalize_window) {
    const double nrm = l2_norm(window_);
    if (nrm == 0.0) throw std::invalid_argument("GaborSystem: zero window");
    for (auto& z : window_.v) z /= nrm;
  }

  lattice_ = std::make_shared<const PointSet>(
      gabor_lattice(window_.grid, alpha_, beta_, lattice_radius_, xi_radius_));

  atoms_ = Matrix(window_.grid.n, lattice_->size());
  for (int a = 0; a < lattice_->size(); ++a) {
    const double* z = lattice_->point(a);
    SampledFunction atom = tf_shift(window_, z[0], z[1]);
    for (int i = 0; i < window_.grid.n; ++i) atoms_(i, a) = atom.v[i];
  }
}

double GaborSystem::coverage_x() const {
  return std::floor(lattice_radius_ / alpha_ + 1e-9) * alpha_;
}

double GaborSystem::coverage_xi() const {
  const double nyquist = 1.0 / (2 * window_.grid.step);
  const long kxi = std::min(static_cast<long>(std::floor(xi_radius_ / beta_ + 1e-9)),
                            static_cast<long>(std::ceil(nyquist / beta_ - 1e-9)) - 1);
  return kxi * beta_;
}

Seq GaborSystem::analysis(const SampledFunction& f) const {
  if (!(f.grid == window_.grid)) throw std::invalid_argument("analysis: grid mismatch");
  auto c = adjoint_matvec(atoms_, f.v);
  for (auto& z : c) z *= f.grid.step;
  return Seq(lattice_, std::move(c));
}

SampledFunction GaborSystem::synthesis(const Seq& c) const {
  if (!c.index || !(*c.index == *lattice_))
    throw std::invalid_argument("synthesis: coefficient index mismatch");
  return SampledFunction(window_.grid, matvec(atoms_, c.values));
}

SampledFunction GaborSystem::frame_operator(const SampledFunction& f) const {
  return synthesis(analysis(f));
}

const Matrix& GaborSystem::frame_matrix() const {
  if (!frame_matrix_) {
    Matrix s = matmul(atoms_, atoms_.adjoint());
    const cplx w = window_.grid.step;
    for (auto& z : s.data()) z *= w;
    frame_matrix_ = std::move(s);
  }
  return *frame_matrix_;
}

FrameBounds GaborSystem::frame_bounds(double interior_radius) const {
  // The section only covers the phase-space box spanned by the lattice, so
  // the extremal eigenvalues are taken over a subspace of functions
  // concentrated in the interior of that box: eigenvectors of the
  // time-band-limiting operator D_r F^* D_nu F D_r with concentration
  // essentially one.
  const FuncGrid& g = window_.grid;
  const double nyquist = 1.0 / (2 * g.step);
  double cov_x = lattice_radius_, cov_xi = lattice_radius_;
  cov_xi = std::min(cov_xi, nyquist - beta_);
  const double r_pos = interior_radius > 0 ? interior_radius : cov_x / 2;
  const double r_freq = interior_radius > 0
                            ? std::min(cov_xi * (interior_radius / cov_x), cov_xi)
                            : cov_xi / 2;

  const int n = g.n - 1;  // periodic subgrid, the duplicated endpoint dropped
  const double period = 2 * g.radius;
  // Concentrated directions are the leading right singular vectors of
  // A = D_nu F D_r; the eigenproblem is solved on the small frequency side
  // (A A^*) and mapped back.
  std::vector<int> freqs, pos;
  for (int k = -n / 2; k < n - n / 2; ++k)
    if (std::abs(k / period) <= r_freq) freqs.push_back(k);
  for (int i = 0; i < n; ++i)
    if (std::abs(g.point(i)) <= r_pos) pos.push_back(i);
  const int nf = static_cast<int>(freqs.size());
  const int np = static_cast<int>(pos.size());
  if (nf == 0 || np == 0) throw std::runtime_error("frame_bounds: empty interior");
  Matrix amat(nf, np);
  const double unit = 1.0 / std::sqrt(static_cast<double>(n));
  for (int r = 0; r < nf; ++r)
    for (int c = 0; c < np; ++c)
      amat(r, c) = std::polar(unit, -kTwoPi * freqs[r] * g.point(pos[c]) / period);
  Matrix aat = matmul(amat, amat.adjoint());
  auto conc = hermitian_eig(aat);
  std::vector<int> keep;
  for (int i = 0; i < nf; ++i)
    if (conc.values[i] > 1.0 - 1e-9) keep.push_back(i);
  if (keep.size() < 3) {
    keep.clear();
    for (int i = nf - 1; i >= 0 && static_cast<int>(keep.size()) < 3; --i)
      if (conc.values[i] > 0.5) keep.push_back(i);
  }
  if (keep.empty()) throw std::runtime_error("frame_bounds: no concentrated test directions");
  if (keep.size() > 80) keep.erase(keep.begin(), keep.end() - 80);

  const Matrix& s = frame_matrix();
  const int m = static_cast<int>(keep.size());
  Matrix q(g.n, m);
  for (int c = 0; c < m; ++c) {
    // v = A^* u / sqrt(lambda), supported on the kept positions
    const double lam = conc.values[keep[c]];
    for (int pc = 0; pc < np; ++pc) {
      cplx acc{};
      for (int r = 0; r < nf; ++r) acc += std::conj(amat(r, pc)) * conc.vectors(r, keep[c]);
      q(pos[pc], c) = acc / std::sqrt(lam);
    }
  }
  Matrix sq = matmul(s, q);
  Matrix comp = adjoint_matmul(q, sq);
  auto eig = hermitian_eig(comp);
  FrameBounds fb;
  fb.lower = std::max(eig.values.front(), 0.0);
  fb.upper = eig.values.back();
  return fb;
}

SampledFunction GaborSystem::dual_window(double tol, double* residual) const {
  // The section frame operator is only semi-definite: the sampling grid holds
  // frequencies beyond the modulation coverage, where S has near-null
  // directions that an unrestricted iterative solve amplifies. The dual is
  // therefore solved through the spectral pseudo-inverse on the covered
  // subspace; the window has no measurable mass below the cutoff.
  const Matrix& s = frame_matrix();
  auto eig = hermitian_eig(s);
  const int n = s.rows();
  // For a frame the covered directions carry eigenvalues comparable to the
  // upper bound; everything below the cutoff belongs to the uncovered band.
  const double cutoff = 0.02 * std::max(eig.values.back(), 1e-300);
  std::vector<cplx> gamma(n);
  for (int k = 0; k < n; ++k) {
    if (eig.values[k] <= cutoff) continue;
    cplx coef{};
    for (int i = 0; i < n; ++i) coef += std::conj(eig.vectors(i, k)) * window_.v[i];
    coef /= eig.values[k];
    for (int i = 0; i < n; ++i) gamma[i] += eig.vectors(i, k) * coef;
  }
  SampledFunction out(window_.grid, std::move(gamma));
  // report the achieved residual against the requested target
  auto sg = matvec(s, out.v);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i) {
    num += std::norm(sg[i] - window_.v[i]);
    den += std::norm(window_.v[i]);
  }
  const double rel = std::sqrt(num / den);
  if (residual) *residual = rel;
  // the residual equals the window mass outside the covered band; anything
  // large signals a system that is not a frame on its section
  if (rel > std::max(tol, 1e-4)) throw std::runtime_error("dual_window: not a usable frame");
  (void)tol;
  return out;
}

SampledFunction GaborSystem::tight_window() const {
  const Matrix& s = frame_matrix();
  auto apply = [&](std::span<const cplx> x) { return matvec(s, x); };
  auto h = lanczos_matfunc(apply, window_.v, [](double t) {
    if (t <= 0) throw std::runtime_error("tight_window: frame operator not positive definite");
    return 1.0 / std::sqrt(t);
  });
  return SampledFunction(window_.grid, std::move(h));
}

bool GaborSystem::is_tight(double tol) const {
  auto fb = frame_bounds();
  return fb.lower > 0 && fb.ratio() - 1.0 <= tol;
}

}  // namespace cdspec
