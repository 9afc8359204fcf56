#include "cdspec/weyl.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cdspec {

namespace {

void require_matching_grid(const SampledSymbol& a, const FuncGrid& grid, const char* who) {
  if (!(a.grid == SymbolGrid::for_func_grid(grid)))
    throw std::invalid_argument(std::string(who) + ": symbol grid does not match the function grid");
}

}  // namespace

SampledSymbol wigner(const SampledFunction& f, const SampledFunction& g) {
  if (!(f.grid == g.grid)) throw std::invalid_argument("wigner: grid mismatch");
  const SymbolGrid sg = SymbolGrid::for_func_grid(f.grid);
  const FineGrid fine = fine_grid_of(f.grid);
  auto ff = upsample_fine(f);
  auto gg = upsample_fine(g);
  const double tstep = f.grid.step;  // t ranges over h Z

  // phase table over (k, xi): e^{-2 pi i (k h) xi}
  const int kmax = fine.n / 2;
  std::vector<cplx> phase(static_cast<size_t>(2 * kmax + 1) * sg.nxi);
  for (int k = -kmax; k <= kmax; ++k) {
    cplx* row = phase.data() + static_cast<size_t>(k + kmax) * sg.nxi;
    for (int j = 0; j < sg.nxi; ++j) row[j] = std::polar(1.0, -kTwoPi * (k * tstep) * sg.xi(j));
  }

  std::vector<cplx> out(static_cast<size_t>(sg.nx) * sg.nxi);
  for (int mi = 0; mi < sg.nx; ++mi) {
    cplx* row = out.data() + static_cast<size_t>(mi) * sg.nxi;
    for (int k = -kmax; k <= kmax; ++k) {
      const int ip = mi + k, im = mi - k;
      if (ip < 0 || ip >= fine.n || im < 0 || im >= fine.n) continue;
      const cplx prod = ff[ip] * std::conj(gg[im]);
      if (prod == cplx{}) continue;
      const cplx* ph = phase.data() + static_cast<size_t>(k + kmax) * sg.nxi;
      for (int j = 0; j < sg.nxi; ++j) row[j] += prod * ph[j];
    }
    for (int j = 0; j < sg.nxi; ++j) row[j] *= tstep;
  }
  return SampledSymbol(sg, std::move(out));
}

namespace {

// table of partial inverse transforms in the frequency variable:
// out[mi][ku + (n-1)] = dxi * sum_j a(mi, xi_j) e^{2 pi i (ku h) xi_j}
std::vector<cplx> check_table(const SampledSymbol& a, const FuncGrid& grid) {
  const SymbolGrid& sg = a.grid;
  const int n = grid.n;
  const int width = 2 * n - 1;
  // the partial transform is a plain matrix product with the phase table
  Matrix phase_t(sg.nxi, width);
  for (int j = 0; j < sg.nxi; ++j) {
    const double xi = sg.xi(j);
    cplx* row = phase_t.row(j);
    for (int ku = -(n - 1); ku <= n - 1; ++ku)
      row[ku + n - 1] = std::polar(sg.xi_step, kTwoPi * (ku * grid.step) * xi);
  }
  Matrix avals(sg.nx, sg.nxi);
  std::copy(a.v.begin(), a.v.end(), avals.data().begin());
  Matrix prod = matmul(avals, phase_t);
  return std::move(prod.data());
}

}  // namespace

Matrix weyl_kernel(const SampledSymbol& a, const FuncGrid& grid) {
  require_matching_grid(a, grid, "weyl_kernel");
  const SymbolGrid& sg = a.grid;
  const int n = grid.n;
  auto table = check_table(a, grid);
  const int width = 2 * n - 1;
  Matrix k(n, n);
  for (int xi = 0; xi < n; ++xi)
    for (int yi = 0; yi < n; ++yi) {
      const int mid = (xi + yi) % sg.nx;  // midpoint on the half-open fine grid
      k(xi, yi) = table[static_cast<size_t>(mid) * width + (xi - yi + n - 1)];
    }
  return k;
}

Matrix kn_kernel(const SampledSymbol& a, const FuncGrid& grid) {
  require_matching_grid(a, grid, "kn_kernel");
  const SymbolGrid& sg = a.grid;
  const int n = grid.n;
  auto table = check_table(a, grid);
  const int width = 2 * n - 1;
  Matrix k(n, n);
  for (int xi = 0; xi < n; ++xi) {
    const int mid = (2 * xi) % sg.nx;  // the symbol is evaluated at x itself
    for (int yi = 0; yi < n; ++yi)
      k(xi, yi) = table[static_cast<size_t>(mid) * width + (xi - yi + n - 1)];
  }
  return k;
}

SampledFunction apply_kernel(const Matrix& kernel, const SampledFunction& f) {
  if (kernel.cols() != f.grid.n) throw std::invalid_argument("apply_kernel: size mismatch");
  auto out = matvec(kernel, f.v);
  for (auto& z : out) z *= f.grid.step;
  return SampledFunction(f.grid, std::move(out));
}

SampledFunction weyl_apply(const SampledSymbol& a, const SampledFunction& f) {
  return apply_kernel(weyl_kernel(a, f.grid), f);
}

cplx weyl_weak_pairing(const SampledSymbol& a, const SampledFunction& f,
                       const SampledFunction& g) {
  SampledSymbol w = wigner(g, f);
  if (!(w.grid == a.grid)) throw std::invalid_argument("weyl_weak_pairing: grid mismatch");
  cplx s{};
  for (size_t i = 0; i < a.v.size(); ++i) s += a.v[i] * std::conj(w.v[i]);
  return s * a.grid.x_step * a.grid.xi_step;
}

namespace {

// unitary DFT pair on a centered half-open grid: forward multiplies by
// e^{-2 pi i freq * point} * step; the dual grid has span 1/step.
struct Dft1d {
  int n = 0;
  double step = 0.0;
  double start = 0.0;        // first grid point
  double dual_step = 0.0;
  double dual_start = 0.0;

  Dft1d(int count, double st, double first) : n(count), step(st), start(first) {
    dual_step = 1.0 / (n * step);
    dual_start = -0.5 / step;
  }
  double point(int i) const { return start + i * step; }
  double dual(int i) const { return dual_start + i * dual_step; }
};

void transform_axis(std::vector<cplx>& data, int rows, int cols, bool axis_is_rows,
                    const Dft1d& d, bool forward) {
  const int n = axis_is_rows ? rows : cols;
  if (n != d.n) throw std::logic_error("transform_axis: size mismatch");
  std::vector<cplx> mat(static_cast<size_t>(n) * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const double ang = kTwoPi * d.dual(a) * d.point(b);
      mat[static_cast<size_t>(a) * n + b] =
          forward ? std::polar(d.step, -ang) : std::polar(d.dual_step, ang);
    }
  // forward maps point-index -> dual-index (and back for the inverse); both
  // are plain dense applications along the chosen axis
  std::vector<cplx> buf(n);
  if (axis_is_rows) {
    for (int c = 0; c < cols; ++c) {
      for (int r = 0; r < rows; ++r) buf[r] = data[static_cast<size_t>(r) * cols + c];
      for (int r = 0; r < rows; ++r) {
        cplx s{};
        const cplx* mrow = mat.data() + static_cast<size_t>(r) * n;
        for (int b = 0; b < n; ++b) s += mrow[b] * buf[b];
        data[static_cast<size_t>(r) * cols + c] = s;
      }
    }
  } else {
    for (int r = 0; r < rows; ++r) {
      cplx* row = data.data() + static_cast<size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) buf[c] = row[c];
      for (int c = 0; c < cols; ++c) {
        cplx s{};
        const cplx* mrow = mat.data() + static_cast<size_t>(c) * n;
        for (int b = 0; b < n; ++b) s += mrow[b] * buf[b];
        row[c] = s;
      }
    }
  }
}

SampledSymbol quantization_transfer(const SampledSymbol& a, double mult_sign) {
  const SymbolGrid& g = a.grid;
  Dft1d dx(g.nx, g.x_step, -g.x_radius);
  Dft1d dxi(g.nxi, g.xi_step, -g.xi_radius);
  std::vector<cplx> data = a.v;
  transform_axis(data, g.nx, g.nxi, true, dx, true);
  transform_axis(data, g.nx, g.nxi, false, dxi, true);
  for (int i = 0; i < g.nx; ++i) {
    const double eta = dx.dual(i);
    for (int j = 0; j < g.nxi; ++j) {
      const double y = dxi.dual(j);
      data[static_cast<size_t>(i) * g.nxi + j] *= std::polar(1.0, mult_sign * kPi * eta * y);
    }
  }
  transform_axis(data, g.nx, g.nxi, false, dxi, false);
  transform_axis(data, g.nx, g.nxi, true, dx, false);
  return SampledSymbol(g, std::move(data));
}

}  // namespace

SampledSymbol kn_to_weyl(const SampledSymbol& a_kn) { return quantization_transfer(a_kn, -1.0); }

SampledSymbol weyl_to_kn(const SampledSymbol& a_weyl) {
  return quantization_transfer(a_weyl, 1.0);
}

SampledSymbol weyl_symbol_of_fine_kernel(const Matrix& kernel_fine, const FuncGrid& grid) {
  const SymbolGrid sg = SymbolGrid::for_func_grid(grid);
  const FineGrid fine = fine_grid_of(grid);
  if (kernel_fine.rows() != fine.n || kernel_fine.cols() != fine.n)
    throw std::invalid_argument("weyl_symbol_of_fine_kernel: kernel must live on the fine grid");
  const double tstep = grid.step;
  const int kmax = fine.n / 2;

  std::vector<cplx> phase(static_cast<size_t>(2 * kmax + 1) * sg.nxi);
  for (int k = -kmax; k <= kmax; ++k) {
    cplx* row = phase.data() + static_cast<size_t>(k + kmax) * sg.nxi;
    for (int j = 0; j < sg.nxi; ++j) row[j] = std::polar(1.0, -kTwoPi * (k * tstep) * sg.xi(j));
  }

  std::vector<cplx> out(static_cast<size_t>(sg.nx) * sg.nxi);
  for (int mi = 0; mi < sg.nx; ++mi) {
    cplx* row = out.data() + static_cast<size_t>(mi) * sg.nxi;
    for (int k = -kmax; k <= kmax; ++k) {
      const int ip = mi + k, im = mi - k;
      if (ip < 0 || ip >= fine.n || im < 0 || im >= fine.n) continue;
      const cplx val = kernel_fine(ip, im);
      if (val == cplx{}) continue;
      const cplx* ph = phase.data() + static_cast<size_t>(k + kmax) * sg.nxi;
      for (int j = 0; j < sg.nxi; ++j) row[j] += val * ph[j];
    }
    for (int j = 0; j < sg.nxi; ++j) row[j] *= tstep;
  }
  return SampledSymbol(sg, std::move(out));
}

// ---------------------------------------------------------------------------
// Gabor matrix bundle

CdMatrix gram_projection(const GaborSystem& g) {
  Matrix p = adjoint_matmul(g.atoms(), g.atoms());
  const cplx w = g.window().grid.step;
  for (auto& z : p.data()) z *= w;
  return CdMatrix(g.lattice(), g.lattice(), std::move(p));
}

GaborMatrixBundle gabor_matrix(const SampledSymbol& a, std::shared_ptr<const GaborSystem> g,
                               double tight_tol) {
  if (!g->is_tight(tight_tol))
    throw std::invalid_argument("gabor_matrix: the system must be a tight frame");
  const FuncGrid& grid = g->window().grid;
  // Atom pairs whose modulation difference leaves the Nyquist band correlate
  // through aliasing on the sampling grid and would corrupt the matrix
  // envelopes; the lattice must keep the full modulation span inside the
  // band with a safety margin.
  const double nyquist = 1.0 / (2 * grid.step);
  if (2 * g->coverage_xi() > 2 * nyquist - 4.0)
    throw std::invalid_argument(
        "gabor_matrix: modulation span too close to the Nyquist band (use a finer grid or a "
        "smaller lattice xi radius)");
  require_matching_grid(a, grid, "gabor_matrix");

  Matrix kern = weyl_kernel(a, grid);
  Matrix kphi = matmul(kern, g->atoms());
  Matrix m = adjoint_matmul(g->atoms(), kphi);
  const cplx w = grid.step * grid.step;
  for (auto& z : m.data()) z *= w;

  GaborMatrixBundle out;
  out.m = CdMatrix(g->lattice(), g->lattice(), std::move(m));
  out.p = gram_projection(*g);
  Matrix amat = out.m.entries() + Matrix::identity(out.p.entries().rows()) - out.p.entries();
  out.a = CdMatrix(g->lattice(), g->lattice(), std::move(amat));
  out.frame = std::move(g);
  return out;
}

AlmostDiagEnvelope almost_diag_envelope(const CdMatrix& m, double p0) {
  if (!(p0 > 0) || p0 > 1.0) throw std::invalid_argument("almost_diag_envelope: p0 in (0,1]");
  AlmostDiagEnvelope out;
  out.env = m.min_envelope();
  double acc = 0.0;
  for (double v : out.env.values()) acc += abs_pow(v, p0);
  out.quasinorm = acc > 0 ? std::exp(std::log(acc) / p0) : 0.0;

  // least-squares fit of log h(k) ~ log C - c |k| over the decaying part
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int d = out.env.dim();
  for (size_t flat = 0; flat < out.env.node_count(); ++flat) {
    const double v = out.env.values()[flat];
    if (v < 1e-13) continue;
    auto k = out.env.unflatten(flat);
    double n2 = 0.0;
    for (int i = 0; i < d; ++i) {
      const double c = k[i] * out.env.grid_step();
      n2 += c * c;
    }
    const double r = std::sqrt(n2), ly = std::log(v);
    sw += 1;
    sx += r;
    sy += ly;
    sxx += r * r;
    sxy += r * ly;
  }
  if (sw > 2 && sw * sxx - sx * sx > 1e-12) {
    const double slope = (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
    out.fit_rate = -slope;
    out.fit_log_amp = (sy - slope * sx) / sw;
  }
  return out;
}

WeylInversion invert_weyl(const SampledSymbol& a, std::shared_ptr<const GaborSystem> g,
                          double coef_threshold, bool reconstruct_symbol, double tight_tol) {
  WeylInversion out;
  out.coef_threshold = coef_threshold;
  out.bundle = gabor_matrix(a, g, tight_tol);
  const GaborMatrixBundle& bundle = out.bundle;
  out.frame = bundle.frame;

  const Matrix& amat = bundle.a.entries();
  auto lu = lu_factor(amat);
  Matrix b = lu_solve_matrix(lu, Matrix::identity(amat.rows()));
  {
    const double smax = largest_singular_value(amat);
    // inverse iteration through the factors
    const double bnorm = largest_singular_value(b);
    out.condition = smax * bnorm;
  }
  out.b_matrix = b;

  Matrix mb = b + bundle.p.entries() - Matrix::identity(b.rows());
  for (auto& z : mb.data())
    if (std::abs(z) < coef_threshold) z = cplx{};
  out.m_b = CdMatrix(bundle.frame->lattice(), bundle.frame->lattice(), std::move(mb));
  if (!reconstruct_symbol) return out;

  // kernel of D_g M(b) C_g on the fine grid, then back to a Weyl symbol
  const GaborSystem& sys = *bundle.frame;
  const FuncGrid& grid = sys.window().grid;
  const FineGrid fine = fine_grid_of(grid);
  auto wfine = upsample_fine(sys.window());
  Matrix atoms_fine(fine.n, sys.atom_count());
  for (int at = 0; at < sys.atom_count(); ++at) {
    const double* z = sys.lattice()->point(at);
    const long shift = std::llround(z[0] / fine.step);
    for (int i = 0; i < fine.n; ++i) {
      const long src = i - shift;
      if (src < 0 || src >= fine.n) continue;
      atoms_fine(i, at) = wfine[src] * std::polar(1.0, kTwoPi * z[1] * fine.point(i));
    }
  }
  Matrix tmp = matmul(atoms_fine, out.m_b.entries());
  Matrix kernel = matmul(tmp, atoms_fine.adjoint());
  out.b = weyl_symbol_of_fine_kernel(kernel, grid);
  return out;
}

SampledSymbol frame_operator_symbol(const SampledFunction& g1, const SampledFunction& g2,
                                    double alpha, double beta, double lattice_radius) {
  if (!(g1.grid == g2.grid)) throw std::invalid_argument("frame_operator_symbol: grid mismatch");
  const FuncGrid& grid = g1.grid;
  const SymbolGrid sg = SymbolGrid::for_func_grid(grid);
  const FineGrid fine = fine_grid_of(grid);
  {
    const double ra = alpha / sg.x_step, rb = beta / sg.xi_step;
    if (std::abs(ra - std::llround(ra)) > 1e-9 || std::abs(rb - std::llround(rb)) > 1e-9)
      throw std::invalid_argument("frame_operator_symbol: lattice incommensurate with the grid");
  }
  auto g1f = upsample_fine(g1);

  // Fourier transform of g2 on the extended frequency grid covering xi - mu
  const long ext = static_cast<long>(std::ceil((sg.xi_radius + lattice_radius) / sg.xi_step)) + 1;
  std::vector<cplx> ghat(2 * ext + 1);
  for (long j = -ext; j <= ext; ++j) {
    const double w = j * sg.xi_step;
    cplx s{};
    for (int t = 0; t < grid.n; ++t) s += g2.v[t] * std::polar(1.0, -kTwoPi * grid.point(t) * w);
    ghat[j + ext] = s * grid.step;
  }

  PointSet atoms = gabor_lattice(grid, alpha, beta, lattice_radius);

  // phase table e^{-2 pi i u xi_j} for u on the fine offset grid
  const long umax = static_cast<long>(std::llround((grid.radius + lattice_radius) / sg.x_step)) + 1;
  std::vector<cplx> uphase(static_cast<size_t>(2 * umax + 1) * sg.nxi);
  for (long w = -umax; w <= umax; ++w) {
    cplx* row = uphase.data() + static_cast<size_t>(w + umax) * sg.nxi;
    for (int j = 0; j < sg.nxi; ++j)
      row[j] = std::polar(1.0, -kTwoPi * (w * sg.x_step) * sg.xi(j));
  }

  std::vector<cplx> out(static_cast<size_t>(sg.nx) * sg.nxi);
  std::vector<cplx> gcol(sg.nxi);
  for (int at = 0; at < atoms.size(); ++at) {
    const double l = atoms.point(at)[0];
    const double mu = atoms.point(at)[1];
    // conj(ghat(xi - mu)) for every xi of the grid
    bool any = false;
    for (int j = 0; j < sg.nxi; ++j) {
      const long idx = std::llround((sg.xi(j) - mu) / sg.xi_step);
      gcol[j] = (idx >= -ext && idx <= ext) ? std::conj(ghat[idx + ext]) : cplx{};
      if (std::abs(gcol[j]) > 1e-16) any = true;
    }
    if (!any) continue;
    for (int i = 0; i < sg.nx; ++i) {
      const double u = sg.x(i) - l;
      const long ui = std::llround(u / sg.x_step);
      if (ui < -umax || ui > umax) continue;
      // g1 value at x - l from the fine samples (zero off the box)
      const long src = std::llround((u + fine.radius) / fine.step);
      if (src < 0 || src >= fine.n) continue;
      const cplx g1v = g1f[src];
      if (std::abs(g1v) < 1e-16) continue;
      const cplx lead = g1v * std::polar(1.0, kTwoPi * u * mu);
      const cplx* ph = uphase.data() + static_cast<size_t>(ui + umax) * sg.nxi;
      cplx* row = out.data() + static_cast<size_t>(i) * sg.nxi;
      for (int j = 0; j < sg.nxi; ++j) {
        if (gcol[j] == cplx{}) continue;
        row[j] += lead * gcol[j] * ph[j];
      }
    }
  }
  return SampledSymbol(sg, std::move(out));
}

}  // namespace cdspec
