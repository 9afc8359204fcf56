#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cdspec/linalg.hpp"
#include "cdspec/pointset.hpp"
#include "cdspec/sequence.hpp"
#include "cdspec/types.hpp"

namespace cdspec {

// One-dimensional sampling grid: step h on the closed box [-R, R].
struct FuncGrid {
  double step = 1.0 / 16.0;
  double radius = 8.0;
  int n = 257;

  static FuncGrid make(double h, double r);
  double point(int i) const { return -radius + i * step; }
  int index_of(double x) const;  // nearest node
  bool operator==(const FuncGrid& o) const {
    return step == o.step && radius == o.radius && n == o.n;
  }
};

struct SampledFunction {
  FuncGrid grid;
  std::vector<cplx> v;

  SampledFunction() = default;
  SampledFunction(FuncGrid g, std::vector<cplx> vals);
};

double l2_norm(const SampledFunction& f);

// CSV grid dump: header "h R", then "t,re,im" rows.
void save_sampled_function(const SampledFunction& f, const std::string& path);
SampledFunction load_sampled_function(const std::string& path);
cplx inner(const SampledFunction& f, const SampledFunction& g);  // h * sum f conj(g)

SampledFunction gaussian_window(const FuncGrid& grid);           // 2^{1/4} e^{-pi t^2}
SampledFunction hermite_function(const FuncGrid& grid, int n);   // L^2-normalized

// Modulated translate (pi(z) f)(t) = e^{2 pi i xi t} f(t - x); x snaps to the
// grid, the snap distance is reported through snap_err when non-null.
SampledFunction tf_shift(const SampledFunction& f, double x, double xi,
                         double* snap_err = nullptr);

// Band-limited refinement of the samples onto the half-open fine grid
// [-R, R) with step h/2 (periodic extension; the duplicated +R endpoint of
// the closed box is dropped).
struct FineGrid {
  double step = 0.0;
  double radius = 0.0;
  int n = 0;
  double point(int i) const { return -radius + i * step; }
  int wrap_index(double x) const;
};
FineGrid fine_grid_of(const FuncGrid& g);
std::vector<cplx> upsample_fine(const SampledFunction& f);

// Phase-space lattice of a sampled Gabor system: alpha Z x beta Z truncated
// to the box [-radius, radius] x [-xi_radius, xi_radius], with the modulation
// range clamped inside the open Nyquist band of the grid (aliased rows would
// double-count atoms). xi_radius <= 0 means the position radius.
PointSet gabor_lattice(const FuncGrid& grid, double alpha, double beta, double radius,
                       double xi_radius = 0.0);

// Time-frequency plane grid: x on [-R, R) with step h/2, xi on the Nyquist
// band [-1/(2h), 1/(2h)) with matching uniform step, both half-open so the
// discrete Fourier identities hold exactly.
struct SymbolGrid {
  double x_step = 0.0, x_radius = 0.0;
  int nx = 0;
  double xi_step = 0.0, xi_radius = 0.0;
  int nxi = 0;

  static SymbolGrid for_func_grid(const FuncGrid& g);
  double x(int i) const { return -x_radius + i * x_step; }
  double xi(int j) const { return -xi_radius + j * xi_step; }
  int x_index_wrap(double v) const;
  bool operator==(const SymbolGrid& o) const {
    return x_step == o.x_step && nx == o.nx && xi_step == o.xi_step && nxi == o.nxi;
  }
};

struct SampledSymbol {
  SymbolGrid grid;
  std::vector<cplx> v;  // row-major, x index major

  SampledSymbol() = default;
  SampledSymbol(SymbolGrid g, std::vector<cplx> vals);
  cplx& at(int ix, int jxi) { return v[static_cast<size_t>(ix) * grid.nxi + jxi]; }
  const cplx& at(int ix, int jxi) const { return v[static_cast<size_t>(ix) * grid.nxi + jxi]; }
};

SampledSymbol symbol_from_function(const SymbolGrid& grid,
                                   const std::function<cplx(double, double)>& f);

// V_g f(x, xi) = integral f(t) conj(g(t-x)) e^{-2 pi i t xi} dt on the
// time-frequency grid.
SampledSymbol stft(const SampledFunction& f, const SampledFunction& g);

// Mixed quasi-norm of Eq-style modulation spaces: inner p over x, outer q
// over xi, usual modifications at infinity.
double mixed_quasinorm(const SampledSymbol& v, double p, double q);
double modulation_quasinorm(const SampledFunction& f, const SampledFunction& g, double p,
                            double q);

struct FrameBounds {
  double lower = 0.0;
  double upper = 0.0;
  double ratio() const { return lower > 0 ? upper / lower : kInf; }
};

// Gabor system over the rectangular lattice alpha Z x beta Z truncated to the
// phase-space box [-lattice_radius, lattice_radius]^2. Lattice steps must be
// commensurate with the sampling grid.
class GaborSystem {
 public:
  GaborSystem(SampledFunction window, double alpha, double beta, double lattice_radius,
              bool normalize_window = true, double xi_radius = 0.0);

  const SampledFunction& window() const { return window_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double lattice_radius() const { return lattice_radius_; }
  // Extent of the enumerated lattice box per axis (the modulation axis can be
  // clamped below the requested radius by the Nyquist band of the grid).
  double coverage_x() const;
  double coverage_xi() const;
  std::shared_ptr<const PointSet> lattice() const { return lattice_; }
  int atom_count() const { return atoms_.cols(); }
  const Matrix& atoms() const { return atoms_; }  // grid.n x atom_count

  Seq analysis(const SampledFunction& f) const;
  SampledFunction synthesis(const Seq& c) const;
  SampledFunction frame_operator(const SampledFunction& f) const;
  const Matrix& frame_matrix() const;  // h * Phi Phi^*

  // Extremal eigenvalues of the frame operator compressed to functions
  // supported in |t| <= interior_radius (0 means half the grid radius).
  FrameBounds frame_bounds(double interior_radius = 0.0) const;

  // Canonical dual window: solves S gamma = g on the covered subspace (the
  // section operator is only semi-definite); the achieved relative residual
  // is reported through `residual` when non-null.
  SampledFunction dual_window(double tol = 1e-10, double* residual = nullptr) const;
  // Tight window S^{-1/2} g via a Lanczos matrix function.
  SampledFunction tight_window() const;

  bool is_tight(double tol = 1e-8) const;

 private:
  SampledFunction window_;
  double alpha_, beta_, lattice_radius_, xi_radius_;
  std::shared_ptr<const PointSet> lattice_;
  Matrix atoms_;
  mutable std::optional<Matrix> frame_matrix_;
};

}  // namespace cdspec
