#pragma once

#include <memory>

#include "cdspec/cdmatrix.hpp"
#include "cdspec/envelope.hpp"
#include "cdspec/gabor.hpp"
#include "cdspec/linalg.hpp"

namespace cdspec {

// Cross-Wigner transform W(f,g)(x,t) = integral f(x+t/2) conj(g(x-t/2))
// e^{-2 pi i xi t} dt on the time-frequency grid. The sign convention is the
// one consistent with both the STFT identity W(f,g)(x,xi) =
// 2 e^{4 pi i x xi} V_{g^}f(2x, 2xi) and the weak Weyl pairing below.
SampledSymbol wigner(const SampledFunction& f, const SampledFunction& g);

// Dense kernel of the Weyl operator of `a` on the sampling grid:
// (a^w f)(x) = h * sum_y K(x,y) f(y) with
// K(x,y) = sum_xi a((x+y)/2, xi) e^{2 pi i (x-y) xi} dxi.
Matrix weyl_kernel(const SampledSymbol& a, const FuncGrid& grid);
SampledFunction weyl_apply(const SampledSymbol& a, const SampledFunction& f);
SampledFunction apply_kernel(const Matrix& kernel, const SampledFunction& f);

// Weak pairing <a^w f, g> = <a, W(g, f)> evaluated on the symbol grid; used
// as an independent oracle against the kernel route.
cplx weyl_weak_pairing(const SampledSymbol& a, const SampledFunction& f,
                       const SampledFunction& g);

// Quantization transfer between the normal (Kohn-Nirenberg) and Weyl forms:
// a Fourier multiplier e^{-/+ pi i eta y} on the symbol spectrum.
SampledSymbol kn_to_weyl(const SampledSymbol& a_kn);
SampledSymbol weyl_to_kn(const SampledSymbol& a_weyl);

// Kernel of the normal quantization, for cross-checks of the transfer.
Matrix kn_kernel(const SampledSymbol& a, const FuncGrid& grid);

// Weyl symbol of an operator given by its kernel on the fine grid
// (the inverse of the kernel construction above).
SampledSymbol weyl_symbol_of_fine_kernel(const Matrix& kernel_fine, const FuncGrid& grid);

struct GaborMatrixBundle {
  CdMatrix m;  // M(a)_{l,m} = <a^w pi(m) g, pi(l) g>
  CdMatrix p;  // Gram matrix of the (tight) atoms
  CdMatrix a;  // M + I - P
  std::shared_ptr<const GaborSystem> frame;
};

// Matrix form of a Weyl operator over a tight Gabor frame. Throws when the
// system is not numerically tight.
GaborMatrixBundle gabor_matrix(const SampledSymbol& a, std::shared_ptr<const GaborSystem> g,
                               double tight_tol = 1e-8);

// Gram matrix of the system's atoms alone (the matrix of the identity).
CdMatrix gram_projection(const GaborSystem& g);

struct AlmostDiagEnvelope {
  Envelope env;        // diagonal-wise maxima on the lattice difference grid
  double quasinorm = 0.0;  // l^{p0} quasi-norm of the difference profile
  double fit_rate = 0.0;   // c in h(k) <= C exp(-c |k|) fitted on the decay
  double fit_log_amp = 0.0;
};
AlmostDiagEnvelope almost_diag_envelope(const CdMatrix& m, double p0);

struct WeylInversion {
  SampledSymbol b;          // reconstructed inverse symbol (when requested)
  Matrix b_matrix;          // section inverse of M(a) + I - P
  CdMatrix m_b;             // B + P - I
  GaborMatrixBundle bundle; // the forward matrices, computed along the way
  double condition = 0.0;   // condition estimate of the section
  double coef_threshold = 1e-12;
  std::shared_ptr<const GaborSystem> frame;
};

// Inverse-symbol reconstruction through the matrix trick: invert the section
// of M(a) + I - P, recover M(b) = B + P - I, expand back to a symbol through
// the kernel of D_g M(b) C_g. Skipping the reconstruction leaves `b` empty
// (useful for truncation sweeps that only need the matrix data).
WeylInversion invert_weyl(const SampledSymbol& a, std::shared_ptr<const GaborSystem> g,
                          double coef_threshold = 1e-12, bool reconstruct_symbol = true,
                          double tight_tol = 1e-8);

// Kohn-Nirenberg symbol of the frame-type operator sum_z <., pi(z) g1>
// pi(z) g2 over the truncated lattice, by direct evaluation of the lattice
// sum.
SampledSymbol frame_operator_symbol(const SampledFunction& g1, const SampledFunction& g2,
                                    double alpha, double beta, double lattice_radius);

}  // namespace cdspec
