#pragma once

#include <cassert>
#include <functional>
#include <span>
#include <vector>

#include "cdspec/types.hpp"

namespace cdspec {

// Dense complex matrix, row-major. Desk scale (n up to a few thousand).
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols) {}

  static Matrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  cplx& operator()(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
  const cplx& operator()(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }

  cplx* row(int i) { return a_.data() + static_cast<size_t>(i) * cols_; }
  const cplx* row(int i) const { return a_.data() + static_cast<size_t>(i) * cols_; }

  std::vector<cplx>& data() { return a_; }
  const std::vector<cplx>& data() const { return a_; }

  Matrix adjoint() const;
  Matrix transpose() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<cplx> a_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
// a^* b without forming the adjoint.
Matrix adjoint_matmul(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(cplx s, const Matrix& a);

std::vector<cplx> matvec(const Matrix& a, std::span<const cplx> x);
std::vector<cplx> adjoint_matvec(const Matrix& a, std::span<const cplx> x);

double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);

// LU with partial pivoting. Throws std::runtime_error on (numerically)
// singular input.
struct LuFactors {
  Matrix lu;
  std::vector<int> piv;
  int n = 0;

  std::vector<cplx> solve(std::span<const cplx> b) const;
  // Solves A^* x = b using the factors of A.
  std::vector<cplx> solve_adjoint(std::span<const cplx> b) const;
};

LuFactors lu_factor(Matrix a);
Matrix lu_solve_matrix(const LuFactors& f, const Matrix& b);
Matrix inverse(const Matrix& a);

// Full eigendecomposition of a Hermitian matrix by cyclic Jacobi.
// Eigenvalues ascending; columns of `vectors` are the eigenvectors.
struct HermitianEig {
  std::vector<double> values;
  Matrix vectors;
};
HermitianEig hermitian_eig(Matrix a, double tol = 1e-13, int max_sweeps = 60);

// Largest singular value by power iteration on A^* A.
double largest_singular_value(const Matrix& a, int iters = 200, std::uint64_t seed = 12345);
// Smallest singular value: inverse power iteration on A^* A through an LU of A.
double smallest_singular_value(const Matrix& a, int iters = 200, std::uint64_t seed = 12345);

// Conjugate gradient for Hermitian positive definite operators.
// Returns the solution; `residual` (if given) receives the final relative
// residual. Throws if convergence fails.
std::vector<cplx> cg_solve(const std::function<std::vector<cplx>(std::span<const cplx>)>& apply,
                           std::span<const cplx> b, double tol = 1e-12, int max_iter = 2000,
                           double* residual = nullptr);

// f(A) b for Hermitian positive definite A via Lanczos with full
// reorthogonalization; `f` is applied to the Ritz values.
std::vector<cplx> lanczos_matfunc(const std::function<std::vector<cplx>(std::span<const cplx>)>& apply,
                                  std::span<const cplx> b, const std::function<double(double)>& f,
                                  int max_iter = 300, double tol = 1e-13);

// Extremal eigenvalues of a Hermitian operator restricted to the span explored
// by Lanczos (Ritz values after `iters` steps with full reorthogonalization).
struct RitzExtremes {
  double min = 0.0;
  double max = 0.0;
};
RitzExtremes lanczos_extremes(const std::function<std::vector<cplx>(std::span<const cplx>)>& apply,
                              int dim, int iters = 160, std::uint64_t seed = 777);

}  // namespace cdspec
