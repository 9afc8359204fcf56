#include "cdspec/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cdspec/rng.hpp"

namespace cdspec {

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::adjoint() const {
  Matrix m(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m(j, i) = std::conj((*this)(i, j));
  return m;
}

Matrix Matrix::transpose() const {
  Matrix m(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m(j, i) = (*this)(i, j);
  return m;
}

namespace {

// y += a * x over interleaved complex data; written in explicit real
// arithmetic so the compiler vectorizes the fused loop.
inline void caxpy(cplx a, const cplx* x, cplx* y, int n) {
  const double ar = a.real(), ai = a.imag();
  const double* __restrict xs = reinterpret_cast<const double*>(x);
  double* __restrict ys = reinterpret_cast<double*>(y);
  for (int j = 0; j < n; ++j) {
    const double xr = xs[2 * j], xi = xs[2 * j + 1];
    ys[2 * j] += ar * xr - ai * xi;
    ys[2 * j + 1] += ar * xi + ai * xr;
  }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  assert(a.cols() == b.rows());
  Matrix c(a.rows(), b.cols());
  const int n = a.rows(), k = a.cols(), m = b.cols();
  constexpr int kBlock = 48;  // keeps the B tile resident across output rows
  for (int l0 = 0; l0 < k; l0 += kBlock) {
    const int l1 = std::min(k, l0 + kBlock);
    for (int i = 0; i < n; ++i) {
      cplx* ci = c.row(i);
      for (int l = l0; l < l1; ++l) {
        const cplx ail = a(i, l);
        if (ail == cplx{}) continue;
        caxpy(ail, b.row(l), ci, m);
      }
    }
  }
  return c;
}

Matrix adjoint_matmul(const Matrix& a, const Matrix& b) {
  assert(a.rows() == b.rows());
  return matmul(a.adjoint(), b);
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  assert(a.rows() == b.rows() && a.cols() == b.cols());
  Matrix c = a;
  for (size_t i = 0; i < c.data().size(); ++i) c.data()[i] += b.data()[i];
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  assert(a.rows() == b.rows() && a.cols() == b.cols());
  Matrix c = a;
  for (size_t i = 0; i < c.data().size(); ++i) c.data()[i] -= b.data()[i];
  return c;
}

Matrix operator*(cplx s, const Matrix& a) {
  Matrix c = a;
  for (auto& v : c.data()) v *= s;
  return c;
}

std::vector<cplx> matvec(const Matrix& a, std::span<const cplx> x) {
  assert(static_cast<int>(x.size()) == a.cols());
  std::vector<cplx> y(a.rows());
  for (int i = 0; i < a.rows(); ++i) {
    const cplx* ai = a.row(i);
    cplx s{};
    for (int j = 0; j < a.cols(); ++j) s += ai[j] * x[j];
    y[i] = s;
  }
  return y;
}

std::vector<cplx> adjoint_matvec(const Matrix& a, std::span<const cplx> x) {
  assert(static_cast<int>(x.size()) == a.rows());
  std::vector<cplx> y(a.cols());
  for (int i = 0; i < a.rows(); ++i) {
    const cplx s = std::conj(x[i]);
    const cplx* ai = a.row(i);
    for (int j = 0; j < a.cols(); ++j) y[j] += std::conj(ai[j] * s);
  }
  return y;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (const auto& v : a.data()) s += std::norm(v);
  return std::sqrt(s);
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (const auto& v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

LuFactors lu_factor(Matrix a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("lu_factor: square matrix required");
  const int n = a.rows();
  LuFactors f;
  f.n = n;
  f.piv.resize(n);
  for (int k = 0; k < n; ++k) {
    int p = k;
    double best = std::abs(a(k, k));
    for (int i = k + 1; i < n; ++i) {
      const double v = std::abs(a(i, k));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (best == 0.0) throw std::runtime_error("lu_factor: singular matrix");
    f.piv[k] = p;
    if (p != k)
      for (int j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
    const cplx inv_akk = 1.0 / a(k, k);
    for (int i = k + 1; i < n; ++i) {
      const cplx lik = a(i, k) * inv_akk;
      a(i, k) = lik;
      if (lik == cplx{}) continue;
      caxpy(-lik, a.row(k) + k + 1, a.row(i) + k + 1, n - k - 1);
    }
  }
  f.lu = std::move(a);
  return f;
}

std::vector<cplx> LuFactors::solve(std::span<const cplx> b) const {
  assert(static_cast<int>(b.size()) == n);
  std::vector<cplx> x(b.begin(), b.end());
  for (int k = 0; k < n; ++k) std::swap(x[k], x[piv[k]]);
  for (int k = 0; k < n; ++k) {
    const cplx xk = x[k];
    if (xk == cplx{}) continue;
    for (int i = k + 1; i < n; ++i) x[i] -= lu(i, k) * xk;
  }
  for (int i = n - 1; i >= 0; --i) {
    cplx s = x[i];
    const cplx* li = lu.row(i);
    for (int j = i + 1; j < n; ++j) s -= li[j] * x[j];
    x[i] = s / li[i];
  }
  return x;
}

std::vector<cplx> LuFactors::solve_adjoint(std::span<const cplx> b) const {
  // A = P^T L U  =>  A^* = U^* L^* P.  Solve U^* y = b, L^* z = y, x = P^T z.
  assert(static_cast<int>(b.size()) == n);
  std::vector<cplx> x(b.begin(), b.end());
  for (int i = 0; i < n; ++i) {
    cplx s = x[i];
    for (int j = 0; j < i; ++j) s -= std::conj(lu(j, i)) * x[j];
    x[i] = s / std::conj(lu(i, i));
  }
  for (int i = n - 1; i >= 0; --i) {
    cplx s = x[i];
    for (int j = i + 1; j < n; ++j) s -= std::conj(lu(j, i)) * x[j];
    x[i] = s;
  }
  for (int k = n - 1; k >= 0; --k) std::swap(x[k], x[piv[k]]);
  return x;
}

Matrix lu_solve_matrix(const LuFactors& f, const Matrix& b) {
  // row-oriented triangular sweeps over all right-hand sides at once
  const int n = f.n, m = b.cols();
  Matrix x = b;
  for (int k = 0; k < n; ++k)
    if (f.piv[k] != k)
      for (int j = 0; j < m; ++j) std::swap(x(k, j), x(f.piv[k], j));
  constexpr int kBlock = 48;
  // forward sweep, two-phase per tile so the pivot rows stay resident
  for (int k0 = 0; k0 < n; k0 += kBlock) {
    const int k1 = std::min(n, k0 + kBlock);
    for (int k = k0; k < k1; ++k) {
      const cplx* xk = x.row(k);
      for (int i = k + 1; i < k1; ++i) {
        const cplx lik = f.lu(i, k);
        if (lik != cplx{}) caxpy(-lik, xk, x.row(i), m);
      }
    }
    for (int i = k1; i < n; ++i) {
      cplx* xi = x.row(i);
      for (int k = k0; k < k1; ++k) {
        const cplx lik = f.lu(i, k);
        if (lik != cplx{}) caxpy(-lik, x.row(k), xi, m);
      }
    }
  }
  for (int k0 = n; k0 > 0; k0 -= kBlock) {
    const int k1 = std::max(0, k0 - kBlock);
    for (int i = k0 - 1; i >= k1; --i) {
      cplx* xi = x.row(i);
      for (int k = i + 1; k < k0; ++k) {
        const cplx u = f.lu(i, k);
        if (u != cplx{}) caxpy(-u, x.row(k), xi, m);
      }
      const cplx d = 1.0 / f.lu(i, i);
      for (int j = 0; j < m; ++j) xi[j] *= d;
    }
    for (int i = k1 - 1; i >= 0; --i) {
      cplx* xi = x.row(i);
      for (int k = k0 - 1; k >= k0 - kBlock && k >= k1; --k) {
        const cplx u = f.lu(i, k);
        if (u != cplx{}) caxpy(-u, x.row(k), xi, m);
      }
    }
  }
  return x;
}

Matrix inverse(const Matrix& a) {
  auto f = lu_factor(a);
  return lu_solve_matrix(f, Matrix::identity(a.rows()));
}

HermitianEig hermitian_eig(Matrix a, double tol, int max_sweeps) {
  if (a.rows() != a.cols()) throw std::invalid_argument("hermitian_eig: square matrix required");
  const int n = a.rows();
  Matrix v = Matrix::identity(n);
  const double scale = std::max(frobenius_norm(a), 1e-300);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += std::norm(a(p, q));
    if (std::sqrt(off) <= tol * scale) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const cplx apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        // Unitary 2x2 diagonalization: phase to make the coupling real, then
        // a real Jacobi rotation.
        const double absapq = std::abs(apq);
        const cplx phase = apq / absapq;
        const double tau = (aqq - app) / (2.0 * absapq);
        const double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const cplx sp = s * phase;  // rotation applied to columns p,q
        for (int i = 0; i < n; ++i) {
          const cplx aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - std::conj(sp) * aiq;
          a(i, q) = sp * aip + c * aiq;
        }
        for (int j = 0; j < n; ++j) {
          const cplx apj = a(p, j), aqj = a(q, j);
          a(p, j) = c * apj - sp * aqj;
          a(q, j) = std::conj(sp) * apj + c * aqj;
        }
        for (int i = 0; i < n; ++i) {
          const cplx vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - std::conj(sp) * viq;
          v(i, q) = sp * vip + c * viq;
        }
      }
    }
  }

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return a(i, i).real() < a(j, j).real(); });
  HermitianEig out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (int j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]).real();
    for (int i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
  }
  return out;
}

namespace {

std::vector<cplx> random_unit(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<cplx> x(n);
  double s = 0.0;
  for (auto& v : x) {
    v = rng.complex_normal();
    s += std::norm(v);
  }
  s = std::sqrt(std::max(s, 1e-300));
  for (auto& v : x) v /= s;
  return x;
}

double norm2(std::span<const cplx> x) {
  double s = 0.0;
  for (const auto& v : x) s += std::norm(v);
  return std::sqrt(s);
}

cplx dot(std::span<const cplx> x, std::span<const cplx> y) {
  cplx s{};
  for (size_t i = 0; i < x.size(); ++i) s += std::conj(x[i]) * y[i];
  return s;
}

}  // namespace

double largest_singular_value(const Matrix& a, int iters, std::uint64_t seed) {
  if (a.cols() == 0 || a.rows() == 0) return 0.0;
  auto x = random_unit(a.cols(), seed);
  double sigma = 0.0;
  for (int it = 0; it < iters; ++it) {
    auto y = matvec(a, x);
    auto z = adjoint_matvec(a, y);
    const double nz = norm2(z);
    if (nz == 0.0) return 0.0;
    for (auto& v : z) v /= nz;
    const double next = std::sqrt(nz);
    if (it > 8 && std::abs(next - sigma) <= 1e-13 * std::max(1.0, next)) {
      sigma = next;
      break;
    }
    sigma = next;
    x = std::move(z);
  }
  return sigma;
}

double smallest_singular_value(const Matrix& a, int iters, std::uint64_t seed) {
  if (a.rows() != a.cols()) throw std::invalid_argument("smallest_singular_value: square required");
  auto f = lu_factor(a);
  auto x = random_unit(a.cols(), seed);
  double inv_sigma = 0.0;
  for (int it = 0; it < iters; ++it) {
    auto y = f.solve(x);
    auto z = f.solve_adjoint(y);
    const double nz = norm2(z);
    if (nz == 0.0) break;
    for (auto& v : z) v /= nz;
    const double next = std::sqrt(nz);
    if (it > 8 && std::abs(next - inv_sigma) <= 1e-13 * std::max(1.0, next)) {
      inv_sigma = next;
      break;
    }
    inv_sigma = next;
    x = std::move(z);
  }
  return inv_sigma > 0.0 ? 1.0 / inv_sigma : 0.0;
}

std::vector<cplx> cg_solve(const std::function<std::vector<cplx>(std::span<const cplx>)>& apply,
                           std::span<const cplx> b, double tol, int max_iter, double* residual) {
  const int n = static_cast<int>(b.size());
  std::vector<cplx> x(n), r(b.begin(), b.end()), p(b.begin(), b.end());
  const double nb = std::max(norm2(b), 1e-300);
  double rr = 0.0;
  for (const auto& v : r) rr += std::norm(v);
  // Stagnation guard: once the residual stops improving, further iterations
  // only pump rounding noise into near-null directions of a semi-definite
  // operator, so we return the best iterate instead.
  std::vector<cplx> best = x;
  double best_rr = rr;
  int since_improvement = 0;
  for (int it = 0; it < max_iter; ++it) {
    if (std::sqrt(rr) / nb <= tol) break;
    auto ap = apply(p);
    cplx pap = dot(p, ap);
    if (pap.real() <= 0.0) break;
    const double alpha = rr / pap.real();
    for (int i = 0; i < n; ++i) x[i] += alpha * p[i];
    for (int i = 0; i < n; ++i) r[i] -= alpha * ap[i];
    double rr_new = 0.0;
    for (const auto& v : r) rr_new += std::norm(v);
    if (rr_new < best_rr * 0.995) {
      best_rr = rr_new;
      best = x;
      since_improvement = 0;
    } else if (++since_improvement >= 25) {
      rr = rr_new;
      break;
    }
    const double beta = rr_new / rr;
    for (int i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    rr = rr_new;
  }
  if (best_rr < rr) {
    x = std::move(best);
    rr = best_rr;
  }
  const double rel = std::sqrt(rr) / nb;
  if (residual) *residual = rel;
  if (rel > std::max(tol * 100, 1e-8)) throw std::runtime_error("cg_solve: no convergence");
  return x;
}

namespace {

// Eigen-decomposition of a small real symmetric tridiagonal via the dense
// Hermitian path; sizes here are Lanczos subspace dimensions (<= ~300).
HermitianEig tridiag_eig(const std::vector<double>& alpha, const std::vector<double>& beta) {
  const int m = static_cast<int>(alpha.size());
  Matrix t(m, m);
  for (int i = 0; i < m; ++i) {
    t(i, i) = alpha[i];
    if (i + 1 < m) {
      t(i, i + 1) = beta[i];
      t(i + 1, i) = beta[i];
    }
  }
  return hermitian_eig(std::move(t));
}

}  // namespace

std::vector<cplx> lanczos_matfunc(const std::function<std::vector<cplx>(std::span<const cplx>)>& apply,
                                  std::span<const cplx> b, const std::function<double(double)>& f,
                                  int max_iter, double tol) {
  const int n = static_cast<int>(b.size());
  const double nb = norm2(b);
  if (nb == 0.0) return std::vector<cplx>(n);

  std::vector<std::vector<cplx>> v;
  v.emplace_back(b.begin(), b.end());
  for (auto& c : v[0]) c /= nb;
  std::vector<double> alpha, beta;
  std::vector<cplx> result(n);
  double prev_change = kInf;

  for (int j = 0; j < max_iter; ++j) {
    auto w = apply(v[j]);
    const double aj = dot(v[j], w).real();
    alpha.push_back(aj);
    for (int i = 0; i < n; ++i) w[i] -= aj * v[j][i];
    if (j > 0)
      for (int i = 0; i < n; ++i) w[i] -= beta[j - 1] * v[j - 1][i];
    // full reorthogonalization
    for (const auto& q : v) {
      const cplx c = dot(q, w);
      for (int i = 0; i < n; ++i) w[i] -= c * q[i];
    }
    const double bj = norm2(w);

    // Assemble the current approximation nb * V f(T) e1.
    auto eig = tridiag_eig(alpha, beta);
    const int m = static_cast<int>(alpha.size());
    std::vector<cplx> y(m);
    for (int k = 0; k < m; ++k) {
      const double theta = eig.values[k];
      const double fk = f(theta);
      const cplx w0 = std::conj(eig.vectors(0, k)) * fk;
      for (int i = 0; i < m; ++i) y[i] += eig.vectors(i, k) * w0;
    }
    std::vector<cplx> x(n);
    for (int i = 0; i < m; ++i)
      for (int l = 0; l < n; ++l) x[l] += v[i][l] * (nb * y[i]);

    double change = 0.0;
    for (int l = 0; l < n; ++l) change += std::norm(x[l] - result[l]);
    change = std::sqrt(change) / nb;
    result = std::move(x);
    if (j > 2 && change <= tol && prev_change <= tol) break;
    prev_change = change;

    if (bj <= 1e-14 * nb) break;
    beta.push_back(bj);
    auto next = std::move(w);
    for (auto& c : next) c /= bj;
    v.push_back(std::move(next));
  }
  return result;
}

RitzExtremes lanczos_extremes(const std::function<std::vector<cplx>(std::span<const cplx>)>& apply,
                              int dim, int iters, std::uint64_t seed) {
  auto v0 = random_unit(dim, seed);
  std::vector<std::vector<cplx>> v{std::move(v0)};
  std::vector<double> alpha, beta;
  const int n = dim;
  for (int j = 0; j < iters && j < n; ++j) {
    auto w = apply(v[j]);
    const double aj = dot(v[j], w).real();
    alpha.push_back(aj);
    for (int i = 0; i < n; ++i) w[i] -= aj * v[j][i];
    if (j > 0)
      for (int i = 0; i < n; ++i) w[i] -= beta[j - 1] * v[j - 1][i];
    for (const auto& q : v) {
      const cplx c = dot(q, w);
      for (int i = 0; i < n; ++i) w[i] -= c * q[i];
    }
    const double bj = norm2(w);
    if (bj <= 1e-14) break;
    beta.push_back(bj);
    for (auto& c : w) c /= bj;
    v.push_back(std::move(w));
  }
  auto eig = tridiag_eig(alpha, beta);
  RitzExtremes out;
  out.min = eig.values.front();
  out.max = eig.values.back();
  return out;
}

}  // namespace cdspec
