#include "support/testutil.hpp"

#include "cdspec/linalg.hpp"

using namespace cdspec;

namespace {

Matrix random_matrix(int n, int m, Rng& rng) {
  Matrix a(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = rng.complex_normal();
  return a;
}

Matrix random_hermitian(int n, Rng& rng) {
  Matrix a = random_matrix(n, n, rng);
  Matrix h(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) h(i, j) = 0.5 * (a(i, j) + std::conj(a(j, i)));
  return h;
}

}  // namespace

TEST_CASE("lu solve reproduces right-hand side") {
  Rng rng(1);
  const int n = 40;
  Matrix a = random_matrix(n, n, rng);
  for (int i = 0; i < n; ++i) a(i, i) += 6.0;
  std::vector<cplx> x(n);
  for (auto& v : x) v = rng.complex_normal();
  auto b = matvec(a, x);
  auto f = lu_factor(a);
  auto sol = f.solve(b);
  double err = 0.0;
  for (int i = 0; i < n; ++i) err = std::max(err, std::abs(sol[i] - x[i]));
  CHECK(err < 1e-10);

  auto bstar = adjoint_matvec(a, x);
  auto sol2 = f.solve_adjoint(bstar);
  err = 0.0;
  for (int i = 0; i < n; ++i) err = std::max(err, std::abs(sol2[i] - x[i]));
  CHECK(err < 1e-10);
}

TEST_CASE("inverse times matrix is identity") {
  Rng rng(2);
  const int n = 25;
  Matrix a = random_matrix(n, n, rng);
  for (int i = 0; i < n; ++i) a(i, i) += 4.0;
  Matrix id = matmul(inverse(a), a);
  CHECK(max_abs(id - Matrix::identity(n)) < 1e-10);
}

TEST_CASE("hermitian eigendecomposition residual") {
  Rng rng(3);
  const int n = 30;
  Matrix a = random_hermitian(n, rng);
  auto eig = hermitian_eig(a);
  // A V = V diag(values)
  Matrix av = matmul(a, eig.vectors);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) av(i, j) -= eig.values[j] * eig.vectors(i, j);
  CHECK(frobenius_norm(av) < 1e-9 * std::max(1.0, frobenius_norm(a)));
  for (int j = 1; j < n; ++j) CHECK(eig.values[j - 1] <= eig.values[j] + 1e-12);
  // orthonormal columns
  Matrix vv = adjoint_matmul(eig.vectors, eig.vectors);
  CHECK(max_abs(vv - Matrix::identity(n)) < 1e-10);
}

TEST_CASE("singular value extremes agree with the eigensolver") {
  Rng rng(4);
  const int n = 22;
  Matrix a = random_matrix(n, n, rng);
  for (int i = 0; i < n; ++i) a(i, i) += 3.0;
  Matrix ata = adjoint_matmul(a, a);
  auto eig = hermitian_eig(ata);
  const double smax = std::sqrt(eig.values.back());
  const double smin = std::sqrt(std::max(0.0, eig.values.front()));
  CHECK(testutil::close_rel(largest_singular_value(a), smax, 1e-8));
  CHECK(testutil::close_rel(smallest_singular_value(a), smin, 1e-8));
}

TEST_CASE("cg solves hermitian positive definite systems") {
  Rng rng(5);
  const int n = 35;
  Matrix a = random_matrix(n, n, rng);
  Matrix s = adjoint_matmul(a, a);
  for (int i = 0; i < n; ++i) s(i, i) += 1.0;
  std::vector<cplx> x(n);
  for (auto& v : x) v = rng.complex_normal();
  auto b = matvec(s, x);
  auto apply = [&](std::span<const cplx> v) { return matvec(s, v); };
  auto sol = cg_solve(apply, b, 1e-13);
  double err = 0.0;
  for (int i = 0; i < n; ++i) err = std::max(err, std::abs(sol[i] - x[i]));
  CHECK(err < 1e-9);
}

TEST_CASE("lanczos computes the inverse square root action") {
  Rng rng(6);
  const int n = 30;
  Matrix a = random_matrix(n, n, rng);
  Matrix s = adjoint_matmul(a, a);
  for (int i = 0; i < n; ++i) s(i, i) += 2.0;
  std::vector<cplx> b(n);
  for (auto& v : b) v = rng.complex_normal();
  auto apply = [&](std::span<const cplx> v) { return matvec(s, v); };
  auto x = lanczos_matfunc(apply, b, [](double t) { return 1.0 / std::sqrt(t); }, 200);
  // oracle via the dense eigendecomposition
  auto eig = hermitian_eig(s);
  std::vector<cplx> want(n);
  for (int k = 0; k < n; ++k) {
    cplx coef{};
    for (int i = 0; i < n; ++i) coef += std::conj(eig.vectors(i, k)) * b[i];
    coef /= std::sqrt(eig.values[k]);
    for (int i = 0; i < n; ++i) want[i] += eig.vectors(i, k) * coef;
  }
  double err = 0.0;
  for (int i = 0; i < n; ++i) err = std::max(err, std::abs(x[i] - want[i]));
  CHECK(err < 1e-8);

  auto ext = lanczos_extremes(apply, n, 120, 99);
  CHECK(testutil::close_rel(ext.min, eig.values.front(), 1e-6));
  CHECK(testutil::close_rel(ext.max, eig.values.back(), 1e-6));
}
