#include "support/testutil.hpp"

#include "cdspec/gabor.hpp"

using namespace cdspec;

namespace {
const FuncGrid kGrid = FuncGrid::make(1.0 / 8, 4.0);
}

TEST_CASE("grids and windows") {
  CHECK(kGrid.n == 65);
  CHECK(kGrid.point(0) == -4.0);
  CHECK(kGrid.point(kGrid.n - 1) == 4.0);
  CHECK_THROWS_AS(FuncGrid::make(1.0 / 8, 4.03), std::invalid_argument);

  auto g = gaussian_window(kGrid);
  CHECK(l2_norm(g) == doctest::Approx(1.0).epsilon(1e-12));

  for (int n = 0; n < 5; ++n) {
    auto hn = hermite_function(kGrid, n);
    CHECK(l2_norm(hn) == doctest::Approx(1.0).epsilon(1e-12));
    for (int m = 0; m < n; ++m) {
      auto hm = hermite_function(kGrid, m);
      CHECK(std::abs(inner(hn, hm)) < 1e-10);
    }
  }
}

TEST_CASE("sampled function csv round trip") {
  auto f = hermite_function(kGrid, 2);
  const std::string path = "/tmp/cdspec_function_roundtrip.csv";
  save_sampled_function(f, path);
  auto back = load_sampled_function(path);
  REQUIRE(back.grid == f.grid);
  double dev = 0;
  for (int i = 0; i < kGrid.n; ++i) dev = std::max(dev, std::abs(back.v[i] - f.v[i]));
  CHECK(dev < 1e-15);
}

TEST_CASE("time-frequency shifts") {
  auto f = hermite_function(kGrid, 2);
  auto same = tf_shift(f, 0.0, 0.0);
  for (int i = 0; i < kGrid.n; ++i) CHECK(same.v[i] == f.v[i]);

  auto moved = tf_shift(f, 0.5, 0.0);
  for (int i = 4; i < kGrid.n; ++i)
    CHECK(std::abs(moved.v[i] - f.v[i - 4]) < 1e-15);

  // isometry for interior shifts
  for (double x : {0.25, 1.0}) {
    for (double xi : {0.0, 0.7, 2.0}) {
      auto p = tf_shift(f, x, xi);
      CHECK(std::abs(l2_norm(p) - l2_norm(f)) < 1e-12);
    }
  }

  double snap = 0.0;
  tf_shift(f, 0.3, 0.0, &snap);
  CHECK(snap == doctest::Approx(0.05));
}

TEST_CASE("stft: zeros, gaussian law, covariance") {
  auto g = gaussian_window(kGrid);
  SampledFunction zero(kGrid, std::vector<cplx>(kGrid.n));
  auto vz = stft(zero, g);
  CHECK(mixed_quasinorm(vz, 2.0, 2.0) == 0.0);

  auto v = stft(g, g);
  for (int i = 0; i < v.grid.nx; i += 5)
    for (int j = 0; j < v.grid.nxi; j += 5) {
      const double want = std::exp(-kPi * (std::pow(v.grid.x(i), 2) + std::pow(v.grid.xi(j), 2)) / 2);
      CHECK(std::abs(std::abs(v.at(i, j)) - want) < 1e-12);
    }

  // covariance: |V_g(pi(w) f)(z)| = |V_g f(z - w)| at grid-aligned w
  auto f = hermite_function(kGrid, 1);
  auto vf = stft(f, g);
  const double wx = 0.5, wxi = 1.0;
  auto vs = stft(tf_shift(f, wx, wxi), g);
  const int dx = static_cast<int>(std::llround(wx / v.grid.x_step));
  const int dxi = static_cast<int>(std::llround(wxi / v.grid.xi_step));
  for (int i = dx; i < v.grid.nx; i += 3)
    for (int j = dxi; j < v.grid.nxi; j += 3)
      CHECK(std::abs(std::abs(vs.at(i, j)) - std::abs(vf.at(i - dx, j - dxi))) < 1e-10);
}

TEST_CASE("modulation quasi-norms") {
  auto g = gaussian_window(kGrid);
  SampledFunction zero(kGrid, std::vector<cplx>(kGrid.n));
  CHECK(modulation_quasinorm(zero, g, 0.5, 0.5) == 0.0);

  // orthogonality relations: the M^2 norm is the L^2 norm
  for (int n = 0; n < 4; ++n) {
    auto f = hermite_function(kGrid, n);
    CHECK(modulation_quasinorm(f, g, 2.0, 2.0) ==
          doctest::Approx(l2_norm(f)).epsilon(1e-10));
  }

  // embeddings: nonincreasing in each exponent on the hermite family
  for (int n = 0; n < 4; ++n) {
    auto f = hermite_function(kGrid, n);
    auto v = stft(f, g);
    const double m_half = mixed_quasinorm(v, 0.5, 0.5);
    const double m_one = mixed_quasinorm(v, 1.0, 1.0);
    const double m_two = mixed_quasinorm(v, 2.0, 2.0);
    const double m_inf = mixed_quasinorm(v, kInf, kInf);
    CHECK(m_one <= m_half * (1 + 1e-12));
    CHECK(m_two <= m_one * (1 + 1e-12));
    CHECK(m_inf <= m_two * (1 + 1e-12));
    CHECK(mixed_quasinorm(v, 1.0, 2.0) <= mixed_quasinorm(v, 0.5, 1.0) * (1 + 1e-12));
    CHECK(mixed_quasinorm(v, 2.0, 1.0) <= mixed_quasinorm(v, 1.0, 0.5) * (1 + 1e-12));
  }
  CHECK_THROWS_AS(modulation_quasinorm(g, g, -1.0, 2.0), std::invalid_argument);
}

TEST_CASE("gabor analysis and synthesis") {
  auto g = gaussian_window(kGrid);
  GaborSystem sys(g, 0.5, 0.5, 4.0);
  Rng rng(5);

  // atom picks up the window normalization squared at its own site
  const double* z0 = nullptr;
  int at0 = -1;
  for (int a = 0; a < sys.lattice()->size(); ++a) {
    const double* z = sys.lattice()->point(a);
    if (z[0] == 1.0 && z[1] == 0.5) {
      z0 = z;
      at0 = a;
    }
  }
  REQUIRE(z0 != nullptr);
  auto atom = tf_shift(sys.window(), z0[0], z0[1]);
  auto coef = sys.analysis(atom);
  CHECK(std::abs(coef.values[at0] - cplx(1.0)) < 1e-10);

  // adjointness <D_g c, f> = <c, C_g f>
  auto f = hermite_function(kGrid, 3);
  std::vector<cplx> cv(sys.lattice()->size());
  for (auto& v : cv) v = rng.complex_normal();
  Seq c(sys.lattice(), cv);
  cplx lhs = inner(sys.synthesis(c), f);
  auto cgf = sys.analysis(f);
  cplx rhs{};
  for (int i = 0; i < c.size(); ++i) rhs += c.values[i] * std::conj(cgf.values[i]);
  CHECK(std::abs(lhs - rhs) < 1e-10);

  // coefficient norms against the modulation quasi-norm: bounded stable ratio
  for (double p : {0.5, 1.0, 2.0}) {
    const double density_factor = std::pow(4.0, 1.0 / p);
    for (int n = 0; n < 4; ++n) {
      auto fn = hermite_function(kGrid, n);
      const double ratio =
          lp_quasinorm(sys.analysis(fn), p) / modulation_quasinorm(fn, g, p, p);
      CHECK(ratio / density_factor > 0.85);
      CHECK(ratio / density_factor < 1.10);
    }
  }

  CHECK_THROWS_AS(GaborSystem(g, 0.3, 0.5, 4.0), std::invalid_argument);
}

TEST_CASE("frame bounds distinguish frames from the critical system") {
  auto g = gaussian_window(kGrid);
  GaborSystem half(g, 0.5, 0.5, 4.0);
  auto fb = half.frame_bounds();
  CHECK(fb.lower > 3.5);
  CHECK(fb.upper < 4.5);
  CHECK(fb.ratio() < 1.05);

  // at desk-size sections the critical-density failure shows up as a widening
  // bound ratio rather than an exact zero
  GaborSystem critical(g, 1.0, 1.0, 4.0);
  auto fc = critical.frame_bounds();
  CHECK(fc.lower < 0.45 * fc.upper);
  CHECK(fc.ratio() > 2.5);
  CHECK(fb.ratio() < 1.05);
  CHECK_FALSE(critical.is_tight(1e-8));
}

TEST_CASE("dual window reconstructs and both expansions agree") {
  auto g = gaussian_window(kGrid);
  GaborSystem sys(g, 0.5, 0.5, 4.0);
  double res = 0.0;
  auto gamma = sys.dual_window(1e-10, &res);
  CHECK(res < 1e-6);
  GaborSystem dual_sys(gamma, 0.5, 0.5, 4.0, false);

  for (int n = 0; n < 3; ++n) {
    auto f = hermite_function(kGrid, n);
    // f = D_g C_gamma f
    auto rec1 = sys.synthesis(Seq(sys.lattice(), dual_sys.analysis(f).values));
    // f = D_gamma C_g f
    auto rec2 = dual_sys.synthesis(Seq(sys.lattice(), sys.analysis(f).values));
    double n1 = 0, n2 = 0, n12 = 0;
    for (int i = 0; i < kGrid.n; ++i) {
      n1 += std::norm(rec1.v[i] - f.v[i]);
      n2 += std::norm(rec2.v[i] - f.v[i]);
      n12 += std::norm(rec1.v[i] - rec2.v[i]);
    }
    CHECK(std::sqrt(n1 * kGrid.step) / l2_norm(f) < 2e-5);
    CHECK(std::sqrt(n2 * kGrid.step) / l2_norm(f) < 2e-5);
    CHECK(std::sqrt(n12 * kGrid.step) / l2_norm(f) < 5e-5);
  }

  // membership shadow: dual quasi-norms stable under grid refinement
  FuncGrid fine = FuncGrid::make(1.0 / 16, 4.0);
  GaborSystem sys_fine(gaussian_window(fine), 0.5, 0.5, 4.0);
  auto gamma_fine = sys_fine.dual_window();
  for (double p : {0.5, 1.0}) {
    const double coarse = modulation_quasinorm(gamma, g, p, p);
    const double refined = modulation_quasinorm(gamma_fine, gaussian_window(fine), p, p);
    CHECK(std::abs(refined - coarse) / coarse < 0.05);
  }
}

TEST_CASE("tight window: ratio, parseval, dual of a tight system") {
  auto g = gaussian_window(kGrid);
  GaborSystem sys(g, 0.5, 0.5, 4.0);
  auto tw = sys.tight_window();
  GaborSystem tight(tw, 0.5, 0.5, 4.0, false);
  auto fb = tight.frame_bounds();
  CHECK(fb.ratio() - 1.0 <= 1e-7);
  CHECK(tight.is_tight(1e-6));

  // Parseval with constant one for interior functions
  for (int n = 0; n < 3; ++n) {
    auto f = hermite_function(kGrid, n);
    auto c = tight.analysis(f);
    double s = 0;
    for (const auto& z : c.values) s += std::norm(z);
    CHECK(std::abs(s - std::pow(l2_norm(f), 2)) < 1e-7);
  }

  // for S = Id the canonical dual is the window itself
  auto gamma = tight.dual_window();
  double dev = 0;
  for (int i = 0; i < kGrid.n; ++i) dev = std::max(dev, std::abs(gamma.v[i] - tw.v[i]));
  CHECK(dev < 2e-5);  // section-boundary scale at this small box
}
