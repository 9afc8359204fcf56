#include "support/testutil.hpp"

#include "cdspec/weyl.hpp"

using namespace cdspec;

namespace {

const FuncGrid kGrid = FuncGrid::make(1.0 / 16, 4.0);

std::shared_ptr<const GaborSystem> tight_system(const FuncGrid& grid = kGrid) {
  // modulation extent kept well inside the Nyquist band so that the matrix
  // layer sees no alias-correlated atom pairs
  const double xi_r = 1.0 / (4 * grid.step) - 0.5;
  GaborSystem base(gaussian_window(grid), 0.5, 0.5, grid.radius, true, xi_r);
  return std::make_shared<const GaborSystem>(base.tight_window(), 0.5, 0.5, grid.radius, false,
                                             xi_r);
}

SampledSymbol bump_symbol(const SymbolGrid& sg, double amp) {
  return symbol_from_function(
      sg, [amp](double x, double xi) { return cplx(1.0 + amp * std::exp(-kPi * (x * x + xi * xi))); });
}

double rel_l2(const SampledFunction& a, const SampledFunction& b) {
  double num = 0, den = 0;
  for (int i = 0; i < a.grid.n; ++i) {
    num += std::norm(a.v[i] - b.v[i]);
    den += std::norm(b.v[i]);
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("wigner: gaussian law, marginal, stft identity") {
  auto g = gaussian_window(kGrid);
  SampledFunction zero(kGrid, std::vector<cplx>(kGrid.n));
  auto wz = wigner(zero, g);
  for (const auto& v : wz.v) CHECK(v == cplx{});

  auto w = wigner(g, g);
  for (int i = 0; i < w.grid.nx; i += 5)
    for (int j = 0; j < w.grid.nxi; j += 5) {
      const double want =
          2.0 * std::exp(-2 * kPi * (std::pow(w.grid.x(i), 2) + std::pow(w.grid.xi(j), 2)));
      CHECK(std::abs(w.at(i, j) - cplx(want)) < 1e-12);
    }

  // frequency marginal recovers |f|^2 on the refined grid
  auto f = hermite_function(kGrid, 2);
  auto wf = wigner(f, f);
  auto ff = upsample_fine(f);
  for (int i = 0; i < wf.grid.nx; i += 3) {
    cplx s{};
    for (int j = 0; j < wf.grid.nxi; ++j) s += wf.at(i, j);
    s *= wf.grid.xi_step;
    CHECK(std::abs(s - cplx(std::norm(ff[i]))) < 1e-12);
  }

  // W(f,g)(x,xi) = 2 e^{4 pi i x xi} V_{g-inverted} f(2x, 2xi)
  auto h1 = hermite_function(kGrid, 1);
  std::vector<cplx> ginv(kGrid.n);
  for (int i = 0; i < kGrid.n; ++i) ginv[i] = h1.v[kGrid.n - 1 - i];
  auto v = stft(f, SampledFunction(kGrid, ginv));
  auto wfg = wigner(f, h1);
  const SymbolGrid& sg = wfg.grid;
  for (int i = 0; i < sg.nx; i += 3) {
    const double x = sg.x(i);
    if (std::abs(2 * x) >= sg.x_radius) continue;
    for (int j = 0; j < sg.nxi; j += 3) {
      const double xi = sg.xi(j);
      if (std::abs(2 * xi) >= sg.xi_radius) continue;
      const int i2 = static_cast<int>(std::llround((2 * x + sg.x_radius) / sg.x_step));
      const int j2 = static_cast<int>(std::llround((2 * xi + sg.xi_radius) / sg.xi_step));
      const cplx want = 2.0 * std::polar(1.0, 4 * kPi * x * xi) * v.at(i2, j2);
      CHECK(std::abs(wfg.at(i, j) - want) < 1e-10);
    }
  }
}

TEST_CASE("weyl quantization: identity, self-adjointness, weak pairing") {
  const SymbolGrid sg = SymbolGrid::for_func_grid(kGrid);
  auto one = symbol_from_function(sg, [](double, double) { return cplx(1.0); });
  auto f = hermite_function(kGrid, 3);
  auto idf = weyl_apply(one, f);
  for (int i = 0; i < kGrid.n; ++i) CHECK(std::abs(idf.v[i] - f.v[i]) < 1e-12);

  // real symbols give self-adjoint operators (exactly, entrywise)
  auto a = bump_symbol(sg, 0.3);
  Matrix k = weyl_kernel(a, kGrid);
  for (int i = 0; i < kGrid.n; i += 3)
    for (int j = 0; j < kGrid.n; j += 3)
      CHECK(std::abs(k(i, j) - std::conj(k(j, i))) < 1e-12);

  // weak pairing against the independent Wigner route
  auto h2 = hermite_function(kGrid, 2);
  const cplx lhs = inner(weyl_apply(a, f), h2);
  const cplx rhs = weyl_weak_pairing(a, f, h2);
  CHECK(std::abs(lhs - rhs) < 1e-10);

  // linear-phase symbol acts as a time-frequency shift up to phase
  const double x0 = 0.5, xi0 = 1.0;
  auto phase = symbol_from_function(sg, [&](double x, double xi) {
    return std::polar(1.0, kTwoPi * (x * xi0 - x0 * xi));
  });
  const cplx pair_kernel = inner(weyl_apply(phase, f), h2);
  const cplx pair_wigner = weyl_weak_pairing(phase, f, h2);
  CHECK(std::abs(pair_kernel - pair_wigner) < 1e-10);
  auto shifted = tf_shift(f, x0, xi0);
  CHECK(std::abs(std::abs(pair_kernel) - std::abs(inner(shifted, h2))) < 1e-8);
}

TEST_CASE("quantization transfer between normal and weyl forms") {
  const SymbolGrid sg = SymbolGrid::for_func_grid(kGrid);
  auto constant = symbol_from_function(sg, [](double, double) { return cplx(0.7, 0.1); });
  auto moved = kn_to_weyl(constant);
  for (size_t i = 0; i < moved.v.size(); ++i) CHECK(std::abs(moved.v[i] - constant.v[i]) < 1e-12);

  // round trip on a random smooth band-limited symbol
  Rng rng(3);
  std::vector<std::array<double, 4>> lobes;
  for (int t = 0; t < 5; ++t)
    lobes.push_back({rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.normal(), rng.normal()});
  auto a = symbol_from_function(sg, [&](double x, double xi) {
    cplx s{};
    for (const auto& l : lobes)
      s += cplx(l[2], l[3]) * std::exp(-kPi * ((x - l[0]) * (x - l[0]) + (xi - l[1]) * (xi - l[1])));
    return s;
  });
  auto rt = weyl_to_kn(kn_to_weyl(a));
  double worst = 0;
  for (size_t i = 0; i < a.v.size(); ++i) worst = std::max(worst, std::abs(rt.v[i] - a.v[i]));
  CHECK(worst < 1e-10);

  // the transfer preserves the operator: normal kernel of a equals the weyl
  // kernel of the transferred symbol
  Matrix kkn = kn_kernel(a, kGrid);
  Matrix kw = weyl_kernel(kn_to_weyl(a), kGrid);
  auto f = hermite_function(kGrid, 1);
  CHECK(rel_l2(apply_kernel(kkn, f), apply_kernel(kw, f)) < 1e-12);
}

TEST_CASE("gabor matrix bundle structure") {
  auto tight = tight_system();
  const SymbolGrid sg = SymbolGrid::for_func_grid(kGrid);

  // a == 1 gives M = P; a == 0 gives M = 0 and A = I - P
  auto one = symbol_from_function(sg, [](double, double) { return cplx(1.0); });
  auto b1 = gabor_matrix(one, tight, 1e-6);
  CHECK(max_abs(b1.m.entries() - b1.p.entries()) < 1e-10);
  auto zero_sym = symbol_from_function(sg, [](double, double) { return cplx(0.0); });
  auto b0 = gabor_matrix(zero_sym, tight, 1e-6);
  CHECK(max_abs(b0.m.entries()) < 1e-14);
  Matrix want_a = Matrix::identity(b0.p.entries().rows()) - b0.p.entries();
  CHECK(max_abs(b0.a.entries() - want_a) < 1e-14);

  // non-tight systems are refused
  auto plain = std::make_shared<const GaborSystem>(gaussian_window(kGrid), 0.5, 0.5, 4.0, true, 1.0);
  CHECK_THROWS_AS(gabor_matrix(one, plain), std::invalid_argument);
  // an aliasing modulation span is refused even before the tightness check
  auto wide = std::make_shared<const GaborSystem>(gaussian_window(kGrid), 0.5, 0.5, 4.0, true,
                                                  7.5);
  CHECK_THROWS_AS(gabor_matrix(one, wide, kInf), std::invalid_argument);

  // projection identities on the interior block
  auto a = bump_symbol(sg, 0.3);
  auto bundle = gabor_matrix(a, tight, 1e-6);
  {
    CdMatrix p2(bundle.p.row_set_ptr(), bundle.p.col_set_ptr(),
                matmul(bundle.p.entries(), bundle.p.entries()) - bundle.p.entries());
    auto pin = interior_block(p2, 2.0);
    auto pref = interior_block(bundle.p, 2.0);
    CHECK(frobenius_norm(pin.entries()) / frobenius_norm(pref.entries()) < 2e-3);
  }
  {
    CdMatrix pm(bundle.p.row_set_ptr(), bundle.p.col_set_ptr(),
                matmul(bundle.p.entries(), bundle.m.entries()) - bundle.m.entries());
    CdMatrix mp(bundle.p.row_set_ptr(), bundle.p.col_set_ptr(),
                matmul(bundle.m.entries(), bundle.p.entries()) - bundle.m.entries());
    auto pm_in = interior_block(pm, 2.0);
    auto mp_in = interior_block(mp, 2.0);
    auto m_in = interior_block(bundle.m, 2.0);
    CHECK(frobenius_norm(pm_in.entries()) / frobenius_norm(m_in.entries()) < 2e-3);
    CHECK(frobenius_norm(mp_in.entries()) / frobenius_norm(m_in.entries()) < 2e-3);
  }

  // projection range: P fixes analysis sequences of interior functions
  {
    auto f = hermite_function(kGrid, 1);
    auto c = tight->analysis(f);
    auto pc = matvec(bundle.p.entries(), c.values);
    double num = 0, den = 0;
    for (size_t i = 0; i < pc.size(); ++i) {
      num += std::norm(pc[i] - c.values[i]);
      den += std::norm(c.values[i]);
    }
    CHECK(std::sqrt(num / den) < 1e-4);

    // a random sequence has mass outside the range
    Rng rng(7);
    std::vector<cplx> rv(c.size());
    for (auto& v : rv) v = rng.complex_normal();
    auto prv = matvec(bundle.p.entries(), rv);
    CHECK(lp_quasinorm(std::span<const cplx>(prv), 2.0) <
          lp_quasinorm(std::span<const cplx>(rv), 2.0));
  }

  // coefficient operator identity C_g(a^w f) = M(a) C_g f for interior f
  {
    auto f = hermite_function(kGrid, 0);
    auto awf = weyl_apply(a, f);
    auto lhs = tight->analysis(awf);
    auto rhs = matvec(bundle.m.entries(), tight->analysis(f).values);
    double num = 0, den = 0;
    for (size_t i = 0; i < rhs.size(); ++i) {
      num += std::norm(lhs.values[i] - rhs[i]);
      den += std::norm(rhs[i]);
    }
    CHECK(std::sqrt(num / den) < 1e-5);
  }

  // gram decay: the projection envelope decays at least polynomially
  {
    auto ad = almost_diag_envelope(bundle.p, 0.5);
    const Envelope& env = ad.env;
    const double at0 = env.value_at(std::vector<double>{0.0, 0.0});
    const double at2 = env.value_at(std::vector<double>{2.0, 0.0});
    const double at4 = env.value_at(std::vector<double>{4.0, 0.0});
    CHECK(at0 > at2);
    CHECK(at2 > at4);
    CHECK(at4 < at0 * std::pow(1.0 + 4.0, -4.0));
  }
}

TEST_CASE("almost diagonalization of gaussian-symbol operators") {
  auto tight = tight_system();
  const SymbolGrid sg = SymbolGrid::for_func_grid(kGrid);
  auto bundle = gabor_matrix(
      symbol_from_function(sg, [](double x, double xi) { return cplx(std::exp(-kPi * (x * x + xi * xi))); }),
      tight, 1e-6);
  auto ident = almost_diag_envelope(CdMatrix::identity(tight->lattice()), 0.5);
  CHECK(ident.quasinorm == doctest::Approx(1.0));

  auto ad = almost_diag_envelope(bundle.m, 0.5);
  CHECK(std::isfinite(ad.quasinorm));
  CHECK(ad.quasinorm > 0.0);
  CHECK(ad.fit_rate > 0.5);

  // off-lattice probes stay consistent with the lattice envelope scale
  Rng rng(11);
  const auto& grid = tight->window().grid;
  auto kern = weyl_kernel(
      symbol_from_function(sg, [](double x, double xi) { return cplx(std::exp(-kPi * (x * x + xi * xi))); }),
      grid);
  double worst = 0.0;
  for (int t = 0; t < 12; ++t) {
    const double wx = rng.uniform(-1.0, 1.0), wxi = rng.uniform(-1.0, 1.0);
    const double zx = rng.uniform(-1.0, 1.0), zxi = rng.uniform(-1.0, 1.0);
    auto pw = tf_shift(tight->window(), wx, wxi);
    auto pz = tf_shift(tight->window(), zx, zxi);
    const double val = std::abs(inner(apply_kernel(kern, pz), pw));
    const std::vector<double> diff{wx - zx, wxi - zxi};
    // envelope of the nearest lattice bin, inflated by the neighbour bins
    double cap = 0.0;
    for (double dx : {-0.5, 0.0, 0.5})
      for (double dxi : {-0.5, 0.0, 0.5}) {
        const std::vector<double> probe{diff[0] + dx, diff[1] + dxi};
        cap = std::max(cap, ad.env.value_at(probe));
      }
    if (cap > 0) worst = std::max(worst, val / cap);
  }
  CHECK(worst < 3.0);
}

TEST_CASE("weyl inversion round trip on a bump perturbation") {
  auto tight = tight_system();
  const SymbolGrid sg = SymbolGrid::for_func_grid(kGrid);

  // constant symbol inverts to the constant on the interior
  {
    auto one = symbol_from_function(sg, [](double, double) { return cplx(1.0); });
    auto inv = invert_weyl(one, tight, 1e-12, true, 1e-6);
    double worst = 0;
    for (int i = 0; i < sg.nx; ++i)
      for (int j = 0; j < sg.nxi; ++j) {
        if (std::abs(sg.x(i)) > 1.5 || std::abs(sg.xi(j)) > 1.5) continue;
        worst = std::max(worst, std::abs(inv.b.at(i, j) - cplx(1.0)));
      }
    CHECK(worst < 1e-3);  // coverage-gap scale at this small box
  }

  auto a = bump_symbol(sg, 0.3);
  auto inv = invert_weyl(a, tight, 1e-12, true, 1e-6);
  CHECK(inv.condition < 2.0);

  Matrix ka = weyl_kernel(a, kGrid);
  Matrix kb = weyl_kernel(inv.b, kGrid);
  for (int n = 0; n < 3; ++n) {
    auto f = hermite_function(kGrid, n);
    auto round = apply_kernel(ka, apply_kernel(kb, f));
    CHECK(rel_l2(round, f) < 1e-3);
  }

  // M(b) M(a) recovers the projection on the interior block
  CdMatrix prod(inv.m_b.row_set_ptr(), inv.m_b.col_set_ptr(),
                matmul(inv.m_b.entries(), inv.bundle.m.entries()) - inv.bundle.p.entries());
  auto prod_in = interior_block(prod, 2.0);
  auto p_in = interior_block(inv.bundle.p, 2.0);
  CHECK(frobenius_norm(prod_in.entries()) / frobenius_norm(p_in.entries()) < 1e-4);

  // inverse inherits the almost-diagonal envelope class
  auto ad = almost_diag_envelope(interior_block(inv.m_b, 1.0), 0.5);
  CHECK(std::isfinite(ad.quasinorm));
  CHECK(ad.fit_rate > 0.5);
}

TEST_CASE("frame-type operators through their normal symbols") {
  auto tight = tight_system();
  const auto& tw = tight->window();

  // tight system: the symbol is the constant one on the interior
  auto sym = frame_operator_symbol(tw, tw, 0.5, 0.5, 4.0);
  double dev = 0;
  for (int i = 0; i < sym.grid.nx; ++i)
    for (int j = 0; j < sym.grid.nxi; ++j) {
      if (std::abs(sym.grid.x(i)) > 1.5 || std::abs(sym.grid.xi(j)) > 1.5) continue;
      dev = std::max(dev, std::abs(sym.at(i, j) - cplx(1.0)));
    }
  CHECK(dev < 5e-4);

  // operator reconstructed from the symbol matches the frame operator; the
  // displayed sum uses g1 for synthesis and g2 for analysis
  auto g1 = hermite_function(kGrid, 1);
  auto g2 = gaussian_window(kGrid);
  auto sym12 = frame_operator_symbol(g1, g2, 0.5, 0.5, 4.0);
  Matrix op = weyl_kernel(kn_to_weyl(sym12), kGrid);
  GaborSystem s1(g1, 0.5, 0.5, 4.0, false), s2(g2, 0.5, 0.5, 4.0, false);
  for (int n = 0; n < 3; ++n) {
    auto f = hermite_function(kGrid, n);
    auto got = apply_kernel(op, f);
    auto want = s1.synthesis(Seq(s1.lattice(), s2.analysis(f).values));
    CHECK(rel_l2(got, want) < 1e-4);
  }

  // envelope class of the associated gabor matrix
  auto bundle = gabor_matrix(kn_to_weyl(sym), tight, 1e-6);
  auto ad = almost_diag_envelope(bundle.m, 0.5);
  CHECK(std::isfinite(ad.quasinorm));
  CHECK(ad.quasinorm > 0.0);
}
