#include "cdspec/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

#include "cdspec/cdmatrix.hpp"
#include "cdspec/envelope.hpp"
#include "cdspec/gabor.hpp"
#include "cdspec/rng.hpp"
#include "cdspec/sequence.hpp"
#include "cdspec/stability.hpp"
#include "cdspec/weyl.hpp"

namespace cdspec {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::shared_ptr<const PointSet> integer_section(double radius) {
  RectangularLattice lat{1, {1.0}, radius};
  return std::make_shared<const PointSet>(enumerate_lattice(lat));
}

CdMatrix pinned_instance(double radius, double amp = 0.1, double rate = 1.0) {
  return CdMatrix::toeplitz(integer_section(radius), [=](const std::vector<double>& d) {
    const double dist = std::abs(d[0]);
    return cplx(dist == 0.0 ? 1.0 + amp : amp * std::exp(-rate * dist));
  });
}

CdMatrix random_decaying_200(Rng& rng) {
  // integer section {0, ..., 199}: exactly 200 points
  static const auto pts = [] {
    std::vector<double> flat(200);
    for (int i = 0; i < 200; ++i) flat[i] = static_cast<double>(i);
    auto p = std::make_shared<PointSet>(1, std::move(flat), 199.0);
    p->set_lattice_steps({1.0});
    return std::shared_ptr<const PointSet>(p);
  }();
  const double rate = rng.uniform(0.2, 1.0);
  const int n = pts->size();
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      m(i, j) = rng.complex_normal() * std::exp(-rate * std::abs(double(i - j)));
  return CdMatrix(pts, pts, std::move(m));
}

// ---------------------------------------------------------------------------

CriterionResult criterion1() {
  CriterionResult r{1, "quasi-norm laws", false, 0, 0, 0, ""};
  const auto t0 = Clock::now();
  Rng rng(101);
  auto idx = integer_section(32.0);
  long violations = 0;
  const double slack = 1e-12;
  for (double p : {0.3, 0.5, 0.8, 1.0}) {
    for (int trial = 0; trial < 1000; ++trial) {
      Seq a = random_seq(idx, rng);
      // (i)  ||a||_1^p <= ||a||_p^p
      if (abs_pow(lp_quasinorm(a, 1.0), p) > abs_pow(lp_quasinorm(a, p), p) * (1 + slack))
        ++violations;
      // (ii) quasi-triangle over a random family
      Seq b1 = random_seq(idx, rng);
      Seq b2 = random_seq(idx, rng);
      std::vector<cplx> sum(a.values);
      for (int i = 0; i < a.size(); ++i) sum[i] += b1.values[i] + b2.values[i];
      const double lhs = abs_pow(lp_quasinorm(std::span<const cplx>(sum), p), p);
      const double rhs = abs_pow(lp_quasinorm(a, p), p) + abs_pow(lp_quasinorm(b1, p), p) +
                         abs_pow(lp_quasinorm(b2, p), p);
      if (lhs > rhs * (1 + slack)) ++violations;
      // (iii) Young inequality for the convolution
      if (trial % 10 == 0) {
        Seq s1 = random_seq(idx, rng);
        Seq s2 = random_seq(idx, rng);
        for (auto& v : s1.values)
          if (rng.uniform01() < 0.7) v = 0.0;
        for (auto& v : s2.values)
          if (rng.uniform01() < 0.7) v = 0.0;
        Seq conv = convolve(s1, s2);
        if (lp_quasinorm(conv, p) >
            lp_quasinorm(s1, p) * lp_quasinorm(s2, p) * (1 + slack) + 1e-300)
          ++violations;
      }
    }
  }
  r.seconds = seconds_since(t0);
  r.value = static_cast<double>(violations);
  r.threshold = 0.0;
  r.pass = violations == 0 && r.seconds < 10.0;
  r.detail = "runtime " + std::to_string(r.seconds) + "s (limit 10)";
  return r;
}

CriterionResult criterion2() {
  CriterionResult r{2, "Schur tests", false, 0, 0, 0, ""};
  const auto t0 = Clock::now();
  Rng rng(202);
  long violations = 0;
  const double slack = 1e-12;
  for (int inst = 0; inst < 100; ++inst) {
    CdMatrix a = random_decaying_200(rng);
    const int n = a.col_set().size();
    double k1 = 0, k2 = 0;
    for (int j = 0; j < n; ++j) {
      double s = 0;
      for (int i = 0; i < n; ++i) s += std::abs(a.entries()(i, j));
      k1 = std::max(k1, s);
    }
    for (int i = 0; i < n; ++i) {
      double s = 0;
      for (int j = 0; j < n; ++j) s += std::abs(a.entries()(i, j));
      k2 = std::max(k2, s);
    }
    const double sp_half = a.sp_norm(0.5);
    std::vector<cplx> b(n);
    for (int t = 0; t < 200; ++t) {
      for (auto& v : b) v = rng.complex_normal();
      auto ab = matvec(a.entries(), b);
      const std::span<const cplx> bs(b), abs_(ab);
      // p >= 1 bounds K1^{1/p'} K2^{1/p}
      for (double p : {1.0, 2.0, kInf}) {
        const double pc = conjugate_exponent(p);
        const double bound = std::pow(k1, is_inf(pc) ? 0.0 : 1.0 / pc) *
                             std::pow(k2, is_inf(p) ? 0.0 : 1.0 / p);
        if (lp_quasinorm(abs_, p) > bound * lp_quasinorm(bs, p) * (1 + slack)) ++violations;
      }
      // p <= 1 bound ||A||_{S-p}^{1/p}
      if (lp_quasinorm(abs_, 0.5) >
          std::pow(sp_half, 2.0) * lp_quasinorm(bs, 0.5) * (1 + slack))
        ++violations;
    }
  }
  r.seconds = seconds_since(t0);
  r.value = static_cast<double>(violations);
  r.threshold = 0.0;
  r.pass = violations == 0 && r.seconds < 60.0;
  r.detail = "runtime " + std::to_string(r.seconds) + "s (limit 60)";
  return r;
}

CriterionResult criterion3() {
  CriterionResult r{3, "boundedness bound", false, 0, 0, 0, ""};
  const auto t0 = Clock::now();
  Rng rng(303);
  long violations = 0;
  double worst_margin = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    CdMatrix a = random_decaying_200(rng);
    for (double q : {0.5, 1.0, 2.0, kInf}) {
      const auto bound = operator_norm_bound(a, q, 0.5);
      const double measured = empirical_operator_norm(a, q, 50, rng);
      worst_margin = std::max(worst_margin, measured / bound.bound);
      if (measured > bound.bound * (1 + 1e-12)) ++violations;
    }
  }
  r.seconds = seconds_since(t0);
  r.value = static_cast<double>(violations);
  r.threshold = 0.0;
  r.pass = violations == 0;
  r.detail = "worst measured/bound = " + std::to_string(worst_margin);
  return r;
}

CriterionResult criterion4() {
  CriterionResult r{4, "stability transfer", false, 0, 0, 0, ""};
  const auto t0 = Clock::now();
  CdMatrix a = pinned_instance(64.0);
  const double c0 = smallest_singular_value(a.entries()) * 0.999;

  TransferOptions opts;
  opts.lower_bound_starts = 1000;
  opts.lower_bound_iters = 200;
  bool ok = c0 > 0;
  double worst_ratio = 0.0;  // max C_q / measured; must stay <= 1
  std::string branches;

  for (double q : {0.5, 1.0, kInf}) {
    auto cert = stability_transfer(a, 2.0, c0, q, opts);
    ok = ok && cert.constant > 0 && cert.schur_budget < 0.5;
    Rng rng(404 + static_cast<int>(q * 10));
    const double measured = empirical_lower_bound(a, q, 1000, 200, rng);
    ok = ok && measured >= cert.constant;
    worst_ratio = std::max(worst_ratio, cert.constant / measured);
    branches += cert.branch + " ";
  }

  // remaining proof branches from the quasi-Banach source on a gentler
  // instance whose budget clears the epsilon floor
  CdMatrix gentle = pinned_instance(64.0, 0.05, 2.0);
  Rng rg(505);
  TransferOptions gopts;
  gopts.lower_bound_starts = 300;
  gopts.lower_bound_iters = 200;
  const double c0_half = empirical_lower_bound(gentle, 0.5, 300, 200, rg) * 0.9;
  for (double q : {0.3, 1.0, kInf}) {
    auto cert = stability_transfer(gentle, 0.5, c0_half, q, gopts);
    ok = ok && cert.constant > 0 && cert.schur_budget < 0.5;
    Rng rng(606 + static_cast<int>(q * 10));
    const double measured = empirical_lower_bound(gentle, q, 300, 200, rng);
    ok = ok && measured >= cert.constant;
    worst_ratio = std::max(worst_ratio, cert.constant / measured);
    branches += cert.branch + " ";
  }

  r.seconds = seconds_since(t0);
  r.value = worst_ratio;
  r.threshold = 1.0;
  r.pass = ok && r.seconds < 300.0;
  r.detail = "branches: " + branches + "| runtime " + std::to_string(r.seconds) + "s (limit 300)";
  return r;
}

CriterionResult criterion5() {
  CriterionResult r{5, "inverse envelope", false, 0, 0, 0, ""};
  const auto t0 = Clock::now();
  bool ok = true;
  double amalgams[2] = {0, 0};
  double worst_ratio = 0.0;
  int idx = 0;
  for (double radius : {64.0, 128.0}) {
    CdMatrix a = pinned_instance(radius);
    auto inv = neumann_inverse_envelope(a, 2.0, 0.5);
    ok = ok && inv.budget < 0.5;
    auto rep = verify_inverse_envelope(a, inv.h_tilde, 0.5, 0.5);
    ok = ok && rep.pass;
    worst_ratio = std::max(worst_ratio, rep.max_violation_ratio);
    amalgams[idx++] = amalgam_quasinorm(inv.h_tilde.pow(2.0), 0.5);
  }
  const double drift = std::abs(amalgams[1] - amalgams[0]) / amalgams[0];
  ok = ok && drift <= 0.10;
  r.seconds = seconds_since(t0);
  r.value = worst_ratio;
  r.threshold = 1.0;
  r.pass = ok;
  r.detail = "amalgam drift " + std::to_string(100 * drift) + "%";
  return r;
}

CriterionResult criterion6() {
  CriterionResult r{6, "Gabor layer", false, 0, 0, 0, ""};
  const auto t0 = Clock::now();
  FuncGrid grid = FuncGrid::make(1.0 / 16, 8.0);
  auto window = gaussian_window(grid);
  GaborSystem sys(window, 0.5, 0.5, 8.0);

  double dual_res = 0.0;
  auto gamma = sys.dual_window(1e-10, &dual_res);
  GaborSystem dual_sys(gamma, 0.5, 0.5, 8.0, false);
  double worst_rec = 0.0;
  for (int n = 0; n < 5; ++n) {
    auto f = hermite_function(grid, n);
    auto rec = sys.synthesis(Seq(sys.lattice(), dual_sys.analysis(f).values));
    double num = 0;
    for (int i = 0; i < grid.n; ++i) num += std::norm(rec.v[i] - f.v[i]);
    worst_rec = std::max(worst_rec, std::sqrt(num * grid.step) / l2_norm(f));
  }

  auto tw = sys.tight_window();
  GaborSystem tight(tw, 0.5, 0.5, 8.0, false);
  const double tight_ratio = tight.frame_bounds().ratio() - 1.0;
  double worst_parseval = 0.0;
  for (int n = 0; n < 5; ++n) {
    auto f = hermite_function(grid, n);
    auto c = tight.analysis(f);
    double s = 0;
    for (const auto& z : c.values) s += std::norm(z);
    worst_parseval =
        std::max(worst_parseval, std::abs(s - std::pow(l2_norm(f), 2)) / std::pow(l2_norm(f), 2));
  }

  r.seconds = seconds_since(t0);
  // normalize each sub-check against its bound; the worst one decides
  const double m1 = worst_rec / 1e-6, m2 = tight_ratio / 1e-8, m3 = worst_parseval / 1e-8,
               m4 = dual_res / 1e-10;
  r.value = std::max({m1, m2, m3, m4});
  r.threshold = 1.0;
  r.pass = r.value <= 1.0;
  r.detail = "reconstruction " + std::to_string(worst_rec) + ", tight ratio-1 " +
             std::to_string(tight_ratio) + ", parseval " + std::to_string(worst_parseval) +
             ", dual residual " + std::to_string(dual_res);
  return r;
}

CriterionResult criterion7() {
  CriterionResult r{7, "almost diagonalization", false, 0, 0, 0, ""};
  const auto t0 = Clock::now();
  double quasinorms[2] = {0, 0};
  double rates[2] = {0, 0};
  double dominance[2] = {0, 0};
  int idx = 0;
  for (double h : {1.0 / 16, 1.0 / 32}) {
    FuncGrid grid = FuncGrid::make(h, 8.0);
    GaborSystem base(gaussian_window(grid), 0.5, 0.5, 8.0, true, 5.5);
    auto tight =
        std::make_shared<const GaborSystem>(base.tight_window(), 0.5, 0.5, 8.0, false, 5.5);
    SymbolGrid sg = SymbolGrid::for_func_grid(grid);
    auto a = symbol_from_function(
        sg, [](double x, double xi) { return cplx(std::exp(-kPi * (x * x + xi * xi))); });
    auto bundle = gabor_matrix(a, tight, 1e-6);
    auto ad = almost_diag_envelope(bundle.m, 0.5);
    quasinorms[idx] = ad.quasinorm;
    rates[idx] = ad.fit_rate;
    // the fitted exponential dominates the profile up to a bounded factor
    double worst = 0.0;
    const Envelope& env = ad.env;
    for (size_t flat = 0; flat < env.node_count(); ++flat) {
      const double v = env.values()[flat];
      if (v < 1e-13) continue;
      auto k = env.unflatten(flat);
      double n2 = 0;
      for (int i = 0; i < env.dim(); ++i) {
        const double c = k[i] * env.grid_step();
        n2 += c * c;
      }
      worst = std::max(worst, v / std::exp(ad.fit_log_amp - ad.fit_rate * std::sqrt(n2)));
    }
    dominance[idx] = worst;
    ++idx;
  }
  const double drift = std::abs(quasinorms[1] - quasinorms[0]) / quasinorms[0];
  r.seconds = seconds_since(t0);
  r.value = drift;
  r.threshold = 0.05;
  // the certified exponential bound is C' = e^{fit_log_amp} * dominance; the
  // cap only rejects profiles that are not of exponential type at all
  r.pass = std::isfinite(quasinorms[0]) && std::isfinite(quasinorms[1]) && drift <= 0.05 &&
           rates[0] > 0 && rates[1] > 0 && dominance[0] < 1e3 && dominance[1] < 1e3;
  r.detail = "||h||_{0.5} = " + std::to_string(quasinorms[0]) + " -> " +
             std::to_string(quasinorms[1]) + ", fit rate " + std::to_string(rates[0]) +
             ", dominance factor " + std::to_string(dominance[0]);
  return r;
}

CriterionResult criterion8() {
  CriterionResult r{8, "Weyl inversion round trip", false, 0, 0, 0, ""};
  const auto t0 = Clock::now();
  double quasinorms[2] = {0, 0};
  double roundtrip = 0.0, residual = 0.0, cond = 0.0;
  int idx = 0;
  for (double radius : {6.0, 12.0}) {
    FuncGrid grid = FuncGrid::make(1.0 / 32, radius);
    GaborSystem base(gaussian_window(grid), 0.5, 0.5, radius);
    auto tight =
        std::make_shared<const GaborSystem>(base.tight_window(), 0.5, 0.5, radius, false);
    SymbolGrid sg = SymbolGrid::for_func_grid(grid);
    auto a = symbol_from_function(sg, [](double x, double xi) {
      return cplx(1.0 + 0.3 * std::exp(-kPi * (x * x + xi * xi)));
    });
    const bool base_level = idx == 0;
    auto inv = invert_weyl(a, tight, 1e-12, base_level, 1e-6);
    cond = std::max(cond, inv.condition);
    if (base_level) {
      Matrix ka = weyl_kernel(a, grid);
      Matrix kb = weyl_kernel(inv.b, grid);
      for (int n = 0; n < 3; ++n) {
        auto f = hermite_function(grid, n);
        auto rt = apply_kernel(ka, apply_kernel(kb, f));
        double num = 0;
        for (int i = 0; i < grid.n; ++i) num += std::norm(rt.v[i] - f.v[i]);
        roundtrip = std::max(roundtrip, std::sqrt(num * grid.step) / l2_norm(f));
      }
      CdMatrix prod(inv.m_b.row_set_ptr(), inv.m_b.col_set_ptr(),
                    matmul(inv.m_b.entries(), inv.bundle.m.entries()) - inv.bundle.p.entries());
      residual = frobenius_norm(interior_block(prod, 4.0).entries()) /
                 frobenius_norm(interior_block(inv.bundle.p, 4.0).entries());
    }
    quasinorms[idx++] = almost_diag_envelope(interior_block(inv.m_b, 4.0), 0.5).quasinorm;
  }
  const double drift = std::abs(quasinorms[1] - quasinorms[0]) / quasinorms[0];
  r.seconds = seconds_since(t0);
  const double m1 = roundtrip / 1e-3, m2 = residual / 1e-6, m3 = drift / 0.10;
  r.value = std::max({m1, m2, m3});
  r.threshold = 1.0;
  r.pass = r.value <= 1.0 && std::isfinite(quasinorms[0]) && std::isfinite(quasinorms[1]);
  r.detail = "roundtrip " + std::to_string(roundtrip) + ", interior residual " +
             std::to_string(residual) + ", envelope drift " + std::to_string(100 * drift) +
             "%, cond " + std::to_string(cond);
  return r;
}

CriterionResult criterion9() {
  CriterionResult r{9, "frame-operator symbol", false, 0, 0, 0, ""};
  const auto t0 = Clock::now();
  FuncGrid grid = FuncGrid::make(1.0 / 16, 8.0);
  GaborSystem base(gaussian_window(grid), 0.5, 0.5, 8.0);
  auto tw = base.tight_window();
  GaborSystem tight(tw, 0.5, 0.5, 8.0, false);

  auto sym = frame_operator_symbol(tw, tw, 0.5, 0.5, 8.0);
  double dev = 0.0;
  for (int i = 0; i < sym.grid.nx; ++i)
    for (int j = 0; j < sym.grid.nxi; ++j) {
      if (std::abs(sym.grid.x(i)) > 4.0 || std::abs(sym.grid.xi(j)) > 3.5) continue;
      dev = std::max(dev, std::abs(sym.at(i, j) - cplx(1.0)));
    }

  Matrix op = weyl_kernel(kn_to_weyl(sym), grid);
  double worst_op = 0.0;
  for (int n = 0; n < 3; ++n) {
    auto f = hermite_function(grid, n);
    auto lhs = apply_kernel(op, f);
    auto rhs = tight.frame_operator(f);
    double num = 0, den = 0;
    for (int i = 0; i < grid.n; ++i) {
      num += std::norm(lhs.v[i] - rhs.v[i]);
      den += std::norm(rhs.v[i]);
    }
    worst_op = std::max(worst_op, std::sqrt(num / den));
  }

  // envelope class of the matrix of the reconstructed operator
  GaborSystem clamped(gaussian_window(grid), 0.5, 0.5, 8.0, true, 5.5);
  auto tight_clamped = std::make_shared<const GaborSystem>(clamped.tight_window(), 0.5, 0.5, 8.0,
                                                           false, 5.5);
  auto bundle = gabor_matrix(kn_to_weyl(sym), tight_clamped, 1e-6);
  auto ad = almost_diag_envelope(bundle.m, 0.5);

  r.seconds = seconds_since(t0);
  const double m1 = worst_op / 1e-5, m2 = dev / 1e-4;
  r.value = std::max(m1, m2);
  r.threshold = 1.0;
  r.pass = r.value <= 1.0 && std::isfinite(ad.quasinorm) && ad.quasinorm > 0;
  r.detail = "operator match " + std::to_string(worst_op) + ", constancy dev " +
             std::to_string(dev) + ", ||h||_{0.5} " + std::to_string(ad.quasinorm);
  return r;
}

CriterionResult criterion10() {
  CriterionResult r{10, "localized norm equivalence", false, 0, 0, 0, ""};
  const auto t0 = Clock::now();
  auto pts = integer_section(64.0);
  PartitionOfUnity pou(1, 0.25);
  const double eta = pou.eta();
  Rng rng(1010);
  long violations = 0;
  for (double q : {0.5, 1.0, 2.0}) {
    const double lo = std::pow(eta, -1.0 / q) * (1 - 1e-10);
    const double hi = std::pow(eta, 1.0 / q) * (1 + 1e-10);
    for (int t = 0; t < 500; ++t) {
      Seq c = random_seq(pts, rng);
      auto prof = localized_norm_profile(pou, c, q);
      double s = 0;
      for (double v : prof.norms) s += abs_pow(v, q);
      const double ratio = std::exp(std::log(s) / q) / lp_quasinorm(c, q);
      if (ratio < lo || ratio > hi) ++violations;
    }
  }
  r.seconds = seconds_since(t0);
  r.value = static_cast<double>(violations);
  r.threshold = 0.0;
  r.pass = violations == 0;
  r.detail = "eta = " + std::to_string(eta);
  return r;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(std::ostream& log, int only) {
  using Fn = CriterionResult (*)();
  const Fn criteria[] = {criterion1, criterion2, criterion3, criterion4, criterion5,
                         criterion6, criterion7, criterion8, criterion9, criterion10};
  std::vector<CriterionResult> out;
  for (int i = 0; i < 10; ++i) {
    if (only > 0 && only != i + 1) continue;
    CriterionResult r = criteria[i]();
    out.push_back(r);
    log << (r.pass ? "PASS" : "FAIL") << " criterion " << r.id << " (" << r.name
        << "): value " << r.value << " vs threshold " << r.threshold << " [" << r.seconds
        << "s] " << r.detail << "\n";
    log.flush();
  }
  return out;
}

}  // namespace cdspec
