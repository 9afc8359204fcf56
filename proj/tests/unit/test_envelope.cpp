#include "support/testutil.hpp"

#include <sstream>

#include "cdspec/envelope.hpp"

using namespace cdspec;

namespace {

Envelope exp_envelope(double h, double cover, double rate = 1.0) {
  return Envelope::from_function(1, h, cover,
                                 [rate](const double* x) { return std::exp(-rate * std::abs(x[0])); });
}

// High resolution quadrature oracle for the one-dimensional amalgam norm:
// integral of (sup over |y-x|<=1 of H(y))^{p0} on a grid ten times finer.
double amalgam_oracle_1d(const std::function<double(double)>& f, double p0, double cover,
                         double h_fine) {
  double acc = 0.0;
  for (double x = -cover - 1.5; x <= cover + 1.5; x += h_fine) {
    double sup = 0.0;
    for (double y = std::max(x - 1.0, -cover); y <= std::min(x + 1.0, cover); y += h_fine)
      sup = std::max(sup, f(y));
    acc += abs_pow(sup, p0) * h_fine;
  }
  return std::pow(acc, 1.0 / p0);
}

}  // namespace

TEST_CASE("amalgam norm of the zero envelope and an indicator bump") {
  Envelope zero(1, 0.05, 4.0);
  CHECK(amalgam_quasinorm(zero, 1.0) == 0.0);
  CHECK(amalgam_quasinorm(zero, 0.5) == 0.0);

  const double h = 0.05;
  Envelope ind = Envelope::from_function(
      1, h, 4.0, [](const double* x) { return std::abs(x[0]) <= 1.0 ? 1.0 : 0.0; });
  const double got = amalgam_quasinorm(ind, 1.0);
  CHECK(std::abs(got - 4.0) <= 2 * h + 1e-12);
  // the certified upper variant dominates and stays close
  CHECK(amalgam_quasinorm_upper(ind, 1.0) >= got - 1e-12);
  CHECK(amalgam_quasinorm_upper(ind, 1.0) <= 4.0 + 4 * h);
}

TEST_CASE("amalgam norm of the exponential envelope against quadrature") {
  const double h = 0.02, cover = 18.0;
  Envelope e = exp_envelope(h, cover);
  const double got = amalgam_quasinorm(e, 1.0);
  const double want =
      amalgam_oracle_1d([](double x) { return std::exp(-std::abs(x)); }, 1.0, cover, h / 10);
  // analytic value: integral of exp(-max(0,|x|-1)) = 4
  CHECK(std::abs(want - 4.0) < 0.01);
  CHECK(std::abs(got - want) <= 0.05);
  const double got_half = amalgam_quasinorm(e, 0.5);
  const double want_half =
      amalgam_oracle_1d([](double x) { return std::exp(-std::abs(x)); }, 0.5, cover, h / 10);
  CHECK(std::abs(got_half - want_half) / want_half < 0.02);
}

TEST_CASE("amalgam norm is translation invariant up to grid tolerance") {
  const double h = 0.05;
  Envelope e = Envelope::from_function(
      1, h, 12.0, [](const double* x) { return std::exp(-std::abs(x[0])); });
  Envelope shifted = Envelope::from_function(
      1, h, 12.0, [](const double* x) { return std::exp(-std::abs(x[0] - 2.35)); });
  CHECK(std::abs(amalgam_quasinorm(e, 1.0) - amalgam_quasinorm(shifted, 1.0)) < 0.05);
  CHECK(std::abs(amalgam_quasinorm(e, 0.5) - amalgam_quasinorm(shifted, 0.5)) < 0.1);
}

TEST_CASE("sampling a decaying envelope on point sets") {
  Envelope e = exp_envelope(0.125, 6.0);
  auto z3 = testutil::z_section(3.0);
  auto sampled = sample_on_pointset(e, z3);
  CHECK(sampled.outside_count == 0);
  REQUIRE(sampled.seq.size() == 7);
  for (int i = 0; i < 7; ++i) {
    const double x = z3->point(i)[0];
    CHECK(std::abs(sampled.seq.values[i].real() - std::exp(-std::abs(x))) < 1e-12);
  }
  auto z9 = testutil::z_section(9.0);
  CHECK(sample_on_pointset(e, z9).outside_count > 0);

  // spike at the origin
  Envelope spike(1, 1.0, 2.0);
  spike.at_index({0}) = 1.0;
  auto single = std::make_shared<const PointSet>(PointSet(1, {0.0}, 0.0));
  CHECK(sample_on_pointset(spike, single).seq.values[0].real() == 1.0);
}

TEST_CASE("sampling inequality with the tracked constant") {
  // ||H restricted to S||_{p0}^{p0} <= rel(S) * 2^D D^{D/2} * ||H||_W^{p0}
  for (double p0 : {0.5, 1.0}) {
    Envelope e = exp_envelope(0.0625, 14.0);
    for (double step : {1.0, 0.5, 0.25}) {
      auto s = testutil::z_section(10.0, step);
      auto sampled = sample_on_pointset(e, s);
      const double lhs = abs_pow(lp_quasinorm(sampled.seq, p0), p0);
      const double rhs = relsep(*s) * sampling_constant(1) *
                         abs_pow(amalgam_quasinorm_upper(e, p0), p0);
      CHECK(lhs <= rhs * (1 + 1e-12));
    }
  }
}

TEST_CASE("delta aggregate: spikes, direct sums, symmetry") {
  Envelope zero(1, 0.5, 8.0);
  CHECK(delta_envelope(zero, 0.5, 0.5, {0}) == 0.0);
  CHECK(delta_envelope(zero, 0.5, 0.5, {3}) == 0.0);

  // a lone spike sits on the shared node of the two closed cells around it
  Envelope spike(1, 1.0, 4.0);
  spike.at_index({0}) = 1.0;
  for (double eps : {1.0, 0.5, 0.25})
    CHECK(delta_envelope(spike, eps, 0.7, {0}) == doctest::Approx(2.0));

  // brute force oracle: direct sum over t in [-10/eps, 10/eps]
  Envelope e = exp_envelope(0.25, 16.0);
  const double eps = 0.5, q = 0.5;
  double want = 0.0;
  for (long t = -40; t <= 40; ++t) {
    if (std::abs(eps * t - 0.0) > 5.0) continue;
    double sup = 0.0;
    for (double x = t; x <= t + 1.0 + 1e-12; x += 0.25)
      sup = std::max(sup, std::abs(x) <= 16.0 ? std::exp(-std::abs(x)) : 0.0);
    want += abs_pow(sup, q);
  }
  CHECK(delta_envelope(e, eps, q, {0}) == doctest::Approx(want));

  // even H: delta is symmetric under s -> -s. Exact when the cells at the
  // window boundary are empty (compact support); otherwise the two windows
  // differ by one boundary cell per side.
  Envelope compact = Envelope::from_function(1, 0.25, 16.0, [](const double* x) {
    return std::abs(x[0]) <= 3.0 ? std::cos(x[0] / 3.0) : 0.0;
  });
  for (long s : {1L, 2L, 3L})
    CHECK(delta_envelope(compact, 0.5, 0.5, {s}) ==
          doctest::Approx(delta_envelope(compact, 0.5, 0.5, {-s})));
  for (long s : {1L, 3L, 7L}) {
    const double lo = std::floor((s - 5.0) / eps), hi = std::floor((s + 5.0) / eps) + 1.0;
    const double boundary =
        abs_pow(std::exp(-(std::abs(lo) - 1.0)), q) + abs_pow(std::exp(-(std::abs(hi) - 1.0)), q);
    CHECK(std::abs(delta_envelope(e, eps, q, {s}) - delta_envelope(e, eps, q, {-s})) <=
          2 * boundary + 1e-12);
  }

  CHECK_THROWS_AS(delta_envelope(e, -1.0, 0.5, {0}), std::invalid_argument);
}

TEST_CASE("tail sum decreases along eps halvings and vanishes for narrow support") {
  Envelope e = exp_envelope(0.25, 24.0);
  double prev = kInf;
  for (double eps : {1.0, 0.5, 0.25, 0.125}) {
    const double t = tail_sum(e, eps, 0.5);
    CHECK(t <= prev * (1 + 1e-12));
    prev = t;
  }
  Envelope p = Envelope::from_function(1, 0.25, 24.0, [](const double* x) {
    return std::pow(1.0 + std::abs(x[0]), -4.0);
  });
  prev = kInf;
  for (double eps : {1.0, 0.5, 0.25, 0.125}) {
    const double t = tail_sum(p, eps, 0.5);
    CHECK(t <= prev * (1 + 1e-12));
    prev = t;
  }

  // support inside B_{1/(2 eps)} kills every contributing cell
  const double eps = 0.25;
  Envelope narrow = Envelope::from_function(1, 0.25, 24.0, [&](const double* x) {
    return std::abs(x[0]) < 1.0 / (2 * eps) ? 1.0 : 0.0;
  });
  CHECK(tail_sum(narrow, eps, 0.5) == 0.0);
  CHECK(tail_sum(Envelope(1, 0.25, 24.0), eps, 0.5) == 0.0);
}

TEST_CASE("envelope algebra") {
  Envelope a = exp_envelope(0.5, 3.0);
  Envelope b = Envelope::from_function(1, 0.5, 3.0, [](const double* x) {
    return std::abs(x[0]) <= 1.0 ? 2.0 : 0.0;
  });
  Envelope mx = Envelope::max(a, b);
  Envelope sm = Envelope::sum(a, b);
  const double probe0 = 0.0, probe2 = 2.0;
  CHECK(mx.value_at(&probe0) == doctest::Approx(2.0));
  CHECK(mx.value_at(&probe2) == doctest::Approx(std::exp(-2.0)));
  CHECK(sm.value_at(&probe0) == doctest::Approx(3.0));
  CHECK(a.scaled(2.5).value_at(&probe2) == doctest::Approx(2.5 * std::exp(-2.0)));
  CHECK(a.pow(0.5).value_at(&probe2) == doctest::Approx(std::exp(-1.0)));
  CHECK_THROWS_AS(a.scaled(-1.0), std::invalid_argument);
  Envelope other_grid(1, 0.25, 3.0);
  CHECK_THROWS_AS(Envelope::max(a, other_grid), std::invalid_argument);
}

TEST_CASE("envelope csv round trip") {
  Envelope e = exp_envelope(0.5, 3.0);
  std::stringstream ss;
  save_envelope(e, ss);
  Envelope back = load_envelope(ss);
  CHECK(back.dim() == e.dim());
  CHECK(back.grid_step() == e.grid_step());
  REQUIRE(back.node_count() == e.node_count());
  for (size_t i = 0; i < e.node_count(); ++i) CHECK(back.values()[i] == e.values()[i]);
}
