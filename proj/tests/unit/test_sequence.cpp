#include "support/testutil.hpp"

#include "cdspec/sequence.hpp"

using namespace cdspec;

TEST_CASE("lp quasinorm values") {
  auto idx = testutil::z_section(0.5);  // single point
  std::vector<cplx> a{cplx(3, 0), cplx(4, 0)};
  CHECK(lp_quasinorm(std::span<const cplx>(a), 2.0) == doctest::Approx(5.0));

  std::vector<cplx> b{1.0, 1.0};
  CHECK(lp_quasinorm(std::span<const cplx>(b), 0.5) == doctest::Approx(4.0));

  std::vector<cplx> atom(10);
  atom[0] = 1.0;
  for (double p : {0.3, 0.7, 1.0, 2.0, kInf})
    CHECK(lp_quasinorm(std::span<const cplx>(atom), p) == doctest::Approx(1.0));

  CHECK_THROWS_AS(lp_quasinorm(std::span<const cplx>(a), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(lp_quasinorm(std::span<const cplx>(a), -1.0), std::invalid_argument);
  (void)idx;
}

TEST_CASE("conjugate exponent convention") {
  CHECK(conjugate_exponent(2.0) == doctest::Approx(2.0));
  CHECK(conjugate_exponent(1.5) == doctest::Approx(3.0));
  CHECK(is_inf(conjugate_exponent(1.0)));
  CHECK(is_inf(conjugate_exponent(0.5)));
  CHECK(conjugate_exponent(kInf) == doctest::Approx(1.0));
}

TEST_CASE("convolution identities") {
  auto idx2 = std::make_shared<const PointSet>(PointSet(1, {0.0, 1.0}, 1.0));
  Seq ones(idx2, {1.0, 1.0});
  Seq conv = convolve(ones, ones);
  REQUIRE(conv.size() == 3);
  CHECK(conv.values[0] == cplx(1.0));
  CHECK(conv.values[1] == cplx(2.0));
  CHECK(conv.values[2] == cplx(1.0));
  CHECK(conv.index->point(0)[0] == 0.0);
  CHECK(conv.index->point(2)[0] == 2.0);

  // delta is the unit of convolution
  auto idx1 = std::make_shared<const PointSet>(PointSet(1, {0.0}, 0.0));
  Seq delta(idx1, {1.0});
  Rng rng(3);
  Seq b = random_seq(testutil::z_section(4.0), rng);
  Seq db = convolve(delta, b);
  REQUIRE(db.size() == b.size());
  for (int i = 0; i < b.size(); ++i) CHECK(std::abs(db.values[i] - b.values[i]) < 1e-15);

  auto idx2d = std::make_shared<const PointSet>(PointSet(2, {0.0, 0.0}, 0.0));
  Seq d2(idx2d, {1.0});
  CHECK_THROWS_AS(convolve(delta, d2), std::invalid_argument);
}

TEST_CASE("quasinorm laws on random data") {
  Rng rng(7);
  auto idx = testutil::z_section(8.0);
  for (double p : {0.3, 0.5, 0.8, 1.0}) {
    for (int trial = 0; trial < 50; ++trial) {
      Seq a = random_seq(idx, rng);
      // ||a||_1^p <= ||a||_p^p
      CHECK(abs_pow(lp_quasinorm(a, 1.0), p) <=
            abs_pow(lp_quasinorm(a, p), p) * (1 + 1e-12));
      // monotonicity p <= q  =>  ||a||_q <= ||a||_p
      for (double q : {p, 1.0, 2.0, kInf})
        if (q >= p) CHECK(lp_quasinorm(a, q) <= lp_quasinorm(a, p) * (1 + 1e-12));
      // quasi-triangle
      Seq b = random_seq(idx, rng);
      std::vector<cplx> sum(a.values);
      for (int i = 0; i < b.size(); ++i) sum[i] += b.values[i];
      CHECK(abs_pow(lp_quasinorm(std::span<const cplx>(sum), p), p) <=
            (abs_pow(lp_quasinorm(a, p), p) + abs_pow(lp_quasinorm(b, p), p)) * (1 + 1e-12));
    }
  }
}

TEST_CASE("young inequality for p below one") {
  Rng rng(9);
  auto idx = testutil::z_section(6.0);
  for (int trial = 0; trial < 30; ++trial) {
    Seq a = random_seq(idx, rng);
    Seq b = random_seq(idx, rng);
    // sparsify
    for (auto& v : a.values)
      if (rng.uniform01() < 0.6) v = 0.0;
    for (auto& v : b.values)
      if (rng.uniform01() < 0.6) v = 0.0;
    Seq ab = convolve(a, b);
    const double p = 0.5;
    CHECK(lp_quasinorm(ab, p) <= lp_quasinorm(a, p) * lp_quasinorm(b, p) * (1 + 1e-12) + 1e-300);
  }
}
