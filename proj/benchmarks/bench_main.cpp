#include "micro.hpp"

#include "cdspec/cdmatrix.hpp"
#include "cdspec/gabor.hpp"
#include "cdspec/rng.hpp"
#include "cdspec/stability.hpp"
#include "cdspec/weyl.hpp"

using namespace cdspec;

namespace {

std::shared_ptr<const PointSet> section(double r) {
  RectangularLattice lat{1, {1.0}, r};
  return std::make_shared<const PointSet>(enumerate_lattice(lat));
}

const auto kPts = section(64.0);
const CdMatrix kMatrix = CdMatrix::toeplitz(kPts, [](const std::vector<double>& d) {
  const double dist = std::abs(d[0]);
  return cplx(dist == 0.0 ? 1.1 : 0.1 * std::exp(-dist));
});

Seq random_vec() {
  Rng rng(7);
  return random_seq(kPts, rng);
}

const FuncGrid kGrid = FuncGrid::make(1.0 / 16, 4.0);

}  // namespace

MICRO_BENCH(lp_quasinorm_p_half) {
  static Seq b = random_vec();
  volatile double sink = lp_quasinorm(b, 0.5);
  (void)sink;
}

MICRO_BENCH(matrix_apply_129) {
  static Seq b = random_vec();
  volatile double sink = lp_quasinorm(kMatrix.apply(b), 2.0);
  (void)sink;
}

MICRO_BENCH(schur_and_sp_norms_129) {
  volatile double sink = kMatrix.schur_norm() + kMatrix.sp_norm(0.5);
  (void)sink;
}

MICRO_BENCH(min_envelope_129) {
  CdMatrix fresh(kMatrix.row_set_ptr(), kMatrix.col_set_ptr(), kMatrix.entries());
  volatile double sink = fresh.min_envelope().values()[0];
  (void)sink;
}

MICRO_BENCH(commutator_table_eps_quarter) {
  PartitionOfUnity pou(1, 0.25);
  VTable vt = build_v_table(kMatrix, pou, 0.5);
  volatile double sink = vt.sup_j_sum_k(1.0);
  (void)sink;
}

MICRO_BENCH(stft_gaussian_129_grid) {
  static auto g = gaussian_window(kGrid);
  volatile double sink = mixed_quasinorm(stft(g, g), 2.0, 2.0);
  (void)sink;
}

MICRO_BENCH(wigner_gaussian_129_grid) {
  static auto g = gaussian_window(kGrid);
  volatile double sink = mixed_quasinorm(wigner(g, g), 1.0, 1.0);
  (void)sink;
}

MICRO_BENCH(weyl_kernel_129_grid) {
  static auto a = symbol_from_function(SymbolGrid::for_func_grid(kGrid), [](double x, double xi) {
    return cplx(1.0 + 0.3 * std::exp(-kPi * (x * x + xi * xi)));
  });
  volatile double sink = max_abs(weyl_kernel(a, kGrid));
  (void)sink;
}

int main() { return microbench::run_all(); }
