#include "cdspec/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "cdspec/rng.hpp"

namespace cdspec {

Seq::Seq(std::shared_ptr<const PointSet> idx, std::vector<cplx> vals)
    : index(std::move(idx)), values(std::move(vals)) {
  if (!index) throw std::invalid_argument("Seq: null index set");
  if (index->size() != static_cast<int>(values.size()))
    throw std::invalid_argument("Seq: value count does not match index set");
}

double abs_pow(double x, double p) {
  const double ax = std::abs(x);
  if (ax == 0.0) return 0.0;
  if (p == 1.0) return ax;
  if (p == 2.0) return ax * ax;
  if (p == 0.5) return std::sqrt(ax);
  return std::exp(p * std::log(ax));
}

double lp_quasinorm(std::span<const cplx> a, double p) {
  if (!(p > 0)) throw std::invalid_argument("lp_quasinorm: p must be positive");
  if (is_inf(p)) {
    double m = 0.0;
    for (const auto& v : a) m = std::max(m, std::abs(v));
    return m;
  }
  double s = 0.0;
  for (const auto& v : a) s += abs_pow(std::abs(v), p);
  if (s == 0.0) return 0.0;
  if (p == 1.0) return s;
  if (p == 2.0) return std::sqrt(s);
  return std::exp(std::log(s) / p);
}

double lp_quasinorm(const Seq& a, double p) {
  return lp_quasinorm(std::span<const cplx>(a.values), p);
}

double conjugate_exponent(double q) {
  if (!(q > 0)) throw std::invalid_argument("conjugate_exponent: q must be positive");
  if (q <= 1.0) return kInf;
  if (is_inf(q)) return 1.0;
  return q / (q - 1.0);
}

namespace {

std::vector<long> integer_coords(const PointSet& s) {
  std::vector<long> out(s.coords().size());
  for (size_t i = 0; i < out.size(); ++i) {
    const double v = s.coords()[i];
    const double r = std::round(v);
    if (std::abs(v - r) > 1e-9)
      throw std::invalid_argument("convolve: index sets must be integer lattice sections");
    out[i] = static_cast<long>(r);
  }
  return out;
}

}  // namespace

Seq convolve(const Seq& a, const Seq& b) {
  const PointSet& sa = *a.index;
  const PointSet& sb = *b.index;
  if (sa.dim() != sb.dim()) throw std::invalid_argument("convolve: dimension mismatch");
  const int d = sa.dim();
  auto ka = integer_coords(sa);
  auto kb = integer_coords(sb);

  std::map<std::vector<long>, cplx> acc;
  std::vector<long> key(d);
  for (int i = 0; i < sa.size(); ++i) {
    for (int j = 0; j < sb.size(); ++j) {
      for (int t = 0; t < d; ++t) key[t] = ka[static_cast<size_t>(i) * d + t] + kb[static_cast<size_t>(j) * d + t];
      acc[key] += a.values[i] * b.values[j];
    }
  }

  std::vector<double> flat;
  std::vector<cplx> vals;
  double radius = 0.0;
  flat.reserve(acc.size() * d);
  vals.reserve(acc.size());
  for (const auto& [k, v] : acc) {
    double r2 = 0.0;
    for (long c : k) {
      flat.push_back(static_cast<double>(c));
      r2 += static_cast<double>(c) * static_cast<double>(c);
    }
    radius = std::max(radius, std::sqrt(r2));
    vals.push_back(v);
  }
  auto idx = std::make_shared<PointSet>(d, std::move(flat), radius);
  return Seq(std::move(idx), std::move(vals));
}

Seq random_seq(std::shared_ptr<const PointSet> idx, Rng& rng) {
  std::vector<cplx> vals(idx->size());
  for (auto& v : vals) v = rng.complex_normal();
  return Seq(std::move(idx), std::move(vals));
}

}  // namespace cdspec
