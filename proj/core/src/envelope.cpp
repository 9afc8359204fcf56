#include "cdspec/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace cdspec {

Envelope::Envelope(int dim, double grid_step, double coverage_radius) : dim_(dim), h_(grid_step) {
  if (dim <= 0) throw std::invalid_argument("Envelope: dim must be positive");
  if (!(grid_step > 0)) throw std::invalid_argument("Envelope: grid step must be positive");
  if (coverage_radius < 0) throw std::invalid_argument("Envelope: negative coverage");
  half_span_ = static_cast<long>(std::floor(coverage_radius / grid_step + 1e-9));
  size_t n = 1;
  for (int i = 0; i < dim_; ++i) n *= static_cast<size_t>(nodes_per_axis());
  values_.assign(n, 0.0);
}

Envelope Envelope::from_function(int dim, double grid_step, double coverage_radius,
                                 const std::function<double(const double*)>& f) {
  Envelope e(dim, grid_step, coverage_radius);
  std::vector<double> x(dim);
  for (size_t flat = 0; flat < e.values_.size(); ++flat) {
    auto k = e.unflatten(flat);
    for (int i = 0; i < dim; ++i) x[i] = k[i] * grid_step;
    const double v = f(x.data());
    if (v < 0) throw std::invalid_argument("Envelope: negative value");
    e.values_[flat] = v;
  }
  return e;
}

std::vector<long> Envelope::unflatten(size_t flat) const {
  std::vector<long> k(dim_);
  const long n = nodes_per_axis();
  for (int i = dim_ - 1; i >= 0; --i) {
    k[i] = static_cast<long>(flat % n) - half_span_;
    flat /= n;
  }
  return k;
}

size_t Envelope::flatten(const std::vector<long>& k) const {
  const long n = nodes_per_axis();
  size_t flat = 0;
  for (int i = 0; i < dim_; ++i) flat = flat * n + static_cast<size_t>(k[i] + half_span_);
  return flat;
}

bool Envelope::in_range(const std::vector<long>& k) const {
  for (int i = 0; i < dim_; ++i)
    if (k[i] < -half_span_ || k[i] > half_span_) return false;
  return true;
}

double& Envelope::at_index(const std::vector<long>& k) {
  if (!in_range(k)) throw std::out_of_range("Envelope::at_index");
  return values_[flatten(k)];
}

double Envelope::at_index(const std::vector<long>& k) const {
  return in_range(k) ? values_[flatten(k)] : 0.0;
}

double Envelope::value_at(const double* x) const {
  std::vector<long> k(dim_);
  for (int i = 0; i < dim_; ++i) {
    k[i] = static_cast<long>(std::llround(x[i] / h_));
    if (k[i] < -half_span_ || k[i] > half_span_) return 0.0;
  }
  return values_[flatten(k)];
}

Envelope Envelope::scaled(double factor) const {
  if (factor < 0) throw std::invalid_argument("Envelope::scaled: negative factor");
  Envelope e = *this;
  for (auto& v : e.values_) v *= factor;
  return e;
}

Envelope Envelope::pow(double exponent) const {
  Envelope e = *this;
  for (auto& v : e.values_) v = abs_pow(v, exponent);
  return e;
}

Envelope Envelope::max(const Envelope& a, const Envelope& b) {
  if (a.dim_ != b.dim_ || a.h_ != b.h_) throw std::invalid_argument("Envelope::max: grid mismatch");
  const Envelope& big = a.half_span_ >= b.half_span_ ? a : b;
  const Envelope& small = a.half_span_ >= b.half_span_ ? b : a;
  Envelope e = big;
  for (size_t flat = 0; flat < small.values_.size(); ++flat) {
    auto k = small.unflatten(flat);
    e.values_[e.flatten(k)] = std::max(e.values_[e.flatten(k)], small.values_[flat]);
  }
  return e;
}

Envelope Envelope::sum(const Envelope& a, const Envelope& b) {
  if (a.dim_ != b.dim_ || a.h_ != b.h_) throw std::invalid_argument("Envelope::sum: grid mismatch");
  const Envelope& big = a.half_span_ >= b.half_span_ ? a : b;
  const Envelope& small = a.half_span_ >= b.half_span_ ? b : a;
  Envelope e = big;
  for (size_t flat = 0; flat < small.values_.size(); ++flat) {
    auto k = small.unflatten(flat);
    e.values_[e.flatten(k)] += small.values_[flat];
  }
  return e;
}

namespace {

// Integer offsets o with |o*h| <= reach (node variant) or with the cell
// o*h + [-h/2,h/2]^D meeting B_reach(0) (cell variant).
std::vector<std::vector<long>> ball_offsets(int dim, double h, double reach, bool cells) {
  const long m = static_cast<long>(std::floor(reach / h)) + 2;
  std::vector<std::vector<long>> out;
  std::vector<long> o(dim, -m);
  bool done = false;
  while (!done) {
    double d2 = 0.0;
    for (int i = 0; i < dim; ++i) {
      double di = std::abs(o[i] * h);
      if (cells) di = std::max(0.0, di - h / 2);
      d2 += di * di;
    }
    if (d2 <= reach * reach + 1e-12) out.push_back(o);
    int axis = dim - 1;
    while (axis >= 0) {
      if (++o[axis] <= m) break;
      o[axis] = -m;
      --axis;
    }
    if (axis < 0) done = true;
  }
  return out;
}

double amalgam_impl(const Envelope& env, double p0, bool upper) {
  if (!(p0 > 0)) throw std::invalid_argument("amalgam_quasinorm: p0 must be positive");
  const int d = env.dim();
  const double h = env.grid_step();
  double maxval = 0.0;
  for (double v : env.values()) maxval = std::max(maxval, v);
  if (maxval == 0.0) return 0.0;
  if (is_inf(p0)) return maxval;

  const double reach = upper ? 1.0 + h * std::sqrt(static_cast<double>(d)) / 2.0 : 1.0;
  const auto offsets = ball_offsets(d, h, reach, upper);

  const long extra = static_cast<long>(std::ceil(reach / h)) + 1;
  const long span = env.half_span() + extra;
  double acc = 0.0;
  std::vector<long> x(d, -span), j(d);
  bool done = false;
  while (!done) {
    double sup = 0.0;
    for (const auto& o : offsets) {
      bool ok = true;
      for (int i = 0; i < d; ++i) {
        j[i] = x[i] + o[i];
        if (j[i] < -env.half_span() || j[i] > env.half_span()) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      sup = std::max(sup, env.values()[env.flatten(j)]);
    }
    if (sup > 0.0) acc += abs_pow(sup, p0);
    int axis = d - 1;
    while (axis >= 0) {
      if (++x[axis] <= span) break;
      x[axis] = -span;
      --axis;
    }
    if (axis < 0) done = true;
  }
  acc *= std::pow(h, d);
  return std::exp(std::log(acc) / p0);
}

}  // namespace

double amalgam_quasinorm(const Envelope& h, double p0) { return amalgam_impl(h, p0, false); }
double amalgam_quasinorm_upper(const Envelope& h, double p0) { return amalgam_impl(h, p0, true); }

SampledSeq sample_on_pointset(const Envelope& h, std::shared_ptr<const PointSet> s) {
  if (h.dim() != s->dim()) throw std::invalid_argument("sample_on_pointset: dimension mismatch");
  SampledSeq out;
  std::vector<cplx> vals(s->size());
  const double cover = h.coverage_radius() + h.grid_step() / 2;
  for (int i = 0; i < s->size(); ++i) {
    const double* p = s->point(i);
    bool inside = true;
    for (int k = 0; k < h.dim(); ++k)
      if (std::abs(p[k]) > cover) inside = false;
    if (!inside) ++out.outside_count;
    vals[i] = h.value_at(p);
  }
  out.seq = Seq(std::move(s), std::move(vals));
  return out;
}

double delta_envelope(const Envelope& h, double eps, double q, const std::vector<long>& s) {
  if (!(eps > 0)) throw std::invalid_argument("delta_envelope: eps must be positive");
  if (!(q > 0)) throw std::invalid_argument("delta_envelope: q must be positive");
  const int d = h.dim();
  if (static_cast<int>(s.size()) != d) throw std::invalid_argument("delta_envelope: bad s");
  const double step = h.grid_step();

  // t ranges over the box |eps*t - s|_inf <= 5 intersected with the coverage
  // of the envelope (cells fully outside coverage contribute zero).
  std::vector<long> tmin(d), tmax(d);
  const long cover = static_cast<long>(std::floor(h.coverage_radius())) + 1;
  for (int i = 0; i < d; ++i) {
    tmin[i] = std::max(static_cast<long>(std::ceil((s[i] - 5.0) / eps - 1e-12)), -cover - 1);
    tmax[i] = std::min(static_cast<long>(std::floor((s[i] + 5.0) / eps + 1e-12)), cover);
    if (tmin[i] > tmax[i]) return 0.0;
  }

  double acc = 0.0;
  std::vector<long> t(tmin), jlo(d), jhi(d), j(d);
  bool done = false;
  while (!done) {
    // sup of H^q over grid nodes in the closed cell [0,1]^D + t
    for (int i = 0; i < d; ++i) {
      jlo[i] = static_cast<long>(std::ceil(t[i] / step - 1e-9));
      jhi[i] = static_cast<long>(std::floor((t[i] + 1.0) / step + 1e-9));
    }
    double sup = 0.0;
    j = jlo;
    bool cell_done = false;
    while (!cell_done) {
      bool ok = true;
      for (int i = 0; i < d; ++i)
        if (j[i] < -h.half_span() || j[i] > h.half_span()) {
          ok = false;
          break;
        }
      if (ok) sup = std::max(sup, h.values()[h.flatten(j)]);
      int axis = d - 1;
      while (axis >= 0) {
        if (++j[axis] <= jhi[axis]) break;
        j[axis] = jlo[axis];
        --axis;
      }
      if (axis < 0) cell_done = true;
    }
    acc += abs_pow(sup, q);

    int axis = d - 1;
    while (axis >= 0) {
      if (++t[axis] <= tmax[axis]) break;
      t[axis] = tmin[axis];
      --axis;
    }
    if (axis < 0) done = true;
  }
  return acc;
}

double tail_sum(const Envelope& h, double eps, double q) {
  const int d = h.dim();
  const double cutoff = 6.0 * std::sqrt(static_cast<double>(d));
  const long smax = static_cast<long>(std::ceil(eps * (h.coverage_radius() + 1.0) + 6.0)) + 1;
  double acc = 0.0;
  std::vector<long> s(d, -smax);
  bool done = false;
  while (!done) {
    double n2 = 0.0;
    for (long c : s) n2 += static_cast<double>(c) * static_cast<double>(c);
    if (std::sqrt(n2) > cutoff) acc += delta_envelope(h, eps, q, s);
    int axis = d - 1;
    while (axis >= 0) {
      if (++s[axis] <= smax) break;
      s[axis] = -smax;
      --axis;
    }
    if (axis < 0) done = true;
  }
  return acc;
}

double sampling_constant(int dim) {
  return std::pow(2.0, dim) * std::pow(static_cast<double>(dim), dim / 2.0);
}

void save_envelope(const Envelope& h, std::ostream& os) {
  os << h.dim() << " " << std::setprecision(17) << h.grid_step() << " " << h.coverage_radius()
     << "\n";
  for (size_t flat = 0; flat < h.node_count(); ++flat) {
    auto k = h.unflatten(flat);
    for (int i = 0; i < h.dim(); ++i) os << k[i] << " ";
    os << std::setprecision(17) << h.values()[flat] << "\n";
  }
}

Envelope load_envelope(std::istream& is) {
  int dim = 0;
  double step = 0.0, cover = 0.0;
  if (!(is >> dim >> step >> cover)) throw std::runtime_error("envelope: bad header");
  Envelope e(dim, step, cover);
  std::vector<long> k(dim);
  while (true) {
    bool ok = true;
    for (int i = 0; i < dim; ++i)
      if (!(is >> k[i])) {
        ok = false;
        break;
      }
    if (!ok) break;
    double v;
    if (!(is >> v)) throw std::runtime_error("envelope: truncated row");
    e.at_index(k) = v;
  }
  return e;
}

void save_envelope_file(const Envelope& h, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  save_envelope(h, os);
}

Envelope load_envelope_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return load_envelope(is);
}

}  // namespace cdspec
