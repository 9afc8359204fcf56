#include "cdspec/pointset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace cdspec {

PointSet::PointSet(int dim, std::vector<double> flat_points, double truncation_radius)
    : dim_(dim), coords_(std::move(flat_points)), radius_(truncation_radius) {
  if (dim <= 0) throw std::invalid_argument("PointSet: dim must be positive");
  if (coords_.size() % dim != 0) throw std::invalid_argument("PointSet: ragged coordinate list");
  if (radius_ < 0) throw std::invalid_argument("PointSet: negative radius");
}

PointSet PointSet::translated(const std::vector<double>& shift) const {
  if (static_cast<int>(shift.size()) != dim_)
    throw std::invalid_argument("PointSet::translated: dimension mismatch");
  std::vector<double> c = coords_;
  double shift_norm = 0.0;
  for (double v : shift) shift_norm += v * v;
  shift_norm = std::sqrt(shift_norm);
  for (int i = 0; i < size(); ++i)
    for (int d = 0; d < dim_; ++d) c[static_cast<size_t>(i) * dim_ + d] += shift[d];
  PointSet out(dim_, std::move(c), radius_ + shift_norm);
  out.steps_ = steps_;
  return out;
}

bool PointSet::operator==(const PointSet& other) const {
  return dim_ == other.dim_ && coords_ == other.coords_;
}

namespace {

void check_lattice(const RectangularLattice& lat) {
  if (lat.dim <= 0) throw std::invalid_argument("lattice: dim must be positive");
  if (static_cast<int>(lat.steps.size()) != lat.dim)
    throw std::invalid_argument("lattice: one step per axis required");
  for (double s : lat.steps)
    if (!(s > 0)) throw std::invalid_argument("lattice: steps must be positive");
  if (lat.radius < 0) throw std::invalid_argument("lattice: radius must be nonnegative");
}

template <class Keep>
PointSet enumerate_impl(const RectangularLattice& lat, double record_radius, Keep keep) {
  check_lattice(lat);
  const int d = lat.dim;
  std::vector<long> k(d), kmin(d), kmax(d);
  for (int i = 0; i < d; ++i) {
    kmax[i] = static_cast<long>(std::floor(lat.radius / lat.steps[i] + 1e-12));
    kmin[i] = -kmax[i];
    k[i] = kmin[i];
  }
  std::vector<double> flat;
  std::vector<double> x(d);
  bool done = false;
  while (!done) {
    for (int i = 0; i < d; ++i) x[i] = k[i] * lat.steps[i];
    if (keep(x)) flat.insert(flat.end(), x.begin(), x.end());
    int axis = d - 1;
    while (axis >= 0) {
      if (++k[axis] <= kmax[axis]) break;
      k[axis] = kmin[axis];
      --axis;
    }
    if (axis < 0) done = true;
  }
  PointSet out(d, std::move(flat), record_radius);
  out.set_lattice_steps(lat.steps);
  return out;
}

}  // namespace

PointSet enumerate_lattice(const RectangularLattice& lat) {
  const double r2 = lat.radius * lat.radius * (1 + 1e-12);
  return enumerate_impl(lat, lat.radius, [&](const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s <= r2;
  });
}

PointSet enumerate_lattice_box(const RectangularLattice& lat) {
  check_lattice(lat);
  return enumerate_impl(lat, lat.radius * std::sqrt(static_cast<double>(lat.dim)),
                        [](const std::vector<double>&) { return true; });
}

namespace {

// Count of points strictly inside the unit ball around c.
int count_open_ball(const PointSet& s, const std::vector<double>& c) {
  const int d = s.dim();
  int cnt = 0;
  for (int i = 0; i < s.size(); ++i) {
    const double* p = s.point(i);
    double r2 = 0.0;
    for (int k = 0; k < d; ++k) {
      const double t = p[k] - c[k];
      r2 += t * t;
    }
    if (r2 < 1.0 - 1e-12) ++cnt;
  }
  return cnt;
}

int relsep_1d_exact(const PointSet& s) {
  std::vector<double> xs(s.coords());
  std::sort(xs.begin(), xs.end());
  // max number of points inside an open interval of length 2
  int best = 0, lo = 0;
  for (int hi = 0; hi < static_cast<int>(xs.size()); ++hi) {
    while (xs[hi] - xs[lo] >= 2.0 - 1e-12) ++lo;
    best = std::max(best, hi - lo + 1);
  }
  return best;
}

// Exact in D=2: the minimal enclosing ball of an optimal subset is supported
// by one point, a diametral pair, or a triple; checking those centers plus a
// strict count suffices.
int relsep_2d_exact(const PointSet& s) {
  const int n = s.size();
  int best = n > 0 ? 1 : 0;
  std::vector<double> c(2);
  for (int i = 0; i < n; ++i) {
    c = {s.point(i)[0], s.point(i)[1]};
    best = std::max(best, count_open_ball(s, c));
  }
  for (int i = 0; i < n; ++i) {
    const double* a = s.point(i);
    for (int j = i + 1; j < n; ++j) {
      const double* b = s.point(j);
      const double dx = a[0] - b[0], dy = a[1] - b[1];
      const double d2 = dx * dx + dy * dy;
      if (d2 >= 4.0) continue;
      c = {(a[0] + b[0]) / 2, (a[1] + b[1]) / 2};
      best = std::max(best, count_open_ball(s, c));
      for (int k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        const double* p = s.point(k);
        // circumcenter of (a, b, p)
        const double ax = a[0], ay = a[1], bx = b[0], by = b[1], px = p[0], py = p[1];
        const double den = 2.0 * (ax * (by - py) + bx * (py - ay) + px * (ay - by));
        if (std::abs(den) < 1e-13) continue;
        const double a2 = ax * ax + ay * ay, b2 = bx * bx + by * by, p2 = px * px + py * py;
        c = {(a2 * (by - py) + b2 * (py - ay) + p2 * (ay - by)) / den,
             (a2 * (px - bx) + b2 * (ax - px) + p2 * (bx - ax)) / den};
        const double rx = ax - c[0], ry = ay - c[1];
        if (rx * rx + ry * ry >= 1.0) continue;
        best = std::max(best, count_open_ball(s, c));
      }
    }
  }
  return best;
}

}  // namespace

RelSepResult relsep_bracket(const PointSet& s) {
  RelSepResult out;
  if (s.size() == 0) return out;
  if (s.dim() == 1) {
    out.lower = out.upper = relsep_1d_exact(s);
    return out;
  }
  if (s.dim() == 2) {
    out.lower = out.upper = relsep_2d_exact(s);
    return out;
  }
  // D >= 3: candidate centers give a lower bound, grid-inflated closed balls
  // an upper one; refine the grid until they meet or give up with a bracket.
  const int d = s.dim();
  int lower = 1;
  std::vector<double> c(d);
  for (int i = 0; i < s.size(); ++i) {
    for (int k = 0; k < d; ++k) c[k] = s.point(i)[k];
    lower = std::max(lower, count_open_ball(s, c));
  }
  for (int i = 0; i < s.size(); ++i)
    for (int j = i + 1; j < s.size(); ++j) {
      for (int k = 0; k < d; ++k) c[k] = 0.5 * (s.point(i)[k] + s.point(j)[k]);
      lower = std::max(lower, count_open_ball(s, c));
    }
  // Any open unit ball with k members has pairwise distances < 2, so the
  // largest near-2 neighborhood bounds rel from above.
  int upper = 0;
  for (int i = 0; i < s.size(); ++i) {
    int cnt = 0;
    for (int j = 0; j < s.size(); ++j) {
      double r2 = 0.0;
      for (int k = 0; k < d; ++k) {
        const double t = s.point(i)[k] - s.point(j)[k];
        r2 += t * t;
      }
      if (r2 < 4.0) ++cnt;
    }
    upper = std::max(upper, cnt);
  }
  out.lower = lower;
  out.upper = std::max(upper, lower);
  out.exact = (out.lower == out.upper);
  return out;
}

double relsep(const PointSet& s) { return relsep_bracket(s).value(); }

void save_pointset(const PointSet& s, std::ostream& os) {
  os << s.dim() << " " << std::setprecision(17) << s.truncation_radius() << "\n";
  for (int i = 0; i < s.size(); ++i) {
    for (int d = 0; d < s.dim(); ++d) {
      if (d) os << " ";
      os << std::setprecision(17) << s.point(i)[d];
    }
    os << "\n";
  }
}

PointSet load_pointset(std::istream& is) {
  int dim = 0;
  double radius = 0.0;
  if (!(is >> dim >> radius)) throw std::runtime_error("pointset: bad header");
  std::vector<double> flat;
  double v;
  while (is >> v) flat.push_back(v);
  if (dim <= 0 || flat.size() % dim != 0) throw std::runtime_error("pointset: bad body");
  return PointSet(dim, std::move(flat), radius);
}

void save_pointset_file(const PointSet& s, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  save_pointset(s, os);
}

PointSet load_pointset_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return load_pointset(is);
}

}  // namespace cdspec
