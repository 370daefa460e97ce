#include "hofer/field.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace hofer {

AnnulusGrid::AnnulusGrid(int nt, int nh) : n_theta(nt), n_h(nh) {
  if (nt <= 0 || nh <= 2) throw PreconditionError("grid needs n_theta > 0 and n_h > 2");
}

ScalarField::ScalarField(AnnulusGrid g, double support_margin)
    : grid_(g), margin_(support_margin), values_(g.size(), 0.0) {
  if (!(support_margin >= 0.0 && support_margin < 0.5))
    throw PreconditionError("support_margin must lie in [0, 1/2)");
}

ScalarField::ScalarField(AnnulusGrid g, double support_margin, std::vector<double> values)
    : ScalarField(g, support_margin) {
  if (values.size() != g.size()) throw PreconditionError("field size does not match grid");
  for (int j = 0; j < g.n_h; ++j) {
    bool zero_row = row_forced_zero(j);
    for (int i = 0; i < g.n_theta; ++i) {
      double v = values[g.index(i, j)];
      if (!std::isfinite(v)) throw PreconditionError("non-finite field value");
      if (zero_row && v != 0.0) throw PreconditionError("field value inside support margin");
    }
  }
  values_ = std::move(values);
}

bool ScalarField::row_forced_zero(int j) const {
  if (margin_ == 0.0) return false;
  if (j == 0 || j == grid_.n_h - 1) return true;
  double h = grid_.h_center(j);
  return h < margin_ || h > 1.0 - margin_;
}

ScalarField ScalarField::sample(AnnulusGrid g, double support_margin,
                                const std::function<double(double, double)>& f) {
  ScalarField out(g, support_margin);
  for (int j = 0; j < g.n_h; ++j) {
    if (out.row_forced_zero(j)) continue;
    double h = g.h_center(j);
    for (int i = 0; i < g.n_theta; ++i) {
      double v = f(g.theta_center(i), h);
      if (!std::isfinite(v)) throw PreconditionError("non-finite field value");
      out.values_[g.index(i, j)] = v;
    }
  }
  return out;
}

double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }
double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }

ScalarField ScalarField::scaled(double a) const {
  ScalarField out = *this;
  for (double& v : out.values_) v *= a;
  return out;
}

ScalarField ScalarField::plus(const ScalarField& o, double b) const {
  if (!(o.grid_ == grid_)) throw PreconditionError("field grids differ");
  ScalarField out = *this;
  out.margin_ = std::min(margin_, o.margin_);
  for (std::size_t k = 0; k < values_.size(); ++k) out.values_[k] += b * o.values_[k];
  return out;
}

double integrate(const ScalarField& f) {
  // Pairwise summation keeps linearity at machine precision for large grids.
  const auto& v = f.values();
  std::vector<double> acc(v.begin(), v.end());
  std::size_t n = acc.size();
  while (n > 1) {
    std::size_t half = (n + 1) / 2;
    for (std::size_t k = 0; k < n / 2; ++k) acc[k] = acc[2 * k] + acc[2 * k + 1];
    if (n % 2) acc[n / 2] = acc[n - 1];
    n = half;
  }
  return (v.empty() ? 0.0 : acc[0]) * f.grid().cell_area();
}

double region_area(const Region& r) {
  const auto& b = r.boundary;
  double s = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k) {
    const Point& p = b[k];
    const Point& q = b[(k + 1) % b.size()];
    s += p.theta * q.h - q.theta * p.h;
  }
  return 0.5 * s;
}

void require_counterclockwise(const Region& r) {
  if (r.boundary.size() < 3) throw PreconditionError("region needs at least 3 vertices");
  if (region_area(r) <= 0.0) throw PreconditionError("region orientation is clockwise");
}

bool region_contains(const Region& r, Point p) {
  const auto& b = r.boundary;
  if (b.empty()) return false;
  double ref = b[0].theta;
  double x = ref + std::remainder(p.theta - ref, 1.0);
  // The region may sit near the seam; try the two nearest translates.
  for (double shift : {0.0, 1.0, -1.0}) {
    double px = x + shift;
    bool in = false;
    for (std::size_t k = 0, m = b.size() - 1; k < b.size(); m = k++) {
      const Point& a = b[k];
      const Point& c = b[m];
      if ((a.h > p.h) != (c.h > p.h)) {
        double xi = a.theta + (p.h - a.h) * (c.theta - a.theta) / (c.h - a.h);
        if (px < xi) in = !in;
      }
    }
    if (in) return true;
  }
  return false;
}

namespace {

void append_arc(std::vector<Point>& out, double ct, double ch, double r, double a0) {
  constexpr int kArcPoints = 16;
  for (int k = 0; k <= kArcPoints; ++k) {
    double a = a0 + 0.5 * std::numbers::pi * k / kArcPoints;
    out.push_back({ct + r * std::cos(a), ch + r * std::sin(a)});
  }
}

Region rounded_rect(double t0, double t1, double h0, double h1, double r) {
  Region out;
  auto& b = out.boundary;
  const double pi = std::numbers::pi;
  append_arc(b, t1 - r, h0 + r, r, -0.5 * pi);
  append_arc(b, t1 - r, h1 - r, r, 0.0);
  append_arc(b, t0 + r, h1 - r, r, 0.5 * pi);
  append_arc(b, t0 + r, h0 + r, r, pi);
  return out;
}

}  // namespace

double disk_top(double A, double delta, double delta_prime) {
  double w = 1.0 - 2.0 * delta;
  double r = 0.5 * std::min(delta, delta_prime);
  double top = delta_prime + A / w;
  // Two passes of Newton on the affine area(top) settle it to rounding.
  for (int k = 0; k < 2; ++k) {
    double a = region_area(rounded_rect(delta, 1.0 - delta, delta_prime, top, r));
    top += (A - a) / w;
  }
  return top;
}

Region build_disk_region(double A, double delta, double delta_prime) {
  if (!(A > 0.5 && A < 1.0)) throw PreconditionError("disk area must lie in (1/2, 1)");
  if (!(delta > 0.0 && delta_prime > 0.0 && delta < 0.25))
    throw PreconditionError("delta and delta_prime must be small positive numbers");
  double top = disk_top(A, delta, delta_prime);
  if (!(top < 1.0 - delta_prime)) throw PreconditionError("disk region does not fit in the annulus");
  return rounded_rect(delta, 1.0 - delta, delta_prime, top, 0.5 * std::min(delta, delta_prime));
}

Region rectangle_region(double t0, double t1, double h0, double h1) {
  return Region{{{t0, h0}, {t1, h0}, {t1, h1}, {t0, h1}}};
}

void write_field_csv(std::ostream& os, const ScalarField& f) {
  const auto& g = f.grid();
  os.precision(17);
  os << g.n_theta << ',' << g.n_h << ',' << f.support_margin() << '\n';
  for (int j = 0; j < g.n_h; ++j) {
    for (int i = 0; i < g.n_theta; ++i) os << (i ? "," : "") << f(i, j);
    os << '\n';
  }
}

namespace {

std::vector<double> numbers_of(const std::string& line) {
  std::vector<double> out;
  std::string tok;
  std::istringstream ss(line);
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
    } catch (const std::exception&) {
      throw PreconditionError("malformed number in CSV: '" + tok + "'");
    }
  }
  return out;
}

}  // namespace

ScalarField read_field_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw PreconditionError("empty field CSV");
  auto head = numbers_of(line);
  if (head.size() != 3) throw PreconditionError("field CSV header must be n_theta,n_h,support_margin");
  AnnulusGrid g{int(head[0]), int(head[1])};
  std::vector<double> v;
  v.reserve(g.size());
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    for (double x : numbers_of(line)) v.push_back(x);
  }
  return ScalarField(g, head[2], std::move(v));
}

void write_region_csv(std::ostream& os, const Region& r) {
  os.precision(17);
  os << "theta_lift,h\n";
  for (const Point& p : r.boundary) os << p.theta << ',' << p.h << '\n';
}

Region read_region_csv(std::istream& is) {
  Region r;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r" || line.rfind("theta", 0) == 0) continue;
    auto xs = numbers_of(line);
    if (xs.size() != 2) throw PreconditionError("region CSV rows must be theta_lift,h");
    r.boundary.push_back({xs[0], xs[1]});
  }
  require_counterclockwise(r);
  return r;
}

}  // namespace hofer
