#include "hofer/constructions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <json.hpp>

namespace hofer {

namespace {

const double pi = std::numbers::pi;

double cos_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return 0.5 - 0.5 * std::cos(pi * x);
}

// ∫_0^x cos_step.
double cos_step_integral(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return x - 0.5;
  return 0.5 * x - std::sin(pi * x) / (2.0 * pi);
}

double wrap01(double t) { return t - std::floor(t); }

// Level a as a function of the lane position s in [0, 1] (0 at the outer
// edge). The loop of level a is the rectangle with half-widths
// x = xo - c·s, y = (xo·yo - a·ring/4) / x, so y decreases in a while
// a'(s) > 4·y·c / ring. a' is small near both lane edges and blends into
// the middle slope with cosine ramps, keeping the lane velocity continuous.
struct LaneProfile {
  double edge, mid, w;
};

LaneProfile lane_profile(const Geometry& g) {
  const double c = g.theta_in - g.theta_out, yo = 0.5 - g.h_out, w = 0.3;
  const double edge = 1.5 * 4.0 * yo * c / g.ring;
  // ∫_0^1 a' = 1.
  const double mid = (1.0 - edge * w) / (1.0 - w);
  return {edge, mid, w};
}

double lane_level(const LaneProfile& p, double s) {
  return p.edge * s + (p.mid - p.edge) * p.w * (cos_step_integral(s / p.w) - cos_step_integral((s - (1.0 - p.w)) / p.w));
}

// Area fraction of the ring outside the loop through (θ, h); 0 on the outer
// rectangle, 1 on the inner one.
double ring_fraction(const Geometry& g, double theta, double h) {
  const double xo = 0.5 - g.theta_out, xi = 0.5 - g.theta_in, c = xo - xi;
  const double yo = 0.5 - g.h_out, yi = 0.5 - g.b;
  double u = std::abs(wrap01(theta) - 0.5), v = std::abs(h - 0.5);
  if (u >= xo || v >= yo) return 0.0;
  if (u <= xi && v <= yi) return 1.0;
  const LaneProfile p = lane_profile(g);
  double at = u <= xi ? 1.0 : lane_level(p, (xo - u) / c);
  if (v <= yi) return at;
  // Lane position of the loop whose horizontal side passes at height v.
  double lo = 0.0, hi = 1.0;
  for (int k = 0; k < 50; ++k) {
    double s = 0.5 * (lo + hi);
    (lane_level(p, s) * 0.25 * g.ring - v * c * s + v * xo - xo * yo < 0.0 ? lo : hi) = s;
  }
  return std::min(at, lane_level(p, 0.5 * (lo + hi)));
}

// Monotone reparametrisation with Φ(0) = 0, Φ(1) = 1 and Φ' = 0 at both ends.
double level_profile(double a, double eps) {
  const double k = 1.0 / (1.0 - eps);
  auto ramp = [eps](double x) { return 0.5 * x - eps * std::sin(pi * x / eps) / (2.0 * pi); };
  if (a <= 0.0) return 0.0;
  if (a >= 1.0) return 1.0;
  if (a < eps) return k * ramp(a);
  if (a > 1.0 - eps) return 1.0 - k * ramp(1.0 - a);
  return k * (a - 0.5 * eps);
}

// Drops a function of h that is constant near the top to zero inside (1 - h_out, 1 - h_out/4).
double top_cutoff(const Geometry& g, double h) { return 1.0 - cos_step((h - (1.0 - g.h_out)) / (0.75 * g.h_out)); }

double band_rho(const Geometry& g, double h) { return 1.0 - cos_step((h - g.top) / g.beta); }

// Antiderivative of shear_rate, constant above the band.
double shear_potential(const Geometry& g, int n, double h) {
  double r = 0.5 * g.delta_dblprime;
  return n * (r * cos_step_integral((h - (g.b - g.delta_dblprime)) / r) - g.beta * cos_step_integral((h - g.top) / g.beta));
}

double shear_total(const Geometry& g, int n) {
  return n * (g.top - g.b + 0.75 * g.delta_dblprime + 0.5 * g.beta);
}

double segment_distance(Point p, Point a, Point b) {
  double dx = b.theta - a.theta, dy = b.h - a.h;
  double L2 = dx * dx + dy * dy;
  double t = L2 > 0.0 ? std::clamp(((p.theta - a.theta) * dx + (p.h - a.h) * dy) / L2, 0.0, 1.0) : 0.0;
  return std::hypot(p.theta - a.theta - t * dx, p.h - a.h - t * dy);
}

double periodic_distance(Point p, Point a, Point b) {
  double best = 1e300;
  double c = std::round(0.5 * (a.theta + b.theta) - p.theta);
  for (double s : {c - 1.0, c, c + 1.0}) best = std::min(best, segment_distance({p.theta + s, p.h}, a, b));
  return best;
}

}  // namespace

void ConstructionSpec::validate() const {
  if (!(A > 0.5 && A < 1.0)) throw PreconditionError("A must lie in (1/2, 1)");
  if (!(delta > 0.0 && delta_prime > 0.0 && delta_dblprime > 0.0)) throw PreconditionError("margins must be positive");
  if (!(corridor_width > 0.0 && lane_gap >= 0.0 && corridor_width + lane_gap <= delta))
    throw PreconditionError("need corridor_width > 0, lane_gap >= 0 and corridor_width + lane_gap <= delta");
  if (!(layer > 0.0 && layer < 0.25)) throw PreconditionError("layer must lie in (0, 1/4)");
  if (grid < 32 || map_grid < 4) throw PreconditionError("grid too coarse");
  if (!(dt > 0.0)) throw PreconditionError("dt must be positive");
  if (std::abs(n) > 64) throw PreconditionError("|n| too large");
  Geometry::of(*this);
}

Geometry Geometry::of(const ConstructionSpec& s) {
  Geometry g;
  g.A = s.A;
  g.delta = s.delta;
  g.delta_prime = s.delta_prime;
  g.delta_dblprime = s.delta_dblprime;
  g.layer = s.layer;
  g.disk = build_disk_region(s.A, s.delta, s.delta_prime);
  g.top = disk_top(s.A, s.delta, s.delta_prime);
  g.beta = s.delta;
  g.b = 1.0 - g.top - g.beta;
  g.h_out = 0.5 * s.delta_prime;
  g.theta_in = s.delta - s.lane_gap;
  g.theta_out = g.theta_in - s.corridor_width;
  if (!(g.b - s.delta_dblprime > s.delta_prime))
    throw PreconditionError("no room below the shear ramp: need 1 - top - delta - delta'' > delta'");
  const double xo = 0.5 - g.theta_out, xi = 0.5 - g.theta_in, yo = 0.5 - g.h_out, yi = 0.5 - g.b;
  g.ring = 4.0 * (xo * yo - xi * yi);
  g.bottom_level = ring_fraction(g, 0.5, s.delta_prime);
  // The disk's bottom edge and the foot of the shear ramp must sit in the uniform part of the swap.
  if (g.bottom_level <= s.layer)
    throw PreconditionError("swap smoothing layer reaches the disk; lower layer");
  if (ring_fraction(g, 0.5, g.b - 0.5 * s.delta_dblprime) >= 1.0 - s.layer)
    throw PreconditionError("swap smoothing layer reaches the shear ramp; lower layer");
  return g;
}

double hat_profile(double h, double delta) {
  return h * std::min(cos_step((h - delta / 4) / (0.75 * delta)), cos_step((1 - h - delta / 4) / (0.75 * delta)));
}

ScalarField build_hat_H(double delta, AnnulusGrid g) {
  if (!(delta > 0.0 && delta < 0.5)) throw PreconditionError("delta must lie in (0, 1/2)");
  return ScalarField::sample(g, delta / 4, [delta](double, double h) { return hat_profile(h, delta); });
}

ScalarField build_swap_flow(const Region& source, const Region& sink, const std::vector<Point>& corridor,
                            double width, AnnulusGrid g) {
  if (corridor.size() < 2) throw PreconditionError("corridor needs at least two points");
  if (!(width > 0.0)) throw PreconditionError("width must be positive");
  if (!region_contains(source, corridor.front())) throw PreconditionError("corridor must start inside the source");
  if (!region_contains(sink, corridor.back())) throw PreconditionError("corridor must end inside the sink");
  double hmin = 1.0, hmax = 0.0;
  for (const auto& p : corridor) {
    hmin = std::min(hmin, p.h);
    hmax = std::max(hmax, p.h);
  }
  if (!(hmin > width && hmax < 1.0 - width)) throw PreconditionError("corridor too close to the boundary");
  std::vector<double> arc(corridor.size(), 0.0);
  for (std::size_t k = 1; k < corridor.size(); ++k)
    arc[k] = arc[k - 1] + std::hypot(corridor[k].theta - corridor[k - 1].theta, corridor[k].h - corridor[k - 1].h);
  for (std::size_t i = 0; i < corridor.size(); ++i)
    for (std::size_t k = 0; k + 1 < corridor.size(); ++k) {
      if (std::min(std::abs(arc[i] - arc[k]), std::abs(arc[i] - arc[k + 1])) <= 2.0 * width) continue;
      if (periodic_distance(corridor[i], corridor[k], corridor[k + 1]) < width)
        throw PreconditionError("corridor comes within its width of itself");
    }
  const double core = 0.25 * width;
  return ScalarField::sample(g, 0.5 * std::min(hmin - width, 1.0 - width - hmax), [&](double t, double h) {
    if (h < hmin - width || h > hmax + width) return 0.0;
    double d = 1e300;
    for (std::size_t k = 0; k + 1 < corridor.size(); ++k) d = std::min(d, periodic_distance({t, h}, corridor[k], corridor[k + 1]));
    return 1.0 - cos_step((d - core) / (width - core));
  });
}

double lane_swap_value(const Geometry& geo, double theta, double h) {
  return level_profile(ring_fraction(geo, theta, h), geo.layer);
}

ScalarField build_lane_swap(const Geometry& geo, AnnulusGrid g) {
  return ScalarField::sample(g, 0.5 * geo.h_out, [&geo](double t, double h) { return lane_swap_value(geo, t, h); });
}

double BandTwist::shift(double h) const { return n_ * (1.0 - cos_step((h - top_) / beta_)); }

Spiral build_spiral(int n, const ConstructionSpec& spec) {
  spec.validate();
  Geometry geo = Geometry::of(spec);
  const double tc = 0.5 * (geo.theta_out + geo.theta_in), w = spec.corridor_width;
  const int K = 400 * (std::abs(n) + 1) + 1;
  Spiral s;
  std::vector<double> slope(K);
  for (int k = 0; k < K; ++k) {
    double h = geo.top + geo.beta * k / (K - 1);
    s.centerline.push_back({tc - n * band_rho(geo, h), h});
    double x = (h - geo.top) / geo.beta;
    slope[k] = n * pi / (2.0 * geo.beta) * std::sin(pi * x);
  }
  s.min_gap = 1.0;
  int arg = 0;
  for (int i = 0; i < K; ++i)
    for (int k = 0; k + 1 < K; ++k)
      for (double sh : {-1.0, 1.0}) {
        Point a{s.centerline[k].theta + sh, s.centerline[k].h}, b{s.centerline[k + 1].theta + sh, s.centerline[k + 1].h};
        double d = segment_distance(s.centerline[i], a, b);
        if (d < s.min_gap) {
          s.min_gap = d;
          arg = i;
        }
      }
  // A shear keeps horizontal widths, so the lane's cross-section shrinks with the slope.
  s.tube_thickness = w / std::sqrt(1.0 + slope[arg] * slope[arg]);
  if (s.min_gap <= s.tube_thickness) throw PreconditionError("spiral coils overlap at the requested width");
  return s;
}

double shear_rate(const Geometry& geo, int n, double h) {
  double r = 0.5 * geo.delta_dblprime;
  return n * cos_step((h - (geo.b - geo.delta_dblprime)) / r) * band_rho(geo, h);
}

ScalarField build_shear(int n, const ConstructionSpec& spec) {
  Geometry geo = Geometry::of(spec);
  return ScalarField::sample(spec.field_grid(), 0.25 * geo.h_out,
                             [&](double, double h) { return shear_potential(geo, n, h) * top_cutoff(geo, h); });
}

HamiltonianPath assemble_psi_path(const ConstructionSpec& spec) {
  spec.validate();
  Geometry geo = Geometry::of(spec);
  AnnulusGrid g = spec.field_grid();
  auto twist = std::make_shared<const BandTwist>(geo, spec.n);
  ScalarField swap = build_lane_swap(geo, g);
  ScalarField twisted = ScalarField::sample(g, 0.5 * geo.h_out, [&](double t, double h) {
    return lane_swap_value(geo, t + twist->shift(h), h);
  });
  HamiltonianPath p;
  p.append_conjugated(std::move(twisted), swap, twist, geo.half_period(), "spiral transfer");
  p.append(build_shear(spec.n, spec), 1.0, "shear");
  p.append(swap.scaled(-1.0), geo.half_period(), "return");
  return p;
}

double naive_rotation_baseline(int n, double A, const ConstructionSpec& spec) {
  ConstructionSpec s = spec;
  s.A = A;
  s.n = n;
  Geometry geo = Geometry::of(s);
  const double r = geo.delta_prime - geo.h_out;
  auto f = ScalarField::sample(s.field_grid(), 0.25 * geo.h_out, [&](double, double h) {
    double g = n * (r * cos_step_integral((h - geo.h_out) / r) - geo.beta * cos_step_integral((h - geo.top) / geo.beta));
    return g * top_cutoff(geo, h);
  });
  HamiltonianPath p;
  p.append(std::move(f), 1.0, "rotation");
  return hofer_length(p);
}

PsiResult assemble_psi(const ConstructionSpec& spec) {
  Geometry geo = Geometry::of(spec);
  PsiResult r;
  r.path = assemble_psi_path(spec);
  FlowOptions opt;
  opt.dt = spec.dt;
  opt.map_grid = AnnulusGrid(spec.map_grid, spec.map_grid);
  r.map = integrate_flow(r.path, opt);
  r.transport = region_transport(r.map, geo.disk, geo.disk);

  TransportCertificate& c = r.cert;
  c.n = spec.n;
  c.A = spec.A;
  Point seed = geo.seed();
  c.tau = r.map.apply(seed).theta - seed.theta;
  try {
    c.tau_iterate = translation_iterate(r.map, seed, 20);
  } catch (const NumericalFault&) {
    c.tau_iterate = std::nan("");
  }
  c.length = hofer_length(r.path);
  for (const auto& s : r.path.segments()) c.stage_lengths.push_back(s.duration * s.field.oscillation());
  c.expected_stage_lengths = {geo.half_period(), std::abs(shear_total(geo, spec.n)), geo.half_period()};
  c.lower_bound = 0.5 * std::abs(spec.n) * (2.0 * spec.A - 1.0);
  c.upper_bound = std::abs(spec.n) * (2.0 * spec.A - 1.0) + 1.0;
  c.baseline = naive_rotation_baseline(spec.n, spec.A, spec);
  c.area_distortion = area_distortion(r.map);
  c.disk_area_error = std::abs(std::abs(region_area(r.transport.image)) - region_area(geo.disk));
  c.disk_return_error = r.transport.hausdorff;
  c.disk_tolerance = 2.0 * std::max({spec.delta, spec.delta_prime, spec.delta_dblprime});

  if (!(std::abs(c.tau - spec.n) <= 0.05)) c.failures.push_back("translation number");
  if (!(std::abs(c.tau_iterate - spec.n) <= 0.1)) c.failures.push_back("iterated translation number");
  if (!(c.length >= c.lower_bound && c.length < c.upper_bound)) c.failures.push_back("length bounds");
  if (!(c.disk_return_error <= c.disk_tolerance)) c.failures.push_back("disk return");
  for (std::size_t k = 0; k < c.stage_lengths.size(); ++k)
    if (std::abs(c.stage_lengths[k] - c.expected_stage_lengths[k]) > 0.05 * std::max(c.expected_stage_lengths[k], 1e-3))
      c.failures.push_back("stage " + std::to_string(k + 1) + " length");
  c.passed = c.failures.empty();
  return r;
}

void write_certificate_json(std::ostream& os, const TransportCertificate& c) {
  nlohmann::ordered_json j;
  j["n"] = c.n;
  j["A"] = c.A;
  j["tau"] = c.tau;
  j["tau_iterate"] = c.tau_iterate;
  j["length"] = c.length;
  j["stage_lengths"] = c.stage_lengths;
  j["expected_stage_lengths"] = c.expected_stage_lengths;
  j["lower_bound"] = c.lower_bound;
  j["upper_bound"] = c.upper_bound;
  j["baseline"] = c.baseline;
  j["area_distortion"] = c.area_distortion;
  j["disk_area_error"] = c.disk_area_error;
  j["disk_return_error"] = c.disk_return_error;
  j["disk_tolerance"] = c.disk_tolerance;
  j["passed"] = c.passed;
  j["failures"] = c.failures;
  os << j.dump(2) << '\n';
}

}  // namespace hofer
