#include "hofer/flow.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

namespace hofer {

HamiltonianPath& HamiltonianPath::append(ScalarField field, double duration, std::string label) {
  if (!(duration >= 0.0) || !std::isfinite(duration)) throw PreconditionError("segment duration must be >= 0");
  segments_.push_back({std::move(field), duration, nullptr, std::move(label)});
  return *this;
}

HamiltonianPath& HamiltonianPath::append_conjugated(ScalarField field, ScalarField straight,
                                                    std::shared_ptr<const Twist> twist,
                                                    double duration, std::string label) {
  if (!twist) throw PreconditionError("conjugated segment needs a twist");
  append(std::move(field), duration, std::move(label));
  segments_.back().straightening =
      std::make_shared<const Straightening>(Straightening{std::move(straight), std::move(twist)});
  return *this;
}

HamiltonianPath HamiltonianPath::then(const HamiltonianPath& next) const {
  HamiltonianPath out = *this;
  out.segments_.insert(out.segments_.end(), next.segments_.begin(), next.segments_.end());
  return out;
}

HamiltonianPath HamiltonianPath::reversed() const {
  HamiltonianPath out;
  for (auto it = segments_.rbegin(); it != segments_.rend(); ++it) {
    Segment s = *it;
    s.field = s.field.scaled(-1.0);
    if (s.straightening)
      s.straightening = std::make_shared<const Straightening>(
          Straightening{s.straightening->straight.scaled(-1.0), s.straightening->twist});
    out.segments_.push_back(std::move(s));
  }
  return out;
}

double HamiltonianPath::duration() const {
  double t = 0.0;
  for (const auto& s : segments_) t += s.duration;
  return t;
}

void VectorField::at(double theta, double h, double& vt, double& vh) const {
  const int nt = grid.n_theta, nh = grid.n_h;
  double x = theta * nt - 0.5;
  double y = h * nh - 0.5;
  double fx0 = std::floor(x), fy0 = std::floor(y);
  double fx = x - fx0, fy = y - fy0;
  long long ix = (long long)fx0 % nt;
  int i0 = int(ix < 0 ? ix + nt : ix);
  int i1 = i0 + 1 == nt ? 0 : i0 + 1;
  int j0 = int(fy0);
  const double* d = v.data();
  double r0t = 0, r0h = 0, r1t = 0, r1h = 0;
  if (j0 >= 0 && j0 < nh) {
    const double* row = d + 2 * std::size_t(j0) * nt;
    r0t = row[2 * i0] + fx * (row[2 * i1] - row[2 * i0]);
    r0h = row[2 * i0 + 1] + fx * (row[2 * i1 + 1] - row[2 * i0 + 1]);
  }
  if (j0 + 1 >= 0 && j0 + 1 < nh) {
    const double* row = d + 2 * std::size_t(j0 + 1) * nt;
    r1t = row[2 * i0] + fx * (row[2 * i1] - row[2 * i0]);
    r1h = row[2 * i0 + 1] + fx * (row[2 * i1 + 1] - row[2 * i0 + 1]);
  }
  vt = r0t + fy * (r1t - r0t);
  vh = r0h + fy * (r1h - r0h);
}

VectorField hamiltonian_vector_field(const ScalarField& H) {
  const AnnulusGrid& g = H.grid();
  VectorField out{g, std::vector<double>(2 * g.size(), 0.0), 0.0};
  const double inv2dt = 0.5 * g.n_theta, inv2dh = 0.5 * g.n_h;
  for (int j = 0; j < g.n_h; ++j) {
    for (int i = 0; i < g.n_theta; ++i) {
      double up = j + 1 < g.n_h ? H(i, j + 1) : 0.0;
      double dn = j > 0 ? H(i, j - 1) : 0.0;
      double dHdh = (up - dn) * inv2dh;
      double dHdt = (H(i + 1, j) - H(i - 1, j)) * inv2dt;
      std::size_t k = 2 * g.index(i, j);
      out.v[k] = dHdh;
      out.v[k + 1] = -dHdt;
      out.max_speed = std::max(out.max_speed, std::hypot(dHdh, dHdt));
    }
  }
  return out;
}

namespace {

bool is_shear(const VectorField& vf) {
  const AnnulusGrid& g = vf.grid;
  for (int j = 0; j < g.n_h; ++j) {
    double row = vf.v[2 * g.index(0, j)];
    for (int i = 0; i < g.n_theta; ++i) {
      std::size_t k = 2 * g.index(i, j);
      if (vf.v[k + 1] != 0.0 || vf.v[k] != row) return false;
    }
  }
  return true;
}

}  // namespace

std::shared_ptr<const PreparedPath> prepare(const HamiltonianPath& path) {
  auto out = std::make_shared<PreparedPath>();
  out->cell = 1.0;
  for (const auto& s : path.segments()) {
    const ScalarField& f = s.straightening ? s.straightening->straight : s.field;
    PreparedSegment ps{hamiltonian_vector_field(f), s.duration,
                       s.straightening ? s.straightening->twist : nullptr};
    ps.shear = is_shear(ps.vf);
    out->cell = std::min({out->cell, f.grid().dtheta(), f.grid().dh()});
    out->segments.push_back(std::move(ps));
  }
  return out;
}

namespace {

template <class Velocity, class Record>
Point rk4_run(const Velocity& vel, Point p, double T, const FlowOptions& opt, double cell, const Record& record) {
  const double limit = opt.max_cells_per_step * cell;
  double t = 0.0;
  while (T - t > 1e-14 * T) {
    double k1t, k1h;
    vel(p.theta, p.h, k1t, k1h);
    double speed = std::sqrt(k1t * k1t + k1h * k1h);
    double step = std::min(opt.dt, T - t);
    if (!opt.strict && speed * step > 0.9 * limit) step = 0.9 * limit / speed;
    for (;;) {
      double k2t, k2h, k3t, k3h, k4t, k4h;
      vel(p.theta + 0.5 * step * k1t, p.h + 0.5 * step * k1h, k2t, k2h);
      vel(p.theta + 0.5 * step * k2t, p.h + 0.5 * step * k2h, k3t, k3h);
      vel(p.theta + step * k3t, p.h + step * k3h, k4t, k4h);
      double m2 = std::max({k2t * k2t + k2h * k2h, k3t * k3t + k3h * k3h, k4t * k4t + k4h * k4h});
      double m = std::max(speed, std::sqrt(m2));
      if (m * step > limit) {
        if (opt.strict) throw NumericalFault("step moves a node more than the allowed cells");
        step *= 0.5;
        if (step < 1e-12 * T) throw NumericalFault("step size collapsed");
        continue;
      }
      p.theta += step / 6.0 * (k1t + 2 * k2t + 2 * k3t + k4t);
      p.h += step / 6.0 * (k1h + 2 * k2h + 2 * k3h + k4h);
      t += step;
      record(p);
      break;
    }
  }
  return p;
}

void run_segment(const PreparedSegment& seg, Point& p, const FlowOptions& opt, double cell,
                 std::vector<Point>* traj) {
  if (seg.duration <= 0.0 || seg.vf.max_speed == 0.0) return;
  if (seg.shear) {
    double vt, vh;
    seg.vf.at(p.theta, p.h, vt, vh);
    p.theta += seg.duration * vt;
    if (traj) traj->push_back({seg.twist ? p.theta - seg.twist->shift(p.h) : p.theta, p.h});
    return;
  }
  auto vel = [&](double t, double h, double& vt, double& vh) { seg.vf.at(t, h, vt, vh); };
  auto record = [&](Point q) {
    if (!traj) return;
    if (seg.twist) q.theta -= seg.twist->shift(q.h);
    traj->push_back(q);
  };
  p = rk4_run(vel, p, seg.duration, opt, cell, record);
}

}  // namespace

Point advect(const PreparedPath& path, Point p, const FlowOptions& opt, std::vector<Point>* trajectory) {
  if (!(opt.dt > 0.0)) throw PreconditionError("dt must be positive");
  if (trajectory) trajectory->push_back(p);
  for (const auto& seg : path.segments) {
    if (seg.twist) p.theta += seg.twist->shift(p.h);
    run_segment(seg, p, opt, path.cell, trajectory);
    if (seg.twist) p.theta -= seg.twist->shift(p.h);
    if (!std::isfinite(p.theta) || !std::isfinite(p.h)) throw NumericalFault("trajectory diverged");
  }
  return p;
}

Point rk4_flow(const Velocity& v, Point p, double T, const FlowOptions& opt, double cell) {
  if (!(opt.dt > 0.0) || !(T >= 0.0)) throw PreconditionError("dt must be positive and T non-negative");
  if (T == 0.0) return p;
  return rk4_run(v, p, T, opt, cell, [](Point) {});
}

Point FlowMap::interpolate(Point p) const {
  const int nt = grid.n_theta, nh = grid.n_h;
  double x = p.theta * nt - 0.5;
  double y = p.h * nh - 0.5;
  double fx0 = std::floor(x);
  double fx = x - fx0;
  long long ix = (long long)fx0 % nt;
  int i0 = int(ix < 0 ? ix + nt : ix);
  int j0 = std::clamp(int(std::floor(y)), 0, nh - 2);
  double fy = std::clamp(y - j0, 0.0, 1.0);
  double dt = 0.0, dh = 0.0;
  for (int b = 0; b < 2; ++b) {
    for (int a = 0; a < 2; ++a) {
      int i = i0 + a, j = j0 + b;
      double w = (a ? fx : 1 - fx) * (b ? fy : 1 - fy);
      const Point& im = at(i, j);
      Point nd = node(grid.wrap(i), j);
      dt += w * (im.theta - nd.theta);
      dh += w * (im.h - nd.h);
    }
  }
  return {p.theta + dt, p.h + dh};
}

Point FlowMap::apply(Point p) const {
  if (provenance) return advect(*provenance, p, options);
  return interpolate(p);
}

FlowMap identity_map(AnnulusGrid g) {
  FlowMap m;
  m.grid = g;
  m.image.resize(g.size());
  for (int j = 0; j < g.n_h; ++j)
    for (int i = 0; i < g.n_theta; ++i) m.image[g.index(i, j)] = m.node(i, j);
  return m;
}

int worker_count() {
  if (const char* env = std::getenv("HOFER_LAB_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  int workers = int(std::min<std::size_t>(worker_count(), n));
  if (workers <= 1) {
    for (std::size_t k = 0; k < n; ++k) body(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (;;) {
      std::size_t k = next.fetch_add(64);
      if (k >= n || failed) return;
      try {
        for (std::size_t e = std::min(n, k + 64); k < e; ++k) body(k);
      } catch (...) {
        if (!failed.exchange(true)) err = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

FlowMap integrate_flow(const HamiltonianPath& path, const FlowOptions& opt) {
  if (!(opt.dt > 0.0)) throw PreconditionError("dt must be positive");
  if (!opt.map_grid && path.empty()) throw PreconditionError("empty path needs an explicit map grid");
  AnnulusGrid g = opt.map_grid ? *opt.map_grid : path.segments().front().field.grid();
  FlowMap m = identity_map(g);
  m.provenance = prepare(path);
  m.options = opt;
  parallel_for(g.size(), [&](std::size_t k) {
    int i = int(k % g.n_theta), j = int(k / g.n_theta);
    m.image[k] = advect(*m.provenance, m.node(i, j), opt);
  });
  return m;
}

double hofer_length(const HamiltonianPath& path) {
  double L = 0.0;
  for (const auto& s : path.segments()) L += s.duration * s.field.oscillation();
  return L;
}

namespace {

double check_integer(double w) {
  if (std::abs(w - std::round(w)) > 0.05)
    throw NumericalFault("winding " + std::to_string(w) + " is not within 0.05 of an integer");
  return w;
}

}  // namespace

double translation_winding(const HamiltonianPath& path, Point seed, const FlowOptions& opt) {
  auto prep = prepare(path);
  return check_integer(advect(*prep, seed, opt).theta - seed.theta);
}

double translation_winding(const FlowMap& map, Point seed) {
  if (!map.lift_valid) throw PreconditionError("map has no reconstructible lift");
  return check_integer(map.apply(seed).theta - seed.theta);
}

double translation_iterate(const FlowMap& map, Point seed, int N) {
  if (N < 1) throw PreconditionError("N must be >= 1");
  if (!map.lift_valid) throw PreconditionError("map has no reconstructible lift");
  Point q = seed;
  for (int k = 0; k < N; ++k) {
    q = map.interpolate(q);
    if (!(q.h > 0.0 && q.h < 1.0) || !std::isfinite(q.theta))
      throw NumericalFault("orbit left the annulus interior");
  }
  return (q.theta - seed.theta) / N;
}

double area_distortion(const FlowMap& map) {
  const AnnulusGrid& g = map.grid;
  double worst = 0.0;
  for (int j = 1; j + 1 < g.n_h; ++j) {
    for (int i = 0; i < g.n_theta; ++i) {
      const Point& e = map.at(i + 1, j);
      const Point& w = map.at(i - 1, j);
      const Point& n = map.at(i, j + 1);
      const Point& s = map.at(i, j - 1);
      double et = e.theta + (i + 1 == g.n_theta ? 1.0 : 0.0);
      double wt = w.theta - (i == 0 ? 1.0 : 0.0);
      double a = (et - wt) * 0.5 * g.n_theta;
      double c = (e.h - w.h) * 0.5 * g.n_theta;
      double b = (n.theta - s.theta) * 0.5 * g.n_h;
      double d = (n.h - s.h) * 0.5 * g.n_h;
      worst = std::max(worst, std::abs(a * d - b * c - 1.0));
    }
  }
  return worst;
}

namespace {

struct Seg {
  Point a, b;
};

double point_segment(Point p, Point a, Point b) {
  double ux = b.theta - a.theta, uh = b.h - a.h;
  double L2 = ux * ux + uh * uh;
  double t = L2 > 0 ? std::clamp(((p.theta - a.theta) * ux + (p.h - a.h) * uh) / L2, 0.0, 1.0) : 0.0;
  return std::hypot(p.theta - a.theta - t * ux, p.h - a.h - t * uh);
}

// Buckets of segments keyed by (θ mod 1, h); each segment is stored with
// its θ shifted so that its first endpoint lies in [0, 1).
class SegmentIndex {
 public:
  SegmentIndex(const std::vector<Point>& curve, int cells) : n_(cells), buckets_(cells * cells) {
    for (std::size_t k = 0; k < curve.size(); ++k) {
      Point a = curve[k], b = curve[(k + 1) % curve.size()];
      double s = std::floor(a.theta);
      a.theta -= s;
      b.theta -= s;
      segs_.push_back({a, b});
      int i0 = int(std::floor(std::min(a.theta, b.theta) * n_)), i1 = int(std::floor(std::max(a.theta, b.theta) * n_));
      int j0 = cell_h(std::min(a.h, b.h)), j1 = cell_h(std::max(a.h, b.h));
      for (int i = i0; i <= i1; ++i)
        for (int j = j0; j <= j1; ++j) buckets_[j * n_ + ((i % n_) + n_) % n_].push_back(k);
    }
  }

  int cell_h(double h) const { return std::clamp(int(std::floor(h * n_)), 0, n_ - 1); }
  const std::vector<std::size_t>& bucket(int i, int j) const { return buckets_[j * n_ + ((i % n_) + n_) % n_]; }
  const Seg& seg(std::size_t k) const { return segs_[k]; }
  int cells() const { return n_; }

  double distance(Point p) const {
    double pt = p.theta - std::floor(p.theta);
    int ci = int(std::floor(pt * n_)), cj = cell_h(p.h);
    double best = INFINITY;
    for (int r = 0; r <= n_; ++r) {
      for (int j = cj - r; j <= cj + r; ++j) {
        if (j < 0 || j >= n_) continue;
        for (int i = ci - r; i <= ci + r; ++i) {
          if (std::max(std::abs(i - ci), std::abs(j - cj)) != r) continue;
          for (std::size_t k : bucket(i, j)) {
            const Seg& s = segs_[k];
            double shift = std::round(pt - s.a.theta);
            for (double d : {shift - 1, shift, shift + 1})
              best = std::min(best, point_segment({pt - d, p.h}, s.a, s.b));
          }
        }
      }
      if (best <= double(r) / n_) break;
    }
    return best;
  }

 private:
  int n_;
  std::vector<std::vector<std::size_t>> buckets_;
  std::vector<Seg> segs_;
};

double cross(Point o, Point a, Point b) {
  return (a.theta - o.theta) * (b.h - o.h) - (a.h - o.h) * (b.theta - o.theta);
}

bool segments_cross(Point a, Point b, Point c, Point d) {
  double d1 = cross(c, d, a), d2 = cross(c, d, b), d3 = cross(a, b, c), d4 = cross(a, b, d);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

std::vector<Point> densify(const std::vector<Point>& c, double spacing) {
  std::vector<Point> out;
  for (std::size_t k = 0; k < c.size(); ++k) {
    Point a = c[k], b = c[(k + 1) % c.size()];
    int m = std::max(1, int(std::ceil(std::hypot(b.theta - a.theta, b.h - a.h) / spacing)));
    for (int s = 0; s < m; ++s) out.push_back({a.theta + (b.theta - a.theta) * s / m, a.h + (b.h - a.h) * s / m});
  }
  return out;
}

double directed(const std::vector<Point>& from, const SegmentIndex& to) {
  double d = 0.0;
  for (const Point& p : from) d = std::max(d, to.distance(p));
  return d;
}

}  // namespace

double hausdorff_distance(const Region& a, const Region& b) {
  constexpr double spacing = 1e-3;
  auto da = densify(a.boundary, spacing), db = densify(b.boundary, spacing);
  SegmentIndex ia(a.boundary, 64), ib(b.boundary, 64);
  return std::max(directed(da, ib), directed(db, ia));
}

bool self_intersects(const Region& r) {
  const auto& c = r.boundary;
  const std::size_t n = c.size();
  if (n < 4) return false;
  SegmentIndex idx(c, 128);
  for (int j = 0; j < idx.cells(); ++j) {
    for (int i = 0; i < idx.cells(); ++i) {
      const auto& bk = idx.bucket(i, j);
      for (std::size_t x = 0; x < bk.size(); ++x) {
        for (std::size_t y = x + 1; y < bk.size(); ++y) {
          std::size_t p = bk[x], q = bk[y];
          if (p == q || (p + 1) % n == q || (q + 1) % n == p) continue;
          Seg s = idx.seg(p), t = idx.seg(q);
          double shift = std::round(s.a.theta - t.a.theta);
          for (double d : {shift - 1, shift, shift + 1}) {
            Point c0{t.a.theta + d, t.a.h}, c1{t.b.theta + d, t.b.h};
            if (segments_cross(s.a, s.b, c0, c1)) return true;
          }
        }
      }
    }
  }
  return false;
}

TransportResult region_transport(const FlowMap& map, const Region& r, const Region& target) {
  if (r.boundary.size() < 3) throw PreconditionError("region needs at least 3 vertices");
  for (const Point& p : r.boundary)
    if (!(p.h > 0.0 && p.h < 1.0)) throw PreconditionError("region leaves the annulus");
  const double sep = 2.0 * std::min(map.grid.dtheta(), map.grid.dh());
  constexpr int kMaxDepth = 12;

  struct Vertex {
    Point src, img;
    int depth;
  };
  std::vector<Vertex> cur(r.boundary.size());
  parallel_for(cur.size(), [&](std::size_t k) { cur[k] = {r.boundary[k], map.apply(r.boundary[k]), 0}; });

  for (int pass = 0; pass < kMaxDepth; ++pass) {
    std::vector<std::size_t> split;
    for (std::size_t k = 0; k < cur.size(); ++k) {
      const Vertex& a = cur[k];
      const Vertex& b = cur[(k + 1) % cur.size()];
      if (std::hypot(a.img.theta - b.img.theta, a.img.h - b.img.h) > sep && a.depth < kMaxDepth)
        split.push_back(k);
    }
    if (split.empty()) break;
    std::vector<Vertex> mids(split.size());
    parallel_for(split.size(), [&](std::size_t s) {
      const Vertex& a = cur[split[s]];
      const Vertex& b = cur[(split[s] + 1) % cur.size()];
      Point m{0.5 * (a.src.theta + b.src.theta), 0.5 * (a.src.h + b.src.h)};
      mids[s] = {m, map.apply(m), std::max(a.depth, b.depth) + 1};
    });
    std::vector<Vertex> next;
    next.reserve(cur.size() + mids.size());
    std::size_t s = 0;
    for (std::size_t k = 0; k < cur.size(); ++k) {
      next.push_back(cur[k]);
      if (s < split.size() && split[s] == k) next.push_back(mids[s++]);
    }
    cur = std::move(next);
  }

  TransportResult out;
  for (const auto& v : cur) out.image.boundary.push_back(v.img);
  if (self_intersects(out.image)) throw NumericalFault("transported boundary self-intersects");
  out.hausdorff = hausdorff_distance(out.image, target);
  return out;
}

void write_map_csv(std::ostream& os, const FlowMap& map) {
  os.precision(17);
  os << map.grid.n_theta << ',' << map.grid.n_h << '\n' << "theta_lift,h\n";
  for (const Point& p : map.image) os << p.theta << ',' << p.h << '\n';
}

FlowMap read_map_csv(std::istream& is) {
  std::string line;
  int nt = 0, nh = 0;
  char comma = 0;
  if (!std::getline(is, line)) throw PreconditionError("empty map CSV");
  std::istringstream head(line);
  if (!(head >> nt >> comma >> nh)) throw PreconditionError("map CSV header must be n_theta,n_h");
  FlowMap m = identity_map(AnnulusGrid(nt, nh));
  m.lift_valid = false;
  std::size_t k = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line.rfind("theta", 0) == 0) continue;
    std::istringstream row(line);
    Point p;
    if (!(row >> p.theta >> comma >> p.h) || k >= m.image.size()) throw PreconditionError("malformed map CSV row");
    m.image[k++] = p;
  }
  if (k != m.image.size()) throw PreconditionError("map CSV row count does not match grid");
  return m;
}

void write_trajectory_csv(std::ostream& os, const std::vector<Point>& traj) {
  os.precision(17);
  os << "step,theta_lift,h\n";
  for (std::size_t k = 0; k < traj.size(); ++k) os << k << ',' << traj[k].theta << ',' << traj[k].h << '\n';
}

void write_pgm(std::ostream& os, const ScalarField& f) {
  const auto& g = f.grid();
  double lo = f.min(), hi = f.max();
  double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
  os << "P5\n" << g.n_theta << ' ' << g.n_h << "\n255\n";
  for (int j = g.n_h - 1; j >= 0; --j)
    for (int i = 0; i < g.n_theta; ++i) os.put(char(static_cast<unsigned char>(std::lround((f(i, j) - lo) * scale))));
}

void write_svg(std::ostream& os, const std::vector<Region>& regions) {
  constexpr double S = 512.0;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 512 512\">\n"
     << "<rect width=\"512\" height=\"512\" fill=\"white\" stroke=\"black\"/>\n";
  const char* colors[] = {"black", "crimson", "steelblue", "darkgreen"};
  for (std::size_t k = 0; k < regions.size(); ++k) {
    os << "<polygon fill=\"none\" stroke=\"" << colors[k % 4] << "\" points=\"";
    for (const Point& p : regions[k].boundary) {
      double t = p.theta - std::floor(p.theta);
      os << t * S << ',' << (1.0 - p.h) * S << ' ';
    }
    os << "\"/>\n";
  }
  os << "</svg>\n";
}

}  // namespace hofer
