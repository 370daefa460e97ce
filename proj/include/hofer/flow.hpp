#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hofer/field.hpp"

namespace hofer {

// Area-preserving shear (θ, h) -> (θ + shift(h), h).
class Twist {
 public:
  virtual ~Twist() = default;
  virtual double shift(double h) const = 0;
};

// A segment whose field is straight∘T for the shear T. Its flow is
// T⁻¹ ∘ flow(straight) ∘ T, which stays resolvable when the sampled
// field itself is too twisted for the grid.
struct Straightening {
  ScalarField straight;
  std::shared_ptr<const Twist> twist;
};

struct Segment {
  ScalarField field;
  double duration = 0.0;
  std::shared_ptr<const Straightening> straightening;
  std::string label;
};

class HamiltonianPath {
 public:
  HamiltonianPath& append(ScalarField field, double duration, std::string label = {});
  HamiltonianPath& append_conjugated(ScalarField field, ScalarField straight,
                                     std::shared_ptr<const Twist> twist, double duration,
                                     std::string label = {});
  HamiltonianPath then(const HamiltonianPath& next) const;
  // Same endpoints traversed backwards; its time-1 map is the inverse.
  HamiltonianPath reversed() const;

  const std::vector<Segment>& segments() const { return segments_; }
  double duration() const;
  bool empty() const { return segments_.empty(); }

 private:
  std::vector<Segment> segments_;
};

struct VectorField {
  AnnulusGrid grid;
  std::vector<double> v;  // interleaved (dθ/dt, dh/dt) per cell
  double max_speed = 0.0;

  // Bilinear in cell centers, periodic in θ, zero beyond the outer rows.
  void at(double theta, double h, double& vt, double& vh) const;
};

// (∂H/∂h, −∂H/∂θ) by centered differences.
VectorField hamiltonian_vector_field(const ScalarField& H);

struct FlowOptions {
  double dt = 5e-4;               // largest step
  double max_cells_per_step = 1.0;
  bool strict = false;            // throw instead of shrinking a step
  std::optional<AnnulusGrid> map_grid;  // node grid of the FlowMap; defaults to the field grid
};

struct PreparedSegment {
  VectorField vf;
  double duration = 0.0;
  std::shared_ptr<const Twist> twist;
  bool shear = false;  // velocity (v(h), 0): the flow is solved exactly
};

struct PreparedPath {
  std::vector<PreparedSegment> segments;
  double cell = 0.0;
};

std::shared_ptr<const PreparedPath> prepare(const HamiltonianPath& path);

// One point through the whole path. trajectory, if given, receives every accepted step.
Point advect(const PreparedPath& path, Point p, const FlowOptions& opt,
             std::vector<Point>* trajectory = nullptr);

using Velocity = std::function<void(double theta, double h, double& vt, double& vh)>;
// The integrator on its own, for analytic velocity fields.
Point rk4_flow(const Velocity& v, Point p, double T, const FlowOptions& opt, double cell);

struct FlowMap {
  AnnulusGrid grid;
  std::vector<Point> image;
  bool lift_valid = true;  // false for maps read from files
  std::shared_ptr<const PreparedPath> provenance;
  FlowOptions options;

  Point node(int i, int j) const { return {grid.theta_center(i), grid.h_center(j)}; }
  const Point& at(int i, int j) const { return image[grid.index(i, j)]; }
  // Bilinear interpolation of the lift displacement.
  Point interpolate(Point p) const;
  // Exact re-advection when the generating path is known, interpolation otherwise.
  Point apply(Point p) const;
};

FlowMap identity_map(AnnulusGrid g);
FlowMap integrate_flow(const HamiltonianPath& path, const FlowOptions& opt = {});

double hofer_length(const HamiltonianPath& path);

// Lift displacement of seed; throws NumericalFault if it is not within 0.05 of an integer.
double translation_winding(const HamiltonianPath& path, Point seed, const FlowOptions& opt = {});
double translation_winding(const FlowMap& map, Point seed);
double translation_iterate(const FlowMap& map, Point seed, int N);

double area_distortion(const FlowMap& map);

struct TransportResult {
  Region image;
  double hausdorff = 0.0;
};

TransportResult region_transport(const FlowMap& map, const Region& r, const Region& target);
double hausdorff_distance(const Region& a, const Region& b);
bool self_intersects(const Region& r);

void write_map_csv(std::ostream& os, const FlowMap& map);
FlowMap read_map_csv(std::istream& is);
void write_trajectory_csv(std::ostream& os, const std::vector<Point>& traj);
void write_pgm(std::ostream& os, const ScalarField& f);
void write_svg(std::ostream& os, const std::vector<Region>& regions);

int worker_count();
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace hofer
