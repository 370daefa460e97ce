#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hofer/flow.hpp"

namespace hofer {

struct ConstructionSpec {
  int n = 1;
  double A = 0.6;
  double delta = 0.012;           // side margin of the disk, also the spiral band height
  double delta_prime = 0.01;      // bottom margin of the disk
  double delta_dblprime = 0.012;  // width of the shear's lower ramp
  double corridor_width = 0.009;  // width of each swap lane
  double lane_gap = 0.003;        // between a lane and the disk's side
  double layer = 0.012;           // area fraction of the smoothing layers of the swap
  int grid = 2048;
  int map_grid = 128;
  double dt = 5e-4;

  void validate() const;
  AnnulusGrid field_grid() const { return {grid, grid}; }
};

// Derived layout. The disk is (delta, 1-delta) x (delta_prime, top); the
// spiral band is (top, 1-b); its mirror image D' is (delta, 1-delta) x (1-b, 1-delta_prime).
struct Geometry {
  double A, delta, delta_prime, delta_dblprime, layer;
  double top, beta, b;
  double h_out, theta_out;  // outer rectangle of the swap ring
  double theta_in;          // inner edge of the left lane
  double ring;              // area swept by the swap
  double bottom_level;      // ring fraction at the disk's bottom edge
  Region disk;

  static Geometry of(const ConstructionSpec& spec);
  double half_period() const { return 0.5 * ring * (1.0 - layer); }
  Point seed() const { return {0.5, 0.5 * (b + top)}; }
};

// h on (delta, 1-delta), cosine ramps to 0 on [delta/4, delta] and [1-delta, 1-delta/4].
double hat_profile(double h, double delta);
ScalarField build_hat_H(double delta, AnnulusGrid g = {512, 512});

// 1 on a thin strip along the corridor, cosine to 0 at distance width.
ScalarField build_swap_flow(const Region& source, const Region& sink, const std::vector<Point>& corridor,
                            double width, AnnulusGrid g = {512, 512});

// Two-lane swap of the ring between the disk's lower block and D'. Its flow
// for half_period() is the point reflection about (1/2, 1/2) on the ring.
double lane_swap_value(const Geometry& geo, double theta, double h);
ScalarField build_lane_swap(const Geometry& geo, AnnulusGrid g);

// (θ, h) -> (θ + n·ρ(h), h), ρ = 1 up to the disk top, cosine down to 0 across the band.
class BandTwist : public Twist {
 public:
  BandTwist(const Geometry& geo, int n) : top_(geo.top), beta_(geo.beta), n_(n) {}
  double shift(double h) const override;

 private:
  double top_, beta_;
  int n_;
};

struct Spiral {
  std::vector<Point> centerline;  // from the disk top to the bottom of D'
  double min_gap = 0.0;           // between consecutive coils
  double tube_thickness = 0.0;    // thickest cross-section of the sheared lane
};

Spiral build_spiral(int n, const ConstructionSpec& spec);

// Shear g(h): g' = n on the disk's upper block, ramps below and across the band.
double shear_rate(const Geometry& geo, int n, double h);
ScalarField build_shear(int n, const ConstructionSpec& spec);

struct TransportCertificate {
  int n = 0;
  double A = 0.0;
  double tau = 0.0;
  double tau_iterate = 0.0;
  double length = 0.0;
  std::vector<double> stage_lengths;
  std::vector<double> expected_stage_lengths;
  double lower_bound = 0.0, upper_bound = 0.0;
  double baseline = 0.0;
  double area_distortion = 0.0;
  double disk_area_error = 0.0;  // |area of the transported disk - area of the disk|
  double disk_return_error = 0.0;
  double disk_tolerance = 0.0;
  bool passed = false;
  std::vector<std::string> failures;
};

HamiltonianPath assemble_psi_path(const ConstructionSpec& spec);

struct PsiResult {
  HamiltonianPath path;
  FlowMap map;
  TransportResult transport;
  TransportCertificate cert;
};

PsiResult assemble_psi(const ConstructionSpec& spec);

// Hofer length of the plain shear turning a band of height about A n times.
double naive_rotation_baseline(int n, double A, const ConstructionSpec& spec = {});

void write_certificate_json(std::ostream& os, const TransportCertificate& c);

}  // namespace hofer
