#pragma once

#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace hofer {

// Bad input or violated precondition. The CLI maps it to exit code 2.
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Integration or topology went wrong. The CLI maps it to exit code 3.
struct NumericalFault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AnnulusGrid {
  int n_theta = 256;
  int n_h = 256;

  AnnulusGrid() = default;
  AnnulusGrid(int nt, int nh);

  double cell_area() const { return 1.0 / (double(n_theta) * n_h); }
  double dtheta() const { return 1.0 / n_theta; }
  double dh() const { return 1.0 / n_h; }
  double theta_center(int i) const { return (i + 0.5) / n_theta; }
  double h_center(int j) const { return (j + 0.5) / n_h; }
  int wrap(int i) const { return ((i % n_theta) + n_theta) % n_theta; }
  std::size_t index(int i, int j) const { return std::size_t(j) * n_theta + wrap(i); }
  std::size_t size() const { return std::size_t(n_theta) * n_h; }

  bool operator==(const AnnulusGrid&) const = default;
};

class ScalarField {
 public:
  ScalarField() = default;
  // Zero field. margin 0 disables the forced-zero boundary rows.
  ScalarField(AnnulusGrid g, double support_margin);
  // Throws if any value is non-finite or nonzero inside the margin rows.
  ScalarField(AnnulusGrid g, double support_margin, std::vector<double> values);

  // Samples f at cell centers and zeroes the margin rows.
  static ScalarField sample(AnnulusGrid g, double support_margin,
                            const std::function<double(double, double)>& f);

  const AnnulusGrid& grid() const { return grid_; }
  double support_margin() const { return margin_; }
  const std::vector<double>& values() const { return values_; }

  double operator()(int i, int j) const { return values_[grid_.index(i, j)]; }
  bool row_forced_zero(int j) const;

  double max() const;
  double min() const;
  double oscillation() const { return max() - min(); }

  ScalarField scaled(double a) const;
  ScalarField plus(const ScalarField& o, double b = 1.0) const;

 private:
  AnnulusGrid grid_;
  double margin_ = 0.0;
  std::vector<double> values_;
};

double integrate(const ScalarField& f);

struct Point {
  double theta = 0.0;  // lift, never wrapped
  double h = 0.0;
};

struct Region {
  std::vector<Point> boundary;  // closed implicitly, counterclockwise
};

// Signed shoelace area; negative means clockwise.
double region_area(const Region& r);
// Throws PreconditionError for clockwise or degenerate regions.
void require_counterclockwise(const Region& r);
// Point in polygon, θ compared modulo 1 (the region is assumed to span less than a full turn).
bool region_contains(const Region& r, Point p);

// Rounded rectangle (delta, 1-delta) x (delta_prime, top) with top chosen
// so the enclosed area equals A.
Region build_disk_region(double A, double delta, double delta_prime);
double disk_top(double A, double delta, double delta_prime);

Region rectangle_region(double t0, double t1, double h0, double h1);

void write_field_csv(std::ostream& os, const ScalarField& f);
ScalarField read_field_csv(std::istream& is);
void write_region_csv(std::ostream& os, const Region& r);
Region read_region_csv(std::istream& is);

}  // namespace hofer
