#pragma once

#include <iosfwd>

#include "hofer/flow.hpp"
#include "hofer/reeb.hpp"

namespace hofer {

struct CalabiValue {
  double value = 0.0;  // integral - correction
  double integral = 0.0;
  double correction = 0.0;  // 2A F(X)
  double median_value = 0.0;
};

// Σ duration · ∫F over the path. Every nonzero cell must lie inside disk.
double calabi_disk(const HamiltonianPath& path, const Region& disk);

CalabiValue cal_sphere_autonomous(const SphereModel& model);
CalabiValue cal_j(const ScalarField& F, double s, double A);

struct EmbeddingSpec {
  double s1 = 0.0, s2 = 0.2, A = 0.6;
  static EmbeddingSpec defaults(double A) { return {0.0, 2.0 * A - 1.0, A}; }
  void validate() const;
};

struct RhoReport {
  EmbeddingSpec spec;
  CalabiValue at_s1, at_s2;
  double rho = 0.0;
};

RhoReport rho(const ScalarField& F, const EmbeddingSpec& spec);
void write_rho_json(std::ostream& os, const RhoReport& r);

}  // namespace hofer
