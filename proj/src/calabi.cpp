#include "hofer/calabi.hpp"

#include <ostream>

#include <json.hpp>

namespace hofer {

double calabi_disk(const HamiltonianPath& path, const Region& disk) {
  require_counterclockwise(disk);
  double total = 0.0;
  for (const auto& seg : path.segments()) {
    const ScalarField& f = seg.field;
    const AnnulusGrid& g = f.grid();
    for (int j = 0; j < g.n_h; ++j)
      for (int i = 0; i < g.n_theta; ++i)
        if (f(i, j) != 0.0 && !region_contains(disk, {g.theta_center(i), g.h_center(j)}))
          throw PreconditionError("field support leaks outside the disk");
    total += seg.duration * integrate(f);
  }
  return total;
}

CalabiValue cal_sphere_autonomous(const SphereModel& model) {
  auto graph = build_reeb(model);
  auto med = find_median(graph);
  if (!median_balanced(graph, med, 1e-9 * graph.total_measure()))
    throw NumericalFault("median fails the balance inequality");
  CalabiValue c;
  c.integral = integrate(model.base) + model.offset * model.total_area();
  c.median_value = med.value;
  c.correction = model.total_area() * med.value;
  c.value = c.integral - c.correction;
  return c;
}

CalabiValue cal_j(const ScalarField& F, double s, double A) {
  return cal_sphere_autonomous(SphereModel(F, s, A));
}

void EmbeddingSpec::validate() const {
  if (!(A > 0.5 && A < 1.0)) throw PreconditionError("A must lie in (1/2, 1)");
  const double top = 2.0 * A - 1.0;
  if (!(s1 >= 0.0 && s1 < s2 && s2 <= top + 1e-12))
    throw PreconditionError("need 0 <= s1 < s2 <= 2A - 1");
}

RhoReport rho(const ScalarField& F, const EmbeddingSpec& spec) {
  spec.validate();
  RhoReport r{spec, cal_j(F, spec.s1, spec.A), cal_j(F, std::min(spec.s2, 2.0 * spec.A - 1.0), spec.A), 0.0};
  r.rho = r.at_s2.value - r.at_s1.value;
  return r;
}

void write_rho_json(std::ostream& os, const RhoReport& r) {
  nlohmann::ordered_json j;
  j["s1"] = r.spec.s1;
  j["s2"] = r.spec.s2;
  j["A"] = r.spec.A;
  j["integral"] = r.at_s1.integral;
  j["median_value"] = {{"s1", r.at_s1.median_value}, {"s2", r.at_s2.median_value}};
  j["cal_j_s1"] = r.at_s1.value;
  j["cal_j_s2"] = r.at_s2.value;
  j["rho"] = r.rho;
  os << j.dump(2) << '\n';
}

}  // namespace hofer
