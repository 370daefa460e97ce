#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hofer/field.hpp"

namespace hofer {

// The annulus with a disk of area s glued along h = 0 and one of area
// 2A - 1 - s along h = 1. The field extends by zero over both caps; offset
// is a constant added on the whole sphere.
struct SphereModel {
  ScalarField base;
  double s = 0.0;
  double A = 0.6;
  double offset = 0.0;

  SphereModel(ScalarField f, double s, double A, double offset = 0.0);
  double top_cap() const { return 2.0 * A - 1.0 - s; }
  double total_area() const { return 2.0 * A; }
};

enum class NodeKind { min, max, saddle, cap, regular };
const char* to_string(NodeKind k);

struct ReebNode {
  double value = 0.0;
  NodeKind kind = NodeKind::regular;
  double measure = 0.0;  // point mass: the node's own cells, or the cap area
  bool plateau = false;  // more than one cell collapsed into it
};

struct ReebArc {
  int lo = -1, hi = -1;  // node ids, value(lo) <= value(hi)
  double measure = 0.0;
  std::vector<double> values;  // interior cell values, ascending
  std::vector<double> masses;
};

struct ReebGraph {
  std::vector<ReebNode> nodes;
  std::vector<ReebArc> arcs;
  // For each annulus cell: arc id >= 0, or -1 - node id.
  std::vector<int> projection;

  double total_measure() const;
  // Number of arcs whose open value range contains c.
  int components_at(double c) const;
};

ReebGraph build_reeb(const SphereModel& model);

struct MedianResult {
  int node = -1;  // set when the median is a node
  int arc = -1;   // set when it is inside an arc
  double value = 0.0;
  double arc_fraction = 0.0;  // measure fraction from the lo end
  std::vector<double> component_measures;
};

MedianResult find_median(const ReebGraph& g);
// Every component of the tree minus the median weighs at most half the total.
bool median_balanced(const ReebGraph& g, const MedianResult& m, double tol = 1e-9);

void write_reeb_json(std::ostream& os, const ReebGraph& g, const MedianResult& m);
void write_reeb_edges(std::ostream& os, const ReebGraph& g);

}  // namespace hofer
