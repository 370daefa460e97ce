#include "hofer/reeb.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>

#include <json.hpp>

namespace hofer {

SphereModel::SphereModel(ScalarField f, double s_, double A_, double offset_)
    : base(std::move(f)), s(s_), A(A_), offset(offset_) {
  if (!(A > 0.5 && A < 1.0)) throw PreconditionError("A must lie in (1/2, 1)");
  if (!(s >= 0.0 && top_cap() >= -1e-15)) throw PreconditionError("cap area s must lie in [0, 2A-1]");
  if (top_cap() < 0.0) s = 2.0 * A - 1.0;
}

const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::min: return "min";
    case NodeKind::max: return "max";
    case NodeKind::saddle: return "saddle";
    case NodeKind::cap: return "cap";
    case NodeKind::regular: return "regular";
  }
  return "?";
}

double ReebGraph::total_measure() const {
  double t = 0.0;
  for (const auto& n : nodes) t += n.measure;
  for (const auto& a : arcs) t += a.measure;
  return t;
}

int ReebGraph::components_at(double c) const {
  int k = 0;
  for (const auto& a : arcs)
    if (nodes[a.lo].value < c && c < nodes[a.hi].value) ++k;
  return k;
}

namespace {

// Cells 0..N-1, then the bottom cap N and the top cap N+1.
struct Complex {
  const AnnulusGrid& g;
  int N;
  std::vector<double> value, mass;

  explicit Complex(const SphereModel& m) : g(m.base.grid()), N(int(g.size())) {
    value.assign(m.base.values().begin(), m.base.values().end());
    value.push_back(0.0);
    value.push_back(0.0);
    mass.assign(N, g.cell_area());
    mass.push_back(m.s);
    mass.push_back(m.top_cap());
  }

  template <class F>
  void neighbors(int v, bool diagonal, F&& f) const {
    const int nt = g.n_theta, nh = g.n_h;
    if (v >= N) {
      int j = v == N ? 0 : nh - 1;
      for (int i = 0; i < nt; ++i) f(j * nt + i);
      return;
    }
    int i = v % nt, j = v / nt;
    int il = i == 0 ? nt - 1 : i - 1, ir = i + 1 == nt ? 0 : i + 1;
    f(j * nt + il);
    f(j * nt + ir);
    if (j > 0) f((j - 1) * nt + i);
    else f(N);
    if (j + 1 < nh) f((j + 1) * nt + i);
    else f(N + 1);
    if (diagonal) {
      if (j > 0) {
        f((j - 1) * nt + il);
        f((j - 1) * nt + ir);
      }
      if (j + 1 < nh) {
        f((j + 1) * nt + il);
        f((j + 1) * nt + ir);
      }
    }
  }
};

struct UnionFind {
  std::vector<int> parent, extreme;
  explicit UnionFind(int n) : parent(n), extreme(n) {
    std::iota(parent.begin(), parent.end(), 0);
    std::iota(extreme.begin(), extreme.end(), 0);
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
};

// Sweep in order; every component met by v hangs its latest vertex below v.
// link[x] is the tree neighbour x was attached to, children counted on v.
void sweep(const Complex& cx, const std::vector<int>& order, const std::vector<int>& rank, bool diagonal,
           std::vector<int>& link, std::vector<int>& nchild, std::vector<std::int64_t>& child_sum) {
  const int V = int(order.size());
  UnionFind uf(V);
  link.assign(V, -1);
  nchild.assign(V, 0);
  child_sum.assign(V, 0);
  for (int k = 0; k < V; ++k) {
    int v = order[k];
    cx.neighbors(v, diagonal, [&](int u) {
      if (rank[u] >= k) return;
      int ru = uf.find(u), rv = uf.find(v);
      if (ru == rv) return;
      int last = uf.extreme[ru];
      link[last] = v;
      nchild[v]++;
      child_sum[v] += last;
      uf.parent[ru] = rv;
    });
    uf.extreme[uf.find(v)] = v;
  }
}

}  // namespace

ReebGraph build_reeb(const SphereModel& model) {
  Complex cx(model);
  const int V = cx.N + 2;
  std::vector<int> asc(V);
  std::iota(asc.begin(), asc.end(), 0);
  std::sort(asc.begin(), asc.end(), [&](int a, int b) {
    return cx.value[a] < cx.value[b] || (cx.value[a] == cx.value[b] && a < b);
  });
  std::vector<int> rank(V), desc(asc.rbegin(), asc.rend());
  for (int k = 0; k < V; ++k) rank[asc[k]] = k;
  std::vector<int> rank_desc(V);
  for (int k = 0; k < V; ++k) rank_desc[desc[k]] = k;

  // Join tree over superlevel sets, split tree over sublevel sets.
  std::vector<int> jt_down, jt_up, st_up, st_down;
  std::vector<std::int64_t> jt_sum, st_sum;
  sweep(cx, desc, rank_desc, false, jt_down, jt_up, jt_sum);
  sweep(cx, asc, rank, true, st_up, st_down, st_sum);

  std::vector<std::vector<int>> adj(V);
  std::vector<char> gone(V, 0);
  std::vector<int> queue;
  for (int v = 0; v < V; ++v)
    if (jt_up[v] + st_down[v] == 1) queue.push_back(v);
  int edges = 0;
  while (!queue.empty()) {
    int v = queue.back();
    queue.pop_back();
    if (gone[v] || jt_up[v] + st_down[v] != 1) continue;
    int u;
    if (jt_up[v] == 0) {
      u = jt_down[v];
      jt_up[u]--;
      jt_sum[u] -= v;
      int c = int(st_sum[v]), p = st_up[v];
      st_up[c] = p;
      if (p >= 0) st_sum[p] += c - v;
      if (jt_up[c] + st_down[c] == 1) queue.push_back(c);
    } else {
      u = st_up[v];
      st_down[u]--;
      st_sum[u] -= v;
      int c = int(jt_sum[v]), p = jt_down[v];
      jt_down[c] = p;
      if (p >= 0) jt_sum[p] += c - v;
      if (jt_up[c] + st_down[c] == 1) queue.push_back(c);
    }
    if (u < 0) throw NumericalFault("contour tree merge lost a vertex");
    gone[v] = 1;
    adj[v].push_back(u);
    adj[u].push_back(v);
    ++edges;
    if (jt_up[u] + st_down[u] == 1) queue.push_back(u);
  }
  if (edges != V - 1) throw NumericalFault("contour tree is not a tree");

  // Contract to critical vertices, caps always kept.
  std::vector<int> node_of(V, -1);
  ReebGraph g;
  for (int v = 0; v < V; ++v)
    if (adj[v].size() != 2 || v >= cx.N) {
      node_of[v] = int(g.nodes.size());
      g.nodes.push_back({cx.value[v], NodeKind::regular, cx.mass[v]});
    }
  std::vector<int> cells(g.nodes.size(), 1);
  std::vector<char> walked(V, 0);
  std::vector<int> owner(V, -1);  // arc id, or -1 - node id
  for (int v = 0; v < V; ++v)
    if (node_of[v] >= 0) owner[v] = -1 - node_of[v];
  for (int v = 0; v < V; ++v) {
    if (node_of[v] < 0) continue;
    for (int w0 : adj[v]) {
      if (node_of[w0] >= 0 && w0 < v) continue;
      if (node_of[w0] < 0 && walked[w0]) continue;
      ReebArc arc;
      int arc_id = int(g.arcs.size());
      int prev = v, w = w0;
      std::vector<int> interior;
      while (node_of[w] < 0) {
        interior.push_back(w);
        walked[w] = 1;
        owner[w] = arc_id;
        int nxt = adj[w][0] == prev ? adj[w][1] : adj[w][0];
        prev = w;
        w = nxt;
      }
      std::sort(interior.begin(), interior.end(), [&](int a, int b) { return rank[a] < rank[b]; });
      bool up = rank[v] < rank[w];
      int lo_v = up ? v : w, hi_v = up ? w : v;
      arc.lo = node_of[lo_v];
      arc.hi = node_of[hi_v];
      // Cells level with an end belong to that end's plateau.
      for (int x : interior) {
        int end = cx.value[x] == cx.value[lo_v] ? lo_v : cx.value[x] == cx.value[hi_v] ? hi_v : -1;
        if (end >= 0) {
          owner[x] = -1 - node_of[end];
          g.nodes[node_of[end]].measure += cx.mass[x];
          cells[node_of[end]]++;
          continue;
        }
        arc.values.push_back(cx.value[x]);
        arc.masses.push_back(cx.mass[x]);
        arc.measure += cx.mass[x];
      }
      g.arcs.push_back(std::move(arc));
    }
  }

  // Plateaus: merge nodes joined by arcs of constant value.
  const int n0 = int(g.nodes.size());
  UnionFind merge(n0);
  std::vector<int> members = cells;
  for (const auto& a : g.arcs)
    if (g.nodes[a.lo].value == g.nodes[a.hi].value) {
      int x = merge.find(a.lo), y = merge.find(a.hi);
      if (x != y) {
        merge.parent[x] = y;
        members[y] += members[x];
      }
    }
  std::vector<int> new_id(n0, -1);
  ReebGraph out;
  for (int n = 0; n < n0; ++n) {
    int r = merge.find(n);
    if (new_id[r] < 0) {
      new_id[r] = int(out.nodes.size());
      out.nodes.push_back({g.nodes[r].value, NodeKind::regular, 0.0, members[r] > 1});
    }
    new_id[n] = new_id[r];
  }
  std::vector<int> arc_id(g.arcs.size(), -1);
  for (std::size_t k = 0; k < g.arcs.size(); ++k) {
    auto& a = g.arcs[k];
    int lo = new_id[a.lo], hi = new_id[a.hi];
    if (lo == hi) {
      out.nodes[lo].measure += a.measure;
      arc_id[k] = -1 - lo;
    } else {
      arc_id[k] = int(out.arcs.size());
      a.lo = lo;
      a.hi = hi;
      out.arcs.push_back(std::move(a));
    }
  }
  for (int n = 0; n < n0; ++n) out.nodes[new_id[n]].measure += g.nodes[n].measure;

  // Caps become leaves hanging off the node that contains them.
  for (int c = cx.N; c < V; ++c) {
    int host = new_id[node_of[c]];
    out.nodes[host].measure -= cx.mass[c];
    int leaf = int(out.nodes.size());
    out.nodes.push_back({out.nodes[host].value, NodeKind::cap, cx.mass[c]});
    out.arcs.push_back({host, leaf, 0.0, {}, {}});
  }

  std::vector<int> degree(out.nodes.size(), 0), up(out.nodes.size(), 0);
  for (const auto& a : out.arcs) {
    degree[a.lo]++;
    degree[a.hi]++;
    if (out.nodes[a.hi].kind != NodeKind::cap) up[a.lo]++;
  }
  for (std::size_t n = 0; n < out.nodes.size(); ++n) {
    auto& nd = out.nodes[n];
    if (nd.kind == NodeKind::cap) continue;
    if (degree[n] >= 3) nd.kind = NodeKind::saddle;
    else if (degree[n] == 1) nd.kind = up[n] ? NodeKind::min : NodeKind::max;
  }

  out.projection.resize(cx.N);
  for (int v = 0; v < cx.N; ++v) {
    int o = owner[v];
    out.projection[v] = o >= 0 ? arc_id[o] : -1 - new_id[-1 - o];
  }
  for (auto& n : out.nodes) n.value += model.offset;
  for (auto& a : out.arcs)
    for (double& x : a.values) x += model.offset;
  if (out.nodes.size() != out.arcs.size() + 1) throw NumericalFault("reeb graph is not a tree");
  return out;
}

namespace {

struct Rooted {
  std::vector<std::vector<std::pair<int, int>>> adj;  // (arc, other node)
  std::vector<int> parent_arc;
  std::vector<double> weight;  // node mass + everything below it
};

Rooted root_at_zero(const ReebGraph& g) {
  const int n = int(g.nodes.size());
  Rooted r{std::vector<std::vector<std::pair<int, int>>>(n), std::vector<int>(n, -1), std::vector<double>(n, 0.0)};
  for (int k = 0; k < int(g.arcs.size()); ++k) {
    r.adj[g.arcs[k].lo].push_back({k, g.arcs[k].hi});
    r.adj[g.arcs[k].hi].push_back({k, g.arcs[k].lo});
  }
  std::vector<int> order{0};
  std::vector<char> seen(n, 0);
  seen[0] = 1;
  for (std::size_t k = 0; k < order.size(); ++k)
    for (auto [a, w] : r.adj[order[k]])
      if (!seen[w]) {
        seen[w] = 1;
        r.parent_arc[w] = a;
        order.push_back(w);
      }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    int v = *it;
    r.weight[v] += g.nodes[v].measure;
    if (r.parent_arc[v] >= 0) {
      const auto& a = g.arcs[r.parent_arc[v]];
      int p = a.lo == v ? a.hi : a.lo;
      r.weight[p] += r.weight[v] + a.measure;
    }
  }
  return r;
}

double value_at_mass(const ReebGraph& g, const ReebArc& a, double t) {
  // Piecewise linear through (lo, 0), (cell k, mass up to its middle), (hi, total).
  double prev_m = 0.0, prev_v = g.nodes[a.lo].value, cum = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    double mid = cum + 0.5 * a.masses[k];
    if (t <= mid) {
      double f = mid > prev_m ? (t - prev_m) / (mid - prev_m) : 0.0;
      return prev_v + f * (a.values[k] - prev_v);
    }
    prev_m = mid;
    prev_v = a.values[k];
    cum += a.masses[k];
  }
  double f = a.measure > prev_m ? (t - prev_m) / (a.measure - prev_m) : 1.0;
  return prev_v + std::clamp(f, 0.0, 1.0) * (g.nodes[a.hi].value - prev_v);
}

}  // namespace

MedianResult find_median(const ReebGraph& g) {
  Rooted r = root_at_zero(g);
  const double total = r.weight[0];
  const double half = 0.5 * total;
  int u = 0;
  for (;;) {
    int down_arc = -1, v = -1;
    for (auto [a, w] : r.adj[u]) {
      if (a == r.parent_arc[u]) continue;
      if (g.arcs[a].measure + r.weight[w] > half) {
        down_arc = a;
        v = w;
      }
    }
    MedianResult m;
    if (down_arc < 0) {
      m.node = u;
      m.value = g.nodes[u].value;
      for (auto [a, w] : r.adj[u])
        m.component_measures.push_back(a == r.parent_arc[u] ? total - r.weight[u] : g.arcs[a].measure + r.weight[w]);
      return m;
    }
    if (r.weight[v] >= half) {
      u = v;
      continue;
    }
    const ReebArc& a = g.arcs[down_arc];
    double beyond = half - r.weight[v];  // arc mass between the median and v
    double t = v == a.hi ? a.measure - beyond : beyond;
    m.arc = down_arc;
    m.arc_fraction = a.measure > 0 ? t / a.measure : 0.0;
    m.value = value_at_mass(g, a, t);
    m.component_measures = {half, total - half};
    return m;
  }
}

bool median_balanced(const ReebGraph& g, const MedianResult& m, double tol) {
  double half = 0.5 * g.total_measure();
  for (double c : m.component_measures)
    if (c > half + tol) return false;
  return true;
}

void write_reeb_json(std::ostream& os, const ReebGraph& g, const MedianResult& m) {
  nlohmann::ordered_json j;
  j["nodes"] = nlohmann::json::array();
  for (std::size_t k = 0; k < g.nodes.size(); ++k)
    j["nodes"].push_back({{"id", k}, {"value", g.nodes[k].value}, {"kind", to_string(g.nodes[k].kind)},
                          {"plateau", g.nodes[k].plateau}, {"measure", g.nodes[k].measure}});
  j["arcs"] = nlohmann::json::array();
  for (const auto& a : g.arcs) j["arcs"].push_back({{"lo", a.lo}, {"hi", a.hi}, {"measure", a.measure}});
  j["total_measure"] = g.total_measure();
  nlohmann::ordered_json med;
  med["value"] = m.value;
  if (m.node >= 0) med["node"] = m.node;
  if (m.arc >= 0) {
    med["arc"] = m.arc;
    med["arc_fraction"] = m.arc_fraction;
  }
  med["component_measures"] = m.component_measures;
  j["median"] = med;
  os << j.dump(2) << '\n';
}

void write_reeb_edges(std::ostream& os, const ReebGraph& g) {
  os << "graph reeb {\n";
  for (std::size_t k = 0; k < g.nodes.size(); ++k)
    os << "  n" << k << " [label=\"" << to_string(g.nodes[k].kind) << ' ' << g.nodes[k].value << "\"];\n";
  for (const auto& a : g.arcs) os << "  n" << a.lo << " -- n" << a.hi << " [label=\"" << a.measure << "\"];\n";
  os << "}\n";
}

}  // namespace hofer
