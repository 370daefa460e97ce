#include "hofer/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include "hofer/calabi.hpp"
#include "hofer/reeb.hpp"

namespace hofer::cli {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  auto t = trim(v);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    throw PreconditionError("config: " + key + " is not a number: '" + v + "'");
  return x;
}

int to_int(const std::string& key, const std::string& v) {
  double x = to_double(key, v);
  if (x != std::floor(x) || std::abs(x) > 1e9) throw PreconditionError("config: " + key + " is not an integer");
  return int(x);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

// Spec keys shared by the config file and the command line.
struct SpecFlags {
  std::optional<int> n, grid, map_grid;
  std::optional<double> A, dt, delta, delta_prime, delta_dblprime, corridor_width, lane_gap, layer;

  void add_to(CLI::App& app, bool with_n_area) {
    if (with_n_area) {
      app.add_option("--n", n, "winding number");
      app.add_option("--area", A, "disk area A");
    }
    app.add_option("--grid", grid, "field grid size");
    app.add_option("--map-grid", map_grid, "flow map node grid size");
    app.add_option("--dt", dt, "largest integrator step");
    app.add_option("--delta", delta, "side margin of the disk");
    app.add_option("--delta-prime", delta_prime, "bottom margin of the disk");
    app.add_option("--delta-dblprime", delta_dblprime, "lower ramp of the shear");
    app.add_option("--corridor-width", corridor_width, "swap lane width");
    app.add_option("--lane-gap", lane_gap, "gap between lane and disk");
    app.add_option("--layer", layer, "smoothing layer of the swap");
  }

  void apply(ConstructionSpec& s) const {
    if (n) s.n = *n;
    if (A) s.A = *A;
    if (grid) s.grid = *grid;
    if (map_grid) s.map_grid = *map_grid;
    if (dt) s.dt = *dt;
    if (delta) s.delta = *delta;
    if (delta_prime) s.delta_prime = *delta_prime;
    if (delta_dblprime) s.delta_dblprime = *delta_dblprime;
    if (corridor_width) s.corridor_width = *corridor_width;
    if (lane_gap) s.lane_gap = *lane_gap;
    if (layer) s.layer = *layer;
  }
};

// Keys outside `extra` must name a spec parameter.
void apply_config(const ScenarioConfig& cfg, ConstructionSpec& s, const std::vector<std::string>& extra) {
  for (const auto& [k, v] : cfg) {
    if (std::find(extra.begin(), extra.end(), k) != extra.end()) continue;
    if (k == "n") s.n = to_int(k, v);
    else if (k == "A") s.A = to_double(k, v);
    else if (k == "grid") s.grid = to_int(k, v);
    else if (k == "map_grid") s.map_grid = to_int(k, v);
    else if (k == "dt") s.dt = to_double(k, v);
    else if (k == "delta") s.delta = to_double(k, v);
    else if (k == "delta_prime") s.delta_prime = to_double(k, v);
    else if (k == "delta_dblprime") s.delta_dblprime = to_double(k, v);
    else if (k == "corridor_width") s.corridor_width = to_double(k, v);
    else if (k == "lane_gap") s.lane_gap = to_double(k, v);
    else if (k == "layer") s.layer = to_double(k, v);
    else throw PreconditionError("config: unknown key '" + k + "'");
  }
}

ScalarField read_field(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw PreconditionError("cannot read field file " + p.string());
  return read_field_csv(is);
}

void emit(const std::string& path, std::ostream& out, const std::function<void(std::ostream&)>& body) {
  if (path.empty() || path == "-") body(out);
  else write_atomic(path, body);
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

double bump_value(double t, double h, double t0, double h0, double r, double height) {
  double dt = std::remainder(t - t0, 1.0), dh = h - h0;
  double q = std::sqrt(dt * dt + dh * dh) / r;
  return q >= 1 ? 0.0 : height * std::pow(std::cos(0.5 * std::numbers::pi * q), 2);
}

ScalarField generate_field(const std::string& kind, AnnulusGrid g, double A, double delta, double delta_prime,
                           double scale, std::uint64_t seed) {
  if (kind == "zero") return ScalarField(g, delta / 4);
  if (kind == "hat") return build_hat_H(delta, g).scaled(scale);
  double top = disk_top(A, delta, delta_prime);
  if (kind == "plateau") {
    // 1 on the disk, cosine to 0 over half the side margin.
    double w = 0.5 * std::min(delta, delta_prime);
    return ScalarField::sample(g, delta_prime / 4, [=](double t, double h) {
      double dt = std::abs(t - 0.5) - (0.5 - delta), dh = std::max(delta_prime - h, h - top);
      double d = std::max(dt, dh) / w;
      return scale * (d <= 0 ? 1.0 : d >= 1 ? 0.0 : 0.5 * (1 + std::cos(std::numbers::pi * d)));
    });
  }
  if (kind == "bump") {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double r = 0.05 + 0.1 * U(rng);
    r = std::min(r, 0.45 * (top - delta_prime));
    double t0 = delta + r + U(rng) * (1 - 2 * delta - 2 * r);
    double h0 = delta_prime + r + U(rng) * (top - delta_prime - 2 * r);
    double height = scale * (0.5 + U(rng));
    return ScalarField::sample(g, delta_prime / 4,
                               [=](double t, double h) { return bump_value(t, h, t0, h0, r, height); });
  }
  throw PreconditionError("unknown field kind '" + kind + "'");
}

void write_frames(const fs::path& dir, const ConstructionSpec& spec, const PsiResult& r) {
  fs::create_directories(dir);
  Geometry geo = Geometry::of(spec);
  AnnulusGrid g(512, 512);
  write_atomic(dir / "swap.pgm", [&](std::ostream& os) { write_pgm(os, build_lane_swap(geo, g)); });
  ConstructionSpec coarse = spec;
  coarse.grid = 512;
  write_atomic(dir / "shear.pgm", [&](std::ostream& os) { write_pgm(os, build_shear(spec.n, coarse)); });
  write_atomic(dir / "disk.svg", [&](std::ostream& os) { write_svg(os, {geo.disk, r.transport.image}); });
  write_atomic(dir / "spiral.csv",
               [&](std::ostream& os) { write_trajectory_csv(os, build_spiral(spec.n, spec).centerline); });
}

}  // namespace

ScenarioConfig parse_config(std::istream& is) {
  ScenarioConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto c = line.find('#'); c != std::string::npos) line.erase(c);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw PreconditionError("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw PreconditionError("config line " + std::to_string(lineno) + ": empty key");
    if (cfg.count(key)) throw PreconditionError("config: duplicate key '" + key + "'");
    cfg[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

ScenarioConfig read_config(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw PreconditionError("cannot read config " + p.string());
  return parse_config(is);
}

void write_atomic(const fs::path& p, const std::function<void(std::ostream&)>& body) {
  fs::path tmp = p;
  tmp += ".tmp";
  try {
    {
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      if (!os) throw PreconditionError("cannot write " + p.string());
      body(os);
      os.flush();
      if (!os) throw PreconditionError("write failed: " + p.string());
    }
    fs::rename(tmp, p);
  } catch (...) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw;
  }
}

unsigned worker_count(std::size_t jobs) {
  unsigned w = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("HOFER_LAB_THREADS")) {
    int cap = std::atoi(env);
    if (cap > 0) w = std::min(w, unsigned(cap));
  }
  return unsigned(std::max<std::size_t>(1, std::min<std::size_t>(w, jobs)));
}

std::vector<SweepRow> run_sweep(const ConstructionSpec& base, const std::vector<int>& ns,
                                const std::vector<double>& As, unsigned workers) {
  std::vector<SweepRow> rows;
  std::vector<ConstructionSpec> specs;
  for (double A : As)
    for (int n : ns) {
      SweepRow row;
      row.n = n;
      row.A = A;
      ConstructionSpec s = base;
      s.n = n;
      s.A = A;
      try {
        s.validate();
        Geometry::of(s);
      } catch (const PreconditionError& e) {
        row.status = "rejected";
        row.error = e.what();
      }
      rows.push_back(row);
      specs.push_back(s);
    }

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k; (k = next++) < rows.size();) {
      if (!rows[k].status.empty()) continue;
      try {
        rows[k].cert = assemble_psi(specs[k]).cert;
        rows[k].status = rows[k].cert.passed ? "pass" : "fail";
      } catch (const PreconditionError& e) {
        rows[k].status = "rejected";
        rows[k].error = e.what();
      } catch (const NumericalFault& e) {
        rows[k].status = "fault";
        rows[k].error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "n,A,status,tau,tau_iterate,length,lower_bound,upper_bound,baseline,disk_return_error,area_distortion,"
        "notes\n";
  for (const auto& r : rows) {
    const auto& c = r.cert;
    os << r.n << ',' << num(r.A) << ',' << r.status;
    if (r.status == "pass" || r.status == "fail") {
      for (double x : {c.tau, c.tau_iterate, c.length, c.lower_bound, c.upper_bound, c.baseline,
                       c.disk_return_error, c.area_distortion})
        os << ',' << num(x);
    } else {
      os << ",,,,,,,,";
    }
    std::string notes = r.error;
    for (const auto& f : c.failures) notes += (notes.empty() ? "" : "; ") + f;
    std::replace(notes.begin(), notes.end(), '"', '\'');
    os << ",\"" << notes << "\"\n";
  }
}

int sweep_exit_code(const std::vector<SweepRow>& rows) {
  auto any = [&](const char* s) {
    return std::any_of(rows.begin(), rows.end(), [&](const SweepRow& r) { return r.status == s; });
  };
  if (any("rejected")) return precondition;
  if (any("fault")) return numerical;
  if (any("fail")) return failed;
  return ok;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"hofer_lab: Hofer-norm constructions on the annulus"};
  app.require_subcommand(1);
  std::string out_path;

  // field
  auto* field = app.add_subcommand("field", "generate a field CSV");
  std::string kind = "hat";
  int fgrid = 512;
  double farea = 0.6, fdelta = 0.02, fdelta_prime = 0.01, fscale = 1.0;
  std::uint64_t seed = 1;
  field->add_option("--kind", kind, "hat, zero, plateau or bump")->check(CLI::IsMember({"hat", "zero", "plateau", "bump"}));
  field->add_option("--grid", fgrid, "grid size");
  field->add_option("--area", farea, "disk area, for plateau and bump");
  field->add_option("--delta", fdelta, "side margin");
  field->add_option("--delta-prime", fdelta_prime, "bottom margin");
  field->add_option("--scale", fscale, "multiplier");
  field->add_option("--seed", seed, "bump placement seed");
  field->add_option("--out", out_path, "output file (default stdout)");

  // reeb
  auto* reeb = app.add_subcommand("reeb", "Reeb graph and median of a field");
  std::string field_file;
  double s = 0.0, A = 0.6;
  reeb->add_option("field", field_file, "field CSV")->required()->check(CLI::ExistingFile);
  reeb->add_option("--s", s, "area of the bottom cap");
  reeb->add_option("--area", A, "A");
  reeb->add_option("--out", out_path, "output JSON (default stdout)");

  // rho
  auto* rho_cmd = app.add_subcommand("rho", "quasimorphism value of a field");
  std::optional<double> s1, s2;
  rho_cmd->add_option("field", field_file, "field CSV")->required()->check(CLI::ExistingFile);
  rho_cmd->add_option("--s1", s1, "first cap (default 0)");
  rho_cmd->add_option("--s2", s2, "second cap (default 2A - 1)");
  rho_cmd->add_option("--area", A, "A");
  rho_cmd->add_option("--out", out_path, "output JSON (default stdout)");

  // certify
  auto* certify = app.add_subcommand("certify", "assemble psi_n and certify its bounds");
  SpecFlags cflags;
  std::string config_file, frames_dir;
  cflags.add_to(*certify, true);
  certify->add_option("--config", config_file, "key = value file; flags win")->check(CLI::ExistingFile);
  certify->add_option("--out", out_path, "certificate JSON (default stdout)");
  certify->add_option("--frames", frames_dir, "directory for PGM/SVG frames");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "certify over a grid of (n, A)");
  SpecFlags sflags;
  sflags.add_to(*sweep, false);
  sweep->add_option("config", config_file, "key = value file with n and A lists")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", out_path, "output CSV (default stdout)");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? ok : precondition;
  }

  try {
    if (*field) {
      if (fgrid < 8) throw PreconditionError("grid must be at least 8");
      auto f = generate_field(kind, AnnulusGrid(fgrid, fgrid), farea, fdelta, fdelta_prime, fscale, seed);
      emit(out_path, out, [&](std::ostream& os) { write_field_csv(os, f); });
      return ok;
    }
    if (*reeb) {
      SphereModel model(read_field(field_file), s, A);
      auto g = build_reeb(model);
      auto m = find_median(g);
      if (!median_balanced(g, m, 1e-9 * std::max(1.0, g.total_measure())))
        throw NumericalFault("median is not balanced");
      emit(out_path, out, [&](std::ostream& os) { write_reeb_json(os, g, m); });
      return ok;
    }
    if (*rho_cmd) {
      EmbeddingSpec es = EmbeddingSpec::defaults(A);
      if (s1) es.s1 = *s1;
      if (s2) es.s2 = *s2;
      es.validate();
      auto r = rho(read_field(field_file), es);
      emit(out_path, out, [&](std::ostream& os) { write_rho_json(os, r); });
      return ok;
    }
    if (*certify) {
      ConstructionSpec spec;
      if (!config_file.empty()) {
        auto cfg = read_config(config_file);
        apply_config(cfg, spec, {"out", "frames"});
        if (out_path.empty() && cfg.count("out")) out_path = cfg["out"];
        if (frames_dir.empty() && cfg.count("frames")) frames_dir = cfg["frames"];
      }
      cflags.apply(spec);
      spec.validate();
      auto r = assemble_psi(spec);
      emit(out_path, out, [&](std::ostream& os) { write_certificate_json(os, r.cert); });
      if (!frames_dir.empty()) write_frames(frames_dir, spec, r);
      return r.cert.passed ? ok : failed;
    }
    if (*sweep) {
      auto cfg = read_config(config_file);
      ConstructionSpec base;
      apply_config(cfg, base, {"n", "A", "out"});
      sflags.apply(base);
      std::vector<int> ns;
      std::vector<double> As;
      if (cfg.count("n"))
        for (const auto& v : split_list(cfg["n"])) ns.push_back(to_int("n", v));
      if (cfg.count("A"))
        for (const auto& v : split_list(cfg["A"])) As.push_back(to_double("A", v));
      if (out_path.empty() && cfg.count("out")) out_path = cfg["out"];
      // Shared parameters are checked with a valid (n, A) so only the rows can be rejected.
      ConstructionSpec probe = base;
      probe.n = 1;
      probe.A = ConstructionSpec{}.A;
      probe.validate();
      auto rows = run_sweep(base, ns, As, worker_count(ns.size() * As.size()));
      emit(out_path, out, [&](std::ostream& os) { write_sweep_csv(os, rows); });
      return sweep_exit_code(rows);
    }
  } catch (const PreconditionError& e) {
    err << "precondition: " << e.what() << '\n';
    return precondition;
  } catch (const NumericalFault& e) {
    err << "numerical fault: " << e.what() << '\n';
    return numerical;
  } catch (const fs::filesystem_error& e) {
    err << "io: " << e.what() << '\n';
    return precondition;
  }
  return precondition;
}

}  // namespace hofer::cli
