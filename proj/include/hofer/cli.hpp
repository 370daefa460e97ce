#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "hofer/constructions.hpp"

namespace hofer::cli {

enum Exit { ok = 0, failed = 1, precondition = 2, numerical = 3 };

// Flat key = value file. '#' starts a comment; list values are comma separated.
using ScenarioConfig = std::map<std::string, std::string>;
ScenarioConfig parse_config(std::istream& is);
ScenarioConfig read_config(const std::filesystem::path& p);

// Writes to p.tmp and renames over p, so a failed run leaves no partial file.
void write_atomic(const std::filesystem::path& p, const std::function<void(std::ostream&)>& body);

struct SweepRow {
  int n = 0;
  double A = 0.0;
  std::string status;  // pass, fail, rejected, fault
  TransportCertificate cert;
  std::string error;
};

std::vector<SweepRow> run_sweep(const ConstructionSpec& base, const std::vector<int>& ns,
                                const std::vector<double>& As, unsigned workers);
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);
int sweep_exit_code(const std::vector<SweepRow>& rows);

// HOFER_LAB_THREADS caps the hardware concurrency.
unsigned worker_count(std::size_t jobs);

// argv-style entry point; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hofer::cli
