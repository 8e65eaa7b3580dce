#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rqnbm/solver.hpp"

namespace rqnbm {

/// Full description of one run: solver configuration plus problem
/// selection and output destinations. Populated from a flat key = value
/// config file and/or command-line overrides.
struct RunSettings {
  SolverConfig solver;
  std::string mode = "rqnbm";  // rqnbm | rqnbm-no
  std::string problem = "maxq";  // maxq | obb | obb-csv
  int n = 10;                  // maxq dimension
  int d = 3;                   // obb dimension
  int K = 1000;                // obb point count
  std::uint64_t seed = 1;
  std::string data_path;       // obb-csv point cloud
  std::string out_path;        // JSON report destination ("" = stdout only)
  std::string trace_path;      // CSV trace destination ("" = no trace)
  int jobs = 1;
};

/// Parses one "key = value" line set ('#' comments, blank lines allowed).
/// Unknown keys, unparsable values, and out-of-range values throw
/// config_error. See README for the key list.
RunSettings parse_config_file(const std::string& path);
RunSettings parse_config_text(const std::string& text, const std::string& origin);
void apply_setting(RunSettings& s, const std::string& key, const std::string& value);

/// Flat summary of a finished run, mirroring the benchmark table columns.
struct RunReport {
  std::string method;  // rqnbm | rqnbm-no
  std::uint64_t seed = 0;
  int d = 0;
  int K = 0;
  double f_opt = 0.0;
  long n_f = 0;
  int n_iter = 0;
  int n_serious = 0;
  int n_null = 0;
  double t_total = 0.0;
  double t_qp = 0.0;
  double t_f = 0.0;
  double w_final = 0.0;
  std::string termination;
};

std::string report_to_json(const RunReport& r);
RunReport report_from_json(const std::string& text);

/// Builds the oracle and start point selected by `s`, runs the solver, and
/// assembles the report. Writes the trace to `trace_out` when non-null.
RunReport run_single(const RunSettings& s, std::vector<TraceRecord>* trace_out);

/// One seed of the benchmark: both methods from the identical random
/// start on the identical instance.
struct BenchSeedResult {
  RunReport rqnbm;
  RunReport rqnbm_no;
  double minimizer_distance = 0.0;  // |x* - x~*|_F between the two answers
  bool matched = false;             // both converged and distance <= 1e-3
};

struct BenchSummary {
  int n_seeds = 0;
  int n_converged_rqnbm = 0;
  int n_converged_no = 0;
  int n_matched = 0;
  // means over matched seeds
  double mean_f_rqnbm = 0.0;
  double mean_f_no = 0.0;
  double mean_nf_rqnbm = 0.0;
  double mean_nf_no = 0.0;
  double mean_t_rqnbm = 0.0;
  double mean_t_no = 0.0;
  double mean_tqp_rqnbm = 0.0;
  double mean_tqp_no = 0.0;
  double mean_tf_rqnbm = 0.0;
  double mean_tf_no = 0.0;
};

struct BenchResult {
  std::vector<BenchSeedResult> rows;
  BenchSummary summary;
};

/// Runs the paired benchmark over `seeds`, up to `jobs` seeds in parallel
/// (results are per-seed deterministic regardless of scheduling). Solver
/// settings other than the mode are taken from `base.solver`; instances
/// come from generate_obb(d, K, seed) with the start
/// random_orthogonal_start(d, seed).
BenchResult run_obb_bench(const RunSettings& base, const std::vector<std::uint64_t>& seeds);

/// CSV with one row per (seed, method) plus mean rows over matched seeds.
void write_bench_csv(std::ostream& out, const BenchResult& bench);
std::string bench_summary_json(const BenchResult& bench);

}  // namespace rqnbm
