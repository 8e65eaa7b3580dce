#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rqnbm/errors.hpp"
#include "rqnbm/harness.hpp"
#include "rqnbm/trace.hpp"

namespace {

using namespace rqnbm;

constexpr int kExitMaxIter = 2;
constexpr int kExitStall = 3;
constexpr int kExitUsage = 64;
constexpr int kExitTrace = 65;
constexpr int kExitFile = 66;

/// The flags shared by every subcommand. Values are kept as the raw
/// strings and pushed through apply_setting so the CLI and the config file
/// agree on parsing and range checks.
class OverrideSet {
 public:
  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_,
                    "flat 'key = value' configuration file");
    add(cmd, "--seed", "seed", "seed for instance generation and the start");
    add(cmd, "--d", "d", "point-cloud dimension (obb)");
    add(cmd, "--K", "K", "point-cloud size (obb)");
    add(cmd, "--eps", "eps", "stopping threshold on the measure w");
    add(cmd, "--max-iter", "max_iter", "outer iteration budget");
    add(cmd, "--mode", "mode", "rqnbm | rqnbm-no (identity-operator run)");
    add(cmd, "--jobs", "jobs", "parallel workers for benchmark seeds");
    add(cmd, "--out", "out", "report (JSON) or benchmark (CSV) output path");
    add(cmd, "--trace", "trace", "per-iteration CSV trace path");
  }

  RunSettings settings() const {
    RunSettings s =
        config_.empty() ? RunSettings{} : parse_config_file(config_);
    for (const Row& row : rows_)
      if (row.opt->count() > 0) apply_setting(s, row.key, *row.value);
    return s;
  }

 private:
  struct Row {
    CLI::Option* opt;
    const char* key;
    const std::string* value;
  };

  void add(CLI::App* cmd, const char* flag, const char* key,
           const char* help) {
    values_.push_back(std::make_unique<std::string>());
    CLI::Option* opt = cmd->add_option(flag, *values_.back(), help);
    rows_.push_back(Row{opt, key, values_.back().get()});
  }

  std::string config_;
  std::vector<std::unique_ptr<std::string>> values_;
  std::vector<Row> rows_;
};

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  out.flush();
  if (!out) throw oracle_error("cannot write output file: " + path);
}

int termination_exit(const std::string& termination) {
  if (termination == "max_iter") return kExitMaxIter;
  if (termination == "stalled") return kExitStall;
  return 0;
}

int cmd_solve(const OverrideSet& ov) {
  const RunSettings s = ov.settings();
  std::vector<TraceRecord> trace;
  const RunReport r =
      run_single(s, s.trace_path.empty() ? nullptr : &trace);
  const std::string json = report_to_json(r);
  std::fputs(json.c_str(), stdout);
  if (!s.out_path.empty()) write_text_file(s.out_path, json);
  if (!s.trace_path.empty()) write_trace_csv_file(s.trace_path, trace);
  return termination_exit(r.termination);
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ',')) {
    const size_t b = token.find_first_not_of(" \t");
    const size_t e = token.find_last_not_of(" \t");
    if (b == std::string::npos)
      throw config_error("--seeds: empty entry in '" + text + "'");
    token = token.substr(b, e - b + 1);
    const char* str = token.c_str();
    char* end = nullptr;
    if (token[0] == '-' || token[0] == '+')
      throw config_error("--seeds: seeds are unsigned, got '" + token + "'");
    const unsigned long long v = std::strtoull(str, &end, 10);
    if (end == str || *end != '\0')
      throw config_error("--seeds: cannot parse '" + token + "'");
    seeds.push_back(v);
  }
  if (seeds.empty()) throw config_error("--seeds: need at least one seed");
  return seeds;
}

int cmd_obb_bench(const OverrideSet& ov, const std::string& seeds_csv) {
  RunSettings s = ov.settings();
  s.problem = "obb";
  const std::vector<std::uint64_t> seeds = parse_seed_list(seeds_csv);
  const BenchResult bench = run_obb_bench(s, seeds);
  const std::string summary = bench_summary_json(bench);
  if (s.out_path.empty()) {
    write_bench_csv(std::cout, bench);
    std::fputs(summary.c_str(), stderr);
  } else {
    std::ofstream out(s.out_path);
    if (out) write_bench_csv(out, bench);
    out.flush();
    if (!out) throw oracle_error("cannot write benchmark csv: " + s.out_path);
    std::fputs(summary.c_str(), stdout);
  }
  return bench.summary.n_matched > 0 ? 0 : 1;
}

int cmd_compare(const OverrideSet& ov) {
  RunSettings s = ov.settings();
  s.mode = "rqnbm";
  const RunReport full = run_single(s, nullptr);
  s.mode = "rqnbm-no";
  const RunReport bare = run_single(s, nullptr);

  nlohmann::json j;
  j["rqnbm"] = nlohmann::json::parse(report_to_json(full));
  j["rqnbm-no"] = nlohmann::json::parse(report_to_json(bare));
  j["f_gap"] = std::fabs(full.f_opt - bare.f_opt);
  j["nf_ratio"] = full.n_f > 0
                      ? static_cast<double>(bare.n_f) /
                            static_cast<double>(full.n_f)
                      : 0.0;
  j["t_ratio"] = full.t_total > 0.0 ? bare.t_total / full.t_total : 0.0;
  const std::string text = j.dump(2) + "\n";
  std::fputs(text.c_str(), stdout);
  if (!s.out_path.empty()) write_text_file(s.out_path, text);
  return std::max(termination_exit(full.termination),
                  termination_exit(bare.termination));
}

int cmd_trace_check(const OverrideSet& ov) {
  const RunSettings s = ov.settings();
  if (s.trace_path.empty())
    throw config_error("trace-check requires --trace <file>");
  const std::vector<TraceRecord> trace = read_trace_csv_file(s.trace_path);
  if (trace.empty())
    std::fputs("warning: empty trace; every invariant passes vacuously\n",
               stderr);

  TraceCheckParams params;
  params.theta_L = s.solver.ls.theta_L;
  params.rho = s.solver.rho;
  params.mu0 = s.solver.mu0;
  params.D = s.solver.D;
  const std::vector<InvariantCheckResult> checks = check_trace(trace, params);

  std::printf("%-24s %-5s %9s %11s %13s\n", "invariant", "state", "checked",
              "violations", "worst-margin");
  for (const InvariantCheckResult& c : checks) {
    const char* state = c.skipped ? "SKIP" : (c.pass ? "PASS" : "FAIL");
    if (c.checked > 0) {
      std::printf("%-24s %-5s %9ld %11ld %13.3g\n", c.name.c_str(), state,
                  c.checked, c.violations, c.worst);
    } else {
      std::printf("%-24s %-5s %9ld %11ld %13s  %s\n", c.name.c_str(), state,
                  c.checked, c.violations, "-", c.note.c_str());
    }
  }
  const bool ok = all_checks_pass(checks);
  std::printf("%s\n", ok ? "all invariants hold" : "invariant violations found");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"restricted-memory quasi-Newton bundle method driver"};
  app.require_subcommand(1);

  OverrideSet ov_solve, ov_bench, ov_compare, ov_check;
  CLI::App* solve =
      app.add_subcommand("solve", "run one instance and emit a JSON report");
  ov_solve.attach(solve);

  CLI::App* bench = app.add_subcommand(
      "obb-bench",
      "run both operator policies over seeded point clouds and aggregate");
  ov_bench.attach(bench);
  std::string seeds_csv = "1,2,3,4,5,6,7,8,9,10";
  bench->add_option("--seeds", seeds_csv, "comma-separated seed list");

  CLI::App* compare = app.add_subcommand(
      "compare", "run both operator policies on one instance side by side");
  ov_compare.attach(compare);

  CLI::App* check = app.add_subcommand(
      "trace-check", "replay solver invariants from a recorded trace");
  ov_check.attach(check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (solve->parsed()) return cmd_solve(ov_solve);
    if (bench->parsed()) return cmd_obb_bench(ov_bench, seeds_csv);
    if (compare->parsed()) return cmd_compare(ov_compare);
    return cmd_trace_check(ov_check);
  } catch (const config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitUsage;
  } catch (const trace_error& e) {
    std::fprintf(stderr, "trace error: %s\n", e.what());
    return kExitTrace;
  } catch (const oracle_error& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitFile;
  } catch (const precondition_violation& e) {
    std::fprintf(stderr, "invalid setup: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 70;
  }
}
