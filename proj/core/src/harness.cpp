#include "rqnbm/harness.hpp"

#include <atomic>
#include <cctype>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "rqnbm/errors.hpp"
#include "rqnbm/problems.hpp"

namespace rqnbm {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double to_double(const std::string& key, const std::string& value) {
  const char* s = value.c_str();
  char* end = nullptr;
  const double v = std::strtod(s, &end);
  if (end == s || *end != '\0')
    throw config_error(key + ": cannot parse '" + value + "' as a number");
  return v;
}

long to_long(const std::string& key, const std::string& value) {
  const char* s = value.c_str();
  char* end = nullptr;
  const long v = std::strtol(s, &end, 10);
  if (end == s || *end != '\0')
    throw config_error(key + ": cannot parse '" + value + "' as an integer");
  return v;
}

std::uint64_t to_seed(const std::string& key, const std::string& value) {
  if (!value.empty() && (value[0] == '-' || value[0] == '+'))
    throw config_error(key + ": must be an unsigned integer, got '" + value +
                       "'");
  const char* s = value.c_str();
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (end == s || *end != '\0')
    throw config_error(key + ": cannot parse '" + value +
                       "' as an unsigned integer");
  return v;
}

void require(bool ok, const std::string& key, const std::string& value,
             const char* constraint) {
  if (!ok)
    throw config_error(key + " = " + value + " is out of range (" +
                       constraint + ")");
}

// Full-config validation: delegates the coupled constraints to the solver
// and line-search validators, surfacing them on the config channel.
void validate_settings(const RunSettings& s) {
  try {
    s.solver.validate();
  } catch (const precondition_violation& e) {
    throw config_error(e.what());
  }
}

RunReport make_report(const std::string& method, std::uint64_t seed, int d,
                      int K, const SolveResult& res) {
  RunReport r;
  r.method = method;
  r.seed = seed;
  r.d = d;
  r.K = K;
  r.f_opt = res.f_opt;
  r.n_f = res.n_f;
  r.n_iter = res.n_iter;
  r.n_serious = res.n_serious;
  r.n_null = res.n_null;
  r.t_total = res.t_total;
  r.t_qp = res.t_qp;
  r.t_f = res.t_f;
  r.w_final = res.w_final;
  r.termination = to_string(res.termination);
  return r;
}

SolverConfig config_for_mode(const RunSettings& s) {
  SolverConfig cfg = s.solver;
  cfg.update_mode =
      s.mode == "rqnbm-no" ? UpdateMode::Identity : UpdateMode::Full;
  return cfg;
}

}  // namespace

void apply_setting(RunSettings& s, const std::string& key,
                   const std::string& value) {
  if (value.empty()) throw config_error(key + ": empty value");

  if (key == "mode") {
    require(value == "rqnbm" || value == "rqnbm-no", key, value,
            "rqnbm | rqnbm-no");
    s.mode = value;
  } else if (key == "problem") {
    require(value == "maxq" || value == "obb" || value == "obb-csv", key,
            value, "maxq | obb | obb-csv");
    s.problem = value;
  } else if (key == "n") {
    const long v = to_long(key, value);
    require(v >= 1, key, value, "n >= 1");
    s.n = static_cast<int>(v);
  } else if (key == "d") {
    const long v = to_long(key, value);
    require(v >= 2, key, value, "d >= 2");
    s.d = static_cast<int>(v);
  } else if (key == "K") {
    const long v = to_long(key, value);
    require(v >= 2, key, value, "K >= 2");
    s.K = static_cast<int>(v);
  } else if (key == "seed") {
    s.seed = to_seed(key, value);
  } else if (key == "jobs") {
    const long v = to_long(key, value);
    require(v >= 1, key, value, "jobs >= 1");
    s.jobs = static_cast<int>(v);
  } else if (key == "data") {
    s.data_path = value;
  } else if (key == "out") {
    s.out_path = value;
  } else if (key == "trace") {
    s.trace_path = value;
  } else if (key == "diagnostic") {
    require(value == "0" || value == "1", key, value, "0 | 1");
    s.solver.diagnostic_mode = value == "1";
  } else if (key == "rho") {
    const double v = to_double(key, value);
    require(v > 0.0 && v < 1.0, key, value, "0 < rho < 1");
    s.solver.rho = v;
  } else if (key == "Gamma") {
    const long v = to_long(key, value);
    require(v >= 1, key, value, "Gamma >= 1");
    s.solver.Gamma = static_cast<int>(v);
  } else if (key == "t_min") {
    const double v = to_double(key, value);
    require(v > 0.0 && v < 1.0, key, value, "0 < t_min < 1");
    s.solver.t_min = v;
  } else if (key == "t_max") {
    const double v = to_double(key, value);
    require(v >= 1.0, key, value, "t_max >= 1");
    s.solver.t_max = v;
  } else if (key == "mu0") {
    const double v = to_double(key, value);
    require(v > 0.0, key, value, "mu0 > 0");
    s.solver.mu0 = v;
  } else if (key == "D") {
    const double v = to_double(key, value);
    require(v > 0.0, key, value, "D > 0");
    s.solver.D = v;
  } else if (key == "eps") {
    const double v = to_double(key, value);
    require(v >= 0.0, key, value, "eps >= 0");
    s.solver.eps = v;
  } else if (key == "max_iter") {
    const long v = to_long(key, value);
    require(v >= 1, key, value, "max_iter >= 1");
    s.solver.max_iter = static_cast<int>(v);
  } else if (key == "max_inner") {
    const long v = to_long(key, value);
    require(v >= 1, key, value, "max_inner >= 1");
    s.solver.ls.max_inner = static_cast<int>(v);
  } else if (key == "theta_A") {
    const double v = to_double(key, value);
    require(v > 0.0, key, value, "theta_A > 0");
    s.solver.ls.theta_A = v;
  } else if (key == "theta_L") {
    const double v = to_double(key, value);
    require(v > 0.0, key, value, "theta_L > 0");
    s.solver.ls.theta_L = v;
  } else if (key == "theta_R") {
    const double v = to_double(key, value);
    require(v > 0.0 && v < 0.5, key, value, "0 < theta_R < 1/2");
    s.solver.ls.theta_R = v;
  } else if (key == "theta_T") {
    const double v = to_double(key, value);
    require(v > 0.0, key, value, "theta_T > 0");
    s.solver.ls.theta_T = v;
  } else if (key == "gamma") {
    const double v = to_double(key, value);
    require(v > 0.0, key, value, "gamma > 0");
    s.solver.ls.gamma = v;
  } else if (key == "kappa") {
    const double v = to_double(key, value);
    require(v > 0.0 && v < 0.5, key, value, "0 < kappa < 1/2");
    s.solver.ls.kappa = v;
  } else if (key == "nu") {
    const double v = to_double(key, value);
    require(v >= 1.0, key, value, "nu >= 1");
    s.solver.ls.nu = v;
  } else {
    throw config_error("unknown config key: " + key);
  }
}

RunSettings parse_config_text(const std::string& text,
                              const std::string& origin) {
  RunSettings s;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error(origin + ":" + std::to_string(line_no) +
                         ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw config_error(origin + ":" + std::to_string(line_no) +
                         ": missing key");
    try {
      apply_setting(s, key, value);
    } catch (const config_error& e) {
      throw config_error(origin + ":" + std::to_string(line_no) + ": " +
                         e.what());
    }
  }
  validate_settings(s);
  return s;
}

RunSettings parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::string report_to_json(const RunReport& r) {
  nlohmann::json j;
  j["method"] = r.method;
  j["seed"] = r.seed;
  j["d"] = r.d;
  j["K"] = r.K;
  j["f_opt"] = r.f_opt;
  j["n_f"] = r.n_f;
  j["n_iter"] = r.n_iter;
  j["n_serious"] = r.n_serious;
  j["n_null"] = r.n_null;
  j["t_total"] = r.t_total;
  j["t_qp"] = r.t_qp;
  j["t_f"] = r.t_f;
  j["w_final"] = r.w_final;
  j["termination"] = r.termination;
  return j.dump(2) + "\n";
}

RunReport report_from_json(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    RunReport r;
    r.method = j.at("method").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.d = j.at("d").get<int>();
    r.K = j.at("K").get<int>();
    r.f_opt = j.at("f_opt").get<double>();
    r.n_f = j.at("n_f").get<long>();
    r.n_iter = j.at("n_iter").get<int>();
    r.n_serious = j.at("n_serious").get<int>();
    r.n_null = j.at("n_null").get<int>();
    r.t_total = j.at("t_total").get<double>();
    r.t_qp = j.at("t_qp").get<double>();
    r.t_f = j.at("t_f").get<double>();
    r.w_final = j.at("w_final").get<double>();
    r.termination = j.at("termination").get<std::string>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw oracle_error(std::string("cannot parse run report: ") + e.what());
  }
}

RunReport run_single(const RunSettings& s, std::vector<TraceRecord>* trace_out) {
  validate_settings(s);
  const SolverConfig cfg = config_for_mode(s);

  struct Setup {
    ProblemOracle prob;
    ManifoldPoint x1;
    int d;
    int K;
  };
  const Setup setup = [&]() -> Setup {
    if (s.problem == "maxq") {
      ProblemOracle prob = make_maxq_oracle(s.n);
      ManifoldPoint x1 =
          prob.manifold.make_point(Eigen::MatrixXd::Ones(s.n, 1));
      return {std::move(prob), std::move(x1), s.n, 0};
    }
    if (s.problem == "obb") {
      return {make_obb_oracle(generate_obb(s.d, s.K, s.seed)),
              random_orthogonal_start(s.d, s.seed), s.d, s.K};
    }
    if (s.problem == "obb-csv") {
      if (s.data_path.empty())
        throw config_error("problem = obb-csv requires a data path");
      const ObbInstance inst = load_obb_csv(s.data_path);
      return {make_obb_oracle(inst), random_orthogonal_start(inst.d, s.seed),
              inst.d, inst.K};
    }
    throw config_error("unknown problem: " + s.problem);
  }();

  SolveResult res = run_solver(setup.prob, setup.x1, cfg);
  RunReport report = make_report(s.mode, s.seed, setup.d, setup.K, res);
  if (trace_out) *trace_out = std::move(res.trace);
  return report;
}

BenchResult run_obb_bench(const RunSettings& base,
                          const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty())
    throw config_error("obb benchmark needs at least one seed");
  validate_settings(base);

  BenchResult bench;
  bench.rows.resize(seeds.size());

  const auto run_seed = [&](size_t i) {
    const std::uint64_t seed = seeds[i];
    const ObbInstance inst = generate_obb(base.d, base.K, seed);
    const ProblemOracle prob = make_obb_oracle(inst);
    const ManifoldPoint x1 = random_orthogonal_start(base.d, seed);

    SolverConfig cfg = base.solver;
    cfg.update_mode = UpdateMode::Full;
    const SolveResult full = run_solver(prob, x1, cfg);
    cfg.update_mode = UpdateMode::Identity;
    const SolveResult bare = run_solver(prob, x1, cfg);

    BenchSeedResult& row = bench.rows[i];
    row.rqnbm = make_report("rqnbm", seed, base.d, base.K, full);
    row.rqnbm_no = make_report("rqnbm-no", seed, base.d, base.K, bare);
    row.minimizer_distance = (full.x.ambient - bare.x.ambient).norm();
    row.matched = full.termination == Termination::Converged &&
                  bare.termination == Termination::Converged &&
                  row.minimizer_distance <= 1e-3;
  };

  const size_t jobs =
      std::min<size_t>(std::max(base.jobs, 1), seeds.size());
  if (jobs <= 1) {
    for (size_t i = 0; i < seeds.size(); ++i) run_seed(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::exception_ptr> errors(jobs);
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (size_t t = 0; t < jobs; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (size_t i = next.fetch_add(1); i < seeds.size();
               i = next.fetch_add(1))
            run_seed(i);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (std::thread& th : pool) th.join();
    for (const std::exception_ptr& e : errors)
      if (e) std::rethrow_exception(e);
  }

  BenchSummary& sum = bench.summary;
  sum.n_seeds = static_cast<int>(seeds.size());
  for (const BenchSeedResult& row : bench.rows) {
    if (row.rqnbm.termination == "converged") ++sum.n_converged_rqnbm;
    if (row.rqnbm_no.termination == "converged") ++sum.n_converged_no;
    if (!row.matched) continue;
    ++sum.n_matched;
    sum.mean_f_rqnbm += row.rqnbm.f_opt;
    sum.mean_f_no += row.rqnbm_no.f_opt;
    sum.mean_nf_rqnbm += static_cast<double>(row.rqnbm.n_f);
    sum.mean_nf_no += static_cast<double>(row.rqnbm_no.n_f);
    sum.mean_t_rqnbm += row.rqnbm.t_total;
    sum.mean_t_no += row.rqnbm_no.t_total;
    sum.mean_tqp_rqnbm += row.rqnbm.t_qp;
    sum.mean_tqp_no += row.rqnbm_no.t_qp;
    sum.mean_tf_rqnbm += row.rqnbm.t_f;
    sum.mean_tf_no += row.rqnbm_no.t_f;
  }
  if (sum.n_matched > 0) {
    const double n = sum.n_matched;
    sum.mean_f_rqnbm /= n;
    sum.mean_f_no /= n;
    sum.mean_nf_rqnbm /= n;
    sum.mean_nf_no /= n;
    sum.mean_t_rqnbm /= n;
    sum.mean_t_no /= n;
    sum.mean_tqp_rqnbm /= n;
    sum.mean_tqp_no /= n;
    sum.mean_tf_rqnbm /= n;
    sum.mean_tf_no /= n;
  }
  return bench;
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_report_row(std::ostream& out, const RunReport& r,
                      double minimizer_distance, bool matched) {
  out << r.seed << ',' << r.method << ',' << r.d << ',' << r.K << ','
      << num(r.f_opt) << ',' << r.n_f << ',' << r.n_iter << ',' << r.n_serious
      << ',' << r.n_null << ',' << num(r.t_total) << ',' << num(r.t_qp) << ','
      << num(r.t_f) << ',' << num(r.w_final) << ',' << r.termination << ','
      << num(minimizer_distance) << ',' << (matched ? 1 : 0) << '\n';
}

}  // namespace

void write_bench_csv(std::ostream& out, const BenchResult& bench) {
  out << "seed,method,d,K,f_opt,n_f,n_iter,n_serious,n_null,t_total,t_qp,t_f,"
         "w_final,termination,minimizer_distance,matched\n";
  for (const BenchSeedResult& row : bench.rows) {
    write_report_row(out, row.rqnbm, row.minimizer_distance, row.matched);
    write_report_row(out, row.rqnbm_no, row.minimizer_distance, row.matched);
  }
  const BenchSummary& sum = bench.summary;
  if (sum.n_matched > 0) {
    out << "mean,rqnbm,,," << num(sum.mean_f_rqnbm) << ','
        << num(sum.mean_nf_rqnbm) << ",,,," << num(sum.mean_t_rqnbm) << ','
        << num(sum.mean_tqp_rqnbm) << ',' << num(sum.mean_tf_rqnbm)
        << ",,,,\n";
    out << "mean,rqnbm-no,,," << num(sum.mean_f_no) << ','
        << num(sum.mean_nf_no) << ",,,," << num(sum.mean_t_no) << ','
        << num(sum.mean_tqp_no) << ',' << num(sum.mean_tf_no) << ",,,,\n";
  }
}

std::string bench_summary_json(const BenchResult& bench) {
  const BenchSummary& s = bench.summary;
  nlohmann::json j;
  j["n_seeds"] = s.n_seeds;
  j["n_converged_rqnbm"] = s.n_converged_rqnbm;
  j["n_converged_no"] = s.n_converged_no;
  j["n_matched"] = s.n_matched;
  j["mean_f_rqnbm"] = s.mean_f_rqnbm;
  j["mean_f_no"] = s.mean_f_no;
  j["mean_nf_rqnbm"] = s.mean_nf_rqnbm;
  j["mean_nf_no"] = s.mean_nf_no;
  j["mean_t_rqnbm"] = s.mean_t_rqnbm;
  j["mean_t_no"] = s.mean_t_no;
  j["mean_tqp_rqnbm"] = s.mean_tqp_rqnbm;
  j["mean_tqp_no"] = s.mean_tqp_no;
  j["mean_tf_rqnbm"] = s.mean_tf_rqnbm;
  j["mean_tf_no"] = s.mean_tf_no;
  return j.dump(2) + "\n";
}

}  // namespace rqnbm
