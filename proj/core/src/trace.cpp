#include "rqnbm/trace.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "rqnbm/errors.hpp"

namespace rqnbm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::array<const char*, 14> kRequired = {
    "k",    "step", "f",    "w",      "tL",        "tR",     "alpha",
    "lam1", "lam2", "lam3", "update", "corrected", "scaled", "qp_value"};
const std::array<const char*, 7> kOptional = {
    "f_prev", "gnorm", "w_next", "w_resid", "step_len", "hg_norm", "wall_time"};

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

[[noreturn]] void bad_cell(long line_no, const std::string& col,
                           const std::string& cell) {
  throw trace_error("trace line " + std::to_string(line_no) + ": bad value '" +
                    cell + "' in column " + col);
}

double parse_double(const std::string& cell, long line_no,
                    const std::string& col) {
  const char* s = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(s, &end);
  if (end == s || *end != '\0') bad_cell(line_no, col, cell);
  return v;
}

int parse_int(const std::string& cell, long line_no, const std::string& col) {
  const char* s = cell.c_str();
  char* end = nullptr;
  const long v = std::strtol(s, &end, 10);
  if (end == s || *end != '\0') bad_cell(line_no, col, cell);
  return static_cast<int>(v);
}

bool parse_bool(const std::string& cell, long line_no, const std::string& col) {
  if (cell == "0") return false;
  if (cell == "1") return true;
  bad_cell(line_no, col, cell);
}

StepKind parse_step(const std::string& cell, long line_no) {
  if (cell == "serious") return StepKind::Serious;
  if (cell == "null") return StepKind::Null;
  bad_cell(line_no, "step", cell);
}

UpdateUsed parse_update(const std::string& cell, long line_no) {
  if (cell == "none") return UpdateUsed::None;
  if (cell == "sr1") return UpdateUsed::Sr1;
  if (cell == "bfgs") return UpdateUsed::Bfgs;
  bad_cell(line_no, "update", cell);
}

void chomp(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace) {
  for (size_t i = 0; i < kRequired.size(); ++i)
    out << (i ? "," : "") << kRequired[i];
  for (const char* name : kOptional) out << ',' << name;
  out << '\n';
  for (const TraceRecord& r : trace) {
    out << r.k << ',' << to_string(r.kind) << ',' << fmt(r.f) << ','
        << fmt(r.w) << ',' << fmt(r.t_L) << ',' << fmt(r.t_R) << ','
        << fmt(r.alpha) << ',' << fmt(r.lambda[0]) << ',' << fmt(r.lambda[1])
        << ',' << fmt(r.lambda[2]) << ',' << to_string(r.update) << ','
        << (r.corrected ? 1 : 0) << ',' << (r.scaled ? 1 : 0) << ','
        << fmt(r.qp_value) << ',' << fmt(r.f_prev) << ',' << fmt(r.gnorm)
        << ',' << fmt(r.w_next) << ',' << fmt(r.w_resid) << ','
        << fmt(r.step_len) << ',' << fmt(r.hg_norm) << ',' << fmt(r.wall_time)
        << '\n';
  }
}

void write_trace_csv_file(const std::string& path,
                          const std::vector<TraceRecord>& trace) {
  std::ofstream out(path);
  if (!out) throw trace_error("cannot open trace file for writing: " + path);
  write_trace_csv(out, trace);
  out.flush();
  if (!out) throw trace_error("failed writing trace file: " + path);
}

std::vector<TraceRecord> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw trace_error("trace is missing its header");
  chomp(line);

  std::map<std::string, size_t> col;
  {
    const std::vector<std::string> names = split_row(line);
    for (size_t i = 0; i < names.size(); ++i) {
      bool known = false;
      for (const char* r : kRequired) known = known || names[i] == r;
      for (const char* o : kOptional) known = known || names[i] == o;
      if (!known) throw trace_error("unknown trace column: " + names[i]);
      if (!col.emplace(names[i], i).second)
        throw trace_error("duplicate trace column: " + names[i]);
    }
    for (const char* r : kRequired)
      if (!col.count(r))
        throw trace_error(std::string("trace is missing column: ") + r);
  }
  const size_t width = col.size();

  // fetchers bound to the resolved layout; optional columns fall back to a
  // constant
  const auto cell = [&](const std::vector<std::string>& row,
                        const char* name) -> const std::string& {
    return row[col.at(name)];
  };
  const auto opt_double = [&](const std::vector<std::string>& row,
                              const char* name, long line_no,
                              double fallback) {
    const auto it = col.find(name);
    return it == col.end() ? fallback
                           : parse_double(row[it->second], line_no, name);
  };

  std::vector<TraceRecord> trace;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    chomp(line);
    if (line.empty()) continue;
    const std::vector<std::string> row = split_row(line);
    if (row.size() != width)
      throw trace_error("trace line " + std::to_string(line_no) + ": expected " +
                        std::to_string(width) + " cells, got " +
                        std::to_string(row.size()));
    TraceRecord r;
    r.k = parse_int(cell(row, "k"), line_no, "k");
    r.kind = parse_step(cell(row, "step"), line_no);
    r.f = parse_double(cell(row, "f"), line_no, "f");
    r.w = parse_double(cell(row, "w"), line_no, "w");
    r.t_L = parse_double(cell(row, "tL"), line_no, "tL");
    r.t_R = parse_double(cell(row, "tR"), line_no, "tR");
    r.alpha = parse_double(cell(row, "alpha"), line_no, "alpha");
    r.lambda[0] = parse_double(cell(row, "lam1"), line_no, "lam1");
    r.lambda[1] = parse_double(cell(row, "lam2"), line_no, "lam2");
    r.lambda[2] = parse_double(cell(row, "lam3"), line_no, "lam3");
    r.update = parse_update(cell(row, "update"), line_no);
    r.corrected = parse_bool(cell(row, "corrected"), line_no, "corrected");
    r.scaled = parse_bool(cell(row, "scaled"), line_no, "scaled");
    r.qp_value = parse_double(cell(row, "qp_value"), line_no, "qp_value");
    r.f_prev = opt_double(row, "f_prev", line_no, kNaN);
    r.gnorm = opt_double(row, "gnorm", line_no, kNaN);
    r.w_next = opt_double(row, "w_next", line_no, kNaN);
    r.w_resid = opt_double(row, "w_resid", line_no, kNaN);
    r.step_len = opt_double(row, "step_len", line_no, kNaN);
    r.hg_norm = opt_double(row, "hg_norm", line_no, kNaN);
    r.wall_time = opt_double(row, "wall_time", line_no, 0.0);
    trace.push_back(std::move(r));
  }
  return trace;
}

std::vector<TraceRecord> read_trace_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw trace_error("cannot open trace file: " + path);
  return read_trace_csv(in);
}

namespace {

// Shared shape of every replay check: walk the rows, derive a slack that
// must stay >= 0, skip rows whose inputs are NaN.
struct CheckAccum {
  InvariantCheckResult out;
  explicit CheckAccum(std::string name) { out.name = std::move(name); }

  void row(double slack) {
    if (std::isnan(slack)) return;
    ++out.checked;
    if (out.checked == 1 || slack < out.worst) out.worst = slack;
    if (slack < 0.0) {
      ++out.violations;
      out.pass = false;
    }
  }

  InvariantCheckResult finish(const char* skip_note) {
    if (out.checked == 0) {
      out.skipped = true;
      out.note = skip_note;
    }
    return out;
  }
};

double f_before(const std::vector<TraceRecord>& trace, size_t i) {
  if (!std::isnan(trace[i].f_prev)) return trace[i].f_prev;
  return i > 0 ? trace[i - 1].f : kNaN;
}

}  // namespace

std::vector<InvariantCheckResult> check_trace(
    const std::vector<TraceRecord>& trace, const TraceCheckParams& params) {
  CheckAccum descent("serious-step descent");
  CheckAccum hold("null-step center hold");
  CheckAccum identity("w-identity residual");
  CheckAccum lower("w lower bound");
  CheckAccum qp("qp optimality bound");
  CheckAccum cap("step-length cap");
  CheckAccum norm_bound("operator norm bound");
  CheckAccum simplex("aggregation simplex");

  for (size_t i = 0; i < trace.size(); ++i) {
    const TraceRecord& r = trace[i];
    const double fp = f_before(trace, i);
    if (r.kind == StepKind::Serious) {
      // the acceptance test of the line search, re-evaluated verbatim
      if (!std::isnan(fp))
        descent.row(fp - params.theta_L * r.t_L * r.w - r.f);
    } else {
      if (!std::isnan(fp)) hold.row(-std::fabs(r.f - fp));
      if (!std::isnan(r.qp_value)) qp.row(r.w + 1e-10 - r.qp_value);
      if (!std::isnan(r.lambda[0]) && !std::isnan(r.lambda[1]) &&
          !std::isnan(r.lambda[2])) {
        double min_lam = r.lambda[0];
        double sum = 0.0;
        for (double l : r.lambda) {
          min_lam = std::min(min_lam, l);
          sum += l;
        }
        simplex.row(std::min(min_lam + 1e-10, 1e-10 - std::fabs(sum - 1.0)));
      }
    }
    identity.row(1e-9 - r.w_resid);
    if (!std::isnan(r.w_next) && !std::isnan(r.gnorm))
      lower.row(r.w_next - (params.rho * r.gnorm * r.gnorm - 1e-9));
    cap.row(params.mu0 - r.step_len);
    norm_bound.row(params.D + 1e-12 - r.hg_norm);
  }

  return {descent.finish("no serious rows with a usable previous f"),
          hold.finish("no null rows with a usable previous f"),
          identity.finish("w_resid column absent"),
          lower.finish("w_next or gnorm column absent"),
          qp.finish("no null rows with a qp value"),
          cap.finish("step_len column absent"),
          norm_bound.finish("hg_norm column absent"),
          simplex.finish("no null rows with aggregation weights")};
}

bool all_checks_pass(const std::vector<InvariantCheckResult>& checks) {
  for (const InvariantCheckResult& c : checks)
    if (!c.pass) return false;
  return true;
}

}  // namespace rqnbm
