#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rqnbm/solver.hpp"

namespace rqnbm {

/// CSV layout: the stable prefix
///   k,step,f,w,tL,tR,alpha,lam1,lam2,lam3,update,corrected,scaled,qp_value
/// followed by replay-diagnostic columns
///   f_prev,gnorm,w_next,w_resid,step_len,hg_norm
/// and finally wall_time. Floats are written with 17 significant digits so
/// a parse round-trip reproduces the exact doubles; NaN marks
/// not-applicable cells (qp_value on serious rows, hg_norm when the
/// operator is pinned to the identity).
void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace);
void write_trace_csv_file(const std::string& path, const std::vector<TraceRecord>& trace);

/// Parses a trace CSV by header name. The stable prefix columns are
/// required; diagnostic columns are optional and default to NaN. Throws
/// trace_error on malformed input.
std::vector<TraceRecord> read_trace_csv(std::istream& in);
std::vector<TraceRecord> read_trace_csv_file(const std::string& path);

/// Tolerances/constants the replay checks need. Defaults match the
/// experiment configuration defaults.
struct TraceCheckParams {
  double theta_L = 0.01;
  double rho = 0.1;
  double mu0 = 0.18;
  double D = 1.0;
};

struct InvariantCheckResult {
  std::string name;
  bool pass = true;
  bool skipped = false;  // required data not present in the trace
  long checked = 0;      // rows the check actually examined
  long violations = 0;
  double worst = 0.0;    // most violating margin (sign convention per check)
  std::string note;
};

/// Replays the solver invariants a finished trace must satisfy:
///   - serious-step descent  f <= f_prev - theta_L * t_L * w
///   - null-step center hold f == f_prev
///   - w-identity residual   w_resid <= 1e-9
///   - w lower bound         w_next >= rho * gnorm^2 - 1e-9
///   - QP bound (null rows)  qp_value <= w + 1e-10
///   - step-length cap       step_len <= mu0
///   - operator norm bound   hg_norm <= D + 1e-12
///   - aggregation simplex   lam >= -1e-10, |sum lam - 1| <= 1e-10 (null rows)
/// NaN cells are skipped row-wise; a check whose column is entirely absent
/// reports skipped = true. An empty trace passes everything vacuously.
std::vector<InvariantCheckResult> check_trace(const std::vector<TraceRecord>& trace,
                                              const TraceCheckParams& params);

bool all_checks_pass(const std::vector<InvariantCheckResult>& checks);

}  // namespace rqnbm
