#pragma once

#include "rqnbm/geometry.hpp"
#include "rqnbm/problems.hpp"

namespace rqnbm {

/// Parameters of the nonsmooth line search. The defaults are the
/// experiment settings used throughout the test battery.
///
/// Required relations: 0 < theta_T + theta_A < theta_R < 1/2,
/// 0 < theta_L < theta_T, gamma > 0, kappa in (0, 1/2), nu >= 1.
struct LineSearchParams {
  double theta_A = 0.01;
  double theta_L = 0.01;
  double theta_R = 0.45;
  double theta_T = 0.02;
  double gamma = 0.15;
  double kappa = 0.25;
  double nu = 2.0;
  int max_inner = 60;

  /// Throws precondition_violation if the relations above fail.
  void validate() const;
};

enum class StepOutcome { Serious, Null };

/// Result of one line search along y(t) = R_x(t d).
///   serious: t_L = t_R > 0, alpha = 0 — the trial point becomes the new
///            center with guaranteed descent f_y <= f_x - theta_L t w.
///   null:    t_L = 0 < t_R, alpha = delta >= 0 — the center is kept and
///            (g_y, alpha) enriches the model.
/// delta is the locality measure of the exit trial:
///   delta = max(|f_x - f_y + t <T-hat g_y, d>|, gamma (t |d|)^nu).
struct LineSearchResult {
  double t_L = 0.0;
  double t_R = 0.0;
  double delta = 0.0;
  double alpha = 0.0;
  ManifoldPoint y;
  double f_y = 0.0;
  TangentCoords g_y;  // subgradient at y, in y's coordinates
  StepOutcome outcome = StepOutcome::Null;
};

/// Bracketing line search on the nonsmooth model.
///
/// Starts from t_A = 0, t = t_U = t_I and iterates: evaluate the oracle at
/// R_x(t d), pull the subgradient back to x with the hat-transport
/// (beta^{-1} times the inverse transport), compute delta, then
///   - sufficient decrease f_y <= f_x - theta_T t w moves t_A up to t,
///     otherwise t_U comes down to t;
///   - serious exit when f_y <= f_x - theta_L t w and (t >= t_min or
///     delta > theta_A w);
///   - null exit when -delta + <T-hat g_y, d> >= -theta_R w and
///     (t - t_A) |d| < D;
///   - otherwise the next trial is chosen by quadratic interpolation of
///     (f_x, slope -w, f_y at t), clipped into
///     [t_A + kappa (t_U - t_A), t_U - kappa (t_U - t_A)], with the
///     midpoint as fallback when the model has no interior minimum.
///
/// The bracket shrinks by at least the factor (1 - kappa) per rejected
/// trial; exceeding max_inner throws line_search_stall with the final
/// bracket. The caller is responsible for t_I <= mu0 / |d| (retraction
/// injectivity); this routine only requires w > 0 and t_I > 0.
LineSearchResult line_search(const ProblemOracle& prob, const Manifold& m,
                             const ManifoldPoint& x, double f_x,
                             const TangentCoords& d, double w, double t_I,
                             double t_min, double D, const LineSearchParams& p);

}  // namespace rqnbm
