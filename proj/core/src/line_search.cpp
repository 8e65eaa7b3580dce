#include "rqnbm/line_search.hpp"

#include <algorithm>
#include <cmath>

namespace rqnbm {

void LineSearchParams::validate() const {
  const bool ok = theta_A > 0.0 && theta_L > 0.0 && theta_T > 0.0 &&
                  theta_L < theta_T && theta_T + theta_A < theta_R &&
                  theta_R < 0.5 && gamma > 0.0 && kappa > 0.0 && kappa < 0.5 &&
                  nu >= 1.0 && max_inner >= 1;
  if (!ok) {
    throw precondition_violation(
        "line search parameters must satisfy theta_L < theta_T, "
        "theta_T + theta_A < theta_R < 1/2, gamma > 0, kappa in (0, 1/2), "
        "nu >= 1, max_inner >= 1");
  }
}

LineSearchResult line_search(const ProblemOracle& prob, const Manifold& m,
                             const ManifoldPoint& x, double f_x,
                             const TangentCoords& d, double w, double t_I,
                             double t_min, double D,
                             const LineSearchParams& p) {
  p.validate();
  if (!(w > 0.0)) throw precondition_violation("line_search: w must be positive");
  if (!(t_I > 0.0)) throw precondition_violation("line_search: t_I must be positive");
  const double dn = norm(d);
  if (!(dn > 0.0)) throw precondition_violation("line_search: direction is zero");

  double t_A = 0.0;
  double t_U = t_I;
  double t = t_I;
  double delta = 0.0;
  for (int it = 1; it <= p.max_inner; ++it) {
    const TransportMap T = m.transport(x, scaled(d, t));
    const ManifoldPoint y = T.to;
    const EvalResult ev = prob.eval(y);
    const TangentCoords ghat = apply_hat_pullback(T, ev.g);
    const double gd = inner(ghat, d);
    delta = std::max(std::abs(f_x - ev.f + t * gd),
                     p.gamma * std::pow(t * dn, p.nu));

    // bracket update comes before the exit tests
    if (ev.f <= f_x - p.theta_T * t * w) {
      t_A = t;
    } else {
      t_U = t;
    }
    if (ev.f <= f_x - p.theta_L * t * w && (t >= t_min || delta > p.theta_A * w)) {
      return LineSearchResult{t, t, delta, 0.0, y, ev.f, ev.g, StepOutcome::Serious};
    }
    if (-delta + gd >= -p.theta_R * w && (t - t_A) * dn < D) {
      return LineSearchResult{0.0, t, delta, delta, y, ev.f, ev.g, StepOutcome::Null};
    }

    // next trial: minimizer of the quadratic through (0, f_x) with slope -w
    // and (t, f(y)), clipped away from the bracket ends; concave or flat
    // models push to the upper end, an undefined minimizer to the midpoint
    const double width = t_U - t_A;
    const double lo = t_A + p.kappa * width;
    const double hi = t_U - p.kappa * width;
    const double c = (ev.f - f_x + t * w) / (t * t);
    double s;
    if (c > 0.0) {
      s = w / (2.0 * c);
      if (!std::isfinite(s)) s = 0.5 * (t_A + t_U);
    } else {
      s = hi;
    }
    t = std::clamp(s, lo, hi);
  }
  throw line_search_stall("line search exceeded its inner-iteration cap",
                          t_A, t_U, t, delta, p.max_inner);
}

}  // namespace rqnbm
