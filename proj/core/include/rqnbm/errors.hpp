#pragma once

#include <stdexcept>
#include <string>

namespace rqnbm {

/// Caller broke a documented precondition (anchor mismatch, invalid
/// parameter range, non-finite input). Programming error, not a runtime
/// condition worth retrying.
class precondition_violation : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Two tangent vectors (or an operator and a vector) anchored at different
/// manifold points were mixed in one operation.
class anchor_mismatch : public precondition_violation {
public:
  using precondition_violation::precondition_violation;
};

/// A retraction step could not be completed (singular QR factor).
class degenerate_step : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Inverse retraction requested for points outside the injectivity region.
class out_of_injectivity : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A transport was requested along a direction whose differentiated
/// retraction is numerically zero.
class degenerate_direction : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Problem oracle failure (bad instance file, non-finite values, ...).
class oracle_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Configuration file / option parsing failure.
class config_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed iteration-trace file.
class trace_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// The inner line-search loop hit its iteration cap without an accepted
/// step. Carries the final bracket so the caller can report or retry.
class line_search_stall : public std::runtime_error {
public:
  line_search_stall(const std::string& what, double t_A, double t_U,
                    double t_last, double delta_last, int inner)
      : std::runtime_error(what),
        t_A(t_A), t_U(t_U), t_last(t_last), delta_last(delta_last),
        inner(inner) {}

  double t_A;
  double t_U;
  double t_last;
  double delta_last;
  int inner;
};

}  // namespace rqnbm
