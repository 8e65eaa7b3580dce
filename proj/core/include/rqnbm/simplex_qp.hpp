#pragma once

#include <Eigen/Core>

namespace rqnbm {

/// Data of the three-variable aggregation subproblem
///   minimize  phi(lambda) = lambda^T G lambda + lin^T lambda
///   subject to lambda on the unit 2-simplex.
/// G is the Gram matrix <a_i, H a_j> of the three bundled subgradients
/// under the current operator; lin = (0, 2*alpha_new, 2*alpha_tilde).
struct Qp3Input {
  Eigen::Matrix3d gram;
  Eigen::Vector3d lin;
};

struct Qp3Solution {
  Eigen::Vector3d lambda;
  double value;
};

/// Exact global minimizer over the simplex by enumerating all seven faces
/// (interior, three edges, three vertices), solving the stationarity
/// system on each, filtering feasibility, and taking the minimum. Ties are
/// broken toward larger support (interior over edge over vertex), then by
/// enumeration order, so results are deterministic.
///
/// Validates the input (gram symmetric within 1e-10, smallest eigenvalue
/// >= -1e-9, lin[0] == 0, lin[1], lin[2] >= 0); throws
/// precondition_violation otherwise. The returned value never exceeds
/// phi at any vertex; in particular value <= phi(0,0,1) = G(2,2) + lin(2),
/// the bound the solver's decrease argument relies on.
Qp3Solution solve_simplex_qp(const Qp3Input& input);

}  // namespace rqnbm
