#pragma once

#include <functional>
#include <iosfwd>
#include <string>

#include <Eigen/Core>

#include "rqnbm/geometry.hpp"

namespace rqnbm {

/// One oracle answer: a function value and one Clarke subgradient at the
/// query point, in intrinsic coordinates. `degenerate` flags inputs where
/// the function collapses (zero-extent point cloud) and the zero
/// subgradient was reported by convention.
struct EvalResult {
  double f;
  TangentCoords g;
  bool degenerate = false;
};

/// Black-box problem: the solver sees only (f, g) pairs.
struct ProblemOracle {
  Manifold manifold;
  std::function<EvalResult(const ManifoldPoint&)> eval;
  std::string description;
};

/// Point cloud for the minimum-volume oriented bounding box problem:
/// K points in R^d stored as the columns of E.
struct ObbInstance {
  Eigen::MatrixXd E;  // d x K
  int d = 0;
  int K = 0;
};

/// Volume of the axis-aligned bounding box of the rotated cloud O E:
///   f(O) = prod_i (max_j (OE)_ij - min_j (OE)_ij).
/// Subgradient: with argmax/argmin columns chosen by smallest index on
/// ties, the Euclidean gradient has rows
///   G_i = (prod_{l != i} range_l) * (E[:, jmax_i] - E[:, jmin_i])^T,
/// projected to the tangent space at O (i.e. O * skew(O^T G)) and returned
/// in intrinsic coordinates. A zero range in any row yields f = 0, a zero
/// subgradient, and the degenerate flag.
EvalResult obb_eval(const ObbInstance& inst, const ManifoldPoint& O);

/// f(x) = max_i x_i^2 on Euclidean(n); subgradient 2 x_i* e_i* with i* the
/// smallest maximizing index.
EvalResult maxq_eval(const ManifoldPoint& x);

ProblemOracle make_obb_oracle(const ObbInstance& inst);
ProblemOracle make_maxq_oracle(int n);

/// Synthetic instance: E = 0.75 * U with U i.i.d. uniform on [0, 1),
/// filled column by column (point by point) from Rng(seed).
ObbInstance generate_obb(int d, int K, std::uint64_t seed);

/// Q factor (positive-diagonal convention) of a d x d standard-normal
/// matrix drawn column by column from Rng(seed); redraws on a singular
/// sample. Orthogonal within 1e-10.
ManifoldPoint random_orthogonal_start(int d, std::uint64_t seed);

/// Point-cloud CSV: first line "d,K", then K rows of d comma-separated
/// coordinates (one point per row). Throws oracle_error on malformed input.
ObbInstance load_obb_csv(const std::string& path);
ObbInstance read_obb_csv(std::istream& in);
void write_obb_csv(std::ostream& out, const ObbInstance& inst);

}  // namespace rqnbm
