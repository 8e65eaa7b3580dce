#include "rqnbm/simplex_qp.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "rqnbm/errors.hpp"

namespace rqnbm {

namespace {

double phi(const Qp3Input& in, const Eigen::Vector3d& lam) {
  return lam.dot(in.gram * lam) + in.lin.dot(lam);
}

void validate(const Qp3Input& in) {
  if (!in.gram.allFinite() || !in.lin.allFinite()) {
    throw precondition_violation("solve_simplex_qp: non-finite input");
  }
  if ((in.gram - in.gram.transpose()).norm() > 1e-10) {
    throw precondition_violation("solve_simplex_qp: gram matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(in.gram, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9) {
    throw precondition_violation("solve_simplex_qp: gram matrix is indefinite");
  }
  if (in.lin(0) != 0.0 || in.lin(1) < 0.0 || in.lin(2) < 0.0) {
    throw precondition_violation("solve_simplex_qp: invalid linear term");
  }
}

}  // namespace

Qp3Solution solve_simplex_qp(const Qp3Input& in) {
  validate(in);

  bool found = false;
  Qp3Solution best{Eigen::Vector3d::Zero(), std::numeric_limits<double>::infinity()};
  const auto consider = [&](const Eigen::Vector3d& lam) {
    const double val = phi(in, lam);
    // strict comparison: the first candidate at a tied value wins, and the
    // enumeration below goes interior, edges, vertices, so larger supports
    // are preferred
    if (!found || val < best.value) {
      found = true;
      best.lambda = lam;
      best.value = val;
    }
  };

  // interior: stationarity of the Lagrangian, equality constraint appended
  {
    Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
    A.topLeftCorner<3, 3>() = 2.0 * in.gram;
    A.topRightCorner<3, 1>().setOnes();
    A.bottomLeftCorner<1, 3>().setOnes();
    Eigen::Vector4d rhs;
    rhs << -in.lin, 1.0;
    const Eigen::Vector4d z = A.partialPivLu().solve(rhs);
    if (z.allFinite() &&
        (A * z - rhs).norm() <= 1e-9 * std::max(1.0, rhs.norm() + A.norm())) {
      const Eigen::Vector3d lam = z.head<3>();
      if (lam.minCoeff() >= 0.0) consider(lam);
    }
  }

  // edges: lambda_j = t, lambda_k = 1 - t, remaining coordinate zero
  const int edges[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  for (const auto& e : edges) {
    const int j = e[0], k = e[1];
    const double denom = 2.0 * (in.gram(j, j) - 2.0 * in.gram(j, k) + in.gram(k, k));
    if (!(denom > 0.0)) continue;  // flat or concave along the edge: vertices cover it
    const double t =
        (2.0 * in.gram(k, k) - 2.0 * in.gram(j, k) + in.lin(k) - in.lin(j)) / denom;
    if (!(t >= 0.0 && t <= 1.0)) continue;
    Eigen::Vector3d lam = Eigen::Vector3d::Zero();
    lam(j) = t;
    lam(k) = 1.0 - t;
    consider(lam);
  }

  for (int i = 0; i < 3; ++i) consider(Eigen::Vector3d::Unit(i));

  return best;
}

}  // namespace rqnbm
