#include "rqnbm/spd_operator.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace rqnbm {

namespace {

void check_anchor(const SpdOperator& H, const TangentCoords& g, const char* op) {
  if (!same_point(H.anchor, g.anchor)) {
    throw anchor_mismatch(std::string(op) + ": operator and vector anchors differ");
  }
}

}  // namespace

SpdOperator identity_operator(int n, const ManifoldPoint& anchor) {
  return SpdOperator{Eigen::MatrixXd::Identity(n, n), anchor};
}

TangentCoords apply(const SpdOperator& H, const TangentCoords& g) {
  check_anchor(H, g, "apply");
  return TangentCoords{H.mat * g.coords, g.anchor};
}

double quad_form(const SpdOperator& H, const TangentCoords& a, const TangentCoords& b) {
  check_anchor(H, a, "quad_form");
  check_anchor(H, b, "quad_form");
  return a.coords.dot(H.mat * b.coords);
}

SpdOperator sr1_update(const SpdOperator& H, const QuasiNewtonVectors& qv) {
  check_anchor(H, qv.s, "sr1_update");
  check_anchor(H, qv.u, "sr1_update");
  check_anchor(H, qv.v, "sr1_update");
  const double uv = qv.u.coords.dot(qv.v.coords);
  if (uv <= 0.0) {
    throw precondition_violation("sr1_update: <u, v> must be positive");
  }
  SpdOperator out{H.mat - (qv.v.coords * qv.v.coords.transpose()) / uv, H.anchor};
  return out;
}

SpdOperator bfgs_update(const SpdOperator& H, const TangentCoords& s,
                        const TangentCoords& u, double rho) {
  check_anchor(H, s, "bfgs_update");
  check_anchor(H, u, "bfgs_update");
  const double us = u.coords.dot(s.coords);
  if (us <= rho) {
    throw precondition_violation("bfgs_update: <u, s> must exceed rho");
  }
  const Eigen::VectorXd Hu = H.mat * u.coords;
  const double a = u.coords.dot(Hu) + us;
  Eigen::MatrixXd mat = H.mat;
  mat.noalias() -= (s.coords * Hu.transpose()) / us;
  mat.noalias() -= (Hu * s.coords.transpose()) / us;
  mat.noalias() += (a / (us * us)) * (s.coords * s.coords.transpose());
  return SpdOperator{std::move(mat), H.anchor};
}

SpdOperator transport_operator(const SpdOperator& H, const TransportMap& T,
                               const ManifoldPoint& new_anchor) {
  if (!same_point(H.anchor, T.from)) {
    throw anchor_mismatch("transport_operator: operator not anchored at the map's source");
  }
  if (!same_point(T.to, new_anchor)) {
    throw anchor_mismatch("transport_operator: map does not end at the new anchor");
  }
  Eigen::MatrixXd mat = T.matrix * H.mat * T.matrix.transpose();
  // conjugation by an orthogonal matrix keeps symmetry up to round-off;
  // re-symmetrize so the invariant stays exact downstream
  mat = 0.5 * (mat + mat.transpose()).eval();
  return SpdOperator{std::move(mat), new_anchor};
}

SpdOperator scale_to_bound(const SpdOperator& H, const TangentCoords& g, double D) {
  check_anchor(H, g, "scale_to_bound");
  if (!(D > 0.0)) {
    throw precondition_violation("scale_to_bound: D must be positive");
  }
  const double hg = (H.mat * g.coords).norm();
  if (!(hg > D)) return H;
  return SpdOperator{(D / hg) * H.mat, H.anchor};
}

SpdOperator correct(const SpdOperator& H, double rho) {
  if (!(rho > 0.0)) {
    throw precondition_violation("correct: rho must be positive");
  }
  SpdOperator out = H;
  out.mat.diagonal().array() += rho;
  return out;
}

double min_eigenvalue(const SpdOperator& H) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.mat, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace rqnbm
