#pragma once

#include <Eigen/Core>

#include "rqnbm/geometry.hpp"

namespace rqnbm {

/// Symmetric positive definite operator on one tangent space, dense in
/// intrinsic coordinates. Plays the role of an inverse-Hessian
/// approximation: the search direction is -H g.
struct SpdOperator {
  Eigen::MatrixXd mat;  // n x n symmetric
  ManifoldPoint anchor;
};

SpdOperator identity_operator(int n, const ManifoldPoint& anchor);

/// H * g (anchor-checked).
TangentCoords apply(const SpdOperator& H, const TangentCoords& g);

/// <a, H b>. Symmetric in (a, b) up to round-off; used for every
/// "squared norm under H" so the square root of H is never materialized.
double quad_form(const SpdOperator& H, const TangentCoords& a, const TangentCoords& b);

/// The displacement/subgradient-difference triple feeding a quasi-Newton
/// update, all anchored at the same (new) center:
///   s = transported step, u = subgradient difference transported to the
///   center, v = H u - s.
struct QuasiNewtonVectors {
  TangentCoords s;
  TangentCoords u;
  TangentCoords v;
};

/// Rank-one (SR1-type) update H - v v^T / <u, v>. Requires <u, v> > 0
/// (throws precondition_violation otherwise); the caller gates on a sign
/// condition that guarantees it. Satisfies the secant identity
/// (H - vv^T/<u,v>) u = s exactly in algebra, and decreases the trace by
/// |v|^2 / <u, v>.
SpdOperator sr1_update(const SpdOperator& H, const QuasiNewtonVectors& qv);

/// Inverse-Hessian BFGS update
///   H - s (Hu)^T/<u,s> - (Hu) s^T/<u,s> + a s s^T/<u,s>^2,
///   a = <u, Hu> + <u, s>.
/// Requires <u, s> > rho (throws precondition_violation otherwise).
/// Preserves symmetry and positive definiteness and satisfies the secant
/// identity H_new u = s.
SpdOperator bfgs_update(const SpdOperator& H, const TangentCoords& s,
                        const TangentCoords& u, double rho);

/// Conjugation M H M^T by the transport's orthogonal coordinate matrix;
/// moves the operator to the transport's destination tangent space.
/// Preserves trace and spectrum.
SpdOperator transport_operator(const SpdOperator& H, const TransportMap& T,
                               const ManifoldPoint& new_anchor);

/// If |H g| > D, multiply H by D / |H g| so the post-state satisfies
/// |H g| <= D; otherwise return H unchanged.
SpdOperator scale_to_bound(const SpdOperator& H, const TangentCoords& g, double D);

/// H + rho I: shifts every eigenvalue up by exactly rho.
SpdOperator correct(const SpdOperator& H, double rho);

/// Smallest eigenvalue (diagnostic paths only; full symmetric
/// eigendecomposition).
double min_eigenvalue(const SpdOperator& H);

}  // namespace rqnbm
