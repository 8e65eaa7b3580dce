#pragma once

#include <Eigen/Core>

#include "rqnbm/errors.hpp"

namespace rqnbm {

/// A point on a manifold, stored in its ambient representation:
/// an N-vector (N x 1) for Euclidean space and the unit sphere,
/// a d x d orthogonal matrix for the orthogonal group O(d).
struct ManifoldPoint {
  Eigen::MatrixXd ambient;
};

/// Exact (bitwise) equality of ambient representations. Points produced by
/// the same deterministic computation compare equal; anything else is
/// treated as a distinct anchor.
bool same_point(const ManifoldPoint& a, const ManifoldPoint& b);

/// A tangent vector in intrinsic coordinates with respect to the canonical
/// orthonormal basis of T_x M (see Manifold::tangent_to_ambient for the
/// basis conventions). The metric is the identity in these coordinates:
/// inner products of tangent vectors are plain dot products of coords.
struct TangentCoords {
  Eigen::VectorXd coords;
  ManifoldPoint anchor;
};

/// Anchor-checked inner product (orthonormal-basis convention).
double inner(const TangentCoords& a, const TangentCoords& b);
double norm(const TangentCoords& a);
TangentCoords scaled(const TangentCoords& a, double c);

/// An isometric vector transport T_dir : T_x M -> T_y M, y = R_x(dir),
/// expressed as an orthogonal matrix on intrinsic coordinates, together
/// with the locking factor beta = |dir| / |DR_x(dir)[dir]|.
/// The inverse transport is the transpose; the pullback used for trial
/// subgradients is beta^{-1} * transpose.
struct TransportMap {
  Eigen::MatrixXd matrix;  // n x n orthogonal
  double beta = 1.0;
  ManifoldPoint from;
  ManifoldPoint to;
};

/// Forward map: vector at `from` -> vector at `to`.
TangentCoords apply_map(const TransportMap& T, const TangentCoords& v);
/// Inverse map (transpose): vector at `to` -> vector at `from`.
TangentCoords apply_inverse(const TransportMap& T, const TangentCoords& v);
/// Pullback beta^{-1} * inverse: how trial-point subgradients are brought
/// back to the center.
TangentCoords apply_hat_pullback(const TransportMap& T, const TangentCoords& v);

enum class ManifoldKind { Euclidean, Sphere, OrthogonalGroup };

/// Handle for one of the three supported manifolds.
///
/// Intrinsic dimensions: Euclidean(N) -> N; Sphere(N) (unit sphere in R^N)
/// -> N-1; OrthogonalGroup(d) -> d(d-1)/2.
///
/// Canonical tangent bases (deterministic in the point alone):
///  - Euclidean: the standard basis; coords coincide with the ambient vector.
///  - Sphere: columns 2..N of the Householder reflector that maps x to
///    -sign(x_1) e_1 (an orthonormal basis of the complement of x).
///  - O(d): left-translated elementary skew matrices
///    X (e_i e_j^T - e_j e_i^T)/sqrt(2), pairs (i, j), i < j, in
///    lexicographic order.
class Manifold {
public:
  static Manifold euclidean(int N);
  static Manifold sphere(int N);
  static Manifold orthogonal_group(int d);

  ManifoldKind kind() const { return kind_; }
  /// N for Euclidean/Sphere, d for O(d).
  int ambient_size() const { return size_; }
  /// Intrinsic dimension n.
  int dim() const { return dim_; }

  /// Validates the ambient representation (finiteness; unit norm within
  /// 1e-12 on the sphere; orthogonality within 1e-10 on O(d)) and wraps it.
  ManifoldPoint make_point(const Eigen::MatrixXd& ambient) const;

  /// Zero tangent vector at x.
  TangentCoords zero_tangent(const ManifoldPoint& x) const;
  /// Wraps a coordinate vector (must have length dim()).
  TangentCoords tangent(const ManifoldPoint& x, const Eigen::VectorXd& coords) const;

  /// Intrinsic coordinates -> ambient tangent representation.
  Eigen::MatrixXd tangent_to_ambient(const ManifoldPoint& x,
                                     const Eigen::VectorXd& coords) const;
  /// Ambient -> intrinsic coordinates. Implicitly projects onto T_x M
  /// (orthogonal projection in the ambient metric), so it accepts slightly
  /// off-tangent inputs such as finite-difference results or Euclidean
  /// gradients awaiting projection.
  Eigen::VectorXd tangent_from_ambient(const ManifoldPoint& x,
                                       const Eigen::MatrixXd& ambient) const;

  /// Retraction R_x(eta). Euclidean: x + eta. Sphere: exponential map
  /// (great circle). O(d): Q factor of the QR decomposition of X + H with
  /// the positive-diagonal sign convention.
  ManifoldPoint retract(const ManifoldPoint& x, const TangentCoords& eta) const;

  /// Inverse retraction: eta with retract(x, eta) = y. Euclidean: y - x.
  /// Sphere: logarithm map. O(d): solve for the upper-triangular factor r
  /// with positive diagonal making (x^T y) r - I skew-symmetric, column by
  /// column; then eta = y r - x. Throws out_of_injectivity when the points
  /// are too far apart (non-positive diagonal, or round-trip residual
  /// above 1e-8).
  TangentCoords inv_retract(const ManifoldPoint& x, const ManifoldPoint& y) const;

  /// Differentiated retraction DR_x(xi)[xi] = d/dt R_x(t xi) at t = 1,
  /// expressed in the coordinates at R_x(xi). Closed form on Euclidean
  /// space and the sphere; central finite difference (h = 1e-6) on O(d),
  /// projected to the tangent space at the endpoint.
  TangentCoords diff_retract(const ManifoldPoint& x, const TangentCoords& xi) const;

  /// Isometric vector transport along dir satisfying the locking condition
  /// T(dir) = beta * DR_x(dir)[dir] with beta = |dir|/|DR_x(dir)[dir]|.
  ///
  /// Euclidean: identity. Sphere: parallel translation along the geodesic
  /// (beta == 1 exactly). O(d): parallelization (identity on coordinates)
  /// composed with two Householder reflections chosen so the image of dir
  /// is beta * diff_retract(x, dir); two reflections rather than one so the
  /// map tends to the identity as dir -> 0.
  TransportMap transport(const ManifoldPoint& x, const TangentCoords& dir) const;

private:
  Manifold(ManifoldKind kind, int size, int dim)
      : kind_(kind), size_(size), dim_(dim) {}

  void check_anchor(const ManifoldPoint& x) const;

  ManifoldKind kind_;
  int size_;
  int dim_;
};

/// QR decomposition A = Q R with the R diagonal forced positive by column
/// sign flips. Throws degenerate_step if A is numerically singular.
/// Shared by the qf retraction and random orthogonal sampling.
struct QfFactors {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
};
QfFactors qf_decomposition(const Eigen::MatrixXd& A);

}  // namespace rqnbm
