#include "rqnbm/geometry.hpp"

#include <cmath>
#include <cstring>

#include <Eigen/Dense>

namespace rqnbm {

namespace {

constexpr double kSphereNormTol = 1e-12;
constexpr double kOrthogonalityTol = 1e-10;
constexpr double kInvRetractResidualTol = 1e-8;
constexpr double kFdStep = 1e-6;

double sign_or_one(double x) { return x < 0.0 ? -1.0 : 1.0; }

// Householder reflector data for the sphere tangent basis at x: the
// reflector through w = x + sign(x1) e1 maps x to -sign(x1) e1, so its
// columns 2..N span the tangent space at x.
struct SphereBasis {
  Eigen::VectorXd w;
  double wsq;
};

SphereBasis sphere_basis(const ManifoldPoint& x) {
  SphereBasis b;
  b.w = x.ambient.col(0);
  b.w(0) += sign_or_one(b.w(0));
  b.wsq = b.w.squaredNorm();
  return b;
}

Eigen::VectorXd reflect(const SphereBasis& b, const Eigen::VectorXd& v) {
  return v - b.w * (2.0 * b.w.dot(v) / b.wsq);
}

}  // namespace

bool same_point(const ManifoldPoint& a, const ManifoldPoint& b) {
  if (a.ambient.rows() != b.ambient.rows() ||
      a.ambient.cols() != b.ambient.cols()) {
    return false;
  }
  if (a.ambient.size() == 0) return true;
  return std::memcmp(a.ambient.data(), b.ambient.data(),
                     sizeof(double) * static_cast<size_t>(a.ambient.size())) == 0;
}

double inner(const TangentCoords& a, const TangentCoords& b) {
  if (!same_point(a.anchor, b.anchor)) {
    throw anchor_mismatch("inner: tangent vectors anchored at different points");
  }
  return a.coords.dot(b.coords);
}

double norm(const TangentCoords& a) { return a.coords.norm(); }

TangentCoords scaled(const TangentCoords& a, double c) {
  return TangentCoords{c * a.coords, a.anchor};
}

TangentCoords apply_map(const TransportMap& T, const TangentCoords& v) {
  if (!same_point(v.anchor, T.from)) {
    throw anchor_mismatch("apply_map: vector not anchored at the map's source");
  }
  return TangentCoords{T.matrix * v.coords, T.to};
}

TangentCoords apply_inverse(const TransportMap& T, const TangentCoords& v) {
  if (!same_point(v.anchor, T.to)) {
    throw anchor_mismatch("apply_inverse: vector not anchored at the map's target");
  }
  return TangentCoords{T.matrix.transpose() * v.coords, T.from};
}

TangentCoords apply_hat_pullback(const TransportMap& T, const TangentCoords& v) {
  if (!same_point(v.anchor, T.to)) {
    throw anchor_mismatch("apply_hat_pullback: vector not anchored at the map's target");
  }
  return TangentCoords{(T.matrix.transpose() * v.coords) / T.beta, T.from};
}

Manifold Manifold::euclidean(int N) {
  if (N < 1) throw precondition_violation("euclidean: N must be >= 1");
  return Manifold(ManifoldKind::Euclidean, N, N);
}

Manifold Manifold::sphere(int N) {
  if (N < 2) throw precondition_violation("sphere: N must be >= 2");
  return Manifold(ManifoldKind::Sphere, N, N - 1);
}

Manifold Manifold::orthogonal_group(int d) {
  if (d < 2) throw precondition_violation("orthogonal_group: d must be >= 2");
  return Manifold(ManifoldKind::OrthogonalGroup, d, d * (d - 1) / 2);
}

void Manifold::check_anchor(const ManifoldPoint& x) const {
  const bool matrix_kind = kind_ == ManifoldKind::OrthogonalGroup;
  const Eigen::Index rows = x.ambient.rows();
  const Eigen::Index cols = x.ambient.cols();
  if (matrix_kind ? (rows != size_ || cols != size_)
                  : (rows != size_ || cols != 1)) {
    throw precondition_violation("point has wrong ambient shape for this manifold");
  }
}

ManifoldPoint Manifold::make_point(const Eigen::MatrixXd& ambient) const {
  ManifoldPoint p{ambient};
  check_anchor(p);
  if (!ambient.allFinite()) {
    throw precondition_violation("make_point: non-finite ambient entries");
  }
  if (kind_ == ManifoldKind::Sphere) {
    if (std::abs(ambient.col(0).norm() - 1.0) > kSphereNormTol) {
      throw precondition_violation("make_point: sphere point is not unit norm");
    }
  } else if (kind_ == ManifoldKind::OrthogonalGroup) {
    const Eigen::MatrixXd gram = ambient.transpose() * ambient;
    if ((gram - Eigen::MatrixXd::Identity(size_, size_)).norm() > kOrthogonalityTol) {
      throw precondition_violation("make_point: matrix is not orthogonal");
    }
  }
  return p;
}

TangentCoords Manifold::zero_tangent(const ManifoldPoint& x) const {
  check_anchor(x);
  return TangentCoords{Eigen::VectorXd::Zero(dim_), x};
}

TangentCoords Manifold::tangent(const ManifoldPoint& x,
                                const Eigen::VectorXd& coords) const {
  check_anchor(x);
  if (coords.size() != dim_) {
    throw precondition_violation("tangent: coordinate vector has wrong length");
  }
  return TangentCoords{coords, x};
}

Eigen::MatrixXd Manifold::tangent_to_ambient(const ManifoldPoint& x,
                                             const Eigen::VectorXd& coords) const {
  check_anchor(x);
  if (coords.size() != dim_) {
    throw precondition_violation("tangent_to_ambient: wrong coordinate length");
  }
  switch (kind_) {
    case ManifoldKind::Euclidean:
      return coords;
    case ManifoldKind::Sphere: {
      Eigen::VectorXd z = Eigen::VectorXd::Zero(size_);
      z.tail(size_ - 1) = coords;
      return reflect(sphere_basis(x), z);
    }
    case ManifoldKind::OrthogonalGroup: {
      Eigen::MatrixXd S = Eigen::MatrixXd::Zero(size_, size_);
      const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
      int p = 0;
      for (int i = 0; i < size_; ++i) {
        for (int j = i + 1; j < size_; ++j, ++p) {
          S(i, j) = coords(p) * inv_sqrt2;
          S(j, i) = -S(i, j);
        }
      }
      return x.ambient * S;
    }
  }
  throw precondition_violation("unreachable manifold kind");
}

Eigen::VectorXd Manifold::tangent_from_ambient(const ManifoldPoint& x,
                                               const Eigen::MatrixXd& ambient) const {
  check_anchor(x);
  switch (kind_) {
    case ManifoldKind::Euclidean: {
      if (ambient.rows() != size_ || ambient.cols() != 1) {
        throw precondition_violation("tangent_from_ambient: wrong ambient shape");
      }
      return ambient.col(0);
    }
    case ManifoldKind::Sphere: {
      if (ambient.rows() != size_ || ambient.cols() != 1) {
        throw precondition_violation("tangent_from_ambient: wrong ambient shape");
      }
      // dropping the first reflected component projects out the x-parallel part
      const Eigen::VectorXd z = reflect(sphere_basis(x), ambient.col(0));
      return z.tail(size_ - 1);
    }
    case ManifoldKind::OrthogonalGroup: {
      if (ambient.rows() != size_ || ambient.cols() != size_) {
        throw precondition_violation("tangent_from_ambient: wrong ambient shape");
      }
      const Eigen::MatrixXd M = x.ambient.transpose() * ambient;
      const Eigen::MatrixXd S = 0.5 * (M - M.transpose());
      const double sqrt2 = std::sqrt(2.0);
      Eigen::VectorXd coords(dim_);
      int p = 0;
      for (int i = 0; i < size_; ++i) {
        for (int j = i + 1; j < size_; ++j, ++p) {
          coords(p) = sqrt2 * S(i, j);
        }
      }
      return coords;
    }
  }
  throw precondition_violation("unreachable manifold kind");
}

ManifoldPoint Manifold::retract(const ManifoldPoint& x,
                                const TangentCoords& eta) const {
  check_anchor(x);
  if (!same_point(eta.anchor, x)) {
    throw anchor_mismatch("retract: direction not anchored at x");
  }
  if (!eta.coords.allFinite()) {
    throw precondition_violation("retract: non-finite direction");
  }
  const double theta = eta.coords.norm();
  if (theta == 0.0) return x;

  switch (kind_) {
    case ManifoldKind::Euclidean:
      return ManifoldPoint{x.ambient + eta.coords};
    case ManifoldKind::Sphere: {
      const Eigen::VectorXd u = tangent_to_ambient(x, eta.coords);
      Eigen::VectorXd y =
          std::cos(theta) * x.ambient.col(0) + (std::sin(theta) / theta) * u;
      y /= y.norm();
      return ManifoldPoint{y};
    }
    case ManifoldKind::OrthogonalGroup: {
      const Eigen::MatrixXd H = tangent_to_ambient(x, eta.coords);
      return ManifoldPoint{qf_decomposition(x.ambient + H).Q};
    }
  }
  throw precondition_violation("unreachable manifold kind");
}

TangentCoords Manifold::inv_retract(const ManifoldPoint& x,
                                    const ManifoldPoint& y) const {
  check_anchor(x);
  check_anchor(y);
  if (same_point(x, y)) return zero_tangent(x);

  switch (kind_) {
    case ManifoldKind::Euclidean:
      return TangentCoords{y.ambient - x.ambient, x};
    case ManifoldKind::Sphere: {
      const double c =
          std::clamp(x.ambient.col(0).dot(y.ambient.col(0)), -1.0, 1.0);
      if (1.0 + c <= 1e-9) {
        throw out_of_injectivity("inv_retract: sphere points nearly antipodal");
      }
      const Eigen::VectorXd u = y.ambient.col(0) - c * x.ambient.col(0);
      const double s = u.norm();
      if (s == 0.0) return zero_tangent(x);
      const double theta = std::acos(c);
      return TangentCoords{
          tangent_from_ambient(x, Eigen::MatrixXd((theta / s) * u)), x};
    }
    case ManifoldKind::OrthogonalGroup: {
      // invert the qf retraction: find upper-triangular R with positive
      // diagonal such that (X^T Y) R - I is skew; then X + X S = Y R
      const Eigen::MatrixXd M = x.ambient.transpose() * y.ambient;
      const int d = size_;
      Eigen::MatrixXd R = Eigen::MatrixXd::Zero(d, d);
      Eigen::MatrixXd P = Eigen::MatrixXd::Zero(d, d);  // M * R, built up column by column
      for (int j = 0; j < d; ++j) {
        Eigen::MatrixXd A = M.topLeftCorner(j + 1, j + 1);
        Eigen::VectorXd b(j + 1);
        for (int i = 0; i < j; ++i) b(i) = -P(j, i);
        b(j) = 1.0;
        const Eigen::VectorXd r = A.partialPivLu().solve(b);
        if (!r.allFinite() || (A * r - b).norm() > 1e-10 * std::max(1.0, b.norm())) {
          throw out_of_injectivity("inv_retract: singular triangular system");
        }
        if (r(j) <= 0.0) {
          throw out_of_injectivity("inv_retract: non-positive diagonal factor");
        }
        R.col(j).head(j + 1) = r;
        P.col(j) = M.leftCols(j + 1) * r;
      }
      const Eigen::MatrixXd W = y.ambient * R - x.ambient;
      const TangentCoords eta{tangent_from_ambient(x, W), x};
      if ((retract(x, eta).ambient - y.ambient).norm() > kInvRetractResidualTol) {
        throw out_of_injectivity("inv_retract: round-trip residual too large");
      }
      return eta;
    }
  }
  throw precondition_violation("unreachable manifold kind");
}

TangentCoords Manifold::diff_retract(const ManifoldPoint& x,
                                     const TangentCoords& xi) const {
  check_anchor(x);
  if (!same_point(xi.anchor, x)) {
    throw anchor_mismatch("diff_retract: direction not anchored at x");
  }
  const double theta = xi.coords.norm();
  if (theta == 0.0) return zero_tangent(x);
  const ManifoldPoint y = retract(x, xi);

  switch (kind_) {
    case ManifoldKind::Euclidean:
      return TangentCoords{xi.coords, y};
    case ManifoldKind::Sphere: {
      // curve c(t) = cos(t theta) x + sin(t theta) u/theta, differentiated at t = 1
      const Eigen::VectorXd u = tangent_to_ambient(x, xi.coords);
      const Eigen::VectorXd dc =
          -theta * std::sin(theta) * x.ambient.col(0) + std::cos(theta) * u;
      return TangentCoords{tangent_from_ambient(y, dc), y};
    }
    case ManifoldKind::OrthogonalGroup: {
      const ManifoldPoint yp = retract(x, scaled(xi, 1.0 + kFdStep));
      const ManifoldPoint ym = retract(x, scaled(xi, 1.0 - kFdStep));
      const Eigen::MatrixXd fd = (yp.ambient - ym.ambient) / (2.0 * kFdStep);
      const Eigen::VectorXd coords = tangent_from_ambient(y, fd);
      if (!coords.allFinite()) {
        throw degenerate_step("diff_retract: non-finite finite-difference result");
      }
      return TangentCoords{coords, y};
    }
  }
  throw precondition_violation("unreachable manifold kind");
}

TransportMap Manifold::transport(const ManifoldPoint& x,
                                 const TangentCoords& dir) const {
  check_anchor(x);
  if (!same_point(dir.anchor, x)) {
    throw anchor_mismatch("transport: direction not anchored at x");
  }
  const double dn = dir.coords.norm();
  if (dn == 0.0) {
    return TransportMap{Eigen::MatrixXd::Identity(dim_, dim_), 1.0, x, x};
  }
  const ManifoldPoint y = retract(x, dir);

  switch (kind_) {
    case ManifoldKind::Euclidean:
      return TransportMap{Eigen::MatrixXd::Identity(dim_, dim_), 1.0, x, y};
    case ManifoldKind::Sphere: {
      // parallel translation along the great circle: the unit direction e
      // rotates to cos(theta) e - sin(theta) x, the orthogonal complement is
      // fixed; beta = 1 for the exponential map
      const Eigen::VectorXd u = tangent_to_ambient(x, dir.coords);
      const Eigen::VectorXd e = u / dn;
      const double ct = std::cos(dn);
      const double st = std::sin(dn);
      Eigen::MatrixXd M(dim_, dim_);
      for (int q = 0; q < dim_; ++q) {
        const Eigen::VectorXd bq =
            tangent_to_ambient(x, Eigen::VectorXd::Unit(dim_, q));
        const double a = e.dot(bq);
        const Eigen::VectorXd moved =
            bq + a * ((ct - 1.0) * e - st * x.ambient.col(0));
        M.col(q) = tangent_from_ambient(y, moved);
      }
      return TransportMap{std::move(M), 1.0, x, y};
    }
    case ManifoldKind::OrthogonalGroup: {
      // parallelization is the identity on coordinates (left-translated
      // bases); compose with reflections so dir lands on beta * DR(dir)
      const TangentCoords dr = diff_retract(x, dir);
      const double drn = dr.coords.norm();
      if (drn <= 1e-14 * std::max(1.0, dn)) {
        throw degenerate_direction("transport: differentiated retraction is zero");
      }
      const double beta = dn / drn;
      const Eigen::VectorXd a = dir.coords;
      const Eigen::VectorXd b = beta * dr.coords;
      Eigen::MatrixXd M;
      const Eigen::VectorXd w1 = a + b;
      if (w1.norm() <= 1e-12 * dn) {
        const Eigen::VectorXd w = a - b;
        M = Eigen::MatrixXd::Identity(dim_, dim_) -
            (2.0 / w.squaredNorm()) * (w * w.transpose());
      } else {
        const Eigen::MatrixXd F1 = Eigen::MatrixXd::Identity(dim_, dim_) -
                                   (2.0 / w1.squaredNorm()) * (w1 * w1.transpose());
        M = F1 - (2.0 / b.squaredNorm()) * b * (b.transpose() * F1);
      }
      return TransportMap{std::move(M), beta, x, y};
    }
  }
  throw precondition_violation("unreachable manifold kind");
}

QfFactors qf_decomposition(const Eigen::MatrixXd& A) {
  if (!A.allFinite()) {
    throw precondition_violation("qf_decomposition: non-finite input");
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  QfFactors f;
  f.Q = qr.householderQ() * Eigen::MatrixXd::Identity(A.rows(), A.cols());
  f.R = qr.matrixQR().topRows(A.cols()).triangularView<Eigen::Upper>();
  const double scale = std::max(1.0, A.norm());
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    if (std::abs(f.R(j, j)) <= 1e-13 * scale) {
      throw degenerate_step("qf_decomposition: numerically singular input");
    }
    if (f.R(j, j) < 0.0) {
      f.Q.col(j) = -f.Q.col(j);
      f.R.row(j) = -f.R.row(j);
    }
  }
  return f;
}

}  // namespace rqnbm
