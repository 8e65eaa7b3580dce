#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include <Eigen/Dense>

#include "rqnbm/spd_operator.hpp"
#include "test_util.hpp"

using namespace rqnbm;
using testutil::random_spd;
using testutil::random_vector;

namespace {

const Manifold kSpace = Manifold::euclidean(10);

ManifoldPoint origin(int n = 10) {
  return Manifold::euclidean(n).make_point(Eigen::VectorXd::Zero(n));
}

TangentCoords vec(const ManifoldPoint& anchor, const Eigen::VectorXd& c) {
  return TangentCoords{c, anchor};
}

double min_eig_oracle(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  return es.eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("apply: identity and scaling") {
  const ManifoldPoint x = origin();
  Rng rng(31);
  const Eigen::VectorXd g = random_vector(rng, 10);
  const SpdOperator id = identity_operator(10, x);
  CHECK((apply(id, vec(x, g)).coords - g).norm() == 0.0);
  SpdOperator two{2.0 * Eigen::MatrixXd::Identity(10, 10), x};
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(10);
  e1(0) = 1.0;
  CHECK((apply(two, vec(x, e1)).coords - 2.0 * e1).norm() == 0.0);
}

TEST_CASE("apply: positive definiteness carries to the quadratic form") {
  const ManifoldPoint x = origin();
  Rng rng(32);
  for (int rep = 0; rep < 100; ++rep) {
    SpdOperator H{random_spd(rng, 10, 0.3, 3.0), x};
    REQUIRE(min_eig_oracle(H.mat) > 0.0);  // oracle on the sample itself
    const TangentCoords g = vec(x, random_vector(rng, 10));
    CHECK(inner(g, apply(H, g)) > 0.0);
    CHECK(std::abs(quad_form(H, g, g) - inner(g, apply(H, g))) <= 1e-12 * quad_form(H, g, g));
  }
}

TEST_CASE("quad_form is symmetric and reduces to the dot product at identity") {
  const ManifoldPoint x = origin();
  Rng rng(33);
  const SpdOperator id = identity_operator(10, x);
  for (int rep = 0; rep < 100; ++rep) {
    const TangentCoords a = vec(x, random_vector(rng, 10));
    const TangentCoords b = vec(x, random_vector(rng, 10));
    CHECK(std::abs(quad_form(id, a, b) - a.coords.dot(b.coords)) <= 1e-14);
    SpdOperator H{random_spd(rng, 10, 0.2, 5.0), x};
    CHECK(std::abs(quad_form(H, a, b) - quad_form(H, b, a)) <= 1e-12);
  }
}

TEST_CASE("rank-one update: hand-evaluated 2x2 case") {
  const ManifoldPoint x = origin(2);
  const SpdOperator H = identity_operator(2, x);
  Eigen::VectorXd u(2), s(2);
  u << 1.0, 0.0;
  s << 0.5, 0.0;
  const Eigen::VectorXd v = H.mat * u - s;  // (0.5, 0)
  const QuasiNewtonVectors qv{vec(x, s), vec(x, u), vec(x, v)};
  const SpdOperator Hn = sr1_update(H, qv);
  Eigen::MatrixXd expect(2, 2);
  expect << 0.5, 0.0, 0.0, 1.0;
  CHECK((Hn.mat - expect).norm() <= 1e-15);
}

TEST_CASE("rank-one update rejects a non-positive denominator") {
  const ManifoldPoint x = origin(2);
  const SpdOperator H = identity_operator(2, x);
  Eigen::VectorXd u(2);
  u << 1.0, 0.0;
  // v = 0: denominator <u, v> = 0, the caller is expected to skip
  const QuasiNewtonVectors qv{vec(x, u), vec(x, u), vec(x, Eigen::VectorXd::Zero(2))};
  CHECK_THROWS_AS(sr1_update(H, qv), precondition_violation);
}

TEST_CASE("rank-one update: secant identity and exact trace decrease") {
  const ManifoldPoint x = origin();
  Rng rng(34);
  for (int rep = 0; rep < 300; ++rep) {
    SpdOperator H{random_spd(rng, 10, 0.3, 3.0), x};
    Eigen::VectorXd u = random_vector(rng, 10);
    Eigen::VectorXd v = random_vector(rng, 10);
    if (u.dot(v) < 0) v = -v;
    if (u.dot(v) < 1e-6) continue;
    const Eigen::VectorXd s = H.mat * u - v;
    const QuasiNewtonVectors qv{vec(x, s), vec(x, u), vec(x, v)};
    const SpdOperator Hn = sr1_update(H, qv);
    CHECK((Hn.mat * u - s).norm() <= 1e-8 * std::max(1.0, s.norm()));
    const double drop = v.squaredNorm() / u.dot(v);
    CHECK(std::abs(Hn.mat.trace() - (H.mat.trace() - drop)) <= 1e-10 * std::max(1.0, std::abs(H.mat.trace())));
    CHECK((Hn.mat - Hn.mat.transpose()).norm() <= 1e-10);
  }
}

TEST_CASE("bfgs update: hand-evaluated 2x2 case") {
  const ManifoldPoint x = origin(2);
  const SpdOperator H = identity_operator(2, x);
  Eigen::VectorXd u(2), s(2);
  u << 1.0, 0.0;
  s << 2.0, 0.0;
  const SpdOperator Hn = bfgs_update(H, vec(x, s), vec(x, u), 0.1);
  Eigen::MatrixXd expect(2, 2);
  expect << 2.0, 0.0, 0.0, 1.0;
  CHECK((Hn.mat - expect).norm() <= 1e-15);
}

TEST_CASE("bfgs update: secant direction fixed point when s = u") {
  const ManifoldPoint x = origin();
  Rng rng(35);
  Eigen::VectorXd u = random_vector(rng, 10);
  u *= 2.0 / u.norm();  // <u, u> = 4 > rho
  const SpdOperator H = identity_operator(10, x);
  const SpdOperator Hn = bfgs_update(H, vec(x, u), vec(x, u), 0.1);
  CHECK((Hn.mat * u - u).norm() <= 1e-12);
}

TEST_CASE("bfgs update: secant identity and positive definiteness") {
  const ManifoldPoint x = origin();
  Rng rng(36);
  for (int rep = 0; rep < 300; ++rep) {
    SpdOperator H{random_spd(rng, 10, 0.3, 3.0), x};
    Eigen::VectorXd u = random_vector(rng, 10);
    Eigen::VectorXd s = random_vector(rng, 10);
    if (u.dot(s) < 0) s = -s;
    if (u.dot(s) <= 0.1) s += u * ((0.5 + 0.1 - u.dot(s)) / u.squaredNorm());
    const SpdOperator Hn = bfgs_update(H, vec(x, s), vec(x, u), 0.1);
    CHECK((Hn.mat * u - s).norm() <= 1e-8 * std::max(1.0, s.norm()));
    CHECK(min_eig_oracle(Hn.mat) > 0.0);
    CHECK((Hn.mat - Hn.mat.transpose()).norm() <= 1e-10);
  }
}

TEST_CASE("bfgs update rejects insufficient curvature") {
  const ManifoldPoint x = origin(2);
  const SpdOperator H = identity_operator(2, x);
  Eigen::VectorXd u(2), s(2);
  u << 1.0, 0.0;
  s << 0.05, 0.0;  // <u, s> = 0.05 <= rho
  CHECK_THROWS_AS(bfgs_update(H, vec(x, s), vec(x, u), 0.1), precondition_violation);
}

TEST_CASE("operator transport: identity, isotropic, trace and spectrum") {
  Rng rng(37);
  const Manifold o = Manifold::orthogonal_group(5);
  const ManifoldPoint X = testutil::random_point(o, rng);
  const int n = o.dim();

  SUBCASE("identity transport leaves the matrix alone") {
    SpdOperator H{random_spd(rng, n, 0.5, 2.0), X};
    const TransportMap T = o.transport(X, o.zero_tangent(X));
    const SpdOperator Ht = transport_operator(H, T, T.to);
    CHECK((Ht.mat - H.mat).norm() == 0.0);
  }

  SUBCASE("isotropic operators are fixed points") {
    const TangentCoords dir = testutil::random_tangent(o, X, rng, 0.1);
    const TransportMap T = o.transport(X, dir);
    SpdOperator cI{3.0 * Eigen::MatrixXd::Identity(n, n), X};
    const SpdOperator Ht = transport_operator(cI, T, T.to);
    CHECK((Ht.mat - cI.mat).norm() <= 1e-12);
  }

  SUBCASE("trace and spectrum preserved") {
    for (int rep = 0; rep < 50; ++rep) {
      SpdOperator H{random_spd(rng, n, 0.2, 4.0), X};
      const TangentCoords dir = testutil::random_tangent(o, X, rng, 0.1);
      const TransportMap T = o.transport(X, dir);
      const SpdOperator Ht = transport_operator(H, T, T.to);
      CHECK(std::abs(Ht.mat.trace() - H.mat.trace()) <= 1e-10);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(H.mat), eb(Ht.mat);
      CHECK((ea.eigenvalues() - eb.eigenvalues()).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("scale_to_bound") {
  const ManifoldPoint x = origin();
  Rng rng(38);

  SUBCASE("below the bound: unchanged") {
    const SpdOperator H = identity_operator(10, x);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(10);
    g(0) = 0.5;
    const SpdOperator Hs = scale_to_bound(H, vec(x, g), 1.0);
    CHECK((Hs.mat - H.mat).norm() == 0.0);
  }

  SUBCASE("unit operator with |g| = 10 scales by 0.1") {
    const SpdOperator H = identity_operator(10, x);
    Eigen::VectorXd g = random_vector(rng, 10);
    g *= 10.0 / g.norm();
    const SpdOperator Hs = scale_to_bound(H, vec(x, g), 1.0);
    CHECK((Hs.mat - 0.1 * Eigen::MatrixXd::Identity(10, 10)).norm() <= 1e-12);
  }

  SUBCASE("post-norm is min(|Hg|, D)") {
    for (int rep = 0; rep < 100; ++rep) {
      SpdOperator H{random_spd(rng, 10, 0.2, 4.0), x};
      const Eigen::VectorXd g = random_vector(rng, 10);
      const double D = 0.2 + 2.0 * rng.uniform01();
      const double before = (H.mat * g).norm();
      const SpdOperator Hs = scale_to_bound(H, vec(x, g), D);
      const double after = (Hs.mat * g).norm();
      CHECK(std::abs(after - std::min(before, D)) <= 1e-10);
      CHECK(after <= D + 1e-12);
    }
  }
}

TEST_CASE("correct shifts the spectrum by rho") {
  const ManifoldPoint x = origin();
  Rng rng(39);

  SpdOperator zero{Eigen::MatrixXd::Zero(10, 10), x};
  const SpdOperator c = correct(zero, 0.1);
  CHECK((c.mat - 0.1 * Eigen::MatrixXd::Identity(10, 10)).norm() == 0.0);

  for (int rep = 0; rep < 50; ++rep) {
    SpdOperator H{random_spd(rng, 10, 0.2, 4.0), x};
    const SpdOperator Hc = correct(H, 0.1);
    CHECK(std::abs(min_eig_oracle(Hc.mat) - (min_eig_oracle(H.mat) + 0.1)) <= 1e-10);
    CHECK(Hc.mat.trace() == doctest::Approx(H.mat.trace() + 0.1 * 10).epsilon(1e-14));
  }
}

TEST_CASE("anchor mismatches are rejected") {
  Rng rng(40);
  const ManifoldPoint x = origin();
  ManifoldPoint y = origin();
  y.ambient(0) = 1.0;
  const SpdOperator H = identity_operator(10, x);
  const TangentCoords g = vec(y, random_vector(rng, 10));
  CHECK_THROWS_AS(apply(H, g), anchor_mismatch);
  CHECK_THROWS_AS(quad_form(H, g, g), anchor_mismatch);
}
