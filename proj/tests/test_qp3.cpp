#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "rqnbm/rng.hpp"
#include "rqnbm/simplex_qp.hpp"
#include "test_util.hpp"

using namespace rqnbm;

namespace {

double objective(const Qp3Input& in, const Eigen::Vector3d& lam) {
  return lam.dot(in.gram * lam) + in.lin.dot(lam);
}

// Exhaustive reference: evaluate the objective on a uniform grid of the
// simplex (step h along the first two coordinates) and return the minimum.
double grid_min(const Qp3Input& in, double h) {
  const int n = static_cast<int>(std::lround(1.0 / h));
  const double a11 = in.gram(0, 0), a22 = in.gram(1, 1), a33 = in.gram(2, 2);
  const double a12 = in.gram(0, 1), a13 = in.gram(0, 2), a23 = in.gram(1, 2);
  const double b1 = in.lin(0), b2 = in.lin(1), b3 = in.lin(2);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) {
    const double l1 = i * h;
    for (int j = 0; j <= n - i; ++j) {
      const double l2 = j * h;
      const double l3 = 1.0 - l1 - l2;
      const double val = a11 * l1 * l1 + a22 * l2 * l2 + a33 * l3 * l3 +
                         2.0 * (a12 * l1 * l2 + a13 * l1 * l3 + a23 * l2 * l3) +
                         b1 * l1 + b2 * l2 + b3 * l3;
      if (val < best) best = val;
    }
  }
  return best;
}

// max of simplex feasibility, dual feasibility and complementarity residuals,
// with the equality multiplier recovered as lam . grad
double kkt_residual(const Qp3Input& in, const Eigen::Vector3d& lam) {
  const Eigen::Vector3d grad = 2.0 * in.gram * lam + in.lin;
  const double nu = lam.dot(grad);
  double r = std::abs(lam.sum() - 1.0);
  for (int i = 0; i < 3; ++i) {
    r = std::max(r, -lam(i));
    r = std::max(r, nu - grad(i));
    r = std::max(r, std::abs(lam(i) * (grad(i) - nu)));
  }
  return r;
}

Qp3Input random_instance(Rng& rng, int variant) {
  Qp3Input in;
  if (variant % 4 == 0) {
    // rank-one gram
    Eigen::Vector3d v;
    for (int i = 0; i < 3; ++i) v(i) = 2.0 * rng.uniform01() - 1.0;
    in.gram = (0.1 + 2.0 * rng.uniform01()) * v * v.transpose();
  } else if (variant % 7 == 0) {
    in.gram = Eigen::Vector3d(4.0 * rng.uniform01(), 4.0 * rng.uniform01(),
                              4.0 * rng.uniform01())
                  .asDiagonal();
  } else {
    in.gram = testutil::random_spd(rng, 3, 0.0, 4.0);
  }
  in.lin.setZero();
  if (variant % 5 != 0) {
    in.lin(1) = 2.0 * rng.uniform01();
    in.lin(2) = 2.0 * rng.uniform01();
  }
  return in;
}

}  // namespace

TEST_CASE("identity gram, zero linear term: barycenter at value 1/3") {
  Qp3Input in;
  in.gram = Eigen::Matrix3d::Identity();
  in.lin.setZero();
  const Qp3Solution sol = solve_simplex_qp(in);
  CHECK((sol.lambda - Eigen::Vector3d::Constant(1.0 / 3.0)).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(sol.value == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("constant-row gram: objective is flat, value equals the constant") {
  Qp3Input in;
  const double c = 0.7;
  in.gram = c * Eigen::Matrix3d::Ones();
  in.lin.setZero();
  const Qp3Solution sol = solve_simplex_qp(in);
  CHECK(sol.value == doctest::Approx(c).epsilon(1e-14));
  CHECK(std::abs(sol.lambda.sum() - 1.0) <= 1e-14);
  CHECK(sol.lambda.minCoeff() >= 0.0);
}

TEST_CASE("interior solution with nonzero linear term: hand-solved") {
  Qp3Input in;
  in.gram = Eigen::Matrix3d::Identity();
  in.lin << 0.0, 0.2, 0.4;
  const Qp3Solution sol = solve_simplex_qp(in);
  const Eigen::Vector3d expect(13.0 / 30.0, 10.0 / 30.0, 7.0 / 30.0);
  CHECK((sol.lambda - expect).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(sol.value == doctest::Approx(77.0 / 150.0).epsilon(1e-14));
}

TEST_CASE("diagonal gram: weights proportional to inverse diagonal") {
  Qp3Input in;
  in.gram = Eigen::Vector3d(1.0, 2.0, 4.0).asDiagonal();
  in.lin.setZero();
  const Qp3Solution sol = solve_simplex_qp(in);
  const Eigen::Vector3d expect(4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0);
  CHECK((sol.lambda - expect).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(sol.value == doctest::Approx(4.0 / 7.0).epsilon(1e-14));
}

TEST_CASE("large linear penalties push the solution to a vertex") {
  Qp3Input in;
  in.gram = Eigen::Matrix3d::Identity();
  in.lin << 0.0, 10.0, 10.0;
  const Qp3Solution sol = solve_simplex_qp(in);
  CHECK((sol.lambda - Eigen::Vector3d(1.0, 0.0, 0.0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(sol.value == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("solution never exceeds any vertex value") {
  Rng rng(41);
  for (int rep = 0; rep < 200; ++rep) {
    const Qp3Input in = random_instance(rng, rep);
    const Qp3Solution sol = solve_simplex_qp(in);
    for (int i = 0; i < 3; ++i) {
      CHECK(sol.value <= objective(in, Eigen::Vector3d::Unit(i)) + 1e-12);
    }
  }
}

TEST_CASE("grid oracle and first-order conditions over random instances") {
  Rng rng(42);
  for (int rep = 0; rep < 200; ++rep) {
    const Qp3Input in = random_instance(rng, rep);
    const Qp3Solution sol = solve_simplex_qp(in);

    CHECK(std::abs(sol.lambda.sum() - 1.0) <= 1e-12);
    CHECK(sol.lambda.minCoeff() >= 0.0);
    CHECK(std::abs(sol.value - objective(in, sol.lambda)) <= 1e-12 * std::max(1.0, std::abs(sol.value)));
    CHECK(kkt_residual(in, sol.lambda) <= 1e-8);

    const double ref = grid_min(in, 1e-3);
    CHECK(sol.value <= ref + 1e-10);
    CHECK(ref - sol.value <= 1e-4);
  }
}

TEST_CASE("input validation") {
  Qp3Input in;
  in.gram = Eigen::Matrix3d::Identity();
  in.lin.setZero();

  SUBCASE("asymmetric gram") {
    in.gram(0, 1) = 0.5;
    CHECK_THROWS_AS(solve_simplex_qp(in), precondition_violation);
  }
  SUBCASE("indefinite gram") {
    in.gram(2, 2) = -1.0;
    CHECK_THROWS_AS(solve_simplex_qp(in), precondition_violation);
  }
  SUBCASE("nonzero first linear entry") {
    in.lin(0) = 0.1;
    CHECK_THROWS_AS(solve_simplex_qp(in), precondition_violation);
  }
  SUBCASE("negative linear entry") {
    in.lin(2) = -0.1;
    CHECK_THROWS_AS(solve_simplex_qp(in), precondition_violation);
  }
}
