// Microbenchmarks for the hot paths: the three-point simplex QP, vector
// transport on the rotation group, the two operator updates, and the
// bounding-box oracle.
#include <benchmark/benchmark.h>

#include <vector>

#include "rqnbm/geometry.hpp"
#include "rqnbm/problems.hpp"
#include "rqnbm/rng.hpp"
#include "rqnbm/simplex_qp.hpp"
#include "rqnbm/spd_operator.hpp"

namespace {

using namespace rqnbm;

Eigen::VectorXd random_vector(Rng& rng, int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.gauss();
  return v;
}

Eigen::MatrixXd random_spd(Rng& rng, int n) {
  Eigen::MatrixXd A(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) A(i, j) = rng.gauss();
  Eigen::MatrixXd H = A * A.transpose() + 0.3 * Eigen::MatrixXd::Identity(n, n);
  return 0.5 * (H + H.transpose());
}

void BM_SimplexQp(benchmark::State& state) {
  Rng rng(1);
  std::vector<Qp3Input> inputs;
  for (int i = 0; i < 64; ++i) {
    Qp3Input in;
    const Eigen::MatrixXd A = random_spd(rng, 3);
    in.gram = A;
    in.lin = Eigen::Vector3d(0.0, 2.0 * rng.uniform01(), 2.0 * rng.uniform01());
    inputs.push_back(in);
  }
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_simplex_qp(inputs[i]));
    i = (i + 1) & 63;
  }
}
BENCHMARK(BM_SimplexQp);

void BM_TransportO5(benchmark::State& state) {
  const Manifold m = Manifold::orthogonal_group(5);
  const ManifoldPoint x = random_orthogonal_start(5, 3);
  Rng rng(2);
  Eigen::VectorXd c = random_vector(rng, m.dim());
  c *= 0.1 / c.norm();
  const TangentCoords dir = m.tangent(x, c);
  for (auto _ : state) benchmark::DoNotOptimize(m.transport(x, dir));
}
BENCHMARK(BM_TransportO5);

void BM_Sr1Update(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Manifold e = Manifold::euclidean(n);
  const ManifoldPoint x = e.make_point(Eigen::MatrixXd::Zero(n, 1));
  Rng rng(3);
  const SpdOperator H{random_spd(rng, n), x};
  const Eigen::VectorXd u = random_vector(rng, n);
  Eigen::VectorXd v = random_vector(rng, n);
  if (u.dot(v) < 0) v = -v;
  const Eigen::VectorXd s = H.mat * u - v;
  const QuasiNewtonVectors qv{{s, x}, {u, x}, {v, x}};
  for (auto _ : state) benchmark::DoNotOptimize(sr1_update(H, qv));
}
BENCHMARK(BM_Sr1Update)->Arg(3)->Arg(10)->Arg(45);

void BM_BfgsUpdate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Manifold e = Manifold::euclidean(n);
  const ManifoldPoint x = e.make_point(Eigen::MatrixXd::Zero(n, 1));
  Rng rng(4);
  const SpdOperator H{random_spd(rng, n), x};
  const Eigen::VectorXd u = random_vector(rng, n);
  Eigen::VectorXd s = random_vector(rng, n);
  if (u.dot(s) < 0) s = -s;
  if (u.dot(s) <= 0.1) s += u * ((0.6 - u.dot(s)) / u.squaredNorm());
  for (auto _ : state)
    benchmark::DoNotOptimize(bfgs_update(H, {s, x}, {u, x}, 0.1));
}
BENCHMARK(BM_BfgsUpdate)->Arg(3)->Arg(10)->Arg(45);

void BM_ObbEval(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  const ObbInstance inst = generate_obb(3, K, 5);
  const ManifoldPoint O = random_orthogonal_start(3, 6);
  for (auto _ : state) benchmark::DoNotOptimize(obb_eval(inst, O));
}
BENCHMARK(BM_ObbEval)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
