#include "rqnbm/problems.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "rqnbm/rng.hpp"

namespace rqnbm {

EvalResult obb_eval(const ObbInstance& inst, const ManifoldPoint& O) {
  if (inst.d < 1 || inst.K < 2 || inst.E.rows() != inst.d ||
      inst.E.cols() != inst.K || !inst.E.allFinite()) {
    throw oracle_error("obb_eval: malformed point-cloud instance");
  }
  if (O.ambient.rows() != inst.d || O.ambient.cols() != inst.d) {
    throw precondition_violation("obb_eval: rotation has the wrong shape");
  }
  const Manifold m = Manifold::orthogonal_group(inst.d);
  const Eigen::MatrixXd P = O.ambient * inst.E;

  Eigen::VectorXd range(inst.d);
  std::vector<int> jmax(inst.d), jmin(inst.d);
  for (int i = 0; i < inst.d; ++i) {
    int jmx = 0, jmn = 0;
    double mx = P(i, 0), mn = P(i, 0);
    for (int j = 1; j < inst.K; ++j) {
      const double v = P(i, j);
      if (v > mx) {
        mx = v;
        jmx = j;
      }
      if (v < mn) {
        mn = v;
        jmn = j;
      }
    }
    range(i) = mx - mn;
    jmax[i] = jmx;
    jmin[i] = jmn;
  }
  if (range.minCoeff() == 0.0) {
    return EvalResult{0.0, m.zero_tangent(O), true};
  }

  double f = 1.0;
  for (int i = 0; i < inst.d; ++i) f *= range(i);

  Eigen::MatrixXd G(inst.d, inst.d);
  for (int i = 0; i < inst.d; ++i) {
    double prod_except = 1.0;
    for (int l = 0; l < inst.d; ++l) {
      if (l != i) prod_except *= range(l);
    }
    G.row(i) =
        prod_except * (inst.E.col(jmax[i]) - inst.E.col(jmin[i])).transpose();
  }
  return EvalResult{f, m.tangent(O, m.tangent_from_ambient(O, G)), false};
}

EvalResult maxq_eval(const ManifoldPoint& x) {
  const int n = static_cast<int>(x.ambient.rows());
  if (x.ambient.cols() != 1 || n < 1) {
    throw precondition_violation("maxq_eval: expected a column vector");
  }
  int istar = 0;
  double best = x.ambient(0, 0) * x.ambient(0, 0);
  for (int i = 1; i < n; ++i) {
    const double v = x.ambient(i, 0) * x.ambient(i, 0);
    if (v > best) {
      best = v;
      istar = i;
    }
  }
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  g(istar) = 2.0 * x.ambient(istar, 0);
  return EvalResult{best, TangentCoords{std::move(g), x}, false};
}

ProblemOracle make_obb_oracle(const ObbInstance& inst) {
  return ProblemOracle{
      Manifold::orthogonal_group(inst.d),
      [inst](const ManifoldPoint& O) { return obb_eval(inst, O); },
      "oriented bounding box volume (d=" + std::to_string(inst.d) +
          ", K=" + std::to_string(inst.K) + ")"};
}

ProblemOracle make_maxq_oracle(int n) {
  return ProblemOracle{
      Manifold::euclidean(n),
      [](const ManifoldPoint& x) { return maxq_eval(x); },
      "maxq (n=" + std::to_string(n) + ")"};
}

ObbInstance generate_obb(int d, int K, std::uint64_t seed) {
  if (d < 2 || K < 2) {
    throw precondition_violation("generate_obb: need d >= 2 and K >= 2");
  }
  Rng rng(seed);
  ObbInstance inst;
  inst.d = d;
  inst.K = K;
  inst.E.resize(d, K);
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < d; ++i) {
      inst.E(i, k) = 0.75 * rng.uniform01();
    }
  }
  return inst;
}

ManifoldPoint random_orthogonal_start(int d, std::uint64_t seed) {
  if (d < 2) {
    throw precondition_violation("random_orthogonal_start: need d >= 2");
  }
  Rng rng(seed);
  const Manifold m = Manifold::orthogonal_group(d);
  for (;;) {
    Eigen::MatrixXd A(d, d);
    for (int j = 0; j < d; ++j) {
      for (int i = 0; i < d; ++i) {
        A(i, j) = rng.gauss();
      }
    }
    try {
      return m.make_point(qf_decomposition(A).Q);
    } catch (const degenerate_step&) {
      // singular draw (measure zero): take the next block of samples
    }
  }
}

namespace {

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

double parse_cell(const std::string& cell) {
  size_t pos = 0;
  double v;
  try {
    v = std::stod(cell, &pos);
  } catch (const std::exception&) {
    throw oracle_error("point-cloud csv: non-numeric entry '" + cell + "'");
  }
  while (pos < cell.size() && (cell[pos] == ' ' || cell[pos] == '\t')) ++pos;
  if (pos != cell.size()) {
    throw oracle_error("point-cloud csv: trailing junk in entry '" + cell + "'");
  }
  return v;
}

}  // namespace

ObbInstance read_obb_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw oracle_error("point-cloud csv: empty input");
  }
  strip_cr(line);
  int d = 0, K = 0;
  {
    std::istringstream hs(line);
    char comma = 0;
    std::string rest;
    if (!(hs >> d >> comma >> K) || comma != ',' || (hs >> rest)) {
      throw oracle_error("point-cloud csv: header must be \"d,K\"");
    }
    if (d < 1 || K < 2) {
      throw oracle_error("point-cloud csv: need d >= 1 and K >= 2");
    }
  }
  ObbInstance inst;
  inst.d = d;
  inst.K = K;
  inst.E.resize(d, K);
  for (int k = 0; k < K; ++k) {
    if (!std::getline(in, line)) {
      throw oracle_error("point-cloud csv: expected " + std::to_string(K) +
                         " point rows, got " + std::to_string(k));
    }
    strip_cr(line);
    std::istringstream ls(line);
    std::string cell;
    for (int i = 0; i < d; ++i) {
      if (!std::getline(ls, cell, ',')) {
        throw oracle_error("point-cloud csv: row " + std::to_string(k + 1) +
                           " has fewer than " + std::to_string(d) + " entries");
      }
      inst.E(i, k) = parse_cell(cell);
    }
    if (std::getline(ls, cell)) {
      throw oracle_error("point-cloud csv: row " + std::to_string(k + 1) +
                         " has more than " + std::to_string(d) + " entries");
    }
  }
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.find_first_not_of(" \t") != std::string::npos) {
      throw oracle_error("point-cloud csv: unexpected data after the last row");
    }
  }
  if (!inst.E.allFinite()) {
    throw oracle_error("point-cloud csv: non-finite entries");
  }
  return inst;
}

ObbInstance load_obb_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) {
    throw oracle_error("cannot open point-cloud csv: " + path);
  }
  return read_obb_csv(f);
}

void write_obb_csv(std::ostream& out, const ObbInstance& inst) {
  out << inst.d << ',' << inst.K << '\n';
  char buf[40];
  for (int k = 0; k < inst.K; ++k) {
    for (int i = 0; i < inst.d; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", inst.E(i, k));
      if (i > 0) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace rqnbm
