// Copyright 2026 The mcmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Brute-force reference for small strictly convex QPs: try every active set,
// keep the KKT point that is primal and dual feasible.

#ifndef MCMPC_TESTS_QP_ORACLE_HPP_
#define MCMPC_TESTS_QP_ORACLE_HPP_

#include <optional>
#include <random>
#include <vector>

#include "mcmpc/qp_solver.hpp"

namespace mcmpc::testing {

struct OracleResult {
  VecX z;
  double objective = 0.0;
};

inline std::optional<OracleResult> enumerate_active_sets(const QpProblem& p,
                                                        double feas_tol = 1e-9) {
  const int n = p.num_vars(), me = p.num_eq(), mi = p.num_in();
  // Each inequality row: 0 inactive, 1 lower active, 2 upper active.
  std::vector<int> choice(mi, 0);
  std::optional<OracleResult> best;
  while (true) {
    std::vector<int> rows;
    std::vector<double> rhs, sgn;
    for (int i = 0; i < mi; ++i) {
      if (choice[i] == 1 && std::isfinite(p.lb[i])) {
        rows.push_back(i);
        rhs.push_back(p.lb[i]);
        sgn.push_back(-1.0);
      } else if (choice[i] == 2 && std::isfinite(p.ub[i])) {
        rows.push_back(i);
        rhs.push_back(p.ub[i]);
        sgn.push_back(1.0);
      } else if (choice[i] != 0) {
        rows.clear();
        rows.push_back(-1);
        break;
      }
    }
    const int na = static_cast<int>(rows.size());
    if (!(na == 1 && rows[0] == -1) && me + na <= n) {
      const int dim = n + me + na;
      MatX kkt = MatX::Zero(dim, dim);
      VecX b = VecX::Zero(dim);
      kkt.topLeftCorner(n, n) = 0.5 * (p.P + p.P.transpose());
      b.head(n) = -p.q;
      for (int e = 0; e < me; ++e) {
        kkt.block(n + e, 0, 1, n) = p.A_eq.row(e);
        kkt.block(0, n + e, n, 1) = p.A_eq.row(e).transpose();
        b[n + e] = p.b_eq[e];
      }
      for (int a = 0; a < na; ++a) {
        kkt.block(n + me + a, 0, 1, n) = p.A_in.row(rows[a]);
        kkt.block(0, n + me + a, n, 1) = p.A_in.row(rows[a]).transpose();
        b[n + me + a] = rhs[a];
      }
      const Eigen::FullPivLU<MatX> lu(kkt);
      if (lu.isInvertible()) {
        const VecX sol = lu.solve(b);
        const VecX z = sol.head(n);
        bool ok = true;
        // Multiplier y multiplies A_in' in stationarity: upper needs y >= 0,
        // lower needs y <= 0.
        for (int a = 0; a < na && ok; ++a) ok = sgn[a] * sol[n + me + a] >= -feas_tol;
        for (int i = 0; i < mi && ok; ++i) {
          const double v = p.A_in.row(i).dot(z);
          ok = v >= p.lb[i] - feas_tol && v <= p.ub[i] + feas_tol;
        }
        if (ok) {
          const double obj = 0.5 * z.dot(p.P * z) + p.q.dot(z);
          if (!best || obj < best->objective) best = OracleResult{z, obj};
        }
      }
    }
    int k = 0;
    while (k < mi && ++choice[k] == 3) choice[k++] = 0;
    if (k == mi) break;
  }
  return best;
}

// Random strictly convex QP with n variables, m two-sided or one-sided
// inequality rows and a known feasible point.
inline QpProblem random_feasible_qp(std::mt19937_64& rng, int n, int m, int m_eq = 0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  QpProblem p(n);
  MatX f(n, n);
  for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = normal(rng);
  p.P = f.transpose() * f + 0.1 * MatX::Identity(n, n);
  for (int i = 0; i < n; ++i) p.q[i] = 3.0 * normal(rng);
  VecX x0(n);
  for (int i = 0; i < n; ++i) x0[i] = normal(rng);
  p.A_eq = MatX(m_eq, n);
  p.b_eq = VecX(m_eq);
  for (int e = 0; e < m_eq; ++e) {
    for (int j = 0; j < n; ++j) p.A_eq(e, j) = normal(rng);
    p.b_eq[e] = p.A_eq.row(e).dot(x0);
  }
  p.A_in = MatX(m, n);
  p.lb = VecX(m);
  p.ub = VecX(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) p.A_in(i, j) = normal(rng);
    const double v = p.A_in.row(i).dot(x0);
    const double kind = unit(rng);
    p.lb[i] = kind < 0.7 ? v - unit(rng) : -kInf;
    p.ub[i] = kind > 0.4 ? v + unit(rng) : kInf;
  }
  return p;
}

}  // namespace mcmpc::testing

#endif  // MCMPC_TESTS_QP_ORACLE_HPP_
