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

// Dense convex quadratic programming
//
//   minimize    1/2 z'Pz + q'z
//   subject to  A_eq z = b_eq,   lb <= A_in z <= ub
//
// solved by the Goldfarb-Idnani dual active-set method. Variables fixed by
// single-variable equality rows are eliminated before the solve.
// Multipliers follow the convention
//   Pz + q + A_eq' nu + A_in' (lambda_upper - lambda_lower) = 0.

#ifndef MCMPC_QP_SOLVER_HPP_
#define MCMPC_QP_SOLVER_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcmpc/common.hpp"

namespace mcmpc {


struct QpProblem {
  MatX P;
  VecX q;
  MatX A_eq;
  VecX b_eq;
  MatX A_in;
  VecX lb;
  VecX ub;
  // Optional row names used in diagnostics.
  std::vector<std::string> eq_labels;
  std::vector<std::string> in_labels;

  QpProblem() = default;
  explicit QpProblem(int n)
      : P(MatX::Zero(n, n)), q(VecX::Zero(n)), A_eq(0, n), b_eq(0), A_in(0, n), lb(0), ub(0) {}

  int num_vars() const { return static_cast<int>(q.size()); }
  int num_eq() const { return static_cast<int>(A_eq.rows()); }
  int num_in() const { return static_cast<int>(A_in.rows()); }

  std::string eq_label(int i) const {
    return i < static_cast<int>(eq_labels.size()) ? eq_labels[i] : "eq[" + std::to_string(i) + "]";
  }
  std::string in_label(int i) const {
    return i < static_cast<int>(in_labels.size()) ? in_labels[i] : "in[" + std::to_string(i) + "]";
  }

  void validate() const {
    const Eigen::Index n = q.size();
    if (P.rows() != n || P.cols() != n) throw std::invalid_argument("qp: P must be n x n");
    if (A_eq.cols() != n || A_eq.rows() != b_eq.size()) {
      throw std::invalid_argument("qp: equality block has inconsistent dimensions");
    }
    if (A_in.cols() != n || A_in.rows() != lb.size() || A_in.rows() != ub.size()) {
      throw std::invalid_argument("qp: inequality block has inconsistent dimensions");
    }
    if (!P.allFinite() || !q.allFinite() || !A_eq.allFinite() || !b_eq.allFinite() ||
        !A_in.allFinite()) {
      throw std::invalid_argument("qp: non-finite entry in problem data");
    }
    for (Eigen::Index i = 0; i < lb.size(); ++i) {
      if (std::isnan(lb[i]) || std::isnan(ub[i]) || lb[i] == kInf || ub[i] == -kInf) {
        throw std::invalid_argument("qp: invalid inequality bound");
      }
    }
  }

  // Plain-text dump for offline debugging.
  void write(std::ostream& out) const {
    const Eigen::IOFormat fmt(Eigen::FullPrecision, Eigen::DontAlignCols, " ", "\n");
    out << "n " << num_vars() << " m_eq " << num_eq() << " m_in " << num_in() << "\n";
    out << "P\n" << P.format(fmt) << "\nq\n" << q.transpose().format(fmt) << "\n";
    out << "A_eq\n" << A_eq.format(fmt) << "\nb_eq\n" << b_eq.transpose().format(fmt) << "\n";
    out << "A_in\n" << A_in.format(fmt) << "\nlb\n" << lb.transpose().format(fmt) << "\nub\n"
        << ub.transpose().format(fmt) << "\n";
  }
};

enum class QpStatus { kOptimal, kInfeasible, kMaxIter, kNumericalFailure };

inline const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::kOptimal:
      return "optimal";
    case QpStatus::kInfeasible:
      return "infeasible";
    case QpStatus::kMaxIter:
      return "max_iter";
    case QpStatus::kNumericalFailure:
      return "numerical_failure";
  }
  return "unknown";
}

struct KktResiduals {
  double stationarity = 0.0;     // ||Pz + q + A_eq'nu + A_in'(lu - ll)||_inf
  double primal = 0.0;           // max constraint violation
  double complementarity = 0.0;  // max |lambda_i * slack_i|
  double dual = 0.0;             // min multiplier (>= 0 when dual feasible)
  double scale = 1.0;            // problem magnitude used for relative tests

  double dual_infeasibility() const { return std::max(0.0, -dual); }
  double worst() const {
    return std::max({stationarity, primal, complementarity, dual_infeasibility()});
  }
};

inline KktResiduals check_kkt(const QpProblem& p, const Eigen::Ref<const VecX>& z,
                              const Eigen::Ref<const VecX>& nu,
                              const Eigen::Ref<const VecX>& lambda_lower,
                              const Eigen::Ref<const VecX>& lambda_upper) {
  if (z.size() != p.num_vars() || nu.size() != p.num_eq() ||
      lambda_lower.size() != p.num_in() || lambda_upper.size() != p.num_in()) {
    throw std::invalid_argument("check_kkt: dimension mismatch");
  }
  KktResiduals r;
  const MatX ps = 0.5 * (p.P + p.P.transpose());
  const VecX grad = ps * z + p.q;
  VecX station = grad;
  if (p.num_eq() > 0) station += p.A_eq.transpose() * nu;
  VecX az = VecX::Zero(p.num_in());
  if (p.num_in() > 0) {
    station += p.A_in.transpose() * (lambda_upper - lambda_lower);
    az = p.A_in * z;
  }
  r.stationarity = station.size() > 0 ? station.lpNorm<Eigen::Infinity>() : 0.0;
  if (p.num_eq() > 0) r.primal = (p.A_eq * z - p.b_eq).lpNorm<Eigen::Infinity>();
  double dual_min = kInf;
  for (int i = 0; i < p.num_in(); ++i) {
    r.primal = std::max({r.primal, p.lb[i] - az[i], az[i] - p.ub[i]});
    if (std::isfinite(p.lb[i])) {
      r.complementarity =
          std::max(r.complementarity, std::abs(lambda_lower[i] * (az[i] - p.lb[i])));
    } else {
      r.complementarity = std::max(r.complementarity, std::abs(lambda_lower[i]) * 1e300);
    }
    if (std::isfinite(p.ub[i])) {
      r.complementarity =
          std::max(r.complementarity, std::abs(lambda_upper[i] * (p.ub[i] - az[i])));
    } else {
      r.complementarity = std::max(r.complementarity, std::abs(lambda_upper[i]) * 1e300);
    }
    dual_min = std::min({dual_min, lambda_lower[i], lambda_upper[i]});
  }
  r.dual = std::isfinite(dual_min) ? dual_min : 0.0;
  r.scale = 1.0 + (p.q.size() > 0 ? p.q.lpNorm<Eigen::Infinity>() : 0.0) +
            (ps.size() > 0 ? ps.lpNorm<Eigen::Infinity>() : 0.0) *
                (z.size() > 0 ? z.lpNorm<Eigen::Infinity>() : 0.0);
  return r;
}

struct QpOptions {
  double tol = 1e-8;
  int max_iter = 0;                // 0: automatic
  double regularization = 1e-9;    // added to P only if it is not positive-definite
  bool warm_start = true;
};

struct QpSolution {
  QpStatus status = QpStatus::kInfeasible;
  VecX z;
  double objective = kInf;
  int iterations = 0;
  KktResiduals kkt;
  VecX nu;
  VecX lambda_lower;
  VecX lambda_upper;
  // Active inequality sides: 2 * row for the lower bound, 2 * row + 1 for
  // the upper bound.
  std::vector<int> active_set;
  int violated_row = -1;           // offending row when infeasible
  bool violated_equality = false;
  std::string diagnostic;

  bool optimal() const { return status == QpStatus::kOptimal; }
};

namespace detail {

// Goldfarb-Idnani on normalized constraints:
//   ce_k' x = ce0_k  (equalities),  ci_k' x >= ci0_k  (inequalities).
class DualActiveSet {
 public:
  struct Result {
    QpStatus status = QpStatus::kOptimal;
    VecX x;
    std::vector<int> active;  // indices into the inequality list
    VecX u_eq;                // GI multipliers (grad = N u)
    VecX u_in;                // one per inequality, zero if inactive
    int iterations = 0;
    int blocking = -1;        // inequality that could not be added
    int bad_equality = -1;
    std::vector<int> conflict;  // active set at the failure
  };

  Result solve(const MatX& g, const VecX& g0, const MatX& ce, const VecX& ce0, const MatX& ci,
               const VecX& ci0, const std::vector<int>& warm, double tol, int max_iter) {
    n_ = static_cast<int>(g0.size());
    Result res;
    res.u_eq = VecX::Zero(ce.rows());
    res.u_in = VecX::Zero(ci.rows());
    const Eigen::LLT<MatX> llt(g);
    if (llt.info() != Eigen::Success) throw NumericalError("qp: Hessian is not positive-definite");
    // J = L^{-T}, so that G^{-1} = J J'.
    j_ = llt.matrixU().solve(MatX::Identity(n_, n_));
    r_ = MatX::Zero(n_, n_);
    r_norm_ = 1.0;
    iq_ = 0;
    x_ = -llt.solve(g0);
    std::vector<int> act;  // encoded: equality k -> -(k + 1), inequality k -> k
    std::vector<double> u;

    VecX d(n_), z(n_), r;
    const auto compute_step = [&](const Eigen::Ref<const VecX>& np) {
      d.noalias() = j_.transpose() * np;
      z.noalias() = j_.rightCols(n_ - iq_) * d.tail(n_ - iq_);
      r = r_.topLeftCorner(iq_, iq_).triangularView<Eigen::Upper>().solve(d.head(iq_));
    };
    // Squared norm of the part of d outside the active span, relative.
    const auto independent = [&]() {
      const double total = d.squaredNorm();
      return d.tail(n_ - iq_).squaredNorm() > 1e-12 * std::max(total, 1e-300);
    };

    for (int k = 0; k < ce.rows(); ++k) {
      const VecX np = ce.row(k).transpose();
      const double s = np.dot(x_) - ce0[k];
      compute_step(np);
      if (!independent()) {
        if (std::abs(s) > 10.0 * tol) {
          res.status = QpStatus::kInfeasible;
          res.bad_equality = k;
          res.x = x_;
          return res;
        }
        continue;  // redundant row
      }
      const double t = -s / z.dot(np);
      x_ += t * z;
      for (int i = 0; i < iq_; ++i) u[i] -= t * r[i];
      if (!add_constraint(d)) throw NumericalError("qp: degenerate equality constraints");
      act.push_back(-(k + 1));
      u.push_back(t);
    }
    const int num_eq_active = iq_;

    std::vector<char> is_active(ci.rows(), 0);
    const int m = static_cast<int>(ci.rows());
    VecX s(m);
    int iter = 0;
    while (true) {
      if (m == 0) break;
      s.noalias() = ci * x_ - ci0;
      int p = -1;
      for (int w : warm) {
        if (w >= 0 && w < m && !is_active[w] && s[w] < -tol && (p < 0 || s[w] < s[p])) p = w;
      }
      if (p < 0) {
        double worst = -tol;
        for (int k = 0; k < m; ++k) {
          if (!is_active[k] && s[k] < worst) {
            worst = s[k];
            p = k;
          }
        }
      }
      if (p < 0) break;  // primal feasible: optimal
      const VecX np = ci.row(p).transpose();
      double u_p = 0.0;
      double slack = s[p];
      while (true) {
        if (++iter > max_iter) {
          res.status = QpStatus::kMaxIter;
          res.x = x_;
          res.iterations = iter;
          return res;
        }
        compute_step(np);
        double t1 = kInf;
        int drop = -1;
        for (int i = num_eq_active; i < iq_; ++i) {
          if (r[i] > 0.0) {
            const double ratio = u[i] / r[i];
            if (ratio < t1) {
              t1 = ratio;
              drop = i;
            }
          }
        }
        const double t2 = independent() ? -slack / z.dot(np) : kInf;
        const double t = std::min(t1, t2);
        if (!std::isfinite(t)) {
          res.status = QpStatus::kInfeasible;
          res.blocking = p;
          for (int i = num_eq_active; i < iq_; ++i) res.conflict.push_back(act[i]);
          res.x = x_;
          res.iterations = iter;
          return res;
        }
        if (std::isfinite(t2)) x_ += t * z;
        for (int i = 0; i < iq_; ++i) u[i] -= t * r[i];
        u_p += t;
        if (t == t2) {
          if (!add_constraint(d)) throw NumericalError("qp: degenerate active set");
          act.push_back(p);
          u.push_back(u_p);
          is_active[p] = 1;
          break;
        }
        is_active[act[drop]] = 0;
        delete_constraint(drop, &act, &u);
        slack = np.dot(x_) - ci0[p];
      }
    }
    res.x = x_;
    res.iterations = iter;
    for (int i = 0; i < iq_; ++i) {
      if (act[i] < 0) {
        res.u_eq[-act[i] - 1] = u[i];
      } else {
        res.u_in[act[i]] = std::max(0.0, u[i]);
        res.active.push_back(act[i]);
      }
    }
    return res;
  }

 private:
  bool add_constraint(VecX& d) {
    for (int j = n_ - 1; j >= iq_ + 1; --j) {
      double cc = d[j - 1], ss = d[j];
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      d[j] = 0.0;
      ss /= h;
      cc /= h;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        d[j - 1] = -h;
      } else {
        d[j - 1] = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = 0; k < n_; ++k) {
        const double t1 = j_(k, j - 1), t2 = j_(k, j);
        j_(k, j - 1) = t1 * cc + t2 * ss;
        j_(k, j) = xny * (t1 + j_(k, j - 1)) - t2;
      }
    }
    ++iq_;
    r_.col(iq_ - 1).head(iq_) = d.head(iq_);
    if (std::abs(d[iq_ - 1]) <= std::numeric_limits<double>::epsilon() * r_norm_) {
      --iq_;
      return false;
    }
    r_norm_ = std::max(r_norm_, std::abs(d[iq_ - 1]));
    return true;
  }

  void delete_constraint(int qq, std::vector<int>* act, std::vector<double>* u) {
    act->erase(act->begin() + qq);
    u->erase(u->begin() + qq);
    for (int i = qq; i < iq_ - 1; ++i) r_.col(i) = r_.col(i + 1);
    r_.col(iq_ - 1).setZero();
    --iq_;
    for (int j = qq; j < iq_; ++j) {
      double cc = r_(j, j), ss = r_(j + 1, j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      cc /= h;
      ss /= h;
      r_(j + 1, j) = 0.0;
      if (cc < 0.0) {
        r_(j, j) = -h;
        cc = -cc;
        ss = -ss;
      } else {
        r_(j, j) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = j + 1; k < iq_; ++k) {
        const double t1 = r_(j, k), t2 = r_(j + 1, k);
        r_(j, k) = t1 * cc + t2 * ss;
        r_(j + 1, k) = xny * (t1 + r_(j, k)) - t2;
      }
      for (int k = 0; k < n_; ++k) {
        const double t1 = j_(k, j), t2 = j_(k, j + 1);
        j_(k, j) = t1 * cc + t2 * ss;
        j_(k, j + 1) = xny * (j_(k, j) + t1) - t2;
      }
    }
  }

  int n_ = 0;
  int iq_ = 0;
  double r_norm_ = 1.0;
  MatX j_, r_;
  VecX x_;
};

}  // namespace detail

class QpSolver {
 public:
  explicit QpSolver(QpOptions options = {}) : options_(options) {}

  const QpOptions& options() const { return options_; }
  QpOptions& options() { return options_; }
  void reset_warm_start() { warm_.clear(); }
  const std::vector<int>& warm_start_set() const { return warm_; }

  QpSolution solve(const QpProblem& problem) {
    problem.validate();
    const int n = problem.num_vars();
    const int m_eq = problem.num_eq();
    const int m_in = problem.num_in();
    const double tol = options_.tol;
    QpSolution sol;
    sol.z = VecX::Zero(n);
    sol.nu = VecX::Zero(m_eq);
    sol.lambda_lower = VecX::Zero(m_in);
    sol.lambda_upper = VecX::Zero(m_in);
    const MatX p_sym = 0.5 * (problem.P + problem.P.transpose());

    const auto infeasible_row = [&](int row, bool equality, const std::string& why) {
      sol.status = QpStatus::kInfeasible;
      sol.violated_row = row;
      sol.violated_equality = equality;
      sol.diagnostic = why;
      return sol;
    };

    for (int i = 0; i < m_in; ++i) {
      if (problem.lb[i] > problem.ub[i]) {
        return infeasible_row(i, false,
                              "contradictory bounds on " + problem.in_label(i) + " (lower " +
                                  std::to_string(problem.lb[i]) + " > upper " +
                                  std::to_string(problem.ub[i]) + ")");
      }
    }

    // Presolve: variables pinned by single-variable equality rows.
    std::vector<int> pinned_by(n, -1);
    VecX fixed_value = VecX::Zero(n);
    std::vector<char> eq_is_pin(m_eq, 0);
    for (int i = 0; i < m_eq; ++i) {
      int var = -1, count = 0;
      for (int j = 0; j < n; ++j) {
        if (problem.A_eq(i, j) != 0.0) {
          var = j;
          ++count;
        }
      }
      if (count != 1) continue;
      const double value = problem.b_eq[i] / problem.A_eq(i, var);
      eq_is_pin[i] = 1;
      if (pinned_by[var] >= 0) {
        if (std::abs(value - fixed_value[var]) > tol * (1.0 + std::abs(value))) {
          return infeasible_row(i, true,
                                problem.eq_label(i) + " conflicts with " +
                                    problem.eq_label(pinned_by[var]));
        }
        continue;
      }
      pinned_by[var] = i;
      fixed_value[var] = value;
    }
    std::vector<int> free_vars;
    for (int j = 0; j < n; ++j) {
      if (pinned_by[j] < 0) free_vars.push_back(j);
    }
    const int nf = static_cast<int>(free_vars.size());
    VecX fixed_full = VecX::Zero(n);
    for (int j = 0; j < n; ++j) {
      if (pinned_by[j] >= 0) fixed_full[j] = fixed_value[j];
    }

    // Reduced problem in the free variables.
    MatX g(nf, nf);
    VecX g0(nf);
    const VecX px = p_sym * fixed_full;
    for (int a = 0; a < nf; ++a) {
      g0[a] = problem.q[free_vars[a]] + px[free_vars[a]];
      for (int b = 0; b < nf; ++b) g(a, b) = p_sym(free_vars[a], free_vars[b]);
    }
    // Equalities that remain after substitution, normalized.
    std::vector<int> eq_rows;
    std::vector<double> eq_norm;
    MatX ce(0, nf);
    VecX ce0(0);
    {
      std::vector<VecX> rows;
      std::vector<double> rhs;
      for (int i = 0; i < m_eq; ++i) {
        if (eq_is_pin[i]) continue;
        VecX a(nf);
        for (int c = 0; c < nf; ++c) a[c] = problem.A_eq(i, free_vars[c]);
        const double b = problem.b_eq[i] - problem.A_eq.row(i).dot(fixed_full);
        const double norm = a.norm();
        if (norm == 0.0) {
          if (std::abs(b) > tol * (1.0 + std::abs(problem.b_eq[i]))) {
            return infeasible_row(i, true, problem.eq_label(i) + " cannot be satisfied");
          }
          continue;
        }
        rows.push_back(a / norm);
        rhs.push_back(b / norm);
        eq_rows.push_back(i);
        eq_norm.push_back(norm);
      }
      ce.resize(static_cast<Eigen::Index>(rows.size()), nf);
      ce0.resize(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t k = 0; k < rows.size(); ++k) {
        ce.row(static_cast<Eigen::Index>(k)) = rows[k].transpose();
        ce0[static_cast<Eigen::Index>(k)] = rhs[k];
      }
    }
    // One-sided inequalities ci' x >= ci0, normalized.
    std::vector<int> side_id;  // 2 * row (+1 for upper)
    std::vector<double> side_norm;
    MatX ci;
    VecX ci0;
    {
      const MatX a_free = select_columns(problem.A_in, free_vars);
      const VecX offset = m_in > 0 ? VecX(problem.A_in * fixed_full) : VecX(0);
      std::vector<Eigen::Index> src;
      std::vector<double> sign, rhs;
      for (int i = 0; i < m_in; ++i) {
        const double norm = a_free.row(i).norm();
        if (norm == 0.0) {
          if (offset[i] < problem.lb[i] - tol || offset[i] > problem.ub[i] + tol) {
            return infeasible_row(i, false,
                                  problem.in_label(i) + " is violated by pinned variables");
          }
          continue;
        }
        if (std::isfinite(problem.lb[i])) {
          src.push_back(i);
          sign.push_back(1.0);
          rhs.push_back((problem.lb[i] - offset[i]) / norm);
          side_id.push_back(2 * i);
          side_norm.push_back(norm);
        }
        if (std::isfinite(problem.ub[i])) {
          src.push_back(i);
          sign.push_back(-1.0);
          rhs.push_back(-(problem.ub[i] - offset[i]) / norm);
          side_id.push_back(2 * i + 1);
          side_norm.push_back(norm);
        }
      }
      const auto ms = static_cast<Eigen::Index>(src.size());
      ci.resize(ms, nf);
      ci0.resize(ms);
      for (Eigen::Index k = 0; k < ms; ++k) {
        ci.row(k) = sign[k] / side_norm[k] * a_free.row(src[k]);
        ci0[k] = rhs[k];
      }
    }

    // Warm start: previously active sides, mapped into this problem.
    std::vector<int> warm;
    if (options_.warm_start && !warm_.empty() && warm_n_ == n && warm_m_ == m_in) {
      for (int id : warm_) {
        const auto it = std::find(side_id.begin(), side_id.end(), id);
        if (it != side_id.end()) warm.push_back(static_cast<int>(it - side_id.begin()));
      }
    }

    const int max_iter =
        options_.max_iter > 0 ? options_.max_iter : 10 * (nf + static_cast<int>(ci.rows())) + 100;
    VecX x_free = VecX::Zero(nf);
    detail::DualActiveSet::Result res;
    if (nf > 0) {
      MatX g_reg = g;
      if (Eigen::LLT<MatX>(g).info() != Eigen::Success || !positive_definite(g)) {
        g_reg.diagonal().array() +=
            options_.regularization * std::max(1.0, g.diagonal().maxCoeff());
      }
      res = detail::DualActiveSet().solve(g_reg, g0, ce, ce0, ci, ci0, warm, 0.5 * tol, max_iter);
      x_free = res.x;
    } else {
      res.u_eq = VecX::Zero(ce.rows());
      res.u_in = VecX::Zero(ci.rows());
      for (Eigen::Index k = 0; k < ci.rows(); ++k) {
        if (ci0[k] > tol) {
          res.status = QpStatus::kInfeasible;
          res.blocking = static_cast<int>(k);
        }
      }
    }
    sol.iterations = res.iterations;
    for (int a = 0; a < nf; ++a) sol.z[free_vars[a]] = x_free[a];
    for (int j = 0; j < n; ++j) {
      if (pinned_by[j] >= 0) sol.z[j] = fixed_value[j];
    }
    if (res.status == QpStatus::kInfeasible) {
      sol.status = QpStatus::kInfeasible;
      if (res.bad_equality >= 0) {
        sol.violated_row = eq_rows[res.bad_equality];
        sol.violated_equality = true;
        sol.diagnostic = problem.eq_label(sol.violated_row) +
                         " is inconsistent with the other equality constraints";
      } else {
        const int id = side_id[res.blocking];
        sol.violated_row = id / 2;
        std::ostringstream why;
        why << (id % 2 ? "upper" : "lower") << " bound of " << problem.in_label(id / 2)
            << " cannot be met";
        if (!res.conflict.empty()) {
          why << " together with";
          for (int c : res.conflict) {
            const int cid = side_id[c];
            why << " " << problem.in_label(cid / 2) << (cid % 2 ? "(upper)" : "(lower)");
          }
        }
        sol.diagnostic = why.str();
      }
      sol.objective = kInf;
      return sol;
    }

    // Multipliers in the original scaling.
    for (std::size_t k = 0; k < eq_rows.size(); ++k) {
      sol.nu[eq_rows[k]] = -res.u_eq[static_cast<Eigen::Index>(k)] / eq_norm[k];
    }
    for (Eigen::Index k = 0; k < ci.rows(); ++k) {
      const double lam = res.u_in[k] / side_norm[k];
      if (lam == 0.0) continue;
      const int id = side_id[k];
      (id % 2 ? sol.lambda_upper : sol.lambda_lower)[id / 2] = lam;
    }
    for (int k : res.active) sol.active_set.push_back(side_id[k]);
    // Pinned rows absorb the remaining stationarity in their variable.
    if (nf < n) {
      VecX station = p_sym * sol.z + problem.q;
      if (m_eq > 0) station += problem.A_eq.transpose() * sol.nu;
      if (m_in > 0) station += problem.A_in.transpose() * (sol.lambda_upper - sol.lambda_lower);
      for (int j = 0; j < n; ++j) {
        const int row = pinned_by[j];
        if (row >= 0) sol.nu[row] = -station[j] / problem.A_eq(row, j);
      }
    }
    sol.objective = 0.5 * sol.z.dot(p_sym * sol.z) + problem.q.dot(sol.z);
    sol.kkt = check_kkt(problem, sol.z, sol.nu, sol.lambda_lower, sol.lambda_upper);
    sol.status = res.status;
    if (res.status == QpStatus::kOptimal) {
      warm_ = sol.active_set;
      warm_n_ = n;
      warm_m_ = m_in;
    } else {
      sol.diagnostic = "iteration limit reached";
    }
    return sol;
  }

 private:
  static MatX select_columns(const MatX& a, const std::vector<int>& cols) {
    MatX out(a.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) {
      out.col(static_cast<Eigen::Index>(c)) = a.col(cols[c]);
    }
    return out;
  }

  static bool positive_definite(const MatX& g) {
    const Eigen::LDLT<MatX> ldlt(g);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
    const VecX diag = ldlt.vectorD();
    return diag.minCoeff() > 1e-14 * std::max(1.0, diag.maxCoeff());
  }

  QpOptions options_;
  std::vector<int> warm_;
  int warm_n_ = -1;
  int warm_m_ = -1;
};

// One-shot solve without warm starting.
inline QpSolution solve_qp(const QpProblem& problem, const QpOptions& options = {}) {
  QpOptions o = options;
  o.warm_start = false;
  return QpSolver(o).solve(problem);
}

}  // namespace mcmpc

#endif  // MCMPC_QP_SOLVER_HPP_
