#include "freelip/linear_program.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

namespace freelip {

namespace {

// min c.z  s.t.  A z = b (b >= 0), z >= 0, plus bookkeeping to map back.
struct Transformed {
  int rows = 0;
  int cols = 0;  // structural (shifted vars, splits, slacks/surplus)
  std::vector<std::vector<double>> a;
  std::vector<double> b;
  std::vector<double> c;
  double obj_const = 0.0;
  double obj_sign = 1.0;  // -1 when the original sense is Maximize

  // x_j = off + z[col]   (kind 0)
  // x_j = off - z[col]   (kind 1)
  // x_j = z[col]-z[col2] (kind 2)
  struct VarRule {
    int kind = 0;
    int col = -1, col2 = -1;
    double off = 0.0;
  };
  std::vector<VarRule> vrule;

  std::vector<double> row_sign;   // per transformed row, +-1 vs. pre-negation
  std::vector<int> user_row;      // transformed row index per original row
  std::vector<int> slack_col;     // structural col of a +1 slack, else -1
  double scale = 1.0;
};

Transformed build(const LinearProgram& lp) {
  const int n = lp.num_vars();
  if (static_cast<int>(lp.lower.size()) != n || static_cast<int>(lp.upper.size()) != n)
    throw Error("lp_solve: bounds size mismatch");
  for (const auto& r : lp.rows) {
    if (static_cast<int>(r.coef.size()) != n) throw Error("lp_solve: row length mismatch");
    if (!std::isfinite(r.rhs)) throw Error("lp_solve: rhs must be finite");
  }

  Transformed t;
  t.obj_sign = lp.sense == Sense::Maximize ? -1.0 : 1.0;
  t.vrule.resize(n);
  for (int j = 0; j < n; ++j) {
    const double lo = lp.lower[j], hi = lp.upper[j];
    if (lo > hi) throw Error("lp_solve: empty variable bound");
    auto& r = t.vrule[j];
    if (std::isfinite(lo)) {
      r = {0, t.cols++, -1, lo};
    } else if (std::isfinite(hi)) {
      r = {1, t.cols++, -1, hi};
    } else {
      r = {2, t.cols++, t.cols, 0.0};
      ++t.cols;
    }
  }

  // Objective over z, plus the constant from the shifts.
  t.c.assign(t.cols, 0.0);
  for (int j = 0; j < n; ++j) {
    const double cj = t.obj_sign * lp.objective[j];
    const auto& r = t.vrule[j];
    t.obj_const += cj * r.off * (r.kind == 1 ? 1.0 : (r.kind == 0 ? 1.0 : 0.0));
    if (r.kind == 0) {
      t.c[r.col] += cj;
    } else if (r.kind == 1) {
      t.c[r.col] -= cj;
    } else {
      t.c[r.col] += cj;
      t.c[r.col2] -= cj;
    }
  }

  auto substituted_row = [&](const std::vector<double>& coef, double rhs) {
    std::vector<double> row(t.cols, 0.0);
    double b = rhs;
    for (int j = 0; j < n; ++j) {
      const double a = coef[j];
      if (a == 0.0) continue;
      const auto& r = t.vrule[j];
      if (r.kind == 0) {
        row[r.col] += a;
        b -= a * r.off;
      } else if (r.kind == 1) {
        row[r.col] -= a;
        b -= a * r.off;
      } else {
        row[r.col] += a;
        row[r.col2] -= a;
      }
    }
    return std::pair(std::move(row), b);
  };

  struct PendingRow {
    std::vector<double> row;
    Relation rel;
    double rhs;
    int user_index;  // -1 for synthesized bound rows
  };
  std::vector<PendingRow> pending;
  for (int i = 0; i < static_cast<int>(lp.rows.size()); ++i) {
    auto [row, b] = substituted_row(lp.rows[i].coef, lp.rows[i].rhs);
    pending.push_back({std::move(row), lp.rows[i].rel, b, i});
  }
  // Double-bounded variables contribute an upper-bound row on the shifted z.
  for (int j = 0; j < n; ++j) {
    const double lo = lp.lower[j], hi = lp.upper[j];
    if (std::isfinite(lo) && std::isfinite(hi)) {
      std::vector<double> row(t.cols, 0.0);
      row[t.vrule[j].col] = 1.0;
      pending.push_back({std::move(row), Relation::LessEq, hi - lo, -1});
    }
  }

  t.rows = static_cast<int>(pending.size());
  t.user_row.assign(lp.rows.size(), -1);
  t.row_sign.assign(t.rows, 1.0);
  t.slack_col.assign(t.rows, -1);

  // Slack/surplus columns, then row negations to make b >= 0.
  const int struct_cols = t.cols;
  int extra = 0;
  for (const auto& p : pending)
    if (p.rel != Relation::Equal) ++extra;
  t.a.assign(t.rows, std::vector<double>(struct_cols + extra, 0.0));
  t.b.assign(t.rows, 0.0);
  t.c.resize(struct_cols + extra, 0.0);
  int next = struct_cols;
  for (int i = 0; i < t.rows; ++i) {
    auto& p = pending[i];
    std::copy(p.row.begin(), p.row.end(), t.a[i].begin());
    t.b[i] = p.rhs;
    if (p.rel == Relation::LessEq) {
      t.a[i][next] = 1.0;
      t.slack_col[i] = next++;
    } else if (p.rel == Relation::GreaterEq) {
      t.a[i][next] = -1.0;
      t.slack_col[i] = next++;
    }
    if (p.user_index >= 0) t.user_row[p.user_index] = i;
    if (t.b[i] < 0.0) {
      t.row_sign[i] = -1.0;
      t.b[i] = -t.b[i];
      for (auto& v : t.a[i]) v = -v;
    }
    // After a flip a slack coefficient of +1 becomes -1 and stops being a
    // valid starting column.
    if (t.slack_col[i] >= 0 && t.a[i][t.slack_col[i]] < 0.0) t.slack_col[i] = -1;
  }
  t.cols = struct_cols + extra;

  t.scale = 1.0;
  for (const auto& row : t.a)
    for (double v : row) t.scale = std::max(t.scale, 1.0 + std::abs(v));
  for (double v : t.b) t.scale = std::max(t.scale, 1.0 + std::abs(v));
  for (double v : t.c) t.scale = std::max(t.scale, 1.0 + std::abs(v));
  return t;
}

class SimplexTableau {
 public:
  SimplexTableau(const Transformed& t) : t_(t), m_(t.rows) {
    ncols_ = t.cols;
    art_of_row_.assign(m_, -1);
    for (int i = 0; i < m_; ++i)
      if (t.slack_col[i] < 0) art_of_row_[i] = ncols_++;
    n_art_begin_ = t.cols;
    tab_.assign(m_, std::vector<double>(ncols_, 0.0));
    rhs_ = t.b;
    basis_.assign(m_, -1);
    for (int i = 0; i < m_; ++i) {
      std::copy(t.a[i].begin(), t.a[i].end(), tab_[i].begin());
      if (art_of_row_[i] >= 0) {
        tab_[i][art_of_row_[i]] = 1.0;
        basis_[i] = art_of_row_[i];
      } else {
        basis_[i] = t.slack_col[i];
      }
    }
    dead_.assign(ncols_, 0);
    piv_tol_ = 1e-10 * t.scale;
    enter_tol_ = 1e-10 * t.scale;
  }

  bool has_artificials() const { return n_art_begin_ < ncols_; }
  bool is_artificial(int col) const { return col >= n_art_begin_; }

  // Runs one phase; cost[j] over all columns. Returns final objective, or
  // nullopt on unbounded.
  enum class PhaseResult { Optimal, Unbounded, IterationLimit };
  PhaseResult run_phase(const std::vector<double>& cost) {
    red_ = cost;
    // Price out the initial basis.
    for (int i = 0; i < m_; ++i) {
      const double cb = cost[basis_[i]];
      if (cb == 0.0) continue;
      for (int j = 0; j < ncols_; ++j) red_[j] -= cb * tab_[i][j];
    }
    bool bland = false;
    double best_obj = objective(cost);
    int since_improve = 0;
    const int stall_limit = 2 * (m_ + ncols_) + 32;
    const long iter_limit = 20000L + 50L * (m_ + ncols_);
    for (long iter = 0;; ++iter) {
      if (iter > iter_limit) return PhaseResult::IterationLimit;
      int enter = -1;
      if (!bland) {
        double best = -enter_tol_;
        for (int j = 0; j < ncols_; ++j)
          if (!dead_[j] && red_[j] < best) {
            best = red_[j];
            enter = j;
          }
      } else {
        for (int j = 0; j < ncols_; ++j)
          if (!dead_[j] && red_[j] < -enter_tol_) {
            enter = j;
            break;
          }
      }
      if (enter < 0) return PhaseResult::Optimal;

      int leave = -1;
      double best_ratio = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double a = tab_[i][enter];
        if (a <= piv_tol_) continue;
        const double ratio = rhs_[i] / a;
        if (leave < 0 || ratio < best_ratio - 1e-14 * t_.scale ||
            (ratio <= best_ratio + 1e-14 * t_.scale && basis_[i] < basis_[leave])) {
          leave = i;
          best_ratio = ratio;
        }
      }
      if (leave < 0) return PhaseResult::Unbounded;
      pivot(leave, enter);
      ++iterations_;

      const double obj = objective(cost);
      if (obj < best_obj - 1e-12 * t_.scale) {
        best_obj = obj;
        since_improve = 0;
      } else if (!bland && ++since_improve > stall_limit) {
        bland = true;
      }
    }
  }

  double objective(const std::vector<double>& cost) const {
    double v = 0.0;
    for (int i = 0; i < m_; ++i) v += cost[basis_[i]] * rhs_[i];
    return v;
  }

  // After phase 1: pivot artificials out of the basis where possible and
  // retire every artificial column from future entering steps.
  void retire_artificials() {
    for (int i = 0; i < m_; ++i) {
      if (!is_artificial(basis_[i])) continue;
      int piv = -1;
      for (int j = 0; j < n_art_begin_; ++j)
        if (!dead_[j] && std::abs(tab_[i][j]) > 1e-7 * t_.scale) {
          piv = j;
          break;
        }
      if (piv >= 0) pivot(i, piv);
      // else: redundant row, the artificial stays basic at ~0.
    }
    for (int j = n_art_begin_; j < ncols_; ++j) dead_[j] = 1;
  }

  const std::vector<int>& basis() const { return basis_; }
  const std::vector<double>& rhs() const { return rhs_; }
  int iterations() const { return iterations_; }
  int cols_with_artificials() const { return ncols_; }
  int art_col_of_row(int i) const { return art_of_row_[i]; }

 private:
  void pivot(int r, int c) {
    const double p = tab_[r][c];
    const double inv = 1.0 / p;
    auto& prow = tab_[r];
    for (auto& v : prow) v *= inv;
    prow[c] = 1.0;
    rhs_[r] *= inv;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double f = tab_[i][c];
      if (f == 0.0) continue;
      auto& row = tab_[i];
      for (int j = 0; j < ncols_; ++j) row[j] -= f * prow[j];
      row[c] = 0.0;
      rhs_[i] -= f * rhs_[r];
      if (rhs_[i] < 0.0 && rhs_[i] > -1e-11 * t_.scale) rhs_[i] = 0.0;
    }
    const double f = red_[c];
    if (f != 0.0) {
      for (int j = 0; j < ncols_; ++j) red_[j] -= f * prow[j];
      red_[c] = 0.0;
    }
    basis_[r] = c;
  }

  const Transformed& t_;
  int m_ = 0, ncols_ = 0, n_art_begin_ = 0;
  std::vector<std::vector<double>> tab_;
  std::vector<double> rhs_;
  std::vector<double> red_;
  std::vector<int> basis_;
  std::vector<int> art_of_row_;
  std::vector<char> dead_;
  double piv_tol_ = 0.0, enter_tol_ = 0.0;
  int iterations_ = 0;
};

// Column `col` of the transformed system including artificial identity columns.
void fill_column(const Transformed& t, const SimplexTableau& tab, int col,
                 Eigen::VectorXd& out) {
  out.setZero();
  if (col < t.cols) {
    for (int i = 0; i < t.rows; ++i) out(i) = t.a[i][col];
  } else {
    for (int i = 0; i < t.rows; ++i)
      if (tab.art_col_of_row(i) == col) out(i) = 1.0;
  }
}

struct RefinedPoint {
  std::vector<double> z;      // structural variables (artificials excluded)
  std::vector<double> y;      // row multipliers for the given basis costs
  bool ok = false;
};

RefinedPoint refine(const Transformed& t, const SimplexTableau& tab,
                    const std::vector<double>& cost, bool allow_artificial_basics = false) {
  RefinedPoint rp;
  const int m = t.rows;
  if (m == 0) {
    rp.z.assign(t.cols, 0.0);
    rp.ok = true;
    return rp;
  }
  Eigen::MatrixXd bmat(m, m);
  Eigen::VectorXd colbuf(m);
  for (int k = 0; k < m; ++k) {
    fill_column(t, tab, tab.basis()[k], colbuf);
    bmat.col(k) = colbuf;
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(bmat);
  Eigen::VectorXd bvec(m);
  for (int i = 0; i < m; ++i) bvec(i) = t.b[i];
  Eigen::VectorXd xb = lu.solve(bvec);
  Eigen::VectorXd cb(m);
  for (int k = 0; k < m; ++k) cb(k) = cost[tab.basis()[k]];
  Eigen::PartialPivLU<Eigen::MatrixXd> lut(bmat.transpose());
  Eigen::VectorXd y = lut.solve(cb);
  if (!xb.allFinite() || !y.allFinite()) return rp;

  rp.z.assign(t.cols, 0.0);
  for (int k = 0; k < m; ++k) {
    const int col = tab.basis()[k];
    if (col < t.cols) rp.z[col] = xb(k);
    else if (!allow_artificial_basics && std::abs(xb(k)) > 1e-7 * t.scale)
      return rp;  // artificial stuck basic
  }
  rp.y.assign(m, 0.0);
  for (int i = 0; i < m; ++i) rp.y[i] = y(i);
  rp.ok = true;
  return rp;
}

}  // namespace

LpSolution lp_solve(const LinearProgram& lp) {
  Transformed t = build(lp);
  LpSolution sol;
  sol.scale = t.scale;

  SimplexTableau tab(t);
  std::vector<double> phase2_cost(tab.cols_with_artificials(), 0.0);
  std::copy(t.c.begin(), t.c.end(), phase2_cost.begin());

  if (tab.has_artificials()) {
    std::vector<double> phase1_cost(tab.cols_with_artificials(), 0.0);
    for (int j = t.cols; j < tab.cols_with_artificials(); ++j) phase1_cost[j] = 1.0;
    auto r1 = tab.run_phase(phase1_cost);
    sol.iterations = tab.iterations();
    if (r1 != SimplexTableau::PhaseResult::Optimal) {
      sol.status = LpStatus::NumericalFailure;
      return sol;
    }
    const double infeas = tab.objective(phase1_cost);
    if (infeas > 1e-8 * t.scale) {
      auto rp = refine(t, tab, phase1_cost, /*allow_artificial_basics=*/true);
      sol.status = LpStatus::Infeasible;
      if (rp.ok) {
        // Farkas ray: y with y'A <= 0 on structural columns and y'b > 0.
        double viol = 0.0;
        for (int j = 0; j < t.cols; ++j) {
          double dot = 0.0;
          for (int i = 0; i < t.rows; ++i) dot += rp.y[i] * t.a[i][j];
          viol = std::max(viol, dot);
        }
        double gain = 0.0;
        for (int i = 0; i < t.rows; ++i) gain += rp.y[i] * t.b[i];
        sol.farkas_residual = viol;
        sol.farkas_gain = gain;
        sol.farkas.assign(lp.rows.size(), 0.0);
        for (size_t i = 0; i < lp.rows.size(); ++i)
          sol.farkas[i] = t.row_sign[t.user_row[i]] * rp.y[t.user_row[i]];
      }
      return sol;
    }
    tab.retire_artificials();
  }

  auto r2 = tab.run_phase(phase2_cost);
  sol.iterations = tab.iterations();
  if (r2 == SimplexTableau::PhaseResult::Unbounded) {
    sol.status = LpStatus::Unbounded;
    return sol;
  }
  if (r2 != SimplexTableau::PhaseResult::Optimal) {
    sol.status = LpStatus::NumericalFailure;
    return sol;
  }

  auto rp = refine(t, tab, phase2_cost);
  if (!rp.ok) {
    sol.status = LpStatus::NumericalFailure;
    return sol;
  }

  // Certificate residuals in the transformed space.
  double primal_res = 0.0;
  for (int i = 0; i < t.rows; ++i) {
    double ax = 0.0;
    for (int j = 0; j < t.cols; ++j) ax += t.a[i][j] * rp.z[j];
    primal_res = std::max(primal_res, std::abs(ax - t.b[i]));
  }
  double dual_res = 0.0, cs_res = 0.0;
  for (int j = 0; j < t.cols; ++j) {
    primal_res = std::max(primal_res, -rp.z[j]);
    double red = t.c[j];
    for (int i = 0; i < t.rows; ++i) red -= rp.y[i] * t.a[i][j];
    dual_res = std::max(dual_res, -red);
    cs_res = std::max(cs_res, std::abs(red * rp.z[j]));
  }
  double cz = 0.0, yb = 0.0;
  for (int j = 0; j < t.cols; ++j) cz += t.c[j] * rp.z[j];
  for (int i = 0; i < t.rows; ++i) yb += rp.y[i] * t.b[i];
  sol.primal_residual = primal_res;
  sol.dual_residual = dual_res;
  sol.cs_residual = cs_res;
  sol.gap = std::abs(cz - yb);

  if (primal_res > 1e-9 * t.scale || cs_res > 1e-8 * t.scale || sol.gap > 1e-8 * t.scale ||
      dual_res > 1e-7 * t.scale) {
    sol.status = LpStatus::NumericalFailure;
    return sol;
  }

  // Map back to the user's variables and sign conventions.
  sol.x.assign(lp.num_vars(), 0.0);
  for (int j = 0; j < lp.num_vars(); ++j) {
    const auto& r = t.vrule[j];
    if (r.kind == 0) sol.x[j] = r.off + rp.z[r.col];
    else if (r.kind == 1) sol.x[j] = r.off - rp.z[r.col];
    else sol.x[j] = rp.z[r.col] - rp.z[r.col2];
  }
  double user_obj = 0.0;
  for (int j = 0; j < lp.num_vars(); ++j) user_obj += lp.objective[j] * sol.x[j];
  sol.objective = user_obj;
  sol.dual_objective = t.obj_sign * (yb + t.obj_const);
  sol.dual.assign(lp.rows.size(), 0.0);
  for (size_t i = 0; i < lp.rows.size(); ++i)
    sol.dual[i] = t.obj_sign * t.row_sign[t.user_row[i]] * rp.y[t.user_row[i]];
  sol.status = LpStatus::Optimal;
  return sol;
}

}  // namespace freelip
