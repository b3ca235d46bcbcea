// Dense two-phase primal simplex for small linear programs:
//
//   minimize c'x   subject to   A x (<=|=|>=) b,   x >= 0.
//
// Full-tableau implementation with Dantzig pricing and a Bland fallback after
// a degenerate streak, which is enough for the epigraph LPs this project
// solves (a few hundred rows/columns, well scaled). Free variables must be
// split by the caller.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace cardport {

struct LpProblem {
  Eigen::MatrixXd a;      // m x n
  Eigen::VectorXd b;      // m
  Eigen::VectorXd c;      // n
  std::vector<char> rel;  // one of '<', '=', '>' per row (inequalities are non-strict)
};

struct LpResult {
  enum class Status { kOptimal, kInfeasible, kUnbounded, kIterLimit };
  Status status = Status::kIterLimit;
  Eigen::VectorXd x;
  double value = 0.0;
  int pivots = 0;
};

namespace detail {

class SimplexTableau {
 public:
  SimplexTableau(const LpProblem& prob, double eps) : eps_(eps) {
    const int m = static_cast<int>(prob.a.rows());
    const int n = static_cast<int>(prob.a.cols());
    if (prob.b.size() != m || static_cast<int>(prob.rel.size()) != m || prob.c.size() != n)
      throw std::invalid_argument("solve_lp: inconsistent problem dimensions");
    n_struct_ = n;

    Eigen::MatrixXd a = prob.a;
    Eigen::VectorXd b = prob.b;
    std::vector<char> rel = prob.rel;
    // prefer '<=' rows (their slack can enter the initial basis), then make b >= 0
    for (int i = 0; i < m; ++i) {
      if (rel[i] == '>') {
        a.row(i) = -a.row(i);
        b[i] = -b[i];
        rel[i] = '<';
      }
      if (b[i] < 0.0) {
        a.row(i) = -a.row(i);
        b[i] = -b[i];
        rel[i] = (rel[i] == '<') ? '>' : rel[i];
      }
    }
    int n_slack = 0, n_art = 0;
    for (int i = 0; i < m; ++i) {
      if (rel[i] != '=') ++n_slack;
      if (rel[i] != '<') ++n_art;
    }
    art_start_ = n + n_slack;
    const int total = n + n_slack + n_art;
    tab_.setZero(m, total);
    tab_.leftCols(n) = a;
    rhs_ = b;
    basis_.resize(m);
    int slack = n, art = art_start_;
    for (int i = 0; i < m; ++i) {
      if (rel[i] == '<') {
        tab_(i, slack) = 1.0;
        basis_[i] = slack++;
      } else if (rel[i] == '>') {
        tab_(i, slack) = -1.0;
        ++slack;
        tab_(i, art) = 1.0;
        basis_[i] = art++;
      } else {
        tab_(i, art) = 1.0;
        basis_[i] = art++;
      }
    }
  }

  int rows() const { return static_cast<int>(tab_.rows()); }
  int cols() const { return static_cast<int>(tab_.cols()); }

  /// Reduced costs and objective value for the given column costs.
  void price(const Eigen::VectorXd& cost, Eigen::VectorXd& reduced, double& value) const {
    reduced = cost;
    value = 0.0;
    for (int i = 0; i < rows(); ++i) {
      const double cb = cost[basis_[i]];
      if (cb != 0.0) {
        reduced -= cb * tab_.row(i).transpose();
        value += cb * rhs_[i];
      }
    }
  }

  /// Runs simplex iterations for the given cost vector; `allowed` columns may
  /// enter. Returns kOptimal/kUnbounded/kIterLimit.
  LpResult::Status iterate(const Eigen::VectorXd& cost, int first_banned_col, int max_pivots, int& pivots) {
    Eigen::VectorXd reduced;
    double value = 0.0;
    price(cost, reduced, value);
    int degenerate_streak = 0;
    bool bland = false;
    int since_refresh = 0;
    while (true) {
      int enter = -1;
      double best = -eps_;
      for (int j = 0; j < first_banned_col; ++j) {
        if (reduced[j] < best) {
          enter = j;
          if (bland) break;  // first improving index
          best = reduced[j];
        }
      }
      if (enter < 0) return LpResult::Status::kOptimal;
      // ratio test; ties go to the smallest basis index (anti-cycling)
      int leave = -1;
      double best_ratio = 0.0;
      for (int i = 0; i < rows(); ++i) {
        const double piv = tab_(i, enter);
        if (piv > eps_) {
          const double ratio = rhs_[i] / piv;
          if (leave < 0 || ratio < best_ratio - 1e-12 ||
              (ratio < best_ratio + 1e-12 && basis_[i] < basis_[leave])) {
            leave = i;
            best_ratio = ratio;
          }
        }
      }
      if (leave < 0) return LpResult::Status::kUnbounded;
      pivot(leave, enter, reduced);
      if (++pivots >= max_pivots) return LpResult::Status::kIterLimit;
      const double new_value = basic_value(cost);
      if (value - new_value < 1e-14 * (1.0 + std::abs(value))) {
        if (++degenerate_streak > 40) bland = true;
      } else {
        degenerate_streak = 0;
        bland = false;
      }
      value = new_value;
      if (++since_refresh >= 256) {  // control drift in the incremental reduced costs
        double ignored;
        price(cost, reduced, ignored);
        since_refresh = 0;
      }
    }
  }

  void pivot(int row, int col, Eigen::VectorXd& reduced) {
    const double piv = tab_(row, col);
    tab_.row(row) /= piv;
    rhs_[row] /= piv;
    tab_(row, col) = 1.0;  // guard against rounding on the pivot itself
    for (int i = 0; i < rows(); ++i) {
      if (i == row) continue;
      const double f = tab_(i, col);
      if (f != 0.0) {
        tab_.row(i) -= f * tab_.row(row);
        tab_(i, col) = 0.0;
        rhs_[i] -= f * rhs_[row];
        if (rhs_[i] < 0.0 && rhs_[i] > -1e-11) rhs_[i] = 0.0;
      }
    }
    const double f = reduced[col];
    if (f != 0.0) {
      reduced -= f * tab_.row(row).transpose();
      reduced[col] = 0.0;
    }
    basis_[row] = col;
  }

  double basic_value(const Eigen::VectorXd& cost) const {
    double v = 0.0;
    for (int i = 0; i < rows(); ++i) v += cost[basis_[i]] * rhs_[i];
    return v;
  }

  /// Pivot basic artificials out where possible (rows left with an artificial
  /// basis column are redundant and stay at value zero).
  void drive_out_artificials() {
    for (int i = 0; i < rows(); ++i) {
      if (basis_[i] < art_start_) continue;
      int col = -1;
      for (int j = 0; j < art_start_; ++j)
        if (std::abs(tab_(i, j)) > 1e-7) {
          col = j;
          break;
        }
      if (col >= 0) {
        Eigen::VectorXd dummy = Eigen::VectorXd::Zero(cols());
        pivot(i, col, dummy);
      }
    }
  }

  Eigen::VectorXd solution() const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n_struct_);
    for (int i = 0; i < rows(); ++i)
      if (basis_[i] < n_struct_) x[basis_[i]] = rhs_[i];
    return x;
  }

  int n_struct_ = 0;
  int art_start_ = 0;

 private:
  double eps_;
  Eigen::MatrixXd tab_;
  Eigen::VectorXd rhs_;
  std::vector<int> basis_;
};

}  // namespace detail

inline LpResult solve_lp(const LpProblem& prob, int max_pivots = 0, double eps = 1e-9) {
  detail::SimplexTableau tableau(prob, eps);
  if (max_pivots <= 0) max_pivots = 2000 + 60 * (tableau.rows() + tableau.cols());

  LpResult res;
  res.x = Eigen::VectorXd::Zero(prob.c.size());

  // Phase 1: minimize the artificial sum.
  if (tableau.art_start_ < tableau.cols()) {
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(tableau.cols());
    phase1.tail(tableau.cols() - tableau.art_start_).setOnes();
    const auto status = tableau.iterate(phase1, tableau.art_start_, max_pivots, res.pivots);
    if (status == LpResult::Status::kIterLimit) {
      res.status = status;
      return res;
    }
    if (tableau.basic_value(phase1) > 1e-7) {
      res.status = LpResult::Status::kInfeasible;
      return res;
    }
    tableau.drive_out_artificials();
  }

  // Phase 2: the real objective; artificials are banned from entering.
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(tableau.cols());
  cost.head(tableau.n_struct_) = prob.c;
  res.status = tableau.iterate(cost, tableau.art_start_, max_pivots, res.pivots);
  if (res.status == LpResult::Status::kUnbounded || res.status == LpResult::Status::kIterLimit) return res;
  res.x = tableau.solution();
  res.value = prob.c.dot(res.x);
  res.status = LpResult::Status::kOptimal;
  return res;
}

}  // namespace cardport
