#include "evagg/lp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "evagg/types.hpp"

namespace evagg {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense tableau for the two-phase simplex. Rows 0..m-1 hold constraints,
// row m the phase-2 reduced costs, row m+1 the phase-1 reduced costs.
// Column layout: structural | slack/surplus | artificial | rhs.
class Tableau {
 public:
  Tableau(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& rhs,
          const std::vector<RowSense>& sense)
      : m_(static_cast<int>(A.rows())), n_(static_cast<int>(A.cols())) {
    int n_slack = 0, n_art = 0;
    std::vector<int> row_slack(m_, -1), row_art(m_, -1);
    std::vector<double> row_sign(m_, 1.0);
    for (int i = 0; i < m_; ++i) {
      const bool neg = rhs[i] < 0.0;
      row_sign[i] = neg ? -1.0 : 1.0;
      if (sense[i] == RowSense::LessEqual) {
        row_slack[i] = n_slack++;
        if (neg) row_art[i] = n_art++;  // becomes >= after sign flip
      } else {
        row_art[i] = n_art++;
      }
    }
    slack_begin_ = n_;
    art_begin_ = n_ + n_slack;
    cols_ = n_ + n_slack + n_art;
    rhs_col_ = cols_;
    t_.assign(static_cast<std::size_t>(m_ + 2) * (cols_ + 1), 0.0);
    basis_.assign(m_, -1);
    row_active_.assign(m_, true);

    for (int i = 0; i < m_; ++i) {
      double* row = row_ptr(i);
      for (int j = 0; j < n_; ++j) row[j] = row_sign[i] * A(i, j);
      row[rhs_col_] = row_sign[i] * rhs[i];
      if (row_slack[i] >= 0) row[slack_begin_ + row_slack[i]] = row_sign[i];
      if (row_art[i] >= 0) {
        row[art_begin_ + row_art[i]] = 1.0;
        basis_[i] = art_begin_ + row_art[i];
      } else {
        basis_[i] = slack_begin_ + row_slack[i];
      }
    }
    // Phase-2 costs: objective on structural columns; the initial basis has
    // zero cost there, so the row is already priced out.
    double* z = row_ptr(m_);
    for (int j = 0; j < n_; ++j) z[j] = c[j];
    // Phase-1 costs: maximize -sum(artificials). Price out the artificial
    // basis by adding their rows.
    double* p1 = row_ptr(m_ + 1);
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < art_begin_) continue;
      const double* row = row_ptr(i);
      for (int j = 0; j <= cols_; ++j) p1[j] += row[j];
    }
    for (int j = art_begin_; j < cols_; ++j) p1[j] = 0.0;
  }

  LpSolution solve() {
    // Phase 1: drive the artificial sum to zero.
    if (art_begin_ < cols_) {
      if (!iterate(m_ + 1, /*ban_artificials=*/false)) {
        // Unbounded phase-1 objective cannot occur; treat as failure.
        throw Error("simplex: phase-1 ratio test failed");
      }
      if (row_ptr(m_ + 1)[rhs_col_] > 1e-7 * (1.0 + rhs_scale()))
        return LpSolution{LpStatus::Infeasible, 0.0, {}};
      purge_artificials();
    }
    if (!iterate(m_, /*ban_artificials=*/true))
      return LpSolution{LpStatus::Unbounded, 0.0, {}};
    LpSolution sol;
    sol.status = LpStatus::Optimal;
    sol.x = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < m_; ++i)
      if (row_active_[i] && basis_[i] < n_) sol.x[basis_[i]] = row_ptr(i)[rhs_col_];
    return sol;
  }

 private:
  double* row_ptr(int i) { return t_.data() + static_cast<std::size_t>(i) * (cols_ + 1); }
  const double* row_ptr(int i) const {
    return t_.data() + static_cast<std::size_t>(i) * (cols_ + 1);
  }

  double rhs_scale() const {
    double s = 0.0;
    for (int i = 0; i < m_; ++i) s = std::max(s, std::abs(row_ptr(i)[rhs_col_]));
    return s;
  }

  // Bland's rule: entering column is the smallest index with positive
  // reduced cost; the leaving row breaks ratio ties by smallest basis index.
  bool iterate(int cost_row, bool ban_artificials) {
    const int col_limit = ban_artificials ? art_begin_ : cols_;
    const long iter_cap = 50L * (m_ + cols_ + 100);
    for (long iter = 0; iter < iter_cap; ++iter) {
      const double* cr = row_ptr(cost_row);
      int enter = -1;
      for (int j = 0; j < col_limit; ++j) {
        if (cr[j] > kPivotTol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      double best_ratio = kInf;
      for (int i = 0; i < m_; ++i) {
        if (!row_active_[i]) continue;
        const double a = row_ptr(i)[enter];
        if (a <= kPivotTol) continue;
        const double ratio = row_ptr(i)[rhs_col_] / a;
        if (ratio < best_ratio - 1e-12 ||
            (ratio < best_ratio + 1e-12 && (leave < 0 || basis_[i] < basis_[leave]))) {
          best_ratio = ratio;
          leave = i;
        }
      }
      if (leave < 0) return false;  // unbounded in the entering direction
      pivot(leave, enter);
    }
    throw Error("simplex: iteration limit exceeded");
  }

  void pivot(int prow, int pcol) {
    double* pr = row_ptr(prow);
    const double piv = pr[pcol];
    for (int j = 0; j <= cols_; ++j) pr[j] /= piv;
    pr[pcol] = 1.0;
    for (int i = 0; i < m_ + 2; ++i) {
      if (i == prow) continue;
      double* row = row_ptr(i);
      const double f = row[pcol];
      if (f == 0.0) continue;
      for (int j = 0; j <= cols_; ++j) row[j] -= f * pr[j];
      row[pcol] = 0.0;
    }
    basis_[prow] = pcol;
  }

  // After phase 1, pivot remaining artificials out of the basis; rows that
  // cannot be pivoted are redundant and are deactivated.
  void purge_artificials() {
    for (int i = 0; i < m_; ++i) {
      if (!row_active_[i] || basis_[i] < art_begin_) continue;
      const double* row = row_ptr(i);
      int pcol = -1;
      for (int j = 0; j < art_begin_; ++j) {
        if (std::abs(row[j]) > kPivotTol) {
          pcol = j;
          break;
        }
      }
      if (pcol >= 0)
        pivot(i, pcol);
      else
        row_active_[i] = false;
    }
  }

  int m_, n_;
  int cols_ = 0, slack_begin_ = 0, art_begin_ = 0, rhs_col_ = 0;
  std::vector<double> t_;
  std::vector<int> basis_;
  std::vector<bool> row_active_;
};

}  // namespace

LpSolution solve_nonnegative_lp(const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                                const Eigen::VectorXd& rhs,
                                const std::vector<RowSense>& sense) {
  if (A.rows() != rhs.size() || A.cols() != c.size() ||
      sense.size() != static_cast<std::size_t>(A.rows()))
    throw ValidationError("lp: inconsistent dimensions");
  Tableau tab(c, A, rhs, sense);
  LpSolution sol = tab.solve();
  if (sol.status == LpStatus::Optimal) sol.value = c.dot(sol.x);
  return sol;
}

LpSolution solve_lp(const LinearProgram& lp) {
  const int n = static_cast<int>(lp.objective.size());
  const int m = static_cast<int>(lp.A.rows());
  if (lp.A.cols() != n || lp.rhs.size() != m)
    throw ValidationError("lp: inconsistent dimensions");
  if (!lp.objective.allFinite() || !lp.A.allFinite() || !lp.rhs.allFinite())
    throw ValidationError("lp: objective, matrix, and rhs must be finite");
  const bool has_bounds = lp.lower.size() > 0 || lp.upper.size() > 0;
  if (has_bounds && (lp.lower.size() != n || lp.upper.size() != n))
    throw ValidationError("lp: bounds must be empty or length n");

  auto lo_of = [&](int j) { return has_bounds ? lp.lower[j] : -kInf; };
  auto up_of = [&](int j) { return has_bounds ? lp.upper[j] : kInf; };

  // Map each variable onto nonnegative columns:
  //   free        x = y+ - y-
  //   lo finite   x = lo + y            (extra row y <= hi - lo when boxed)
  //   hi only     x = hi - y
  enum class Kind { Free, Shifted, Mirrored };
  struct VarMap {
    Kind kind;
    int col;     // first column
    double base; // additive shift
  };
  std::vector<VarMap> vmap(n);
  int ncols = 0;
  int nbox = 0;
  for (int j = 0; j < n; ++j) {
    const double lo = lo_of(j), up = up_of(j);
    if (lo > up) return LpSolution{LpStatus::Infeasible, 0.0, {}};
    if (std::isfinite(lo)) {
      vmap[j] = {Kind::Shifted, ncols, lo};
      ncols += 1;
      if (std::isfinite(up)) ++nbox;
    } else if (std::isfinite(up)) {
      vmap[j] = {Kind::Mirrored, ncols, up};
      ncols += 1;
    } else {
      vmap[j] = {Kind::Free, ncols, 0.0};
      ncols += 2;
    }
  }

  Eigen::MatrixXd A2 = Eigen::MatrixXd::Zero(m + nbox, ncols);
  Eigen::VectorXd rhs2(m + nbox);
  Eigen::VectorXd c2 = Eigen::VectorXd::Zero(ncols);
  std::vector<RowSense> sense2(m + nbox, RowSense::LessEqual);

  auto emit = [&](int row, int j, double coef) {
    const VarMap& vm = vmap[j];
    switch (vm.kind) {
      case Kind::Free:
        A2(row, vm.col) += coef;
        A2(row, vm.col + 1) -= coef;
        break;
      case Kind::Shifted:
        A2(row, vm.col) += coef;
        break;
      case Kind::Mirrored:
        A2(row, vm.col) -= coef;
        break;
    }
  };

  for (int i = 0; i < m; ++i) {
    double base = 0.0;
    for (int j = 0; j < n; ++j) {
      const double a = lp.A(i, j);
      if (a == 0.0) continue;
      emit(i, j, a);
      base += a * vmap[j].base;
    }
    rhs2[i] = lp.rhs[i] - base;
  }
  int row = m;
  for (int j = 0; j < n; ++j) {
    if (vmap[j].kind == Kind::Shifted && std::isfinite(up_of(j))) {
      A2(row, vmap[j].col) = 1.0;
      rhs2[row] = up_of(j) - lo_of(j);
      ++row;
    }
  }
  for (int j = 0; j < n; ++j) {
    const double cj = lp.objective[j];
    if (cj == 0.0) continue;
    const VarMap& vm = vmap[j];
    switch (vm.kind) {
      case Kind::Free:
        c2[vm.col] += cj;
        c2[vm.col + 1] -= cj;
        break;
      case Kind::Shifted:
        c2[vm.col] += cj;
        break;
      case Kind::Mirrored:
        c2[vm.col] -= cj;
        break;
    }
  }

  LpSolution inner = solve_nonnegative_lp(c2, A2, rhs2, sense2);
  if (inner.status != LpStatus::Optimal) return LpSolution{inner.status, 0.0, {}};

  LpSolution sol;
  sol.status = LpStatus::Optimal;
  sol.x = Eigen::VectorXd(n);
  for (int j = 0; j < n; ++j) {
    const VarMap& vm = vmap[j];
    switch (vm.kind) {
      case Kind::Free:
        sol.x[j] = inner.x[vm.col] - inner.x[vm.col + 1];
        break;
      case Kind::Shifted:
        sol.x[j] = vm.base + inner.x[vm.col];
        break;
      case Kind::Mirrored:
        sol.x[j] = vm.base - inner.x[vm.col];
        break;
    }
  }
  sol.value = lp.objective.dot(sol.x);
  return sol;
}

}  // namespace evagg
