#include "evagg/bias.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace evagg {

namespace {

Eigen::MatrixXd covariate_differences(const StudyPool& pool, const TargetSpec& target) {
  const Eigen::MatrixXd X = pool.covariates();
  const Eigen::VectorXd x0 = target_x0(target);
  return X.rowwise() - x0.transpose();
}

const Eigen::MatrixXd pairwise_matrix(const ParameterSpace& space, const StudyPool& pool,
                                      const TargetSpec& target) {
  if (const auto* pw = std::get_if<LipschitzPairwise>(&space)) return pw->C;
  return pairwise_constants(std::get<LipschitzMetric>(space), pool, target);
}

}  // namespace

BiasFn::BiasFn(const ParameterSpace& space, const StudyPool& pool, const TargetSpec& target) {
  check_space_compatible(space, pool, target);
  K_ = pool.num_studies();
  if (const auto* box = std::get_if<MetaBox>(&space)) {
    mode_ = Mode::Box;
    diff_ = covariate_differences(pool, target);
    half_widths_ = Eigen::Map<const Eigen::VectorXd>(box->half_widths.data(),
                                                     static_cast<int>(box->half_widths.size()));
    return;
  }
  if (const auto* poly = std::get_if<MetaPolyhedron>(&space)) {
    mode_ = Mode::Polyhedron;
    diff_ = covariate_differences(pool, target);
    poly_A_ = poly->A;
    poly_c_ = poly->c;
    return;
  }

  const Eigen::MatrixXd C = pairwise_matrix(space, pool, target);
  const auto* metric = std::get_if<LipschitzMetric>(&space);
  if (metric != nullptr && pool.dim() == 1) {
    mode_ = Mode::Line;
    lip_const_ = metric->C;
    line_pos_.resize(K_ + 1);
    line_pos_[0] = target.x0[0];
    for (int k = 0; k < K_; ++k) line_pos_[k + 1] = pool.study(k).covariates[0];
    line_order_.resize(K_ + 1);
    std::iota(line_order_.begin(), line_order_.end(), 0);
    std::stable_sort(line_order_.begin(), line_order_.end(),
                     [this](int a, int b) { return line_pos_[a] < line_pos_[b]; });
    return;
  }

  mode_ = Mode::PairwiseDual;
  const int nodes = K_ + 1;
  const int ncols = nodes * (nodes - 1);
  pair_cost_ = Eigen::VectorXd(ncols);
  pair_balance_ = Eigen::MatrixXd::Zero(K_, ncols);
  pair_sense_.assign(K_, RowSense::Equal);
  int col = 0;
  for (int k = 0; k < nodes; ++k) {
    for (int l = 0; l < nodes; ++l) {
      if (l == k) continue;
      pair_cost_[col] = -C(k, l);  // maximize the negated transport cost
      if (k >= 1) pair_balance_(k - 1, col) += 1.0;
      if (l >= 1) pair_balance_(l - 1, col) -= 1.0;
      ++col;
    }
  }
}

double BiasFn::operator()(const Eigen::VectorXd& w) const {
  switch (mode_) {
    case Mode::Box: {
      const Eigen::VectorXd moments = diff_.transpose() * w;
      return half_widths_.dot(moments.cwiseAbs());
    }
    case Mode::Polyhedron: {
      LinearProgram lp;
      lp.objective = diff_.transpose() * w;
      lp.A = poly_A_;
      lp.rhs = poly_c_;
      const LpSolution sol = solve_lp(lp);
      if (sol.status == LpStatus::Unbounded)
        throw BiasUnboundedError("maximum bias is unbounded: slope set is unbounded in the "
                                 "weighted covariate direction");
      if (sol.status == LpStatus::Infeasible)
        throw Error("maximum bias: slope set is empty");
      return std::max(sol.value, 0.0);
    }
    case Mode::PairwiseDual: {
      const LpSolution sol = solve_nonnegative_lp(pair_cost_, pair_balance_, w, pair_sense_);
      if (sol.status != LpStatus::Optimal)
        throw BiasUnboundedError("maximum bias is unbounded under the pairwise constraints");
      return std::max(-sol.value, 0.0);
    }
    case Mode::Line: {
      // b(w) = C * integral of |cumulative mass| along the line, where the
      // target carries mass -1 and study k carries mass w_k.
      double acc = 0.0, total = 0.0;
      for (std::size_t i = 0; i + 1 < line_order_.size(); ++i) {
        const int node = line_order_[i];
        acc += node == 0 ? -1.0 : w[node - 1];
        total += std::abs(acc) * (line_pos_[line_order_[i + 1]] - line_pos_[node]);
      }
      return lip_const_ * total;
    }
  }
  return 0.0;
}

double max_bias(const WeightVector& w, const ParameterSpace& space, const StudyPool& pool,
                const TargetSpec& target) {
  if (w.size() != pool.num_studies())
    throw ValidationError("weight vector length does not match the pool");
  return BiasFn(space, pool, target)(w.as_eigen());
}

double signed_max_bias(BiasSign, const WeightVector& w, const ParameterSpace& space,
                       const StudyPool& pool, const TargetSpec& target) {
  // Symmetry of the space makes the worst-case bias identical for both
  // signs of the target effect.
  return max_bias(w, space, pool, target);
}

namespace detail {

LinearProgram lipschitz_primal_lp(const Eigen::MatrixXd& C, const Eigen::VectorXd& w) {
  const int nodes = static_cast<int>(C.rows());
  const int K = nodes - 1;
  const int npairs = nodes * (nodes - 1) / 2;
  LinearProgram lp;
  lp.objective = w;
  lp.A = Eigen::MatrixXd::Zero(2 * npairs, K);
  lp.rhs = Eigen::VectorXd(2 * npairs);
  int row = 0;
  for (int k = 0; k < nodes; ++k) {
    for (int l = k + 1; l < nodes; ++l) {
      // tau_k - tau_l <= C_kl and tau_l - tau_k <= C_kl with tau_0 fixed at 0.
      if (k >= 1) {
        lp.A(row, k - 1) = 1.0;
        lp.A(row + 1, k - 1) = -1.0;
      }
      lp.A(row, l - 1) -= 1.0;
      lp.A(row + 1, l - 1) += 1.0;
      lp.rhs[row] = C(k, l);
      lp.rhs[row + 1] = C(k, l);
      row += 2;
    }
  }
  return lp;
}

}  // namespace detail

}  // namespace evagg
