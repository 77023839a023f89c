#include "evagg/evaluate.hpp"

#include <algorithm>
#include <cmath>

#include "evagg/bias.hpp"
#include "evagg/eta.hpp"
#include "evagg/normal.hpp"

namespace evagg {

RegretProfile max_regret_of(const WeightVector& w, const StudyPool& pool,
                            const TargetSpec& target, const ParameterSpace& space) {
  if (w.size() != pool.num_studies())
    throw ValidationError("weight vector length does not match the pool");
  const double b = max_bias(w, space, pool, target);
  const double s = sd_of(w, pool);
  return RegretProfile{b, s, s * eta(b / s)};
}

double pointwise_regret(const WeightVector& w, const Eigen::VectorXd& tau_full,
                        const StudyPool& pool) {
  if (tau_full.size() != pool.num_studies() + 1)
    throw ValidationError("effect vector must have K+1 entries with the target first");
  if (!tau_full.allFinite()) throw ValidationError("effect vector must be finite");
  const double tau0 = tau_full[0];
  if (tau0 == 0.0) return 0.0;
  const double s = sd_of(w, pool);
  const double agg = w.as_eigen().dot(tau_full.tail(pool.num_studies()));
  const double sign = tau0 > 0.0 ? 1.0 : -1.0;
  return std::abs(tau0) * normal_cdf(-sign * agg / s);
}

Decision decide(const StudyPool& pool, const TargetSpec& target, const WeightVector& w,
                const std::string& rule_name) {
  if (w.size() != pool.num_studies())
    throw ValidationError("weight vector length does not match the pool");
  Decision d;
  d.rule_name = rule_name;
  d.weights = w;
  d.aggregate = w.as_eigen().dot(pool.estimates()) - target.cost;
  d.adopt = d.aggregate >= 0.0;
  return d;
}

ComparisonReport compare_rules(const StudyPool& pool, const TargetSpec& target,
                               const ParameterSpace& space, const SolverConfig& cfg,
                               const CompareOptions& options) {
  if (options.rules.empty()) throw ValidationError("no rules requested");
  for (const auto& r : options.rules)
    if (r != "minimax" && r != "mse" && r != "ols" && r != "hb")
      throw ValidationError("unknown rule: " + r);

  ComparisonReport report;
  const SolveResult minimax = solve_minimax_regret(pool, target, space, cfg);
  const double reference = minimax.profile.max_regret;

  const int K = pool.num_studies();
  for (int k = 0; k < K; ++k)
    if (minimax.weights[k] >= 1.0 / K - 1e-12)
      report.heavy_ids.push_back(pool.study(k).id);

  auto add_rule = [&](const std::string& name) {
    RuleOutcome out;
    out.rule = name;
    try {
      WeightVector w = [&] {
        if (name == "minimax") return minimax.weights;
        if (name == "mse") return solve_minimax_mse(pool, target, space, cfg).weights;
        if (name == "ols") return ols_weights(pool, target);
        if (!options.prior) throw ValidationError("hierarchical Bayes rule needs a prior");
        return hb_weights(pool, target, *options.prior);
      }();
      out.weights = w;
      out.profile = max_regret_of(w, pool, target, space);
      const Decision d = decide(pool, target, w, name);
      out.aggregate = d.aggregate;
      out.adopt = d.adopt;
      out.ratio = out.profile->max_regret / reference;
      out.ok = true;
    } catch (const Error& e) {
      out.error = e.what();
    }
    return out;
  };

  bool have_minimax = false;
  for (const auto& name : options.rules) {
    report.rules.push_back(add_rule(name));
    have_minimax = have_minimax || name == "minimax";
  }
  if (!have_minimax) report.rules.insert(report.rules.begin(), add_rule("minimax"));
  return report;
}

std::vector<double> default_cv_grid() {
  std::vector<double> grid;
  const double lo = std::log10(0.001), hi = std::log10(1.0);
  for (int i = 0; i < 21; ++i) grid.push_back(std::pow(10.0, lo + (hi - lo) * i / 20.0));
  return grid;
}

CvResult cross_validate_C(const StudyPool& pool, const std::vector<double>& grid,
                          const SolverConfig& cfg) {
  if (grid.empty()) throw ValidationError("cross-validation grid is empty");
  const int K = pool.num_studies();
  if (K < 2) throw ValidationError("cross-validation needs at least two studies");

  CvResult result;
  bool have_best = false;
  double best_score = 0.0;
  for (const double C : grid) {
    CvPoint point;
    point.C = C;
    try {
      const LipschitzMetric space(C);
      double score = 0.0;
      for (int k = 0; k < K; ++k) {
        std::vector<Study> rest;
        rest.reserve(K - 1);
        for (int j = 0; j < K; ++j)
          if (j != k) rest.push_back(pool.study(j));
        const StudyPool fold(std::move(rest), pool.covariate_names());
        const TargetSpec fold_target{pool.study(k).covariates, 0.0};
        const SolveResult sol = solve_minimax_regret(fold, fold_target, space, cfg);
        const bool adopt = sol.weights.as_eigen().dot(fold.estimates()) >= 0.0;
        if (adopt) score += pool.study(k).estimate;
      }
      point.score = score / K;
      point.ok = true;
    } catch (const Error& e) {
      point.error = e.what();
    }
    if (point.ok) {
      const bool better = !have_best || point.score > best_score + 1e-12 ||
                          (std::abs(point.score - best_score) <= 1e-12 && C < result.best_C);
      if (better) {
        result.best_C = C;
        best_score = point.score;
        have_best = true;
      }
    }
    result.points.push_back(std::move(point));
  }
  if (!have_best) throw NonConvergenceError("every grid point failed during cross-validation");
  return result;
}

DirectionalDiagnostic directional_diagnostic(const WeightVector& w, const WeightVector& theta,
                                             const StudyPool& pool, const TargetSpec& target,
                                             const ParameterSpace& space, double h) {
  if (!(h > 0.0)) throw ValidationError("step size must be positive");
  if (theta.size() != w.size()) throw ValidationError("direction length mismatch");
  const RegretProfile at = max_regret_of(w, pool, target, space);
  const Eigen::VectorXd moved = (1.0 - h) * w.as_eigen() + h * theta.as_eigen();
  const RegretProfile shifted = max_regret_of(WeightVector(moved), pool, target, space);
  return DirectionalDiagnostic{(shifted.max_regret - at.max_regret) / h,
                               (shifted.bias - at.bias) / h, (shifted.sd - at.sd) / h};
}

}  // namespace evagg
