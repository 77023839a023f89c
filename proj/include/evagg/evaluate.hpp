#ifndef EVAGG_EVALUATE_HPP
#define EVAGG_EVALUATE_HPP

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evagg/solvers.hpp"
#include "evagg/types.hpp"

namespace evagg {

// Worst-case regret profile of the rule with weights w: bias, standard
// deviation, and s(w) * eta(b(w)/s(w)) with the exact eta.
RegretProfile max_regret_of(const WeightVector& w, const StudyPool& pool,
                            const TargetSpec& target, const ParameterSpace& space);

// Regret at one effect vector (index 0 is the target effect):
// |tau_0| Phi(-sgn(tau_0) sum_k w_k tau_k / s(w)).
double pointwise_regret(const WeightVector& w, const Eigen::VectorXd& tau_full,
                        const StudyPool& pool);

// Aggregates the cost-netted estimates and adopts on a nonnegative sign.
Decision decide(const StudyPool& pool, const TargetSpec& target, const WeightVector& w,
                const std::string& rule_name = "custom");

struct RuleOutcome {
  std::string rule;
  bool ok = false;
  std::string error;  // set when ok is false
  std::optional<WeightVector> weights;
  std::optional<RegretProfile> profile;
  double aggregate = 0.0;
  bool adopt = false;
  double ratio = 0.0;  // max regret relative to the minimax rule
};

struct ComparisonReport {
  std::vector<RuleOutcome> rules;
  std::vector<std::string> heavy_ids;  // studies with minimax weight >= 1/K
};

struct CompareOptions {
  std::vector<std::string> rules{"minimax", "mse", "ols", "hb"};
  std::optional<HBPrior> prior;  // required when "hb" is requested
};

// Solves every requested rule, profiles each under the same space, and
// reports regret ratios against the minimax rule (which is always solved).
// Per-rule failures are recorded in the entry rather than thrown.
ComparisonReport compare_rules(const StudyPool& pool, const TargetSpec& target,
                               const ParameterSpace& space, const SolverConfig& cfg = {},
                               const CompareOptions& options = {});

struct CvPoint {
  double C = 0.0;
  double score = 0.0;
  bool ok = false;
  std::string error;
};

struct CvResult {
  double best_C = 0.0;
  std::vector<CvPoint> points;
};

// Leave-one-out cross-validation of the Lipschitz constant: each held-out
// study becomes the target, the minimax rule is solved on the rest, and the
// candidate C is scored by the average realized welfare tau_hat_k * d_k.
// Ties resolve to the smallest C.
CvResult cross_validate_C(const StudyPool& pool, const std::vector<double>& grid,
                          const SolverConfig& cfg = {});

// Log-spaced 21-point grid on [0.001, 1].
std::vector<double> default_cv_grid();

struct DirectionalDiagnostic {
  double dregret = 0.0;
  double dbias = 0.0;
  double dsd = 0.0;
};

// One-sided finite differences of max regret, bias, and sd along the
// perturbation (1-h) w + h theta.
DirectionalDiagnostic directional_diagnostic(const WeightVector& w, const WeightVector& theta,
                                             const StudyPool& pool, const TargetSpec& target,
                                             const ParameterSpace& space, double h);

}  // namespace evagg

#endif  // EVAGG_EVALUATE_HPP
