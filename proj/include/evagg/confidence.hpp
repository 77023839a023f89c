#ifndef EVAGG_CONFIDENCE_HPP
#define EVAGG_CONFIDENCE_HPP

#include <variant>

#include <Eigen/Dense>

#include "evagg/bias.hpp"
#include "evagg/solvers.hpp"
#include "evagg/types.hpp"

namespace evagg {

// Per-study interval constraints tau_k in [lower_k, upper_k] intersected
// with the base parameter space.
struct HyperRectangleRegion {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  ParameterSpace base;
  double alpha = 0.0;
  double z = 0.0;  // half-width multiplier z_{alpha,K}

  HyperRectangleRegion(Eigen::VectorXd lower_in, Eigen::VectorXd upper_in,
                       ParameterSpace base_in, double alpha_in, double z_in);
};

// Confidence ellipsoid for the meta-regression slope,
// (beta_hat - beta)' S^{-1} (beta_hat - beta) <= chi.
struct MetaEllipsoidRegion {
  Eigen::VectorXd beta_hat;
  Eigen::MatrixXd S;
  double chi = 0.0;
  double alpha = 0.0;

  MetaEllipsoidRegion(Eigen::VectorXd beta_hat_in, Eigen::MatrixXd S_in, double chi_in,
                      double alpha_in);
};

using ConfidenceRegion = std::variant<HyperRectangleRegion, MetaEllipsoidRegion>;

// z such that P(|Z| <= z) = (1 - alpha)^(1/K) for a standard normal Z.
double normal_halfwidth_quantile(double alpha, int K);

// tau_k in [tau_hat_k - se_k z, tau_hat_k + se_k z], intersected with the
// base space. Throws EmptyRegionError when the intersection is empty.
HyperRectangleRegion hyperrectangle_region(const StudyPool& pool, const ParameterSpace& space,
                                           const TargetSpec& target, double alpha);

// Slope confidence ellipsoid from the least-squares fit of the estimates on
// (1, x): beta_hat is the slope block, S the slope block of the sandwich
// (X'X)^{-1} X' Sigma X (X'X)^{-1}, chi the (1-alpha) chi-square quantile.
MetaEllipsoidRegion meta_ellipsoid_region(const StudyPool& pool, const ParameterSpace& space,
                                          double alpha);

// Sign-specific worst-case bias over the ellipsoid,
//   positive branch: +X0(w)' beta_hat + sqrt(chi X0(w)' S X0(w))
//   negative branch: -X0(w)' beta_hat + sqrt(chi X0(w)' S X0(w))
// with X0(w) = sum_k w_k (x0 - x_k).
double signed_max_bias(BiasSign sign, const WeightVector& w, const MetaEllipsoidRegion& region,
                       const StudyPool& pool, const TargetSpec& target);

// Worst-case bias of the rectangle region at a fixed target effect t (the
// rectangle value genuinely varies with t, not just its sign).
double signed_max_bias(double t, const WeightVector& w, const HyperRectangleRegion& region,
                       const StudyPool& pool, const TargetSpec& target);

// Worst-case regret of the rule with weights w over the data-driven region:
// the ellipsoid case combines the two closed-form branches; the rectangle
// case maximizes |t| Phi((-|t| + b~(t,w)) / s(w)) over the feasible target
// effects t by a 512-point grid with a golden-section polish.
double refined_max_regret(const WeightVector& w, const ConfidenceRegion& region,
                          const StudyPool& pool, const TargetSpec& target);

struct RefinedSolveResult {
  WeightVector weights;
  double max_regret = 0.0;
};

// Minimizes the refined maximum regret over weight vectors summing to one.
RefinedSolveResult solve_refined_minimax(const StudyPool& pool, const TargetSpec& target,
                                         const ConfidenceRegion& region,
                                         const SolverConfig& cfg = {});

// Identified set of the target effect when the study effects are treated as
// exactly known (sigma = 0). Throws EmptyIdentifiedSetError when the pinned
// effects contradict the space.
IdentifiedSetBounds identified_set(const StudyPool& pool, const ParameterSpace& space,
                                   const TargetSpec& target);

// Adopts iff -lower <= upper; ties adopt. The reported aggregate is the
// interval midpoint, so the sign convention matches the other decisions.
Decision identified_set_rule(const StudyPool& pool, const ParameterSpace& space,
                             const TargetSpec& target);

}  // namespace evagg

#endif  // EVAGG_CONFIDENCE_HPP
