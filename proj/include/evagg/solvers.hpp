#ifndef EVAGG_SOLVERS_HPP
#define EVAGG_SOLVERS_HPP

#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "evagg/types.hpp"

namespace evagg {

struct SolverConfig {
  int multistart_count = 8;    // deterministic starts plus seeded jitters
  double objective_tol = 1e-7; // convergence and tie tolerance
  int max_iters = 6000;        // simplex-search iteration budget per start
  std::uint64_t seed = 20260809;
};

struct SolveResult {
  WeightVector weights;
  RegretProfile profile;  // recomputed with the exact eta at the solution
  double objective = 0.0; // value of the minimized criterion
};

// Weights minimizing the worst-case regret s(w) * eta(b(w)/s(w)).
SolveResult solve_minimax_regret(const StudyPool& pool, const TargetSpec& target,
                                 const ParameterSpace& space, const SolverConfig& cfg = {});

// Weights minimizing the worst-case mean squared error b^2(w) + s^2(w).
SolveResult solve_minimax_mse(const StudyPool& pool, const TargetSpec& target,
                              const ParameterSpace& space, const SolverConfig& cfg = {});

// Plug-in weights of the intercept-augmented least squares fit evaluated at
// the target covariates; they sum to one by construction.
WeightVector ols_weights(const StudyPool& pool, const TargetSpec& target);

// Gaussian prior over the meta-regression coefficients (beta0, beta')'.
struct MetaGaussianPrior {
  Eigen::MatrixXd sigma;  // (d_x + 1) x (d_x + 1), SPD
};

// Exponential-kernel prior over the effects themselves:
// Cov(tau_k, tau_l) = variance * exp(-||x_k - x_l|| / lengthscale).
struct KernelGaussianPrior {
  double variance = 10.0;
  double lengthscale = 1.0;
};

using HBPrior = std::variant<MetaGaussianPrior, KernelGaussianPrior>;

// Normalized posterior-mean weights of the hierarchical Bayes rule.
WeightVector hb_weights(const StudyPool& pool, const TargetSpec& target, const HBPrior& prior);

// Denominator convention for the average pair-exceedance probability.
enum class PairNormalizer {
  HalfKTimesKPlus1,  // K(K+1)/2, as printed in the calibration display
  ObservedPairs,     // the K(K-1)/2 pairs the sum actually ranges over
};

// Average over study pairs of P(|tau_k - tau_l| > C ||x_k - x_l||) under the
// kernel prior with the given lengthscale.
double kernel_pair_exceedance(const StudyPool& pool, double C, double variance,
                              double lengthscale,
                              PairNormalizer norm = PairNormalizer::HalfKTimesKPlus1);

// Solves kernel_pair_exceedance(...) = 1 - coverage for the lengthscale by
// bisection on its logarithm.
double calibrate_kernel_lengthscale(const StudyPool& pool, double C, double coverage = 0.95,
                                    double variance = 10.0,
                                    PairNormalizer norm = PairNormalizer::HalfKTimesKPlus1);

// Precision-weighted (1/se^2) least squares coefficients (intercept first);
// a helper for choosing Lipschitz constants from fitted slopes.
Eigen::VectorXd wls_coefficients(const StudyPool& pool);

namespace detail {

// Minimizes f over { w : sum w = 1 } from the given starts; used by the
// regret, MSE, and refined-region solvers. Throws NonConvergenceError when
// no start converges within the iteration budget.
Eigen::VectorXd minimize_over_weights(const std::function<double(const Eigen::VectorXd&)>& f,
                                      const std::vector<Eigen::VectorXd>& starts,
                                      const SolverConfig& cfg);

// Deterministic start list shared by the weight solvers: uniform,
// inverse-variance, least-squares plug-in when defined, and the unit vector
// of every study (the best of these seeds the search; all are compared).
std::vector<Eigen::VectorXd> standard_starts(const StudyPool& pool, const TargetSpec& target);

}  // namespace detail

}  // namespace evagg

#endif  // EVAGG_SOLVERS_HPP
