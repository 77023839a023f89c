#ifndef EVAGG_BIAS_HPP
#define EVAGG_BIAS_HPP

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "evagg/lp.hpp"
#include "evagg/types.hpp"

namespace evagg {

enum class BiasSign { Positive, Negative };

// Maximum bias b(w) = max { sum_k w_k tau_k : tau in space, tau_0 = 0 }.
// Throws BiasUnboundedError when the space leaves b(w) unbounded.
double max_bias(const WeightVector& w, const ParameterSpace& space, const StudyPool& pool,
                const TargetSpec& target);

// For the symmetric, translation-invariant spaces handled here the signed
// maximum bias coincides with b(w) for both signs.
double signed_max_bias(BiasSign sign, const WeightVector& w, const ParameterSpace& space,
                       const StudyPool& pool, const TargetSpec& target);

// Reusable evaluator with the per-space structure (difference matrices,
// pair layouts, sort orders) built once. Weight optimizers call this in
// their inner loop.
class BiasFn {
 public:
  BiasFn(const ParameterSpace& space, const StudyPool& pool, const TargetSpec& target);
  BiasFn(const BiasFn&) = delete;
  BiasFn& operator=(const BiasFn&) = delete;
  BiasFn(BiasFn&&) = default;

  double operator()(const Eigen::VectorXd& w) const;

 private:
  enum class Mode { Box, Polyhedron, PairwiseDual, Line };
  Mode mode_;
  int K_ = 0;

  // Box / Polyhedron: D = covariates - 1 x0' (K x d_x).
  Eigen::MatrixXd diff_;
  Eigen::VectorXd half_widths_;
  Eigen::MatrixXd poly_A_;
  Eigen::VectorXd poly_c_;

  // PairwiseDual: minimum-cost reallocation form of the Lipschitz bias LP.
  // Columns are ordered node pairs (flow k -> l at cost C_kl); rows balance
  // each study node; the target node 0 absorbs the unit mass.
  Eigen::VectorXd pair_cost_;
  Eigen::MatrixXd pair_balance_;
  std::vector<RowSense> pair_sense_;

  // Line: scalar-covariate Lipschitz constants admit a closed form.
  double lip_const_ = 0.0;
  std::vector<double> line_pos_;   // sorted node positions, node 0 = target
  std::vector<int> line_order_;    // node index at each sorted slot
};

namespace detail {

// Direct LP over (tau_1..tau_K) with the full two-sided pairwise constraint
// set; reference route used to validate the faster evaluators.
LinearProgram lipschitz_primal_lp(const Eigen::MatrixXd& C, const Eigen::VectorXd& w);

}  // namespace detail

}  // namespace evagg

#endif  // EVAGG_BIAS_HPP
