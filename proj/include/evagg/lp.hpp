#ifndef EVAGG_LP_HPP
#define EVAGG_LP_HPP

#include <vector>

#include <Eigen/Dense>

namespace evagg {

enum class LpStatus { Optimal, Infeasible, Unbounded };

// maximize objective' x  subject to  A x <= rhs  and optional variable
// bounds. Empty bound vectors mean all variables are free; otherwise both
// must have length n and may contain +-infinity.
struct LinearProgram {
  Eigen::VectorXd objective;
  Eigen::MatrixXd A;
  Eigen::VectorXd rhs;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  double value = 0.0;
  Eigen::VectorXd x;
};

// Dense two-phase primal simplex with Bland's anti-cycling rule.
// Infeasible and Unbounded are reported in the status, never thrown.
LpSolution solve_lp(const LinearProgram& lp);

enum class RowSense { LessEqual, Equal };

// Core routine over nonnegative variables:
//   maximize c' y  s.t.  row_i: A y (<=|=) rhs_i,  y >= 0.
// solve_lp reduces to this; the bias engine uses it directly for
// network-structured duals.
LpSolution solve_nonnegative_lp(const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                                const Eigen::VectorXd& rhs,
                                const std::vector<RowSense>& sense);

}  // namespace evagg

#endif  // EVAGG_LP_HPP
