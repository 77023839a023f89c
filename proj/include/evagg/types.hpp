#ifndef EVAGG_TYPES_HPP
#define EVAGG_TYPES_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace evagg {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input data or an ill-formed domain object.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Design matrix does not have full column rank.
class RankDeficientError : public Error {
 public:
  using Error::Error;
};

// The maximum bias is +infinity for the requested weights; the parameter
// space does not pin down the target effect at all.
class BiasUnboundedError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

class EmptyRegionError : public Error {
 public:
  using Error::Error;
};

class EmptyIdentifiedSetError : public Error {
 public:
  using Error::Error;
};

class NonConvergenceError : public Error {
 public:
  using Error::Error;
};

class CalibrationBracketError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Studies and pools
// ---------------------------------------------------------------------------

struct Study {
  std::string id;
  double estimate = 0.0;             // reported effect, welfare units
  double se = 1.0;                   // standard error, same units, > 0
  std::vector<double> covariates;    // length d_x
};

// Per-covariate affine transform recorded when a pool is standardized, so
// that target covariates can be mapped with the pool's statistics.
struct ColumnTransform {
  double mean = 0.0;
  double scale = 1.0;  // divide by this after centering
  bool active = false;
};

// An immutable, validated collection of K >= 1 studies sharing a covariate
// dimension. Study indices are 0-based here; the decision target is always
// a separate TargetSpec, never a pool entry.
class StudyPool {
 public:
  StudyPool(std::vector<Study> studies, std::vector<std::string> covariate_names);

  int num_studies() const { return static_cast<int>(studies_.size()); }
  int dim() const { return static_cast<int>(covariate_names_.size()); }

  const Study& study(int k) const { return studies_.at(k); }
  const std::vector<Study>& studies() const { return studies_; }
  const std::vector<std::string>& covariate_names() const { return covariate_names_; }
  int covariate_index(const std::string& name) const;  // -1 when absent

  Eigen::VectorXd estimates() const;
  Eigen::VectorXd ses() const;
  Eigen::MatrixXd covariates() const;  // K x d_x

  // Returns a pool whose named covariate columns are centered and scaled to
  // unit sample variance (n-1 denominator). The transforms are retained so
  // transform_target can map raw target covariates into the same units.
  StudyPool standardized(const std::vector<std::string>& columns) const;
  StudyPool standardized_all() const;

  std::vector<double> transform_target(const std::vector<double>& x0_raw) const;
  const std::vector<ColumnTransform>& transforms() const { return transforms_; }

 private:
  std::vector<Study> studies_;
  std::vector<std::string> covariate_names_;
  std::vector<ColumnTransform> transforms_;
};

struct TargetSpec {
  std::vector<double> x0;  // length d_x, in the pool's (possibly standardized) units
  double cost = 0.0;       // per-person policy cost, welfare units
};

Eigen::VectorXd target_x0(const TargetSpec& target);

// ---------------------------------------------------------------------------
// Parameter spaces
// ---------------------------------------------------------------------------

// Effects follow a linear meta-regression tau_k = beta0 + x_k' beta with the
// slope confined to the box prod_j [-C_j, C_j]; beta0 is unrestricted.
struct MetaBox {
  std::vector<double> half_widths;  // C_j >= 0

  explicit MetaBox(std::vector<double> half_widths_in);
};

// Slope set B = { beta : A beta <= c }. Rows must come in (a, c), (-a, c)
// pairs so that B is symmetric about the origin.
struct MetaPolyhedron {
  Eigen::MatrixXd A;  // m x d_x
  Eigen::VectorXd c;  // m

  MetaPolyhedron(Eigen::MatrixXd A_in, Eigen::VectorXd c_in);
};

// |tau_k - tau_l| <= C(k,l) for all pairs; index 0 is the target.
struct LipschitzPairwise {
  Eigen::MatrixXd C;  // (K+1) x (K+1), symmetric, zero diagonal, >= 0

  explicit LipschitzPairwise(Eigen::MatrixXd C_in);
};

// |tau_k - tau_l| <= C * ||x_k - x_l|| (Euclidean).
struct LipschitzMetric {
  double C = 0.0;

  explicit LipschitzMetric(double C_in);
};

using ParameterSpace = std::variant<MetaBox, MetaPolyhedron, LipschitzPairwise, LipschitzMetric>;

// Expands a LipschitzMetric into the pairwise constant matrix for a given
// pool and target (index 0 = target).
Eigen::MatrixXd pairwise_constants(const LipschitzMetric& space, const StudyPool& pool,
                                   const TargetSpec& target);

// Throws ValidationError when the space dimensions do not match the pool.
void check_space_compatible(const ParameterSpace& space, const StudyPool& pool,
                            const TargetSpec& target);

// ---------------------------------------------------------------------------
// Weights, regret profiles, decisions
// ---------------------------------------------------------------------------

class WeightVector {
 public:
  static constexpr double kSumTol = 1e-10;

  explicit WeightVector(std::vector<double> w);
  explicit WeightVector(const Eigen::VectorXd& w);

  int size() const { return static_cast<int>(w_.size()); }
  double operator[](int k) const { return w_[k]; }
  const std::vector<double>& values() const { return w_; }
  Eigen::VectorXd as_eigen() const;

 private:
  std::vector<double> w_;
};

struct RegretProfile {
  double bias = 0.0;        // b(w) >= 0
  double sd = 0.0;          // s(w) > 0
  double max_regret = 0.0;  // s(w) * eta(b(w)/s(w))
};

struct IdentifiedSetBounds {
  double lower = 0.0;
  double upper = 0.0;
};

struct Decision {
  std::string rule_name;
  std::optional<WeightVector> weights;  // absent for non-linear rules
  double aggregate = 0.0;               // sum_k w_k (tau_hat_k - c0), or IS midpoint
  bool adopt = false;                   // aggregate >= 0
  std::optional<RegretProfile> profile;
  std::optional<IdentifiedSetBounds> identified_set;
  // |upper| / (|lower| + |upper|) when the identified set straddles zero.
  std::optional<double> straddle_fraction;
};

// s(w) = sqrt(sum_k w_k^2 sigma_k^2)
double sd_of(const WeightVector& w, const StudyPool& pool);
double sd_of(const Eigen::VectorXd& w, const Eigen::VectorXd& ses);

}  // namespace evagg

#endif  // EVAGG_TYPES_HPP
