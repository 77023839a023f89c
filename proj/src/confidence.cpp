#include "evagg/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "evagg/eta.hpp"
#include "evagg/lp.hpp"
#include "evagg/normal.hpp"

namespace evagg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_lipschitz(const ParameterSpace& space) {
  return std::holds_alternative<LipschitzPairwise>(space) ||
         std::holds_alternative<LipschitzMetric>(space);
}

Eigen::MatrixXd lipschitz_constants(const ParameterSpace& space, const StudyPool& pool,
                                    const TargetSpec& target) {
  if (const auto* pw = std::get_if<LipschitzPairwise>(&space)) return pw->C;
  return pairwise_constants(std::get<LipschitzMetric>(space), pool, target);
}

// Slope-set rows a' beta <= c of a meta space.
void meta_rows(const ParameterSpace& space, Eigen::MatrixXd* A, Eigen::VectorXd* c) {
  if (const auto* box = std::get_if<MetaBox>(&space)) {
    const int d = static_cast<int>(box->half_widths.size());
    *A = Eigen::MatrixXd::Zero(2 * d, d);
    *c = Eigen::VectorXd(2 * d);
    for (int j = 0; j < d; ++j) {
      (*A)(2 * j, j) = 1.0;
      (*A)(2 * j + 1, j) = -1.0;
      (*c)[2 * j] = box->half_widths[j];
      (*c)[2 * j + 1] = box->half_widths[j];
    }
    return;
  }
  const auto& poly = std::get<MetaPolyhedron>(space);
  *A = poly.A;
  *c = poly.c;
}

// ---------------------------------------------------------------------------
// Rectangle-region machinery
// ---------------------------------------------------------------------------

// Worst-case evaluation over { tau : tau_k in [lower_k, upper_k], tau in
// base space } with the target effect pinned at t. The Lipschitz case runs
// through the dual of the slice LP, whose K-row basis stays small however
// many pair constraints there are; the meta case optimizes directly over
// the slope.
class RectangleEvaluator {
 public:
  RectangleEvaluator(const HyperRectangleRegion& region, const StudyPool& pool,
                     const TargetSpec& target)
      : K_(pool.num_studies()),
        lo_(region.lower),
        hi_(region.upper),
        x0_(target_x0(target)),
        lipschitz_(is_lipschitz(region.base)) {
    if (lipschitz_) {
      C_ = lipschitz_constants(region.base, pool, target);
      const int n_pair = K_ * (K_ - 1);
      arcs_ = Eigen::MatrixXd::Zero(K_, n_pair + 2 * K_);
      base_cost_ = Eigen::VectorXd::Zero(n_pair + 2 * K_);
      int col = 0;
      for (int k = 1; k <= K_; ++k) {
        for (int l = 1; l <= K_; ++l) {
          if (l == k) continue;
          arcs_(k - 1, col) = 1.0;
          arcs_(l - 1, col) = -1.0;
          base_cost_[col] = -C_(k, l);
          ++col;
        }
      }
      upper_begin_ = col;
      for (int k = 0; k < K_; ++k) arcs_(k, upper_begin_ + k) = 1.0;
      lower_begin_ = upper_begin_ + K_;
      for (int k = 0; k < K_; ++k) arcs_(k, lower_begin_ + k) = -1.0;
      sense_.assign(K_, RowSense::Equal);
    } else {
      studies_x_ = pool.covariates();
      diff_ = studies_x_.rowwise() - x0_.transpose();
      meta_rows(region.base, &space_A_, &space_c_);
    }
  }

  // Feasible range of the target effect; either side may be infinite.
  // Throws EmptyRegionError when the rectangle misses the space entirely.
  std::pair<double, double> tau0_interval() const {
    if (interval_) return *interval_;
    LinearProgram lp;
    if (lipschitz_) {
      const int n = K_ + 1;  // tau_0 first
      const int n_pair = n * (n - 1) / 2;
      lp.A = Eigen::MatrixXd::Zero(2 * n_pair, n);
      lp.rhs = Eigen::VectorXd(2 * n_pair);
      int row = 0;
      for (int k = 0; k < n; ++k) {
        for (int l = k + 1; l < n; ++l) {
          lp.A(row, k) = 1.0;
          lp.A(row, l) = -1.0;
          lp.rhs[row] = C_(k, l);
          lp.A(row + 1, k) = -1.0;
          lp.A(row + 1, l) = 1.0;
          lp.rhs[row + 1] = C_(k, l);
          row += 2;
        }
      }
      lp.lower = Eigen::VectorXd::Constant(n, -kInf);
      lp.upper = Eigen::VectorXd::Constant(n, kInf);
      lp.lower.tail(K_) = lo_;
      lp.upper.tail(K_) = hi_;
      lp.objective = Eigen::VectorXd::Zero(n);
      lp.objective[0] = 1.0;
    } else {
      const int d = static_cast<int>(diff_.cols());
      const int rows = 2 * K_ + static_cast<int>(space_A_.rows());
      lp.A = Eigen::MatrixXd::Zero(rows, d + 1);  // (beta0, beta)
      lp.rhs = Eigen::VectorXd(rows);
      for (int k = 0; k < K_; ++k) {
        lp.A(2 * k, 0) = 1.0;
        lp.A.block(2 * k, 1, 1, d) = studies_x_.row(k);
        lp.rhs[2 * k] = hi_[k];
        lp.A(2 * k + 1, 0) = -1.0;
        lp.A.block(2 * k + 1, 1, 1, d) = -studies_x_.row(k);
        lp.rhs[2 * k + 1] = -lo_[k];
      }
      lp.A.block(2 * K_, 1, space_A_.rows(), d) = space_A_;
      lp.rhs.tail(space_A_.rows()) = space_c_;
      lp.objective = Eigen::VectorXd::Zero(d + 1);
      lp.objective[0] = 1.0;
      lp.objective.tail(d) = x0_;
    }
    const LpSolution up = solve_lp(lp);
    if (up.status == LpStatus::Infeasible)
      throw EmptyRegionError("confidence rectangle does not intersect the parameter space");
    lp.objective = -lp.objective;
    const LpSolution dn = solve_lp(lp);
    interval_ = {dn.status == LpStatus::Unbounded ? -kInf : -dn.value,
                 up.status == LpStatus::Unbounded ? kInf : up.value};
    return *interval_;
  }

  // b~(t, w); nullopt when the slice is empty, +inf when unbounded.
  std::optional<double> tilde_b(double t, const Eigen::VectorXd& w) const {
    if (t >= 0.0) {
      const auto v = slice_extreme(t, w, /*want_max=*/false);
      if (!v) return std::nullopt;
      return t - *v;
    }
    const auto v = slice_extreme(t, w, /*want_max=*/true);
    if (!v) return std::nullopt;
    return *v - t;
  }

  double regret_at(double t, const Eigen::VectorXd& w, double s) const {
    if (t == 0.0) return 0.0;
    const auto b = tilde_b(t, w);
    if (!b) return -kInf;
    if (std::isinf(*b)) return kInf;
    return std::abs(t) * normal_cdf((-std::abs(t) + *b) / s);
  }

  double max_regret(const Eigen::VectorXd& w, double s, int grid_points,
                    int polish_iters) const {
    auto [lo, hi] = tau0_interval();
    // Infinite sides are clipped just past the largest attainable maximizer.
    if (std::isinf(hi)) {
      const auto b = tilde_b(std::max(s, 1e-8), w);
      if (b && std::isinf(*b)) return kInf;
      const double a = b ? std::max(*b, 0.0) / s : 0.0;
      hi = s * detail::eta_point_unchecked(a).t_star + 10.0 * s;
    }
    if (std::isinf(lo)) {
      const auto b = tilde_b(-std::max(s, 1e-8), w);
      if (b && std::isinf(*b)) return kInf;
      const double a = b ? std::max(*b, 0.0) / s : 0.0;
      lo = -(s * detail::eta_point_unchecked(a).t_star + 10.0 * s);
    }
    if (!(hi > lo)) return std::max(0.0, regret_at(lo, w, s));
    const double step = (hi - lo) / (grid_points - 1);
    double best = -kInf, best_t = lo;
    for (int i = 0; i < grid_points; ++i) {
      const double t = lo + i * step;
      const double r = regret_at(t, w, s);
      if (r > best) {
        best = r;
        best_t = t;
      }
    }
    if (std::isinf(best)) return kInf;
    // Golden-section polish between the neighbors of the best grid point.
    double a = std::max(lo, best_t - step), b = std::min(hi, best_t + step);
    const double golden = 0.61803398874989484820;
    double c1 = b - golden * (b - a), c2 = a + golden * (b - a);
    double f1 = regret_at(c1, w, s), f2 = regret_at(c2, w, s);
    for (int i = 0; i < polish_iters; ++i) {
      if (f1 > f2) {
        b = c2;
        c2 = c1;
        f2 = f1;
        c1 = b - golden * (b - a);
        f1 = regret_at(c1, w, s);
      } else {
        a = c1;
        c1 = c2;
        f1 = f2;
        c2 = a + golden * (b - a);
        f2 = regret_at(c2, w, s);
      }
    }
    return std::max({best, f1, f2, 0.0});
  }

 private:
  // Extreme of sum_k w_k tau_k over the slice at fixed t.
  std::optional<double> slice_extreme(double t, const Eigen::VectorXd& w, bool want_max) const {
    if (lipschitz_) {
      Eigen::VectorXd cost = base_cost_;
      bool boxes_ok = true;
      for (int k = 0; k < K_; ++k) {
        const double a = std::max(lo_[k], t - C_(0, k + 1));
        const double b = std::min(hi_[k], t + C_(0, k + 1));
        if (a > b) boxes_ok = false;
        cost[upper_begin_ + k] = -b;
        cost[lower_begin_ + k] = a;
      }
      if (!boxes_ok) return std::nullopt;
      const Eigen::VectorXd rhs = want_max ? w : Eigen::VectorXd(-w);
      const LpSolution sol = solve_nonnegative_lp(cost, arcs_, rhs, sense_);
      if (sol.status == LpStatus::Unbounded) return std::nullopt;  // empty slice
      if (sol.status == LpStatus::Infeasible) return want_max ? kInf : -kInf;
      return want_max ? -sol.value : sol.value;
    }
    // Meta slice: optimize (D'w)' beta over the t-shifted box rows.
    const int d = static_cast<int>(diff_.cols());
    LinearProgram lp;
    const int rows = 2 * K_ + static_cast<int>(space_A_.rows());
    lp.A = Eigen::MatrixXd::Zero(rows, d);
    lp.rhs = Eigen::VectorXd(rows);
    for (int k = 0; k < K_; ++k) {
      lp.A.row(2 * k) = diff_.row(k);
      lp.rhs[2 * k] = hi_[k] - t;
      lp.A.row(2 * k + 1) = -diff_.row(k);
      lp.rhs[2 * k + 1] = t - lo_[k];
    }
    lp.A.bottomRows(space_A_.rows()) = space_A_;
    lp.rhs.tail(space_A_.rows()) = space_c_;
    const Eigen::VectorXd m = diff_.transpose() * w;
    lp.objective = want_max ? m : Eigen::VectorXd(-m);
    const LpSolution sol = solve_lp(lp);
    if (sol.status == LpStatus::Infeasible) return std::nullopt;
    if (sol.status == LpStatus::Unbounded) return want_max ? kInf : -kInf;
    return t + (want_max ? sol.value : -sol.value);
  }

  int K_;
  Eigen::VectorXd lo_, hi_;
  Eigen::VectorXd x0_;
  bool lipschitz_;
  mutable std::optional<std::pair<double, double>> interval_;

  // Lipschitz payload: slice-LP dual with arcs for pairs and box bounds.
  Eigen::MatrixXd C_;
  Eigen::MatrixXd arcs_;
  Eigen::VectorXd base_cost_;
  std::vector<RowSense> sense_;
  int upper_begin_ = 0, lower_begin_ = 0;

  // Meta payload
  Eigen::MatrixXd studies_x_;
  Eigen::MatrixXd diff_;
  Eigen::MatrixXd space_A_;
  Eigen::VectorXd space_c_;
};

}  // namespace

HyperRectangleRegion::HyperRectangleRegion(Eigen::VectorXd lower_in, Eigen::VectorXd upper_in,
                                           ParameterSpace base_in, double alpha_in, double z_in)
    : lower(std::move(lower_in)),
      upper(std::move(upper_in)),
      base(std::move(base_in)),
      alpha(alpha_in),
      z(z_in) {
  if (lower.size() != upper.size())
    throw ValidationError("rectangle region bound lengths differ");
  for (int k = 0; k < lower.size(); ++k)
    if (!(lower[k] <= upper[k])) throw ValidationError("rectangle region has lower > upper");
}

MetaEllipsoidRegion::MetaEllipsoidRegion(Eigen::VectorXd beta_hat_in, Eigen::MatrixXd S_in,
                                         double chi_in, double alpha_in)
    : beta_hat(std::move(beta_hat_in)), S(std::move(S_in)), chi(chi_in), alpha(alpha_in) {
  if (S.rows() != S.cols() || S.rows() != beta_hat.size())
    throw ValidationError("ellipsoid region dimensions are inconsistent");
  if (!(chi > 0.0)) throw ValidationError("ellipsoid region needs chi > 0");
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + S.cwiseAbs().maxCoeff()))
    throw ValidationError("ellipsoid covariance must be symmetric");
  if (Eigen::LLT<Eigen::MatrixXd>(S).info() != Eigen::Success)
    throw ValidationError("ellipsoid covariance must be positive definite");
}

double normal_halfwidth_quantile(double alpha, int K) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  if (K < 1) throw ValidationError("K must be >= 1");
  const double p = std::pow(1.0 - alpha, 1.0 / K);
  return normal_quantile(0.5 * (1.0 + p));
}

HyperRectangleRegion hyperrectangle_region(const StudyPool& pool, const ParameterSpace& space,
                                           const TargetSpec& target, double alpha) {
  check_space_compatible(space, pool, target);
  const double z = normal_halfwidth_quantile(alpha, pool.num_studies());
  const Eigen::VectorXd tau = pool.estimates();
  const Eigen::VectorXd ses = pool.ses();
  HyperRectangleRegion region(tau - z * ses, tau + z * ses, space, alpha, z);
  // The interval computation doubles as the nonemptiness check.
  RectangleEvaluator(region, pool, target).tau0_interval();
  return region;
}

MetaEllipsoidRegion meta_ellipsoid_region(const StudyPool& pool, const ParameterSpace& space,
                                          double alpha) {
  if (!std::holds_alternative<MetaBox>(space) && !std::holds_alternative<MetaPolyhedron>(space))
    throw ValidationError("the ellipsoid region requires a meta-regression space");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  const int K = pool.num_studies();
  const int d = pool.dim();
  if (K < d + 1) throw RankDeficientError("ellipsoid region needs K >= d_x + 1 studies");
  Eigen::MatrixXd X(K, d + 1);
  X.col(0).setOnes();
  X.rightCols(d) = pool.covariates();
  const Eigen::MatrixXd gram = X.transpose() * X;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
  lu.setThreshold(1e-10);
  if (lu.rank() < d + 1) throw RankDeficientError("design matrix is rank deficient");
  const Eigen::MatrixXd gram_inv = lu.inverse();
  const Eigen::VectorXd beta_full = gram_inv * (X.transpose() * pool.estimates());
  const Eigen::VectorXd ses = pool.ses();
  const Eigen::MatrixXd meat = X.transpose() * ses.array().square().matrix().asDiagonal() * X;
  const Eigen::MatrixXd sandwich = gram_inv * meat * gram_inv;
  return MetaEllipsoidRegion(beta_full.tail(d), sandwich.bottomRightCorner(d, d),
                             chi_square_quantile(1.0 - alpha, d), alpha);
}

double signed_max_bias(BiasSign sign, const WeightVector& w, const MetaEllipsoidRegion& region,
                       const StudyPool& pool, const TargetSpec& target) {
  if (w.size() != pool.num_studies())
    throw ValidationError("weight vector length does not match the pool");
  const Eigen::MatrixXd diff = pool.covariates().rowwise() - target_x0(target).transpose();
  const Eigen::VectorXd x0w = -(diff.transpose() * w.as_eigen());  // X0(w)
  const double spread = std::sqrt(region.chi * x0w.dot(region.S * x0w));
  const double center = x0w.dot(region.beta_hat);
  return (sign == BiasSign::Positive ? center : -center) + spread;
}

double signed_max_bias(double t, const WeightVector& w, const HyperRectangleRegion& region,
                       const StudyPool& pool, const TargetSpec& target) {
  if (w.size() != pool.num_studies())
    throw ValidationError("weight vector length does not match the pool");
  const RectangleEvaluator eval(region, pool, target);
  const auto b = eval.tilde_b(t, w.as_eigen());
  if (!b) throw EmptyRegionError("no feasible effects with the target pinned at t");
  return *b;
}

namespace {

double ellipsoid_max_regret(const WeightVector& w, const MetaEllipsoidRegion& region,
                            const StudyPool& pool, const TargetSpec& target) {
  const double s = sd_of(w, pool);
  const double bp = signed_max_bias(BiasSign::Positive, w, region, pool, target);
  const double bm = signed_max_bias(BiasSign::Negative, w, region, pool, target);
  return std::max(s * detail::eta_point_unchecked(bp / s).value,
                  s * detail::eta_point_unchecked(bm / s).value);
}

}  // namespace

double refined_max_regret(const WeightVector& w, const ConfidenceRegion& region,
                          const StudyPool& pool, const TargetSpec& target) {
  if (const auto* ell = std::get_if<MetaEllipsoidRegion>(&region))
    return ellipsoid_max_regret(w, *ell, pool, target);
  const auto& rect = std::get<HyperRectangleRegion>(region);
  const RectangleEvaluator eval(rect, pool, target);
  return eval.max_regret(w.as_eigen(), sd_of(w, pool), 512, 60);
}

RefinedSolveResult solve_refined_minimax(const StudyPool& pool, const TargetSpec& target,
                                         const ConfidenceRegion& region,
                                         const SolverConfig& cfg) {
  const Eigen::VectorXd ses = pool.ses();
  std::optional<RectangleEvaluator> rect_eval;
  std::function<double(const Eigen::VectorXd&)> objective;
  if (const auto* ell = std::get_if<MetaEllipsoidRegion>(&region)) {
    const Eigen::MatrixXd diff = pool.covariates().rowwise() - target_x0(target).transpose();
    const Eigen::MatrixXd S = ell->S;
    const Eigen::VectorXd beta_hat = ell->beta_hat;
    const double chi = ell->chi;
    objective = [&ses, diff, S, beta_hat, chi](const Eigen::VectorXd& w) {
      const double s = sd_of(w, ses);
      const Eigen::VectorXd x0w = -(diff.transpose() * w);
      const double spread = std::sqrt(chi * x0w.dot(S * x0w));
      const double center = std::abs(x0w.dot(beta_hat));
      return s * detail::eta_point_unchecked((center + spread) / s).value;
    };
  } else {
    rect_eval.emplace(std::get<HyperRectangleRegion>(region), pool, target);
    // A coarse grid keeps the search affordable; the reported value below
    // comes from the full-resolution evaluation.
    objective = [&ses, &rect_eval](const Eigen::VectorXd& w) {
      return rect_eval->max_regret(w, sd_of(w, ses), 33, 24);
    };
  }
  const Eigen::VectorXd w =
      detail::minimize_over_weights(objective, detail::standard_starts(pool, target), cfg);
  const WeightVector weights{Eigen::VectorXd(w / w.sum())};
  return RefinedSolveResult{weights, refined_max_regret(weights, region, pool, target)};
}

IdentifiedSetBounds identified_set(const StudyPool& pool, const ParameterSpace& space,
                                   const TargetSpec& target) {
  check_space_compatible(space, pool, target);
  const int K = pool.num_studies();
  const Eigen::VectorXd tau = pool.estimates();
  if (is_lipschitz(space)) {
    const Eigen::MatrixXd C = lipschitz_constants(space, pool, target);
    const double tol = 1e-9 * (1.0 + tau.cwiseAbs().maxCoeff());
    for (int k = 1; k <= K; ++k)
      for (int l = k + 1; l <= K; ++l)
        if (std::abs(tau[k - 1] - tau[l - 1]) > C(k, l) + tol)
          throw EmptyIdentifiedSetError("study effects violate the pairwise constraints");
    double lo = -kInf, hi = kInf;
    for (int k = 1; k <= K; ++k) {
      lo = std::max(lo, tau[k - 1] - C(0, k));
      hi = std::min(hi, tau[k - 1] + C(0, k));
    }
    if (lo > hi + tol)
      throw EmptyIdentifiedSetError("the extrapolation intervals have empty intersection");
    return IdentifiedSetBounds{std::min(lo, hi), hi};
  }
  // Meta space: pin beta0 + x_k' beta at the estimates and optimize
  // beta0 + x0' beta over the slope set.
  const int d = pool.dim();
  Eigen::MatrixXd space_A;
  Eigen::VectorXd space_c;
  meta_rows(space, &space_A, &space_c);
  LinearProgram lp;
  const int rows = 2 * K + static_cast<int>(space_A.rows());
  lp.A = Eigen::MatrixXd::Zero(rows, d + 1);
  lp.rhs = Eigen::VectorXd(rows);
  const Eigen::MatrixXd X = pool.covariates();
  for (int k = 0; k < K; ++k) {
    lp.A(2 * k, 0) = 1.0;
    lp.A.block(2 * k, 1, 1, d) = X.row(k);
    lp.rhs[2 * k] = tau[k];
    lp.A(2 * k + 1, 0) = -1.0;
    lp.A.block(2 * k + 1, 1, 1, d) = -X.row(k);
    lp.rhs[2 * k + 1] = -tau[k];
  }
  lp.A.block(2 * K, 1, space_A.rows(), d) = space_A;
  lp.rhs.tail(space_A.rows()) = space_c;
  lp.objective = Eigen::VectorXd::Zero(d + 1);
  lp.objective[0] = 1.0;
  lp.objective.tail(d) = target_x0(target);
  const LpSolution up = solve_lp(lp);
  if (up.status == LpStatus::Infeasible)
    throw EmptyIdentifiedSetError("study effects are inconsistent with the meta space");
  lp.objective = -lp.objective;
  const LpSolution dn = solve_lp(lp);
  return IdentifiedSetBounds{dn.status == LpStatus::Unbounded ? -kInf : -dn.value,
                             up.status == LpStatus::Unbounded ? kInf : up.value};
}

Decision identified_set_rule(const StudyPool& pool, const ParameterSpace& space,
                             const TargetSpec& target) {
  IdentifiedSetBounds is = identified_set(pool, space, target);
  if (target.cost != 0.0) {
    is.lower -= target.cost;
    is.upper -= target.cost;
  }
  Decision d;
  d.rule_name = "identified_set";
  d.identified_set = is;
  d.adopt = -is.lower <= is.upper;
  if (std::isinf(is.lower) && std::isinf(is.upper))
    d.aggregate = 0.0;
  else
    d.aggregate = 0.5 * (is.lower + is.upper);
  if (is.lower < 0.0 && is.upper > 0.0)
    d.straddle_fraction = std::abs(is.upper) / (std::abs(is.lower) + std::abs(is.upper));
  return d;
}

}  // namespace evagg
