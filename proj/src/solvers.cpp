#include "evagg/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "evagg/bias.hpp"
#include "evagg/eta.hpp"
#include "evagg/normal.hpp"

namespace evagg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using ObjectiveFn = std::function<double(const Eigen::VectorXd&)>;

Eigen::VectorXd expand_weights(const Eigen::VectorXd& z) {
  const int n = static_cast<int>(z.size());
  Eigen::VectorXd w(n + 1);
  w.head(n) = z;
  w[n] = 1.0 - z.sum();
  return w;
}

struct InnerPoint {
  Eigen::VectorXd z;
  double f = kInf;
};

// Classic Nelder-Mead on the reduced coordinates. Returns the best vertex
// and whether the vertex spread met the tolerance within the budget.
std::pair<InnerPoint, bool> nelder_mead(const ObjectiveFn& f, const Eigen::VectorXd& z0,
                                        int max_iters, double tol) {
  const int n = static_cast<int>(z0.size());
  std::vector<InnerPoint> simplex(n + 1);
  simplex[0] = {z0, f(z0)};
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd z = z0;
    z[i] += 0.05 + 0.05 * std::abs(z0[i]);
    simplex[i + 1] = {z, f(z)};
  }
  auto by_value = [](const InnerPoint& a, const InnerPoint& b) { return a.f < b.f; };
  bool converged = false;
  for (int iter = 0; iter < max_iters; ++iter) {
    std::stable_sort(simplex.begin(), simplex.end(), by_value);
    const double spread = simplex.back().f - simplex.front().f;
    if (spread <= tol * (1.0 + std::abs(simplex.front().f))) {
      converged = true;
      break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += simplex[i].z;
    centroid /= n;
    const InnerPoint worst = simplex.back();

    const Eigen::VectorXd zr = centroid + (centroid - worst.z);
    const double fr = f(zr);
    if (fr < simplex[0].f) {
      const Eigen::VectorXd ze = centroid + 2.0 * (centroid - worst.z);
      const double fe = f(ze);
      simplex.back() = fe < fr ? InnerPoint{ze, fe} : InnerPoint{zr, fr};
      continue;
    }
    if (fr < simplex[n - 1].f) {
      simplex.back() = {zr, fr};
      continue;
    }
    const bool outside = fr < worst.f;
    const Eigen::VectorXd zc =
        outside ? centroid + 0.5 * (zr - centroid) : centroid - 0.5 * (centroid - worst.z);
    const double fc = f(zc);
    if (fc < (outside ? fr : worst.f)) {
      simplex.back() = {zc, fc};
      continue;
    }
    for (int i = 1; i <= n; ++i) {
      simplex[i].z = simplex[0].z + 0.5 * (simplex[i].z - simplex[0].z);
      simplex[i].f = f(simplex[i].z);
    }
  }
  std::stable_sort(simplex.begin(), simplex.end(), by_value);
  return {simplex.front(), converged};
}

Eigen::VectorXd numeric_gradient(const ObjectiveFn& f, const Eigen::VectorXd& z) {
  const int n = static_cast<int>(z.size());
  Eigen::VectorXd g(n);
  for (int i = 0; i < n; ++i) {
    const double h = 1e-7 * (1.0 + std::abs(z[i]));
    Eigen::VectorXd zp = z, zm = z;
    zp[i] += h;
    zm[i] -= h;
    g[i] = (f(zp) - f(zm)) / (2.0 * h);
  }
  return g;
}

// Quasi-Newton polish with numeric gradients and Armijo backtracking. The
// objectives have kinks, so the loop simply stops when no descent is found.
InnerPoint bfgs_polish(const ObjectiveFn& f, const InnerPoint& start, int max_iters) {
  const int n = static_cast<int>(start.z.size());
  if (!std::isfinite(start.f) || n == 0) return start;
  InnerPoint cur = start;
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd g = numeric_gradient(f, cur.z);
  for (int iter = 0; iter < max_iters; ++iter) {
    if (!g.allFinite()) break;
    if (g.lpNorm<Eigen::Infinity>() <= 1e-10 * (1.0 + std::abs(cur.f))) break;
    Eigen::VectorXd dir = -H * g;
    if (dir.dot(g) >= 0.0) dir = -g;  // reset on a non-descent direction
    double step = 1.0;
    double fn = kInf;
    Eigen::VectorXd zn;
    bool improved = false;
    for (int ls = 0; ls < 45; ++ls) {
      zn = cur.z + step * dir;
      fn = f(zn);
      if (fn <= cur.f + 1e-4 * step * dir.dot(g)) {
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved || fn >= cur.f) break;
    Eigen::VectorXd gn = numeric_gradient(f, zn);
    const Eigen::VectorXd s = zn - cur.z;
    const Eigen::VectorXd y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const Eigen::MatrixXd sy_outer = s * y.transpose() / sy;
      H = (Eigen::MatrixXd::Identity(n, n) - sy_outer) * H *
              (Eigen::MatrixXd::Identity(n, n) - sy_outer.transpose()) +
          s * s.transpose() / sy;
    }
    cur = {zn, fn};
    g = gn;
  }
  return cur;
}

bool lexicographic_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

double uniform01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

Eigen::MatrixXd design_matrix(const StudyPool& pool) {
  Eigen::MatrixXd X(pool.num_studies(), pool.dim() + 1);
  X.col(0).setOnes();
  X.rightCols(pool.dim()) = pool.covariates();
  return X;
}

Eigen::VectorXd design_target(const TargetSpec& target) {
  Eigen::VectorXd x(static_cast<int>(target.x0.size()) + 1);
  x[0] = 1.0;
  x.tail(static_cast<int>(target.x0.size())) = target_x0(target);
  return x;
}

SolveResult finish_result(const Eigen::VectorXd& w_raw, const BiasFn& bias,
                          const Eigen::VectorXd& ses, bool mse_objective) {
  // Tiny sum drift from the reduced parameterization is renormalized away.
  const Eigen::VectorXd w = w_raw / w_raw.sum();
  const double b = bias(w);
  const double s = sd_of(w, ses);
  const double regret = s * eta(b / s);
  return SolveResult{WeightVector(w), RegretProfile{b, s, regret},
                     mse_objective ? b * b + s * s : regret};
}

}  // namespace

namespace detail {

std::vector<Eigen::VectorXd> standard_starts(const StudyPool& pool, const TargetSpec& target) {
  const int K = pool.num_studies();
  std::vector<Eigen::VectorXd> starts;
  starts.push_back(Eigen::VectorXd::Constant(K, 1.0 / K));
  Eigen::VectorXd inv_var(K);
  for (int k = 0; k < K; ++k) inv_var[k] = 1.0 / (pool.study(k).se * pool.study(k).se);
  starts.push_back(inv_var / inv_var.sum());
  try {
    starts.push_back(ols_weights(pool, target).as_eigen());
  } catch (const RankDeficientError&) {
    // no least-squares start when the design is rank deficient
  }
  for (int k = 0; k < K; ++k) starts.push_back(Eigen::VectorXd::Unit(K, k));
  return starts;
}

Eigen::VectorXd minimize_over_weights(const ObjectiveFn& f,
                                      const std::vector<Eigen::VectorXd>& starts,
                                      const SolverConfig& cfg) {
  if (starts.empty()) throw ValidationError("optimizer needs at least one start");
  if (!(cfg.objective_tol > 0.0)) throw ValidationError("objective_tol must be positive");
  if (cfg.multistart_count < 1) throw ValidationError("multistart_count must be >= 1");
  if (cfg.max_iters < 1) throw ValidationError("max_iters must be >= 1");
  const int K = static_cast<int>(starts.front().size());
  if (K == 1) return Eigen::VectorXd::Ones(1);

  ObjectiveFn fr = [&](const Eigen::VectorXd& z) { return f(expand_weights(z)); };

  // Rank the supplied starts by objective; descend from the most promising.
  std::vector<std::pair<double, Eigen::VectorXd>> ranked;
  for (const auto& w : starts) ranked.emplace_back(f(w), w);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  const int descent_runs = std::min<int>(cfg.multistart_count, static_cast<int>(ranked.size()));
  std::vector<InnerPoint> candidates;
  for (const auto& [fw, w] : ranked) candidates.push_back({w.head(K - 1), fw});

  bool any_converged = false;
  InnerPoint best = candidates.front();
  for (int i = 0; i < descent_runs; ++i) {
    auto [pt, converged] =
        nelder_mead(fr, ranked[i].second.head(K - 1), cfg.max_iters, cfg.objective_tol);
    pt = bfgs_polish(fr, pt, 80);
    any_converged = any_converged || converged;
    candidates.push_back(pt);
    if (pt.f < best.f) best = pt;
  }

  // Seeded jitters around the incumbent fill the remaining start budget.
  const int jitters = cfg.multistart_count - descent_runs;
  if (jitters > 0) {
    std::mt19937_64 rng(cfg.seed);
    const double scale = std::max(0.05, 1.0 / K);
    for (int j = 0; j < jitters; ++j) {
      Eigen::VectorXd z = best.z;
      for (int i = 0; i < z.size(); ++i) z[i] += scale * normal_quantile(uniform01(rng));
      auto [pt, converged] = nelder_mead(fr, z, cfg.max_iters, cfg.objective_tol);
      pt = bfgs_polish(fr, pt, 80);
      any_converged = any_converged || converged;
      candidates.push_back(pt);
      if (pt.f < best.f) best = pt;
    }
  }
  if (!std::isfinite(best.f))
    throw BiasUnboundedError("objective is unbounded for every candidate weight vector");
  if (!any_converged)
    throw NonConvergenceError("weight search did not converge within max_iters");

  // Ties within tolerance resolve to the lexicographically smallest weights.
  Eigen::VectorXd best_w = expand_weights(best.z);
  const double tie = cfg.objective_tol * (1.0 + std::abs(best.f));
  for (const auto& c : candidates) {
    if (!std::isfinite(c.f) || c.f > best.f + tie) continue;
    const Eigen::VectorXd w = expand_weights(c.z);
    if (lexicographic_less(w, best_w)) best_w = w;
  }
  return best_w;
}

}  // namespace detail

SolveResult solve_minimax_mse(const StudyPool& pool, const TargetSpec& target,
                              const ParameterSpace& space, const SolverConfig& cfg) {
  check_space_compatible(space, pool, target);
  const BiasFn bias(space, pool, target);
  const Eigen::VectorXd ses = pool.ses();
  auto objective = [&](const Eigen::VectorXd& w) {
    try {
      const double b = bias(w);
      const double s = sd_of(w, ses);
      return b * b + s * s;
    } catch (const BiasUnboundedError&) {
      return kInf;
    }
  };
  const Eigen::VectorXd w =
      detail::minimize_over_weights(objective, detail::standard_starts(pool, target), cfg);
  return finish_result(w, bias, ses, /*mse_objective=*/true);
}

SolveResult solve_minimax_regret(const StudyPool& pool, const TargetSpec& target,
                                 const ParameterSpace& space, const SolverConfig& cfg) {
  check_space_compatible(space, pool, target);
  static const EtaTable kEtaTable = build_eta_table();
  const BiasFn bias(space, pool, target);
  const Eigen::VectorXd ses = pool.ses();
  auto objective = [&](const Eigen::VectorXd& w) {
    try {
      const double b = bias(w);
      const double s = sd_of(w, ses);
      return s * kEtaTable(b / s);
    } catch (const BiasUnboundedError&) {
      return kInf;
    }
  };
  // The MSE optimum is cheap and reliable; it runs first and seeds the
  // regret search.
  std::vector<Eigen::VectorXd> starts;
  try {
    starts.push_back(solve_minimax_mse(pool, target, space, cfg).weights.as_eigen());
  } catch (const Error&) {
    // fall back to the standard starts alone
  }
  for (auto& s : detail::standard_starts(pool, target)) starts.push_back(std::move(s));
  const Eigen::VectorXd w = detail::minimize_over_weights(objective, starts, cfg);
  return finish_result(w, bias, ses, /*mse_objective=*/false);
}

WeightVector ols_weights(const StudyPool& pool, const TargetSpec& target) {
  if (target.x0.size() != static_cast<std::size_t>(pool.dim()))
    throw ValidationError("target covariate length does not match the pool");
  const Eigen::MatrixXd X = design_matrix(pool);
  if (X.rows() < X.cols())
    throw RankDeficientError("least-squares weights need K >= d_x + 1 studies");
  const Eigen::MatrixXd gram = X.transpose() * X;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
  lu.setThreshold(1e-10);
  if (lu.rank() < X.cols()) throw RankDeficientError("design matrix is rank deficient");
  const Eigen::VectorXd g = lu.solve(design_target(target));
  return WeightVector(Eigen::VectorXd(X * g));
}

WeightVector hb_weights(const StudyPool& pool, const TargetSpec& target, const HBPrior& prior) {
  const int K = pool.num_studies();
  const Eigen::VectorXd ses = pool.ses();
  Eigen::VectorXd tilde(K);

  if (const auto* mg = std::get_if<MetaGaussianPrior>(&prior)) {
    const int p = pool.dim() + 1;
    if (mg->sigma.rows() != p || mg->sigma.cols() != p)
      throw ValidationError("meta-Gaussian prior covariance must be (d_x+1) x (d_x+1)");
    if ((mg->sigma - mg->sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw ValidationError("prior covariance must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> prior_llt(mg->sigma);
    if (prior_llt.info() != Eigen::Success)
      throw ValidationError("prior covariance must be positive definite");
    const Eigen::MatrixXd X = design_matrix(pool);
    Eigen::MatrixXd M = prior_llt.solve(Eigen::MatrixXd::Identity(p, p));
    for (int k = 0; k < K; ++k) M += X.row(k).transpose() * X.row(k) / (ses[k] * ses[k]);
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() != Eigen::Success)
      throw SingularMatrixError("posterior precision matrix is singular");
    const Eigen::VectorXd v = llt.solve(design_target(target));
    tilde = (X * v).cwiseQuotient(ses.cwiseProduct(ses));
  } else {
    const auto& kg = std::get<KernelGaussianPrior>(prior);
    if (!(kg.variance > 0.0) || !(kg.lengthscale > 0.0))
      throw ValidationError("kernel prior needs positive variance and lengthscale");
    const Eigen::MatrixXd X = pool.covariates();
    const Eigen::VectorXd x0 = target_x0(target);
    Eigen::MatrixXd cov(K, K);
    Eigen::VectorXd cross(K);
    for (int k = 0; k < K; ++k) {
      cross[k] = kg.variance * std::exp(-(X.row(k).transpose() - x0).norm() / kg.lengthscale);
      for (int l = 0; l < K; ++l)
        cov(k, l) = kg.variance * std::exp(-(X.row(k) - X.row(l)).norm() / kg.lengthscale);
      cov(k, k) += ses[k] * ses[k];
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
      throw SingularMatrixError("kernel prior covariance plus noise is singular");
    tilde = llt.solve(cross);
  }

  const double sum = tilde.sum();
  if (std::abs(sum) < 1e-12)
    throw Error("hierarchical Bayes weights sum to zero; normalization undefined");
  return WeightVector(Eigen::VectorXd(tilde / sum));
}

double kernel_pair_exceedance(const StudyPool& pool, double C, double variance,
                              double lengthscale, PairNormalizer norm) {
  const int K = pool.num_studies();
  const Eigen::MatrixXd X = pool.covariates();
  double sum = 0.0;
  for (int k = 0; k < K; ++k) {
    for (int l = k + 1; l < K; ++l) {
      const double d = (X.row(k) - X.row(l)).norm();
      if (d <= 0.0) continue;  // identical covariates: zero-variance difference
      const double sd = std::sqrt(2.0 * variance * (1.0 - std::exp(-d / lengthscale)));
      if (sd <= 0.0) continue;
      sum += 2.0 * normal_cdf(-C * d / sd);
    }
  }
  const double denom =
      norm == PairNormalizer::HalfKTimesKPlus1 ? 0.5 * K * (K + 1) : 0.5 * K * (K - 1);
  return sum / denom;
}

double calibrate_kernel_lengthscale(const StudyPool& pool, double C, double coverage,
                                    double variance, PairNormalizer norm) {
  if (!(C > 0.0)) throw ValidationError("calibration needs C > 0");
  if (!(coverage > 0.0 && coverage < 1.0)) throw ValidationError("coverage must lie in (0, 1)");
  if (pool.num_studies() < 2) throw ValidationError("calibration needs at least two studies");
  bool distinct = false;
  const Eigen::MatrixXd X = pool.covariates();
  for (int k = 0; k < pool.num_studies() && !distinct; ++k)
    for (int l = k + 1; l < pool.num_studies(); ++l)
      if ((X.row(k) - X.row(l)).norm() > 0.0) {
        distinct = true;
        break;
      }
  if (!distinct) throw ValidationError("calibration needs studies with distinct covariates");

  const double target = 1.0 - coverage;
  double lo = std::log(1e-8), hi = std::log(1e8);
  const double f_lo = kernel_pair_exceedance(pool, C, variance, std::exp(lo), norm);
  const double f_hi = kernel_pair_exceedance(pool, C, variance, std::exp(hi), norm);
  // Exceedance decreases in the lengthscale: perfectly correlated effects
  // never violate the Lipschitz bound.
  if (f_lo < target || f_hi > target) {
    throw CalibrationBracketError(
        "no lengthscale attains the target exceedance: at 1e-8 the average is " +
        std::to_string(f_lo) + ", at 1e8 it is " + std::to_string(f_hi) + ", target " +
        std::to_string(target));
  }
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (kernel_pair_exceedance(pool, C, variance, std::exp(mid), norm) > target)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-14) break;
  }
  return std::exp(0.5 * (lo + hi));
}

Eigen::VectorXd wls_coefficients(const StudyPool& pool) {
  const Eigen::MatrixXd X = design_matrix(pool);
  if (X.rows() < X.cols())
    throw RankDeficientError("weighted least squares needs K >= d_x + 1 studies");
  const Eigen::VectorXd ses = pool.ses();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(X.cols(), X.cols());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(X.cols());
  for (int k = 0; k < X.rows(); ++k) {
    const double wk = 1.0 / (ses[k] * ses[k]);
    gram += wk * X.row(k).transpose() * X.row(k);
    rhs += wk * X.row(k).transpose() * pool.study(k).estimate;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
  lu.setThreshold(1e-10);
  if (lu.rank() < X.cols()) throw RankDeficientError("design matrix is rank deficient");
  return lu.solve(rhs);
}

}  // namespace evagg
