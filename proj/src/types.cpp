#include "evagg/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace evagg {

namespace {

bool finite_all(const Eigen::MatrixXd& m) {
  return m.allFinite();
}

}  // namespace

StudyPool::StudyPool(std::vector<Study> studies, std::vector<std::string> covariate_names)
    : studies_(std::move(studies)), covariate_names_(std::move(covariate_names)) {
  if (studies_.empty()) throw ValidationError("study pool must contain at least one study");
  const std::size_t d = covariate_names_.size();
  std::set<std::string> seen;
  for (const Study& s : studies_) {
    if (s.id.empty()) throw ValidationError("study id must be non-empty");
    if (!seen.insert(s.id).second) throw ValidationError("duplicate study id: " + s.id);
    if (!(s.se > 0.0) || !std::isfinite(s.se))
      throw ValidationError("study " + s.id + ": standard error must be positive");
    if (!std::isfinite(s.estimate))
      throw ValidationError("study " + s.id + ": estimate must be finite");
    if (s.covariates.size() != d) {
      std::ostringstream msg;
      msg << "study " << s.id << ": expected " << d << " covariates, got "
          << s.covariates.size();
      throw ValidationError(msg.str());
    }
    for (double v : s.covariates)
      if (!std::isfinite(v)) throw ValidationError("study " + s.id + ": non-finite covariate");
  }
  std::set<std::string> name_seen;
  for (const auto& n : covariate_names_) {
    if (n.empty()) throw ValidationError("covariate name must be non-empty");
    if (!name_seen.insert(n).second) throw ValidationError("duplicate covariate name: " + n);
  }
  transforms_.assign(d, ColumnTransform{});
}

int StudyPool::covariate_index(const std::string& name) const {
  for (std::size_t j = 0; j < covariate_names_.size(); ++j)
    if (covariate_names_[j] == name) return static_cast<int>(j);
  return -1;
}

Eigen::VectorXd StudyPool::estimates() const {
  Eigen::VectorXd v(num_studies());
  for (int k = 0; k < num_studies(); ++k) v[k] = studies_[k].estimate;
  return v;
}

Eigen::VectorXd StudyPool::ses() const {
  Eigen::VectorXd v(num_studies());
  for (int k = 0; k < num_studies(); ++k) v[k] = studies_[k].se;
  return v;
}

Eigen::MatrixXd StudyPool::covariates() const {
  Eigen::MatrixXd m(num_studies(), dim());
  for (int k = 0; k < num_studies(); ++k)
    for (int j = 0; j < dim(); ++j) m(k, j) = studies_[k].covariates[j];
  return m;
}

StudyPool StudyPool::standardized(const std::vector<std::string>& columns) const {
  StudyPool out = *this;
  const int K = num_studies();
  for (const auto& name : columns) {
    const int j = covariate_index(name);
    if (j < 0) throw ValidationError("unknown covariate to standardize: " + name);
    if (transforms_[j].active)
      throw ValidationError("covariate already standardized: " + name);
    double mean = 0.0;
    for (int k = 0; k < K; ++k) mean += studies_[k].covariates[j];
    mean /= K;
    double ss = 0.0;
    for (int k = 0; k < K; ++k) {
      const double d = studies_[k].covariates[j] - mean;
      ss += d * d;
    }
    const double sd = K > 1 ? std::sqrt(ss / (K - 1)) : 0.0;
    if (!(sd > 0.0))
      throw ValidationError("covariate has zero variance, cannot standardize: " + name);
    for (int k = 0; k < K; ++k)
      out.studies_[k].covariates[j] = (studies_[k].covariates[j] - mean) / sd;
    out.transforms_[j] = ColumnTransform{mean, sd, true};
  }
  return out;
}

StudyPool StudyPool::standardized_all() const {
  return standardized(covariate_names_);
}

std::vector<double> StudyPool::transform_target(const std::vector<double>& x0_raw) const {
  if (x0_raw.size() != static_cast<std::size_t>(dim()))
    throw ValidationError("target covariate length does not match the pool");
  std::vector<double> out(x0_raw);
  for (int j = 0; j < dim(); ++j)
    if (transforms_[j].active) out[j] = (x0_raw[j] - transforms_[j].mean) / transforms_[j].scale;
  return out;
}

Eigen::VectorXd target_x0(const TargetSpec& target) {
  Eigen::VectorXd v(static_cast<int>(target.x0.size()));
  for (std::size_t j = 0; j < target.x0.size(); ++j) v[static_cast<int>(j)] = target.x0[j];
  return v;
}

MetaBox::MetaBox(std::vector<double> half_widths_in) : half_widths(std::move(half_widths_in)) {
  if (half_widths.empty()) throw ValidationError("meta box needs at least one half-width");
  for (double c : half_widths)
    if (!(c >= 0.0) || !std::isfinite(c))
      throw ValidationError("meta box half-widths must be finite and >= 0");
}

MetaPolyhedron::MetaPolyhedron(Eigen::MatrixXd A_in, Eigen::VectorXd c_in)
    : A(std::move(A_in)), c(std::move(c_in)) {
  if (A.rows() == 0 || A.cols() == 0) throw ValidationError("meta polyhedron must be non-empty");
  if (A.rows() != c.size()) throw ValidationError("meta polyhedron rhs length mismatch");
  if (!finite_all(A) || !c.allFinite())
    throw ValidationError("meta polyhedron entries must be finite");
  // Symmetry about the origin: every row must have a mirrored partner.
  const double tol = 1e-12;
  std::vector<bool> matched(A.rows(), false);
  for (int i = 0; i < A.rows(); ++i) {
    bool found = false;
    for (int j = 0; j < A.rows(); ++j) {
      if (matched[j] && i != j) continue;
      if (std::abs(c[i] - c[j]) > tol) continue;
      if ((A.row(i) + A.row(j)).cwiseAbs().maxCoeff() <= tol) {
        found = true;
        matched[j] = true;
        break;
      }
    }
    if (!found)
      throw ValidationError("meta polyhedron is not symmetric about 0: row without mirror");
  }
}

LipschitzPairwise::LipschitzPairwise(Eigen::MatrixXd C_in) : C(std::move(C_in)) {
  if (C.rows() != C.cols() || C.rows() < 2)
    throw ValidationError("pairwise constants must form a square (K+1)x(K+1) matrix");
  for (int i = 0; i < C.rows(); ++i) {
    if (C(i, i) != 0.0) throw ValidationError("pairwise constants must have a zero diagonal");
    for (int j = 0; j < C.cols(); ++j) {
      if (!std::isfinite(C(i, j)) || C(i, j) < 0.0)
        throw ValidationError("pairwise constants must be finite and >= 0");
      if (C(i, j) != C(j, i)) throw ValidationError("pairwise constants must be symmetric");
    }
  }
}

LipschitzMetric::LipschitzMetric(double C_in) : C(C_in) {
  if (!(C >= 0.0) || !std::isfinite(C))
    throw ValidationError("Lipschitz constant must be finite and >= 0");
}

Eigen::MatrixXd pairwise_constants(const LipschitzMetric& space, const StudyPool& pool,
                                   const TargetSpec& target) {
  const int K = pool.num_studies();
  Eigen::MatrixXd X(K + 1, pool.dim());
  X.row(0) = target_x0(target).transpose();
  X.bottomRows(K) = pool.covariates();
  Eigen::MatrixXd C(K + 1, K + 1);
  for (int i = 0; i <= K; ++i) {
    C(i, i) = 0.0;
    for (int j = i + 1; j <= K; ++j) {
      const double d = (X.row(i) - X.row(j)).norm();
      C(i, j) = C(j, i) = space.C * d;
    }
  }
  return C;
}

void check_space_compatible(const ParameterSpace& space, const StudyPool& pool,
                            const TargetSpec& target) {
  if (target.x0.size() != static_cast<std::size_t>(pool.dim()))
    throw ValidationError("target covariate length does not match the pool");
  if (const auto* box = std::get_if<MetaBox>(&space)) {
    if (box->half_widths.size() != static_cast<std::size_t>(pool.dim()))
      throw ValidationError("meta box dimension does not match the pool");
  } else if (const auto* poly = std::get_if<MetaPolyhedron>(&space)) {
    if (poly->A.cols() != pool.dim())
      throw ValidationError("meta polyhedron dimension does not match the pool");
  } else if (const auto* pw = std::get_if<LipschitzPairwise>(&space)) {
    if (pw->C.rows() != pool.num_studies() + 1)
      throw ValidationError("pairwise constants must be (K+1)x(K+1) including the target");
  }
}

WeightVector::WeightVector(std::vector<double> w) : w_(std::move(w)) {
  if (w_.empty()) throw ValidationError("weight vector must be non-empty");
  double sum = 0.0;
  for (double v : w_) {
    if (!std::isfinite(v)) throw ValidationError("weights must be finite");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTol)
    throw ValidationError("weights must sum to one");
}

WeightVector::WeightVector(const Eigen::VectorXd& w)
    : WeightVector(std::vector<double>(w.data(), w.data() + w.size())) {}

Eigen::VectorXd WeightVector::as_eigen() const {
  Eigen::VectorXd v(size());
  for (int k = 0; k < size(); ++k) v[k] = w_[k];
  return v;
}

double sd_of(const Eigen::VectorXd& w, const Eigen::VectorXd& ses) {
  double ss = 0.0;
  for (int k = 0; k < w.size(); ++k) ss += w[k] * w[k] * ses[k] * ses[k];
  return std::sqrt(ss);
}

double sd_of(const WeightVector& w, const StudyPool& pool) {
  if (w.size() != pool.num_studies())
    throw ValidationError("weight vector length does not match the pool");
  return sd_of(w.as_eigen(), pool.ses());
}

}  // namespace evagg
