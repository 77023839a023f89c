#ifndef EVAGG_CONFIG_HPP
#define EVAGG_CONFIG_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evagg/solvers.hpp"
#include "evagg/types.hpp"

namespace evagg {

// Parsed run configuration (JSON file; see README for the schema). Paths are
// resolved relative to the config file's directory.
struct RunConfig {
  std::string pool_path;
  std::vector<std::string> standardize;
  bool standardize_all = false;

  // Target covariates either by name or positionally, in raw (pre-
  // standardization) units; the pool's transform is applied on load.
  std::map<std::string, double> target_by_name;
  std::vector<double> target_values;
  double cost = 0.0;

  std::string space_type;  // meta_box | meta_polyhedron | lipschitz_metric | lipschitz_pairwise
  std::vector<double> box_half_widths;
  Eigen::MatrixXd poly_A;
  Eigen::VectorXd poly_c;
  double lipschitz_C = 0.0;
  Eigen::MatrixXd pairwise_C;

  std::vector<std::string> rules{"minimax", "mse", "ols", "hb"};

  std::string prior_type;  // "" | meta_gaussian | kernel | kernel_calibrated
  Eigen::MatrixXd prior_sigma;
  double prior_variance = 10.0;
  double prior_lengthscale = 0.0;
  double prior_coverage = 0.95;
  std::string prior_normalizer = "paper";  // paper | pairs

  double alpha = 0.05;
  std::string region_type = "hyper_rectangle";  // hyper_rectangle | meta_ellipsoid

  SolverConfig solver;

  std::vector<double> cv_grid;  // empty: default grid

  std::vector<std::string> heatmap_vary;
  std::vector<double> heatmap_min, heatmap_max;
  std::vector<int> heatmap_count;

  double eta_a_max = 10.0;
  double eta_spacing = 0.05;

  std::string out_format = "json";  // json | csv | text
  std::string out_path;             // empty: stdout
};

RunConfig load_config(const std::string& path);

// Materialization helpers shared by the CLI subcommands.
StudyPool build_pool(const RunConfig& cfg);
TargetSpec build_target(const RunConfig& cfg, const StudyPool& pool);
ParameterSpace build_space(const RunConfig& cfg);
std::optional<HBPrior> build_prior(const RunConfig& cfg, const StudyPool& pool);

}  // namespace evagg

#endif  // EVAGG_CONFIG_HPP
