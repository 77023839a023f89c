#include "evagg/config.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "evagg/io.hpp"

namespace evagg {

namespace {

using nlohmann::json;

Eigen::MatrixXd parse_matrix(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ValidationError(what + " must be an array of rows");
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd m(j.size(), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols)
      throw ValidationError(what + " has ragged rows");
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

Eigen::VectorXd parse_vector(const json& j, const std::string& what) {
  if (!j.is_array()) throw ValidationError(what + " must be an array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("config parse error: " + std::string(e.what()));
  }
  RunConfig cfg;
  try {
    if (!j.contains("pool")) throw ValidationError("config needs a pool path");
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    cfg.pool_path = (base / j.at("pool").get<std::string>()).string();

    if (j.contains("standardize")) {
      const auto& s = j.at("standardize");
      if (s.is_boolean())
        cfg.standardize_all = s.get<bool>();
      else
        cfg.standardize = s.get<std::vector<std::string>>();
    }

    if (j.contains("target")) {
      const auto& t = j.at("target");
      if (t.contains("x0")) {
        const auto& x0 = t.at("x0");
        if (x0.is_object())
          cfg.target_by_name = x0.get<std::map<std::string, double>>();
        else
          cfg.target_values = x0.get<std::vector<double>>();
      }
      cfg.cost = t.value("cost", 0.0);
    }

    if (j.contains("space")) {
      const auto& s = j.at("space");
      cfg.space_type = s.at("type").get<std::string>();
      if (cfg.space_type == "meta_box")
        cfg.box_half_widths = s.at("half_widths").get<std::vector<double>>();
      else if (cfg.space_type == "meta_polyhedron") {
        cfg.poly_A = parse_matrix(s.at("A"), "space.A");
        cfg.poly_c = parse_vector(s.at("c"), "space.c");
      } else if (cfg.space_type == "lipschitz_metric")
        cfg.lipschitz_C = s.at("C").get<double>();
      else if (cfg.space_type == "lipschitz_pairwise")
        cfg.pairwise_C = parse_matrix(s.at("C"), "space.C");
      else
        throw ValidationError("unknown space type: " + cfg.space_type);
    }

    if (j.contains("rules")) cfg.rules = j.at("rules").get<std::vector<std::string>>();

    if (j.contains("hb_prior")) {
      const auto& p = j.at("hb_prior");
      cfg.prior_type = p.at("type").get<std::string>();
      if (cfg.prior_type == "meta_gaussian")
        cfg.prior_sigma = parse_matrix(p.at("sigma"), "hb_prior.sigma");
      else if (cfg.prior_type == "kernel") {
        cfg.prior_variance = p.value("variance", 10.0);
        cfg.prior_lengthscale = p.at("lengthscale").get<double>();
      } else if (cfg.prior_type == "kernel_calibrated") {
        cfg.prior_variance = p.value("variance", 10.0);
        cfg.prior_coverage = p.value("coverage", 0.95);
        cfg.prior_normalizer = p.value("normalizer", std::string("paper"));
        if (cfg.prior_normalizer != "paper" && cfg.prior_normalizer != "pairs")
          throw ValidationError("hb_prior.normalizer must be paper or pairs");
      } else
        throw ValidationError("unknown hb prior type: " + cfg.prior_type);
    }

    cfg.alpha = j.value("alpha", 0.05);
    cfg.region_type = j.value("region", std::string("hyper_rectangle"));
    if (cfg.region_type != "hyper_rectangle" && cfg.region_type != "meta_ellipsoid")
      throw ValidationError("unknown region type: " + cfg.region_type);

    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      cfg.solver.multistart_count = s.value("multistart_count", cfg.solver.multistart_count);
      cfg.solver.objective_tol = s.value("objective_tol", cfg.solver.objective_tol);
      cfg.solver.max_iters = s.value("max_iters", cfg.solver.max_iters);
      cfg.solver.seed = s.value("seed", cfg.solver.seed);
    }

    if (j.contains("cv")) cfg.cv_grid = j.at("cv").value("grid", std::vector<double>{});

    if (j.contains("heatmap")) {
      const auto& h = j.at("heatmap");
      cfg.heatmap_vary = h.at("vary").get<std::vector<std::string>>();
      cfg.heatmap_min = h.at("min").get<std::vector<double>>();
      cfg.heatmap_max = h.at("max").get<std::vector<double>>();
      cfg.heatmap_count = h.at("count").get<std::vector<int>>();
    }

    if (j.contains("eta")) {
      cfg.eta_a_max = j.at("eta").value("a_max", 10.0);
      cfg.eta_spacing = j.at("eta").value("spacing", 0.05);
    }

    if (j.contains("output")) {
      cfg.out_format = j.at("output").value("format", std::string("json"));
      cfg.out_path = j.at("output").value("path", std::string());
      if (!cfg.out_path.empty())
        cfg.out_path = (base / cfg.out_path).string();
    }
    if (cfg.out_format != "json" && cfg.out_format != "csv" && cfg.out_format != "text")
      throw ValidationError("output format must be json, csv, or text");
  } catch (const json::exception& e) {
    throw ValidationError("config error: " + std::string(e.what()));
  }
  return cfg;
}

StudyPool build_pool(const RunConfig& cfg) {
  return load_pool(read_pool_csv_file(cfg.pool_path), cfg.standardize, cfg.standardize_all);
}

TargetSpec build_target(const RunConfig& cfg, const StudyPool& pool) {
  std::vector<double> raw;
  if (!cfg.target_by_name.empty()) {
    raw.assign(pool.dim(), 0.0);
    std::vector<bool> seen(pool.dim(), false);
    for (const auto& [name, value] : cfg.target_by_name) {
      const int j = pool.covariate_index(name);
      if (j < 0) throw ValidationError("target covariate not in the pool header: " + name);
      raw[j] = value;
      seen[j] = true;
    }
    for (int j = 0; j < pool.dim(); ++j)
      if (!seen[j])
        throw ValidationError("target is missing covariate: " + pool.covariate_names()[j]);
  } else {
    if (cfg.target_values.size() != static_cast<std::size_t>(pool.dim()))
      throw ValidationError("target x0 length does not match the pool");
    raw = cfg.target_values;
  }
  return TargetSpec{pool.transform_target(raw), cfg.cost};
}

ParameterSpace build_space(const RunConfig& cfg) {
  if (cfg.space_type == "meta_box") return MetaBox(cfg.box_half_widths);
  if (cfg.space_type == "meta_polyhedron") return MetaPolyhedron(cfg.poly_A, cfg.poly_c);
  if (cfg.space_type == "lipschitz_metric") return LipschitzMetric(cfg.lipschitz_C);
  if (cfg.space_type == "lipschitz_pairwise") return LipschitzPairwise(cfg.pairwise_C);
  throw ValidationError("config has no parameter space");
}

std::optional<HBPrior> build_prior(const RunConfig& cfg, const StudyPool& pool) {
  if (cfg.prior_type.empty()) return std::nullopt;
  if (cfg.prior_type == "meta_gaussian") return HBPrior{MetaGaussianPrior{cfg.prior_sigma}};
  if (cfg.prior_type == "kernel")
    return HBPrior{KernelGaussianPrior{cfg.prior_variance, cfg.prior_lengthscale}};
  // kernel_calibrated: the lengthscale comes from the exceedance condition
  // under the scenario's Lipschitz constant.
  if (cfg.space_type != "lipschitz_metric")
    throw ValidationError("kernel_calibrated prior needs a lipschitz_metric space");
  const PairNormalizer norm = cfg.prior_normalizer == "paper"
                                  ? PairNormalizer::HalfKTimesKPlus1
                                  : PairNormalizer::ObservedPairs;
  const double a = calibrate_kernel_lengthscale(pool, cfg.lipschitz_C, cfg.prior_coverage,
                                                cfg.prior_variance, norm);
  return HBPrior{KernelGaussianPrior{cfg.prior_variance, a}};
}

}  // namespace evagg
