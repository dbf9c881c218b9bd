#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>

#include "json.hpp"
#include "odm/csv.hpp"
#include "odm/detail/json_io.hpp"
#include "odm/engine.hpp"
#include "odm/errors.hpp"
#include "odm/table_sampler.hpp"

namespace odm {

namespace {

long long get_int(const nlohmann::json& v, const char* key, long long lo) {
  if (!v.is_number_integer())
    throw ConfigError(std::string(key) + ": expected an integer");
  const long long n = v.get<long long>();
  if (n < lo)
    throw ConfigError(std::string(key) + ": must be >= " + std::to_string(lo));
  return n;
}

double get_num(const nlohmann::json& v, const char* key) {
  if (!v.is_number()) throw ConfigError(std::string(key) + ": expected a number");
  return v.get<double>();
}

std::string get_str(const nlohmann::json& v, const char* key) {
  if (!v.is_string()) throw ConfigError(std::string(key) + ": expected a string");
  return v.get<std::string>();
}

bool get_flag(const nlohmann::json& v, const char* key) {
  if (!v.is_boolean()) throw ConfigError(std::string(key) + ": expected a boolean");
  return v.get<bool>();
}

void parse_hw(const nlohmann::json& obj, HWParams& hw) {
  if (!obj.is_object()) throw ConfigError("hw: expected an object");
  for (const auto& [k, v] : obj.items()) {
    if (k == "epsilon") {
      hw.epsilon = get_num(v, "hw.epsilon");
    } else if (k == "kappa") {
      hw.kappa = get_num(v, "hw.kappa");
    } else if (k == "delta") {
      hw.delta = get_num(v, "hw.delta");
    } else if (k == "sigma") {
      if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "low") hw.sigma = 0.014;
        else if (s == "high") hw.sigma = 0.141;
        else throw ConfigError("hw.sigma: string presets are \"low\" and \"high\"");
      } else {
        hw.sigma = get_num(v, "hw.sigma");
      }
    } else {
      throw ConfigError("hw: unknown key '" + k + "'");
    }
  }
}

void parse_solver(const nlohmann::json& obj, SolverConfig& sc) {
  if (!obj.is_object()) throw ConfigError("solver: expected an object");
  for (const auto& [k, v] : obj.items()) {
    if (k == "dt") sc.dt = get_num(v, "solver.dt");
    else if (k == "tau") sc.tau = static_cast<int>(get_int(v, "solver.tau", 1));
    else throw ConfigError("solver: unknown key '" + k + "'");
  }
}

void parse_loss(const nlohmann::json& obj, LossConfig& lc) {
  if (!obj.is_object()) throw ConfigError("loss: expected an object");
  for (const auto& [k, v] : obj.items()) {
    if (k == "sigma_d") lc.sigma_d = get_num(v, "loss.sigma_d");
    else if (k == "sigma_T") lc.sigma_T = get_num(v, "loss.sigma_T");
    else if (k == "sigma_L") lc.sigma_L = get_num(v, "loss.sigma_L");
    else if (k == "use_distance_term") lc.use_distance_term = get_flag(v, "loss.use_distance_term");
    else throw ConfigError("loss: unknown key '" + k + "'");
  }
}

std::string resolve_path(const std::string& base, const std::string& p) {
  std::filesystem::path fp(p);
  if (fp.is_absolute()) return p;
  return (std::filesystem::path(base) / fp).string();
}

nlohmann::json constraints_json(const ConstraintSet& C) {
  nlohmann::json j = nlohmann::json::object();
  if (C.total) j["total"] = *C.total;
  if (C.row_sums) j["row_sums"] = *C.row_sums;
  if (C.col_sums) j["col_sums"] = *C.col_sums;
  if (!C.fixed_cells.empty()) {
    auto arr = nlohmann::json::array();
    for (const auto& f : C.fixed_cells)
      arr.push_back({static_cast<long long>(f.i + 1), static_cast<long long>(f.j + 1),
                     f.value});
    j["fixed_cells"] = arr;
  }
  if (C.symmetric) j["symmetric"] = true;
  return j;
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config file: expected an object");

  RunConfig cfg;
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  cfg.base_dir = base.empty() ? std::string(".") : base.string();

  for (const auto& [key, val] : doc.items()) {
    if (key == "iterations") {
      cfg.iterations = get_int(val, "iterations", 1);
    } else if (key == "ensemble") {
      cfg.ensemble = static_cast<int>(get_int(val, "ensemble", 1));
    } else if (key == "scheme") {
      const std::string s = get_str(val, "scheme");
      if (s == "joint") cfg.scheme = Scheme::JOINT;
      else if (s == "disjoint") cfg.scheme = Scheme::DISJOINT;
      else throw ConfigError("scheme: expected \"joint\" or \"disjoint\"");
    } else if (key == "intensity_model") {
      const std::string s = get_str(val, "intensity_model");
      if (s == "total") cfg.model = IntensityModel::TOTAL;
      else if (s == "singly") cfg.model = IntensityModel::SINGLY;
      else throw ConfigError("intensity_model: expected \"total\" or \"singly\"");
    } else if (key == "constraints") {
      if (val.is_string())
        cfg.constraints = load_constraints(resolve_path(cfg.base_dir, val.get<std::string>()));
      else
        cfg.constraints = detail::constraints_from_json(val, base);
    } else if (key == "cost_matrix") {
      cfg.cost_path = get_str(val, "cost_matrix");
    } else if (key == "y") {
      cfg.y_path = get_str(val, "y");
    } else if (key == "dist_origin") {
      cfg.dist_origin_path = get_str(val, "dist_origin");
    } else if (key == "ground_truth") {
      cfg.truth_path = get_str(val, "ground_truth");
    } else if (key == "origin_offsets") {
      cfg.offsets_path = get_str(val, "origin_offsets");
    } else if (key == "hw") {
      parse_hw(val, cfg.hw);
    } else if (key == "solver") {
      parse_solver(val, cfg.solver);
    } else if (key == "loss") {
      parse_loss(val, cfg.loss);
    } else if (key == "adam_lr") {
      cfg.adam_lr = get_num(val, "adam_lr");
    } else if (key == "hidden") {
      cfg.hidden = static_cast<std::size_t>(get_int(val, "hidden", 1));
    } else if (key == "theta_max") {
      cfg.theta_max = get_num(val, "theta_max");
    } else if (key == "gibbs_per_iter") {
      cfg.gibbs_per_iter = static_cast<int>(get_int(val, "gibbs_per_iter", 1));
    } else if (key == "seed") {
      if (!val.is_number_integer() || (val.is_number_integer() && !val.is_number_unsigned() && val.get<long long>() < 0))
        throw ConfigError("seed: expected a non-negative integer");
      cfg.seed = val.get<std::uint64_t>();
    } else if (key == "burnin") {
      cfg.burnin = get_int(val, "burnin", 0);
    } else if (key == "thin") {
      cfg.thin = get_int(val, "thin", 1);
    } else if (key == "workers") {
      cfg.workers = static_cast<int>(get_int(val, "workers", 1));
    } else if (key == "format") {
      const std::string s = get_str(val, "format");
      if (s == "csv") cfg.format = StreamFormat::CSV;
      else if (s == "jsonl") cfg.format = StreamFormat::JSONL;
      else throw ConfigError("format: expected \"csv\" or \"jsonl\"");
    } else if (key == "output_dir") {
      cfg.output_dir = get_str(val, "output_dir");
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
  return cfg;
}

void resolve_run_config(RunConfig& cfg) {
  if (cfg.iterations < 1) throw ConfigError("iterations must be >= 1");
  if (cfg.ensemble < 1) throw ConfigError("ensemble must be >= 1");
  if (cfg.burnin < 0) throw ConfigError("burnin must be >= 0");
  if (cfg.thin < 1) throw ConfigError("thin must be >= 1");
  if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
  if (cfg.gibbs_per_iter < 1) throw ConfigError("gibbs_per_iter must be >= 1");
  if (!(cfg.adam_lr > 0)) throw ConfigError("adam_lr must be > 0");
  if (cfg.hidden < 1) throw ConfigError("hidden must be >= 1");
  if (!(cfg.hw.epsilon > 0)) throw ConfigError("hw.epsilon must be > 0");
  if (cfg.hw.delta < 0) throw ConfigError("hw.delta must be >= 0");
  if (cfg.hw.sigma < 0) throw ConfigError("hw.sigma must be >= 0");
  if (!(cfg.solver.dt > 0) || cfg.solver.dt > 1)
    throw ConfigError("solver.dt must be in (0, 1]");
  if (cfg.solver.tau < 1) throw ConfigError("solver.tau must be >= 1");
  if (cfg.output_dir.empty()) throw ConfigError("output_dir must not be empty");
  cfg.output_dir = resolve_path(cfg.base_dir, cfg.output_dir);

  if (cfg.cost_path.empty()) throw ConfigError("config: cost_matrix is required");
  cfg.cost = read_matrix_csv(resolve_path(cfg.base_dir, cfg.cost_path));
  const std::size_t I = cfg.cost.rows();
  const std::size_t J = cfg.cost.cols();

  if (cfg.y_path.empty()) throw ConfigError("config: y is required");
  {
    auto y = read_vector_csv(resolve_path(cfg.base_dir, cfg.y_path));
    if (y.size() != J)
      throw ConfigError("y: expected " + std::to_string(J) + " entries, got " +
                        std::to_string(y.size()));
    cfg.data.y = std::move(y);
  }
  if (!cfg.dist_origin_path.empty()) {
    auto d = read_vector_csv(resolve_path(cfg.base_dir, cfg.dist_origin_path));
    if (d.size() != I)
      throw ConfigError("dist_origin: expected " + std::to_string(I) +
                        " entries, got " + std::to_string(d.size()));
    cfg.data.dist_origin = std::move(d);
  }
  if (!cfg.truth_path.empty()) {
    IGrid t = read_table_csv(resolve_path(cfg.base_dir, cfg.truth_path));
    if (t.rows() != I || t.cols() != J)
      throw ConfigError("ground_truth: shape mismatch with cost matrix");
    cfg.data.ground_truth = std::move(t);
  }
  if (!cfg.offsets_path.empty()) {
    auto o = read_vector_csv(resolve_path(cfg.base_dir, cfg.offsets_path));
    if (o.size() != I)
      throw ConfigError("origin_offsets: expected " + std::to_string(I) +
                        " entries, got " + std::to_string(o.size()));
    cfg.origin_offsets = std::move(o);
  }

  const Tractability tract = validate_constraints(cfg.constraints, I, J);
  if (tract == Tractability::INTRACTABLE) {
    const ConstraintSet canon = canonicalize_constraints(cfg.constraints);
    if (!(canon.has_rows() && canon.has_cols()))
      throw ConfigError(
          "chain sampling needs both margins; symmetric sets must carry "
          "row_sums or col_sums");
  }

  if (cfg.model == IntensityModel::SINGLY) {
    if (!cfg.constraints.has_rows())
      throw ConfigError("singly constrained intensity needs constraints.row_sums");
    const auto& rs = *cfg.constraints.row_sums;
    cfg.row_totals.assign(rs.begin(), rs.end());
    cfg.lambda_total = std::accumulate(cfg.row_totals.begin(), cfg.row_totals.end(), 0.0);
  } else {
    cfg.row_totals.clear();
    if (cfg.constraints.total) {
      cfg.lambda_total = static_cast<double>(*cfg.constraints.total);
    } else if (cfg.constraints.has_rows()) {
      const auto& rs = *cfg.constraints.row_sums;
      cfg.lambda_total = std::accumulate(rs.begin(), rs.end(), 0.0);
    } else if (cfg.constraints.has_cols()) {
      const auto& cs = *cfg.constraints.col_sums;
      cfg.lambda_total = std::accumulate(cs.begin(), cs.end(), 0.0);
    } else if (cfg.data.ground_truth) {
      cfg.lambda_total = static_cast<double>(summary_statistics(*cfg.data.ground_truth).total);
    } else {
      throw ConfigError(
          "total intensity mass undetermined: provide constraints.total, a "
          "margin family, or ground_truth");
    }
  }
  if (!(cfg.lambda_total > 0))
    throw ConfigError("total intensity mass must be > 0");

  cfg.loss.scheme = cfg.scheme;
  if (cfg.loss.sigma_d <= 0) cfg.loss.sigma_d = default_sigma_d(J);
  if (cfg.loss.use_distance_term && !cfg.data.dist_origin)
    throw ConfigError("loss.use_distance_term needs dist_origin");
  if (cfg.hw.kappa <= 0)
    cfg.hw.kappa = compute_kappa(cfg.lambda_total, cfg.hw.delta, *cfg.data.y);

  cfg.resolved = true;
}

std::string resolved_config_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["iterations"] = cfg.iterations;
  j["ensemble"] = cfg.ensemble;
  j["scheme"] = cfg.scheme == Scheme::JOINT ? "joint" : "disjoint";
  j["intensity_model"] = cfg.model == IntensityModel::TOTAL ? "total" : "singly";
  j["constraints"] = constraints_json(cfg.constraints);
  auto abs_path = [&cfg](const std::string& p) {
    return std::filesystem::absolute(resolve_path(cfg.base_dir, p)).string();
  };
  j["cost_matrix"] = abs_path(cfg.cost_path);
  j["y"] = abs_path(cfg.y_path);
  if (!cfg.dist_origin_path.empty()) j["dist_origin"] = abs_path(cfg.dist_origin_path);
  if (!cfg.truth_path.empty()) j["ground_truth"] = abs_path(cfg.truth_path);
  if (!cfg.offsets_path.empty()) j["origin_offsets"] = abs_path(cfg.offsets_path);
  j["hw"] = {{"epsilon", cfg.hw.epsilon},
             {"kappa", cfg.hw.kappa},
             {"delta", cfg.hw.delta},
             {"sigma", cfg.hw.sigma}};
  j["solver"] = {{"dt", cfg.solver.dt}, {"tau", cfg.solver.tau}};
  j["loss"] = {{"sigma_d", cfg.loss.sigma_d},
               {"sigma_T", cfg.loss.sigma_T},
               {"sigma_L", cfg.loss.sigma_L},
               {"use_distance_term", cfg.loss.use_distance_term}};
  j["adam_lr"] = cfg.adam_lr;
  j["hidden"] = cfg.hidden;
  j["theta_max"] = cfg.theta_max;
  j["gibbs_per_iter"] = cfg.gibbs_per_iter;
  j["seed"] = cfg.seed;
  j["burnin"] = cfg.burnin;
  j["thin"] = cfg.thin;
  j["workers"] = cfg.workers;
  j["format"] = cfg.format == StreamFormat::CSV ? "csv" : "jsonl";
  j["output_dir"] = cfg.output_dir;
  return j.dump(2) + "\n";
}

}  // namespace odm
