#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "odm/csv.hpp"
#include "odm/detail/json_io.hpp"
#include "odm/engine.hpp"
#include "odm/errors.hpp"
#include "odm/table_sampler.hpp"

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  os << text;
  if (!os) throw odm::ConfigError("cannot write " + path.string());
}

// ---------------------------------------------------------------- generate

int cmd_generate(long long rows, long long cols, long long agents, std::uint64_t seed,
                 const std::string& out_dir) {
  if (rows < 1 || cols < 1) throw odm::ConfigError("--rows and --cols must be >= 1");
  if (agents < 1) throw odm::ConfigError("--agents must be >= 1");
  const auto I = static_cast<std::size_t>(rows);
  const auto J = static_cast<std::size_t>(cols);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw odm::ConfigError("cannot create " + out_dir + ": " + ec.message());
  const fs::path dir(out_dir);

  const odm::Synthetic syn = odm::generate_synthetic(I, J, agents, seed);

  odm::Cost cost(I, J);
  {
    odm::Rng rng(odm::derive_seed(seed, 1));
    for (double& v : cost.raw()) v = 1.0 - rng.uniform01();
  }

  // log destination sizes, centered: the intensity is invariant to a uniform
  // shift of x (the free total soaks it up), and small inputs keep the
  // uniformly-initialized network away from saturated utilities
  std::vector<double> y(J);
  {
    const auto cm = odm::col_margins(syn.lambda);
    double mean = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      y[j] = std::log(cm[j]);
      mean += y[j];
    }
    mean /= static_cast<double>(J);
    for (std::size_t j = 0; j < J; ++j) y[j] -= mean;
  }
  std::vector<double> dist(I, 0.0);
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t j = 0; j < J; ++j)
      dist[i] += static_cast<double>(syn.truth(i, j)) * cost(i, j);

  const odm::Margins m = odm::summary_statistics(syn.truth);

  odm::write_matrix_csv((dir / "lambda.csv").string(), syn.lambda);
  odm::write_table_csv((dir / "truth.csv").string(), syn.truth);
  odm::write_matrix_csv((dir / "cost.csv").string(), cost);
  odm::write_vector_csv((dir / "y.csv").string(), y);
  odm::write_vector_csv((dir / "dist_origin.csv").string(), dist);

  {
    nlohmann::json c;
    c["row_sums"] = m.rows;
    c["col_sums"] = m.cols;
    write_text(dir / "constraints.json", c.dump(2) + "\n");
  }
  {
    nlohmann::json cfg;
    cfg["iterations"] = 5000;
    cfg["ensemble"] = 1;
    cfg["scheme"] = "joint";
    cfg["intensity_model"] = "total";
    cfg["constraints"] = "constraints.json";
    cfg["cost_matrix"] = "cost.csv";
    cfg["y"] = "y.csv";
    cfg["ground_truth"] = "truth.csv";
    cfg["hw"] = {{"epsilon", 1.0}, {"kappa", 0.0}, {"delta", 0.0}, {"sigma", 0.0}};
    cfg["seed"] = seed;
    cfg["burnin"] = 100;
    cfg["thin"] = 100;
    cfg["output_dir"] = "run";
    write_text(dir / "config.json", cfg.dump(2) + "\n");
  }

  std::cout << "wrote " << out_dir
            << "/{lambda,truth,cost,y,dist_origin}.csv, constraints.json, config.json\n"
            << "table total " << m.total << " over " << I << "x" << J << " cells\n";
  return 0;
}

// --------------------------------------------------------------------- run

int cmd_run(odm::RunConfig cfg) {
  odm::resolve_run_config(cfg);
  const odm::RunOutcome out = odm::run_engine(cfg);

  std::cout << "run directory: " << out.run_dir << "\n";
  bool any_failed = false;
  for (const auto& mbr : out.members) {
    if (mbr.ok) {
      std::cout << "member " << mbr.member << ": ok  alpha=" << odm::format_double(mbr.final_alpha)
                << " beta=" << odm::format_double(mbr.final_beta)
                << " loss=" << odm::format_double(mbr.final_loss) << "\n";
    } else {
      any_failed = true;
      std::cout << "member " << mbr.member << ": FAILED: " << mbr.error << "\n";
    }
  }
  std::cout << "retained records per member: " << out.retained_per_member << "\n";
  return any_failed ? 2 : 0;
}

// ---------------------------------------------------------------- evaluate

std::string svg_heatmap(const odm::DGrid& mean, const odm::Table& truth) {
  const std::size_t I = truth.rows();
  const std::size_t J = truth.cols();
  const int cell = std::max<int>(1, 360 / static_cast<int>(std::max(I, J)));
  const int gap = 24;
  const int top = 18;
  const int panel_w = cell * static_cast<int>(J);
  const int panel_h = cell * static_cast<int>(I);
  const int width = 2 * panel_w + 3 * gap;
  const int height = panel_h + top + 2 * gap;

  double vmax = 0.0;
  for (double v : mean.raw()) vmax = std::max(vmax, v);
  for (long long v : truth.raw()) vmax = std::max(vmax, static_cast<double>(v));
  if (vmax <= 0) vmax = 1.0;

  std::string svg;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\">\n",
                width, height);
  svg += buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  auto panel = [&](int x0, const char* label, auto value_at) {
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%d\" y=\"%d\" font-family=\"monospace\" font-size=\"12\">%s</text>\n",
                  x0, top - 4, label);
    svg += buf;
    for (std::size_t i = 0; i < I; ++i) {
      for (std::size_t j = 0; j < J; ++j) {
        const double v = value_at(i, j);
        const int g = 255 - static_cast<int>(std::lround(255.0 * std::min(1.0, v / vmax)));
        std::snprintf(buf, sizeof buf,
                      "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"#%02x%02xff\"/>\n",
                      x0 + static_cast<int>(j) * cell, top + static_cast<int>(i) * cell,
                      cell, cell, g, g);
        svg += buf;
      }
    }
  };
  panel(gap, "sample mean", [&](std::size_t i, std::size_t j) { return mean(i, j); });
  panel(2 * gap + panel_w, "ground truth",
        [&](std::size_t i, std::size_t j) { return static_cast<double>(truth(i, j)); });
  svg += "</svg>\n";
  return svg;
}

int cmd_evaluate(const std::string& run_dir, const std::string& truth_path, double q,
                 long long burnin, long long thin, bool central, bool heatmap,
                 std::string run_id, std::string out_csv) {
  // constraint tag + fallback truth location come from the resolved config
  std::string tag = "unknown";
  std::string cfg_truth;
  const fs::path cfg_path = fs::path(run_dir) / "config.resolved.json";
  if (fs::exists(cfg_path)) {
    std::ifstream in(cfg_path);
    nlohmann::json doc;
    try {
      in >> doc;
      if (doc.contains("constraints"))
        tag = odm::constraint_tag(
            odm::detail::constraints_from_json(doc["constraints"], fs::path(run_dir)));
      if (doc.contains("ground_truth")) cfg_truth = doc["ground_truth"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw odm::ConfigError(cfg_path.string() + ": " + e.what());
    }
  }

  const std::string tpath = !truth_path.empty() ? truth_path : cfg_truth;
  if (tpath.empty())
    throw odm::ConfigError("provide --truth or a ground_truth in the run config");
  const odm::Table truth = odm::read_table_csv(tpath);

  const odm::EvalReport rep = odm::evaluate_run(run_dir, truth, q, burnin, thin, central);

  if (run_id.empty()) {
    run_id = fs::path(run_dir).filename().string();
    if (run_id.empty()) run_id = run_dir;
  }
  if (out_csv.empty()) out_csv = (fs::path(run_dir) / "metrics.csv").string();
  write_text(out_csv, odm::metrics_csv(rep, run_id, tag));

  std::cout << "run_id " << run_id << "\n"
            << "tag " << tag << "\n"
            << "q " << odm::format_double(rep.q) << "\n"
            << "n_table " << rep.n_table << "\n"
            << "srmse_table " << odm::format_double(rep.srmse_table) << "\n"
            << "ssi_table " << odm::format_double(rep.ssi_table) << "\n"
            << "cp_table " << odm::format_double(rep.cp_table) << "\n"
            << "n_intensity " << rep.n_intensity << "\n"
            << "srmse_intensity " << odm::format_double(rep.srmse_intensity) << "\n"
            << "ssi_intensity " << odm::format_double(rep.ssi_intensity) << "\n"
            << "cp_intensity " << odm::format_double(rep.cp_intensity) << "\n"
            << "metrics_csv " << out_csv << "\n";

  if (heatmap) {
    // mean table for the picture, same record filter as the metrics
    const fs::path samples = fs::path(run_dir) / "samples";
    std::string stream;
    for (const char* ext : {"jsonl", "csv"}) {
      const fs::path p = samples / (std::string("table.") + ext);
      if (fs::exists(p)) {
        stream = p.string();
        break;
      }
    }
    odm::DGrid mean(truth.rows(), truth.cols());
    long long n = 0;
    for (const auto& r : odm::read_stream(stream)) {
      if (r.values.size() != mean.size()) continue;
      for (std::size_t k = 0; k < mean.size(); ++k) mean.raw()[k] += r.values[k];
      ++n;
    }
    if (n == 0) throw odm::ConfigError("no table records for the heatmap");
    for (double& v : mean.raw()) v /= static_cast<double>(n);
    const fs::path svg_path = fs::path(run_dir) / "heatmap.svg";
    write_text(svg_path, svg_heatmap(mean, truth));
    std::cout << "heatmap " << svg_path.string() << "\n";
  }
  return 0;
}

// --------------------------------------------------------------- benchmark

std::vector<std::pair<std::size_t, std::size_t>> parse_sizes(const std::string& arg) {
  std::vector<std::pair<std::size_t, std::size_t>> sizes;
  std::size_t pos = 0;
  while (pos < arg.size()) {
    std::size_t comma = arg.find(',', pos);
    if (comma == std::string::npos) comma = arg.size();
    const std::string item = arg.substr(pos, comma - pos);
    const std::size_t x = item.find('x');
    long long a = 0, b = 0;
    try {
      if (x == std::string::npos) throw std::invalid_argument("no x");
      a = std::stoll(item.substr(0, x));
      b = std::stoll(item.substr(x + 1));
    } catch (const std::exception&) {
      throw odm::ConfigError("--sizes: expected entries like 100x100, got '" + item + "'");
    }
    if (a < 2 || b < 2) throw odm::ConfigError("--sizes: each side must be >= 2");
    sizes.emplace_back(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
    pos = comma + 1;
  }
  if (sizes.empty()) throw odm::ConfigError("--sizes: empty list");
  return sizes;
}

int cmd_benchmark(const std::string& sizes_spec, int iters, double fixed_frac,
                  std::uint64_t seed, const std::string& out_csv) {
  const auto sizes = parse_sizes(sizes_spec);
  const odm::BenchReport rep = odm::run_benchmark(sizes, iters, fixed_frac, seed);
  for (const auto& r : rep.rows)
    std::cout << "size " << r.I << "x" << r.J << ": calib "
              << odm::format_double(r.calib_ms_per_iter) << " ms/iter, table "
              << odm::format_double(r.table_ms_per_iter) << " ms/iter\n";
  std::cout << "fit table_ms ~ slope*IJ + intercept: slope "
            << odm::format_double(rep.slope) << " intercept "
            << odm::format_double(rep.intercept) << " r2 " << odm::format_double(rep.r2)
            << "\n";
  if (!out_csv.empty()) {
    write_text(out_csv, odm::benchmark_csv(rep));
    std::cout << "wrote " << out_csv << "\n";
  }
  return 0;
}

// --------------------------------------------------------------- enumerate

int cmd_enumerate(const std::string& constraints_path, long long rows, long long cols,
                  long long max_size, bool count_only) {
  if (max_size < 1) throw odm::ConfigError("--max-size must be >= 1");
  const odm::ConstraintSet C = odm::load_constraints(constraints_path);
  if (rows == 0 && C.row_sums) rows = static_cast<long long>(C.row_sums->size());
  if (cols == 0 && C.col_sums) cols = static_cast<long long>(C.col_sums->size());
  if (rows < 1 || cols < 1)
    throw odm::ConfigError(
        "table shape unknown: pass --rows/--cols or constrain the margins");
  const auto fiber =
      odm::enumerate_fiber(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols),
                           C, static_cast<std::size_t>(max_size));
  std::cout << "count " << fiber.size() << "\n";
  if (count_only) return 0;
  for (const auto& T : fiber) {
    std::cout << "\n";
    for (std::size_t i = 0; i < T.rows(); ++i) {
      for (std::size_t j = 0; j < T.cols(); ++j) {
        if (j) std::cout << ',';
        std::cout << T(i, j);
      }
      std::cout << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"origin-destination intensity calibration and table sampling"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic data bundle");
  long long g_rows = 0, g_cols = 0, g_agents = 0;
  std::uint64_t g_seed = 0;
  std::string g_out;
  gen->add_option("--rows", g_rows, "origin count I")->required();
  gen->add_option("--cols", g_cols, "destination count J")->required();
  gen->add_option("--agents", g_agents, "table total A")->required();
  gen->add_option("--seed", g_seed, "stream seed");
  gen->add_option("--out", g_out, "output directory")->required();

  // run
  auto* run = app.add_subcommand("run", "calibrate and sample tables");
  std::string r_config;
  std::uint64_t r_seed = 0;
  int r_workers = 0;
  std::string r_format, r_output;
  long long r_burnin = 0, r_thin = 0;
  run->add_option("--config", r_config, "run config JSON")->required();
  auto* o_seed = run->add_option("--seed", r_seed, "master seed override");
  auto* o_workers = run->add_option("--workers", r_workers, "worker thread override");
  auto* o_format = run->add_option("--format", r_format, "stream format override (csv|jsonl)");
  auto* o_burnin = run->add_option("--burnin", r_burnin, "burn-in override");
  auto* o_thin = run->add_option("--thin", r_thin, "thinning override");
  auto* o_output = run->add_option("--output", r_output, "output directory override");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "metrics for a finished run");
  std::string e_run, e_truth, e_run_id, e_out;
  double e_q = 99.0;
  long long e_burnin = 0, e_thin = 1;
  bool e_central = false, e_heatmap = false;
  ev->add_option("--run", e_run, "run directory")->required();
  ev->add_option("--truth", e_truth, "ground truth table CSV");
  ev->add_option("--q", e_q, "coverage percentage (default 99)");
  ev->add_option("--burnin", e_burnin, "records to drop per member");
  ev->add_option("--thin", e_thin, "record-level thinning");
  ev->add_flag("--central", e_central, "central quantile intervals instead of shortest");
  ev->add_flag("--heatmap", e_heatmap, "write heatmap.svg into the run directory");
  ev->add_option("--run-id", e_run_id, "label for the metrics CSV");
  ev->add_option("--out", e_out, "metrics CSV path (default <run>/metrics.csv)");

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "per-iteration timing across sizes");
  std::string b_sizes = "100x100,200x200,300x300,400x400,500x500";
  int b_iters = 50;
  double b_fixed = 0.5;
  std::uint64_t b_seed = 0;
  std::string b_out = "timings.csv";
  bench->add_option("--sizes", b_sizes, "comma list of IxJ sizes");
  bench->add_option("--iters", b_iters, "timed iterations per size");
  bench->add_option("--fixed-frac", b_fixed, "fraction of cells fixed at truth");
  bench->add_option("--seed", b_seed, "stream seed");
  bench->add_option("--out", b_out, "timings CSV path (empty: skip)");

  // enumerate
  auto* en = app.add_subcommand("enumerate", "list every table satisfying a constraint set");
  std::string n_constraints;
  long long n_rows = 0, n_cols = 0, n_max = 1000000;
  bool n_count_only = false;
  en->add_option("--constraints", n_constraints, "constraints JSON")->required();
  en->add_option("--rows", n_rows, "table rows I (default: inferred from row_sums)");
  en->add_option("--cols", n_cols, "table cols J (default: inferred from col_sums)");
  en->add_option("--max-size", n_max, "abort beyond this many tables");
  en->add_flag("--count-only", n_count_only, "print only the count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (gen->parsed())
      return cmd_generate(g_rows, g_cols, g_agents, g_seed, g_out);
    if (run->parsed()) {
      odm::RunConfig cfg = odm::load_run_config(r_config);
      if (o_seed->count()) cfg.seed = r_seed;
      if (o_workers->count()) cfg.workers = r_workers;
      if (o_format->count()) {
        if (r_format == "csv") cfg.format = odm::StreamFormat::CSV;
        else if (r_format == "jsonl") cfg.format = odm::StreamFormat::JSONL;
        else throw odm::ConfigError("--format: expected csv or jsonl");
      }
      if (o_burnin->count()) cfg.burnin = r_burnin;
      if (o_thin->count()) cfg.thin = r_thin;
      if (o_output->count()) cfg.output_dir = fs::absolute(r_output).string();
      return cmd_run(std::move(cfg));
    }
    if (ev->parsed())
      return cmd_evaluate(e_run, e_truth, e_q, e_burnin, e_thin, e_central, e_heatmap,
                          e_run_id, e_out);
    if (bench->parsed())
      return cmd_benchmark(b_sizes, b_iters, b_fixed, b_seed, b_out);
    if (en->parsed())
      return cmd_enumerate(n_constraints, n_rows, n_cols, n_max, n_count_only);
  } catch (const odm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
