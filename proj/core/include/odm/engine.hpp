#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "odm/constraints.hpp"
#include "odm/harris_wilson.hpp"
#include "odm/neural.hpp"
#include "odm/observed.hpp"
#include "odm/sim.hpp"
#include "odm/table.hpp"

namespace odm {

enum class StreamFormat { CSV, JSONL };

// Full description of a calibration + table-sampling run.  Loaded from a JSON
// config file (see load_run_config) and finalized by resolve_run_config, which
// reads the input matrices and fills the derived fields at the bottom.
struct RunConfig {
  long long iterations = 1000;  // outer loop length N
  int ensemble = 1;             // independent members E
  Scheme scheme = Scheme::DISJOINT;
  IntensityModel model = IntensityModel::TOTAL;

  ConstraintSet constraints;
  HWParams hw{1.0, 0.0, 0.0, 0.0};  // kappa <= 0: derive via compute_kappa
  SolverConfig solver;
  LossConfig loss;  // sigma_d <= 0: default_sigma_d(J)

  double adam_lr = 0.002;
  std::size_t hidden = 20;
  double theta_max = 0.0;  // <= 0: theta unclipped
  int gibbs_per_iter = 1;  // MB moves per outer iteration (chain sampling)

  std::uint64_t seed = 0;
  long long burnin = 100;
  long long thin = 100;
  int workers = 1;
  StreamFormat format = StreamFormat::JSONL;
  std::string output_dir = "run";

  // input locations; relative paths resolve against base_dir
  std::string base_dir = ".";
  std::string cost_path;
  std::string y_path;
  std::string dist_origin_path;   // optional
  std::string truth_path;        // optional
  std::string offsets_path;      // optional origin offsets o_i (total model)

  // filled by resolve_run_config
  bool resolved = false;
  Cost cost;
  Observed data;
  std::vector<double> origin_offsets;  // empty = none
  double lambda_total = 0.0;           // total intensity mass
  std::vector<double> row_totals;      // singly model margins
};

// Parse the JSON config file; unknown keys are rejected.  Does not touch the
// referenced input files — call resolve_run_config before run_engine.
RunConfig load_run_config(const std::string& path);

// Load input matrices, validate shapes and constraint compatibility, and fill
// in derived quantities (lambda_total, kappa, sigma_d).
void resolve_run_config(RunConfig& cfg);

// Canonical JSON text of a resolved config (constraints inline); persisted to
// <output_dir>/config.resolved.json by run_engine.
std::string resolved_config_json(const RunConfig& cfg);

struct MemberStatus {
  int member = 0;  // 1-based, as persisted in the streams
  bool ok = false;
  std::string error;
  double final_alpha = 0.0;
  double final_beta = 0.0;
  double final_loss = 0.0;
};

struct RunOutcome {
  std::string run_dir;
  std::vector<MemberStatus> members;
  long long retained_per_member = 0;
};

// Run the full loop: for each member, init weights + table, then per
// iteration calibrate (forward net -> solve dynamics -> intensity -> loss ->
// Adam) and draw a table from the fresh intensity.  Persists thinned streams
// samples/{theta,x,intensity,table}.<fmt>, per-member weight checkpoints, and
// config.resolved.json under cfg.output_dir.  A member failure is recorded
// (and logged to errors.log) while other members proceed; throws only if
// nothing could be run at all.
RunOutcome run_engine(const RunConfig& cfg);

// Synthetic ground truth: intensity i.i.d. Uniform(0,1] rescaled to sum A,
// truth table one Multinomial(A, lambda/A) draw.
struct Synthetic {
  Intensity lambda;
  Table truth;
};
Synthetic generate_synthetic(std::size_t I, std::size_t J, long long A,
                             std::uint64_t seed);

struct BenchRow {
  std::size_t I = 0;
  std::size_t J = 0;
  double calib_ms_per_iter = 0.0;
  double table_ms_per_iter = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  // least-squares fit of table_ms_per_iter against I*J
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Time the two halves of an iteration separately on synthetic instances with
// row+column margins and a share of cells fixed at their truth values.
BenchReport run_benchmark(const std::vector<std::pair<std::size_t, std::size_t>>& sizes,
                          int iters, double fixed_fraction, std::uint64_t seed);
std::string benchmark_csv(const BenchReport& rep);

// One record of a persisted sample stream.
struct StreamRecord {
  long long iteration = 0;
  int member = 0;
  std::vector<double> values;
};
std::vector<StreamRecord> read_stream(const std::string& path);

struct EvalReport {
  double srmse_table = 0.0;
  double ssi_table = 0.0;
  double cp_table = 0.0;
  double srmse_intensity = 0.0;
  double ssi_intensity = 0.0;
  double cp_intensity = 0.0;
  long long n_table = 0;
  long long n_intensity = 0;
  double q = 99.0;
};

// Metrics over the table and intensity streams of a finished run, pooled
// across members after per-member record-level burn-in / thinning (defaults
// keep everything: the run already thinned when writing).
EvalReport evaluate_run(const std::string& run_dir, const Table& truth,
                        double q = 99.0, long long burnin = 0, long long thin = 1,
                        bool central = false);

// CSV rows "run_id,tag,space,metric,value" for a metric report.
std::string metrics_csv(const EvalReport& rep, const std::string& run_id,
                        const std::string& tag);

// Short human-readable label of a constraint set, e.g. "rows+cols+cells12".
std::string constraint_tag(const ConstraintSet& C);

}  // namespace odm
