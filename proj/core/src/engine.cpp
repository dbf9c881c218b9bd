#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "odm/csv.hpp"
#include "odm/engine.hpp"
#include "odm/errors.hpp"
#include "odm/markov_basis.hpp"
#include "odm/metrics.hpp"
#include "odm/table_sampler.hpp"

namespace fs = std::filesystem;

namespace odm {

namespace {

const char* stream_ext(StreamFormat f) {
  return f == StreamFormat::CSV ? "csv" : "jsonl";
}

const char* const kStreamNames[4] = {"theta", "x", "intensity", "table"};

fs::path part_path(const fs::path& samples_dir, const char* name, int member,
                   StreamFormat fmt) {
  return samples_dir /
         (std::string(name) + ".m" + std::to_string(member) + "." + stream_ext(fmt) + ".part");
}

void write_record(std::ostream& os, StreamFormat fmt, long long iter, int member,
                  const double* v, std::size_t n, bool integral) {
  if (fmt == StreamFormat::CSV) {
    os << iter << ',' << member;
    for (std::size_t k = 0; k < n; ++k) {
      os << ',';
      if (integral)
        os << static_cast<long long>(v[k]);
      else
        os << format_double(v[k]);
    }
    os << '\n';
    return;
  }
  nlohmann::json rec;
  rec["iteration"] = iter;
  rec["member"] = member;
  if (integral) {
    std::vector<long long> iv(n);
    for (std::size_t k = 0; k < n; ++k) iv[k] = static_cast<long long>(v[k]);
    rec["values"] = std::move(iv);
  } else {
    rec["values"] = std::vector<double>(v, v + n);
  }
  os << rec.dump() << '\n';
}

double clip_theta(double v, double theta_max) {
  return theta_max > 0 && v > theta_max ? theta_max : v;
}

struct MemberResult {
  MemberStatus status;
  long long retained = 0;
};

MemberResult run_member(const RunConfig& cfg, int e, const fs::path& samples_dir,
                        Tractability tract) {
  MemberResult res;
  res.status.member = e + 1;

  const std::uint64_t member_master = derive_seed(cfg.seed, static_cast<std::uint64_t>(e));
  Rng calib_rng(derive_seed(member_master, 0));
  const std::uint64_t table_seed = derive_seed(member_master, 1);

  const std::vector<double>& y = *cfg.data.y;
  const std::size_t I = cfg.cost.rows();
  const std::size_t J = cfg.cost.cols();

  std::ofstream files[4];
  try {
    for (int s = 0; s < 4; ++s) {
      const fs::path p = part_path(samples_dir, kStreamNames[s], e + 1, cfg.format);
      files[s].open(p);
      if (!files[s]) throw ConfigError("cannot write " + p.string());
    }

    NetworkWeights W = nn_init(calib_rng, J, cfg.hidden);
    AdamState adam(W.size(), cfg.adam_lr);

    CalibPipeline ctx;
    ctx.model = cfg.model;
    ctx.cost = &cfg.cost;
    ctx.lambda_total = cfg.lambda_total;
    ctx.row_totals = cfg.row_totals;
    ctx.origin_offsets = cfg.origin_offsets.empty() ? nullptr : &cfg.origin_offsets;
    ctx.hw = cfg.hw;
    ctx.dt = cfg.solver.dt;
    ctx.tau = cfg.solver.tau;
    ctx.x0 = y;
    ctx.noise.resize(static_cast<std::size_t>(cfg.solver.tau) * J);
    ctx.theta_max = cfg.theta_max;

    auto intensity_at = [&cfg](double a, double b, const std::vector<double>& x) {
      SIMParams p{a, b, {}};
      if (!cfg.origin_offsets.empty()) p.origin_offsets = cfg.origin_offsets;
      return cfg.model == IntensityModel::TOTAL
                 ? intensity_total(x, p, cfg.cost, cfg.lambda_total)
                 : intensity_singly(x, p, cfg.cost, cfg.row_totals);
    };

    // starting table from the untrained intensity at x = y
    const auto theta0 = nn_forward(y, W);
    const Intensity L0 = intensity_at(clip_theta(theta0.first, cfg.theta_max),
                                      clip_theta(theta0.second, cfg.theta_max), y);
    Table T = init_table(cfg.constraints, L0);

    std::optional<ChainState> chain;
    Rng closed_rng(table_seed);
    if (tract == Tractability::INTRACTABLE)
      chain = make_chain(T, cfg.constraints, L0, table_seed);
    const Table* cur = chain ? &chain->T : &T;

    std::vector<double> tbuf(I * J);
    double theta_rec[3] = {0, 0, 0};

    for (long long n = 1; n <= cfg.iterations; ++n) {
      for (double& z : ctx.noise) z = calib_rng.normal();
      const CalibStep step =
          loss_grad(cfg.loss, W, cfg.data, ctx, cfg.scheme == Scheme::JOINT ? cur : nullptr);
      adam_step(W, step.grad, adam);

      if (tract == Tractability::TRACTABLE) {
        T = sample_closed_form(step.lambda, cfg.constraints, closed_rng);
      } else {
        set_intensity(*chain, step.lambda);
        for (int k = 0; k < cfg.gibbs_per_iter; ++k) gibbs_mb_step(*chain);
      }

      if (n > cfg.burnin && (n - cfg.burnin) % cfg.thin == 0) {
        theta_rec[0] = step.alpha;
        theta_rec[1] = step.beta;
        theta_rec[2] = step.loss;
        write_record(files[0], cfg.format, n, e + 1, theta_rec, 3, false);
        write_record(files[1], cfg.format, n, e + 1, step.x.data(), J, false);
        write_record(files[2], cfg.format, n, e + 1, step.lambda.data(), I * J, false);
        for (std::size_t k = 0; k < I * J; ++k)
          tbuf[k] = static_cast<double>(cur->raw()[k]);
        write_record(files[3], cfg.format, n, e + 1, tbuf.data(), I * J, true);
        ++res.retained;
      }

      res.status.final_alpha = step.alpha;
      res.status.final_beta = step.beta;
      res.status.final_loss = step.loss;
    }

    for (auto& f : files) {
      f.flush();
      if (!f) throw NumericError("stream write failed for member " + std::to_string(e + 1));
    }
    save_weights((samples_dir.parent_path() / "weights" /
                  ("member_" + std::to_string(e + 1) + ".bin"))
                     .string(),
                 W);
    res.status.ok = true;
  } catch (const std::exception& ex) {
    res.status.ok = false;
    res.status.error = ex.what();
    for (auto& f : files) f.close();
    for (int s = 0; s < 4; ++s) {
      std::error_code ec;
      fs::remove(part_path(samples_dir, kStreamNames[s], e + 1, cfg.format), ec);
    }
  }
  return res;
}

}  // namespace

RunOutcome run_engine(const RunConfig& cfg) {
  if (!cfg.resolved)
    throw ConfigError("run_engine needs a resolved config (call resolve_run_config)");
  const Tractability tract =
      validate_constraints(cfg.constraints, cfg.cost.rows(), cfg.cost.cols());

  const fs::path run_dir(cfg.output_dir);
  const fs::path samples_dir = run_dir / "samples";
  std::error_code ec;
  fs::create_directories(samples_dir, ec);
  if (ec) throw ConfigError("cannot create " + samples_dir.string() + ": " + ec.message());
  fs::create_directories(run_dir / "weights", ec);
  if (ec) throw ConfigError("cannot create weights dir: " + ec.message());

  {
    std::ofstream os(run_dir / "config.resolved.json");
    os << resolved_config_json(cfg);
    if (!os) throw ConfigError("cannot write config.resolved.json");
  }

  const int E = cfg.ensemble;
  std::vector<MemberResult> results(E);
  const int nw = std::max(1, std::min(cfg.workers, E));
  if (nw == 1) {
    for (int e = 0; e < E; ++e) results[e] = run_member(cfg, e, samples_dir, tract);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (int w = 0; w < nw; ++w)
      pool.emplace_back([&cfg, &samples_dir, &results, &next, E, tract] {
        for (int e = next.fetch_add(1); e < E; e = next.fetch_add(1))
          results[e] = run_member(cfg, e, samples_dir, tract);
      });
    for (auto& t : pool) t.join();
  }

  // merge per-member files in member order, then drop the parts
  for (const char* name : kStreamNames) {
    const fs::path merged = samples_dir / (std::string(name) + "." + stream_ext(cfg.format));
    std::ofstream out(merged, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + merged.string());
    for (int e = 0; e < E; ++e) {
      const fs::path part = part_path(samples_dir, name, e + 1, cfg.format);
      if (!fs::exists(part) || fs::file_size(part) == 0) continue;
      std::ifstream in(part, std::ios::binary);
      out << in.rdbuf();
    }
  }
  for (const char* name : kStreamNames)
    for (int e = 0; e < E; ++e)
      fs::remove(part_path(samples_dir, name, e + 1, cfg.format), ec);

  RunOutcome out;
  out.run_dir = run_dir.string();
  bool any_ok = false;
  std::string first_error;
  for (int e = 0; e < E; ++e) {
    out.members.push_back(results[e].status);
    if (results[e].status.ok) {
      if (!any_ok) out.retained_per_member = results[e].retained;
      any_ok = true;
    } else if (first_error.empty()) {
      first_error = results[e].status.error;
    }
  }
  if (!first_error.empty()) {
    std::ofstream log(run_dir / "errors.log");
    for (const auto& m : out.members)
      if (!m.ok) log << "member " << m.member << ": " << m.error << '\n';
  }
  if (!any_ok)
    throw NumericError("all ensemble members failed; first error: " + first_error);
  return out;
}

Synthetic generate_synthetic(std::size_t I, std::size_t J, long long A,
                             std::uint64_t seed) {
  if (I == 0 || J == 0) throw ConfigError("synthetic shape must be positive");
  if (A < 1) throw ConfigError("synthetic total must be >= 1");
  Rng rng(seed);
  Synthetic s{Intensity(I, J), Table(I, J)};
  double tot = 0.0;
  for (double& v : s.lambda.raw()) {
    v = 1.0 - rng.uniform01();  // (0, 1]
    tot += v;
  }
  const double scale = static_cast<double>(A) / tot;
  for (double& v : s.lambda.raw()) v *= scale;
  std::vector<long long> counts;
  rng.multinomial(A, s.lambda.raw(), counts);
  std::copy(counts.begin(), counts.end(), s.truth.raw().begin());
  return s;
}

BenchReport run_benchmark(const std::vector<std::pair<std::size_t, std::size_t>>& sizes,
                          int iters, double fixed_fraction, std::uint64_t seed) {
  if (iters < 1) throw ConfigError("benchmark iterations must be >= 1");
  if (fixed_fraction < 0 || fixed_fraction >= 1)
    throw ConfigError("fixed_fraction must be in [0, 1)");

  BenchReport rep;
  for (const auto& [I, J] : sizes) {
    const std::uint64_t s = derive_seed(seed, rep.rows.size());
    const long long A = 4LL * static_cast<long long>(I) * static_cast<long long>(J);
    Synthetic syn = generate_synthetic(I, J, A, s);

    const Margins m = summary_statistics(syn.truth);
    ConstraintSet C;
    C.row_sums = m.rows;
    C.col_sums = m.cols;
    const std::size_t nfix =
        static_cast<std::size_t>(fixed_fraction * static_cast<double>(I * J));
    {
      Rng pick(derive_seed(s, 7));
      std::vector<std::size_t> idx(I * J);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      for (std::size_t k = 0; k < nfix; ++k) {
        const std::size_t r = k + static_cast<std::size_t>(pick.uniform_below(idx.size() - k));
        std::swap(idx[k], idx[r]);
        C.fixed_cells.push_back({idx[k] / J, idx[k] % J, syn.truth.raw()[idx[k]]});
      }
    }

    ChainState chain = make_chain(syn.truth, C, syn.lambda, derive_seed(s, 1));

    Cost cost(I, J);
    {
      Rng crng(derive_seed(s, 2));
      for (double& v : cost.raw()) v = 1.0 - crng.uniform01();
    }
    std::vector<double> y(J);
    {
      const auto cm = col_margins(syn.lambda);
      for (std::size_t j = 0; j < J; ++j) y[j] = std::log(cm[j]);
    }

    Rng calib_rng(derive_seed(s, 0));
    NetworkWeights W = nn_init(calib_rng, J, 20);
    AdamState adam(W.size());
    Observed data;
    data.y = y;
    LossConfig loss;
    loss.sigma_d = default_sigma_d(J);

    CalibPipeline ctx;
    ctx.model = IntensityModel::TOTAL;
    ctx.cost = &cost;
    ctx.lambda_total = static_cast<double>(A);
    ctx.hw.epsilon = 1.0;
    ctx.hw.kappa = compute_kappa(static_cast<double>(A), 0.0, y);
    ctx.hw.delta = 0.0;
    ctx.hw.sigma = 0.0;
    ctx.dt = 0.001;
    ctx.tau = 1;
    ctx.x0 = y;
    ctx.noise.resize(J);
    ctx.theta_max = 0.0;

    using clock = std::chrono::steady_clock;
    auto ms = [](clock::duration d) {
      return std::chrono::duration<double, std::milli>(d).count();
    };

    // one warm-up round of each half before timing
    {
      for (double& z : ctx.noise) z = calib_rng.normal();
      const CalibStep st = loss_grad(loss, W, data, ctx, nullptr);
      adam_step(W, st.grad, adam);
      set_intensity(chain, syn.lambda);
      gibbs_mb_step(chain);
    }

    const auto t0 = clock::now();
    for (int it = 0; it < iters; ++it) {
      for (double& z : ctx.noise) z = calib_rng.normal();
      const CalibStep st = loss_grad(loss, W, data, ctx, nullptr);
      adam_step(W, st.grad, adam);
    }
    const auto t1 = clock::now();
    for (int it = 0; it < iters; ++it) {
      set_intensity(chain, syn.lambda);
      gibbs_mb_step(chain);
    }
    const auto t2 = clock::now();

    BenchRow row;
    row.I = I;
    row.J = J;
    row.calib_ms_per_iter = ms(t1 - t0) / iters;
    row.table_ms_per_iter = ms(t2 - t1) / iters;
    rep.rows.push_back(row);
  }

  // least squares of table time against cell count
  const std::size_t n = rep.rows.size();
  if (n >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& r : rep.rows) {
      const double x = static_cast<double>(r.I * r.J);
      sx += x;
      sy += r.table_ms_per_iter;
      sxx += x * x;
      sxy += x * r.table_ms_per_iter;
    }
    const double dn = static_cast<double>(n);
    const double denom = dn * sxx - sx * sx;
    if (denom != 0) {
      rep.slope = (dn * sxy - sx * sy) / denom;
      rep.intercept = (sy - rep.slope * sx) / dn;
      double ss_res = 0, ss_tot = 0;
      const double ybar = sy / dn;
      for (const auto& r : rep.rows) {
        const double x = static_cast<double>(r.I * r.J);
        const double fit = rep.slope * x + rep.intercept;
        ss_res += (r.table_ms_per_iter - fit) * (r.table_ms_per_iter - fit);
        ss_tot += (r.table_ms_per_iter - ybar) * (r.table_ms_per_iter - ybar);
      }
      rep.r2 = ss_tot == 0 ? 1.0 : 1.0 - ss_res / ss_tot;
    }
  } else if (n == 1) {
    rep.r2 = 1.0;
  }
  return rep;
}

std::string benchmark_csv(const BenchReport& rep) {
  std::string out;
  for (const auto& r : rep.rows) {
    out += std::to_string(r.I) + "," + std::to_string(r.J) + "," +
           format_double(r.calib_ms_per_iter) + "," + format_double(r.table_ms_per_iter) +
           "\n";
  }
  return out;
}

std::vector<StreamRecord> read_stream(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open stream " + path);
  const bool jsonl = path.size() >= 6 && path.compare(path.size() - 6, 6, ".jsonl") == 0;

  std::vector<StreamRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    StreamRecord r;
    if (jsonl) {
      const nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
      if (doc.is_discarded() || !doc.is_object())
        throw ConfigError(where + ": bad stream record");
      try {
        r.iteration = doc.at("iteration").get<long long>();
        r.member = doc.at("member").get<int>();
        const auto& vals = doc.at("values");
        if (!vals.is_array()) throw ConfigError(where + ": values must be a list");
        r.values.reserve(vals.size());
        for (const auto& v : vals) r.values.push_back(v.get<double>());
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(where + ": " + e.what());
      }
    } else {
      const char* p = line.c_str();
      char* end = nullptr;
      r.iteration = std::strtoll(p, &end, 10);
      if (end == p || *end != ',') throw ConfigError(where + ": bad stream record");
      p = end + 1;
      r.member = static_cast<int>(std::strtoll(p, &end, 10));
      if (end == p) throw ConfigError(where + ": bad stream record");
      p = end;
      while (*p == ',') {
        ++p;
        const double v = std::strtod(p, &end);
        if (end == p) throw ConfigError(where + ": bad stream record");
        r.values.push_back(v);
        p = end;
      }
      if (*p != '\0') throw ConfigError(where + ": trailing junk");
    }
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

// keep records k (0-based within each member) with k >= burnin and
// (k - burnin) % thin == 0, preserving stream order
std::vector<const StreamRecord*> filter_records(const std::vector<StreamRecord>& recs,
                                                long long burnin, long long thin) {
  std::map<int, long long> seen;
  std::vector<const StreamRecord*> keep;
  for (const auto& r : recs) {
    const long long k = seen[r.member]++;
    if (k >= burnin && (k - burnin) % thin == 0) keep.push_back(&r);
  }
  return keep;
}

}  // namespace

EvalReport evaluate_run(const std::string& run_dir, const Table& truth, double q,
                        long long burnin, long long thin, bool central) {
  if (truth.empty()) throw ConfigError("evaluate needs a non-empty ground truth");
  if (burnin < 0 || thin < 1) throw ConfigError("burnin >= 0 and thin >= 1 required");
  const fs::path samples = fs::path(run_dir) / "samples";
  auto find_stream = [&samples](const char* name) {
    for (const char* ext : {"jsonl", "csv"}) {
      const fs::path p = samples / (std::string(name) + "." + ext);
      if (fs::exists(p)) return p.string();
    }
    throw ConfigError("run directory has no '" + std::string(name) + "' stream");
  };

  const std::size_t I = truth.rows();
  const std::size_t J = truth.cols();
  EvalReport rep;
  rep.q = q;

  {
    const auto recs = read_stream(find_stream("table"));
    const auto keep = filter_records(recs, burnin, thin);
    if (keep.empty()) throw ConfigError("table stream is empty after burn-in/thinning");
    std::vector<Table> ts;
    ts.reserve(keep.size());
    for (const StreamRecord* r : keep) {
      if (r->values.size() != I * J)
        throw ConfigError("table record length does not match the ground truth shape");
      Table t(I, J);
      for (std::size_t k = 0; k < I * J; ++k)
        t.raw()[k] = std::llround(r->values[k]);
      ts.push_back(std::move(t));
    }
    const SampleSummary s = summarize_tables(ts);
    rep.n_table = static_cast<long long>(s.n_eff);
    rep.srmse_table = srmse(s, truth);
    rep.ssi_table = ssi(s, truth);
    rep.cp_table = s.n_eff >= 2 ? coverage_probability(s, truth, q, central)
                                : std::numeric_limits<double>::quiet_NaN();
  }
  {
    const auto recs = read_stream(find_stream("intensity"));
    const auto keep = filter_records(recs, burnin, thin);
    if (keep.empty()) throw ConfigError("intensity stream is empty after burn-in/thinning");
    std::vector<DGrid> ls;
    ls.reserve(keep.size());
    for (const StreamRecord* r : keep) {
      if (r->values.size() != I * J)
        throw ConfigError("intensity record length does not match the ground truth shape");
      DGrid g(I, J);
      std::copy(r->values.begin(), r->values.end(), g.raw().begin());
      ls.push_back(std::move(g));
    }
    const SampleSummary s = summarize_intensities(ls);
    rep.n_intensity = static_cast<long long>(s.n_eff);
    rep.srmse_intensity = srmse(s, truth);
    rep.ssi_intensity = ssi(s, truth);
    rep.cp_intensity = s.n_eff >= 2 ? coverage_probability(s, truth, q, central)
                                    : std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

std::string metrics_csv(const EvalReport& rep, const std::string& run_id,
                        const std::string& tag) {
  auto row = [&](const char* space, const char* metric, double v) {
    return run_id + "," + tag + "," + space + "," + metric + "," + format_double(v) + "\n";
  };
  std::string out;
  out += row("table", "srmse", rep.srmse_table);
  out += row("table", "ssi", rep.ssi_table);
  out += row("table", "cp", rep.cp_table);
  out += row("intensity", "srmse", rep.srmse_intensity);
  out += row("intensity", "ssi", rep.ssi_intensity);
  out += row("intensity", "cp", rep.cp_intensity);
  return out;
}

std::string constraint_tag(const ConstraintSet& C) {
  std::vector<std::string> parts;
  if (C.total) parts.push_back("total");
  if (C.has_rows()) parts.push_back("rows");
  if (C.has_cols()) parts.push_back("cols");
  if (!C.fixed_cells.empty()) parts.push_back("cells" + std::to_string(C.fixed_cells.size()));
  if (C.symmetric) parts.push_back("sym");
  if (parts.empty()) return "unconstrained";
  std::string out = parts[0];
  for (std::size_t k = 1; k < parts.size(); ++k) out += "+" + parts[k];
  return out;
}

}  // namespace odm
