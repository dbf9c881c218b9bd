#include "odm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "odm/errors.hpp"

namespace odm {

namespace {

template <typename G>
SampleSummary summarize(const std::vector<G>& samples) {
  if (samples.empty()) throw ConfigError("summarize: empty sample stream");
  const std::size_t R = samples[0].rows(), C = samples[0].cols();
  SampleSummary s;
  s.n_eff = samples.size();
  s.mean = DGrid(R, C, 0.0);
  s.sorted.assign(R * C, {});
  for (auto& v : s.sorted) v.reserve(samples.size());
  for (const auto& m : samples) {
    if (m.rows() != R || m.cols() != C) throw ConfigError("summarize: ragged samples");
    for (std::size_t k = 0; k < R * C; ++k) {
      const double v = static_cast<double>(m.raw()[k]);
      s.mean.raw()[k] += v;
      s.sorted[k].push_back(v);
    }
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  for (double& v : s.mean.raw()) v *= inv;
  for (auto& v : s.sorted) std::sort(v.begin(), v.end());
  return s;
}

void check_shape(const SampleSummary& s, const Table& truth, const char* what) {
  if (s.mean.rows() != truth.rows() || s.mean.cols() != truth.cols())
    throw ConfigError(std::string(what) + ": summary/truth shape mismatch");
}

}  // namespace

SampleSummary summarize_tables(const std::vector<Table>& samples) {
  return summarize(samples);
}

SampleSummary summarize_intensities(const std::vector<DGrid>& samples) {
  return summarize(samples);
}

double srmse(const SampleSummary& s, const Table& truth) {
  check_shape(s, truth, "srmse");
  const double n = static_cast<double>(s.mean.size());
  double sq = 0.0, norm = 0.0;
  for (std::size_t k = 0; k < s.mean.size(); ++k) {
    const double d = s.mean.raw()[k] - static_cast<double>(truth.raw()[k]);
    sq += d * d;
    norm += s.mean.raw()[k];
  }
  norm /= n;
  if (norm == 0.0) throw NumericError("srmse: zero mean normalizer");
  return std::sqrt(sq / n) / norm;
}

double ssi(const SampleSummary& s, const Table& truth) {
  check_shape(s, truth, "ssi");
  double acc = 0.0;
  for (std::size_t k = 0; k < s.mean.size(); ++k) {
    const double m = s.mean.raw()[k];
    const double t = static_cast<double>(truth.raw()[k]);
    acc += (m == 0.0 && t == 0.0) ? 1.0 : 2.0 * std::min(m, t) / (m + t);
  }
  return acc / static_cast<double>(s.mean.size());
}

double coverage_probability(const SampleSummary& s, const Table& truth, double q,
                            bool central) {
  check_shape(s, truth, "coverage_probability");
  if (s.n_eff < 2) throw ConfigError("coverage_probability: need at least 2 samples");
  if (!(q > 0.0) || q > 100.0) throw ConfigError("coverage_probability: q out of (0,100]");
  const std::size_t N = s.n_eff;
  std::size_t m = static_cast<std::size_t>(
      std::ceil(q * static_cast<double>(N) / 100.0 - 1e-12));
  m = std::min(std::max<std::size_t>(m, 1), N);

  std::size_t covered = 0;
  for (std::size_t k = 0; k < s.sorted.size(); ++k) {
    const auto& v = s.sorted[k];
    std::size_t start = 0;
    if (central) {
      start = (N - m) / 2;
    } else {
      double best = v[m - 1] - v[0];
      for (std::size_t a = 1; a + m <= N; ++a) {
        const double w = v[a + m - 1] - v[a];
        if (w < best) {
          best = w;
          start = a;
        }
      }
    }
    const double t = static_cast<double>(truth.raw()[k]);
    if (v[start] <= t && t <= v[start + m - 1]) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(s.sorted.size());
}

}  // namespace odm
