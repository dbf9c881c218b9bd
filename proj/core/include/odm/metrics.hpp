#pragma once

#include <cstddef>
#include <vector>

#include "odm/table.hpp"

namespace odm {

// Per-cell posterior summary of a sample stream, pooled across ensemble
// members: means for SRMSE/SSI, sorted per-cell values for interval coverage.
struct SampleSummary {
  DGrid mean;
  std::vector<std::vector<double>> sorted;  // per cell, ascending
  std::size_t n_eff = 0;
};

SampleSummary summarize_tables(const std::vector<Table>& samples);
SampleSummary summarize_intensities(const std::vector<DGrid>& samples);

// sqrt(mean squared error of cell means) normalized by the mean cell estimate.
double srmse(const SampleSummary& s, const Table& truth);

// (1/IJ) sum 2 min(mean, T*) / (mean + T*); both-zero cells count as perfect.
double ssi(const SampleSummary& s, const Table& truth);

// Fraction of cells whose q% high-probability interval covers T*_ij. The
// interval is the shortest contiguous window of ceil(q*N/100) sorted samples
// (smallest window start wins ties); central=true uses the central quantile
// window instead.
double coverage_probability(const SampleSummary& s, const Table& truth, double q = 99.0,
                            bool central = false);

}  // namespace odm
