#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "odm/table.hpp"

namespace odm {

struct FixedCell {
  std::size_t i = 0;
  std::size_t j = 0;
  long long value = 0;
};

// Declarative set of pinned summary statistics. Empty set = unconstrained
// (independent Poisson cells). Indices 0-based here; file formats are 1-based.
struct ConstraintSet {
  std::optional<long long> total;
  std::optional<std::vector<long long>> row_sums;
  std::optional<std::vector<long long>> col_sums;
  std::vector<FixedCell> fixed_cells;
  bool symmetric = false;

  bool has_rows() const { return row_sums.has_value(); }
  bool has_cols() const { return col_sums.has_value(); }
  bool empty() const {
    return !total && !row_sums && !col_sums && fixed_cells.empty() && !symmetric;
  }
};

enum class Tractability { TRACTABLE, INTRACTABLE };

// Consistency check + sampler dispatch class. At most one margin family (rows
// or cols) plus cells/total keeps a closed form; both margins, or symmetry,
// need the Markov-basis chain. Throws ConfigError on contradictions.
Tractability validate_constraints(const ConstraintSet& C, std::size_t I, std::size_t J);

// True iff every declared statistic of C matches T exactly.
// Throws ConfigError on shape mismatch.
bool is_admissible(const Table& T, const ConstraintSet& C);

// The constraint set pinning both margins of T (round-trip helper).
ConstraintSet constraints_from_table(const Table& T);

}  // namespace odm
