#include "odm/constraints.hpp"

#include <map>
#include <numeric>
#include <string>

#include "odm/errors.hpp"

namespace odm {

namespace {

long long checked_sum(const std::vector<long long>& v, const char* what) {
  long long s = 0;
  for (long long x : v) {
    if (x < 0) throw ConfigError(std::string(what) + ": negative entry");
    s += x;
  }
  return s;
}

}  // namespace

Tractability validate_constraints(const ConstraintSet& C, std::size_t I, std::size_t J) {
  if (I == 0 || J == 0) throw ConfigError("validate_constraints: empty shape");

  if (C.row_sums && C.row_sums->size() != I)
    throw ConfigError("row_sums length != I");
  if (C.col_sums && C.col_sums->size() != J)
    throw ConfigError("col_sums length != J");
  if (C.total && *C.total < 0) throw ConfigError("total < 0");

  const long long rsum = C.row_sums ? checked_sum(*C.row_sums, "row_sums") : -1;
  const long long csum = C.col_sums ? checked_sum(*C.col_sums, "col_sums") : -1;
  if (C.row_sums && C.col_sums && rsum != csum)
    throw ConfigError("margin sums disagree: sum(row_sums) " + std::to_string(rsum) +
                      " != sum(col_sums) " + std::to_string(csum));
  if (C.row_sums && C.total && rsum != *C.total)
    throw ConfigError("sum(row_sums) != total");
  if (C.col_sums && C.total && csum != *C.total)
    throw ConfigError("sum(col_sums) != total");

  std::map<std::pair<std::size_t, std::size_t>, long long> seen;
  std::vector<long long> fixed_row(I, 0), fixed_col(J, 0);
  long long fixed_total = 0;
  for (const auto& f : C.fixed_cells) {
    if (f.i >= I || f.j >= J)
      throw ConfigError("fixed cell (" + std::to_string(f.i + 1) + "," +
                        std::to_string(f.j + 1) + ") out of range");
    if (f.value < 0) throw ConfigError("fixed cell value < 0");
    if (!seen.emplace(std::make_pair(f.i, f.j), f.value).second)
      throw ConfigError("duplicate fixed cell");
    fixed_row[f.i] += f.value;
    fixed_col[f.j] += f.value;
    fixed_total += f.value;
  }
  if (C.row_sums)
    for (std::size_t i = 0; i < I; ++i)
      if (fixed_row[i] > (*C.row_sums)[i])
        throw ConfigError("fixed cells exceed row sum at row " + std::to_string(i + 1));
  if (C.col_sums)
    for (std::size_t j = 0; j < J; ++j)
      if (fixed_col[j] > (*C.col_sums)[j])
        throw ConfigError("fixed cells exceed col sum at col " + std::to_string(j + 1));
  if (C.total && fixed_total > *C.total)
    throw ConfigError("fixed cells exceed total");

  if (C.symmetric) {
    if (I != J) throw ConfigError("symmetric constraint requires I == J");
    if (C.row_sums && C.col_sums && *C.row_sums != *C.col_sums)
      throw ConfigError("symmetric constraint with row_sums != col_sums");
    for (const auto& f : C.fixed_cells) {
      auto it = seen.find(std::make_pair(f.j, f.i));
      if (it != seen.end() && it->second != f.value)
        throw ConfigError("symmetric constraint with asymmetric fixed cells");
    }
  }

  const bool both_margins = C.row_sums && C.col_sums;
  return (both_margins || C.symmetric) ? Tractability::INTRACTABLE
                                       : Tractability::TRACTABLE;
}

bool is_admissible(const Table& T, const ConstraintSet& C) {
  if (C.row_sums && C.row_sums->size() != T.rows())
    throw ConfigError("is_admissible: row_sums length != table rows");
  if (C.col_sums && C.col_sums->size() != T.cols())
    throw ConfigError("is_admissible: col_sums length != table cols");
  if (C.symmetric && T.rows() != T.cols())
    throw ConfigError("is_admissible: symmetric check on non-square table");
  for (const auto& f : C.fixed_cells)
    if (f.i >= T.rows() || f.j >= T.cols())
      throw ConfigError("is_admissible: fixed cell out of range");

  for (long long v : T.raw())
    if (v < 0) return false;

  const Margins m = summary_statistics(T);
  if (C.total && m.total != *C.total) return false;
  if (C.row_sums && m.rows != *C.row_sums) return false;
  if (C.col_sums && m.cols != *C.col_sums) return false;
  for (const auto& f : C.fixed_cells)
    if (T(f.i, f.j) != f.value) return false;
  if (C.symmetric)
    for (std::size_t i = 0; i < T.rows(); ++i)
      for (std::size_t j = i + 1; j < T.cols(); ++j)
        if (T(i, j) != T(j, i)) return false;
  return true;
}

ConstraintSet constraints_from_table(const Table& T) {
  const Margins m = summary_statistics(T);
  ConstraintSet C;
  C.total = m.total;
  C.row_sums = m.rows;
  C.col_sums = m.cols;
  return C;
}

}  // namespace odm
