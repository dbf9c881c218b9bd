#pragma once

#include <string>
#include <vector>

#include "odm/constraints.hpp"
#include "odm/grid.hpp"

namespace odm {

// Shortest decimal string that parses back to exactly v.
std::string format_double(double v);

// Header-less comma-separated matrices. Vectors are a single row or a single
// column. Throws ConfigError on unreadable files or ragged/non-numeric rows.
DGrid read_matrix_csv(const std::string& path);
IGrid read_table_csv(const std::string& path);
std::vector<double> read_vector_csv(const std::string& path);

void write_matrix_csv(const std::string& path, const DGrid& m);
void write_table_csv(const std::string& path, const IGrid& m);
void write_vector_csv(const std::string& path, const std::vector<double>& v);

// Constraints file: JSON object with optional keys
//   total:       integer
//   row_sums:    inline integer list, or path to a one-row/one-column CSV
//   col_sums:    same
//   fixed_cells: list of [i, j, value] with 1-based i, j
//   symmetric:   boolean
// Relative margin paths resolve against the constraints file's directory.
ConstraintSet load_constraints(const std::string& path);

}  // namespace odm
