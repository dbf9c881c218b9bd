#pragma once

#include <vector>

#include "odm/grid.hpp"

namespace odm {

// Trip counts T_ij (non-negative), expected trips Lambda_ij (> 0), travel
// costs c_ij (>= 0). All square-bracket math happens on these three.
using Table = Grid<long long>;
using Intensity = Grid<double>;
using Cost = Grid<double>;

struct Margins {
  std::vector<long long> rows;
  std::vector<long long> cols;
  long long total = 0;
};

Margins summary_statistics(const Table& T);

std::vector<double> row_margins(const Intensity& L);
std::vector<double> col_margins(const Intensity& L);
double total_mass(const Intensity& L);

}  // namespace odm
