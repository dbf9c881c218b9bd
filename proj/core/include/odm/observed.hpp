#pragma once

#include <optional>
#include <vector>

#include "odm/table.hpp"

namespace odm {

// Calibration evidence: observed log destination attraction y, total distance
// travelled from each origin (row margins of T* ⊙ C), and an optional ground
// truth table for evaluation.
struct Observed {
  std::optional<std::vector<double>> y;
  std::optional<std::vector<double>> dist_origin;
  std::optional<Table> ground_truth;
};

}  // namespace odm
