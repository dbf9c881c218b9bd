#pragma once

#include <filesystem>

#include "json.hpp"
#include "odm/constraints.hpp"

namespace odm::detail {

// Shared by the constraints file loader and inline config blocks. Indices in
// fixed_cells are 1-based on disk; base resolves relative margin CSV paths.
ConstraintSet constraints_from_json(const nlohmann::json& doc,
                                    const std::filesystem::path& base);

}  // namespace odm::detail
