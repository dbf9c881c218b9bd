#include "odm/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "odm/detail/json_io.hpp"
#include "odm/errors.hpp"

namespace odm {

std::string format_double(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

namespace {

std::vector<std::vector<std::string>> read_cells(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bool blank = true;
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    if (blank) continue;
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    if (!line.empty() && line.back() == ',') row.push_back("");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("empty CSV file: " + path);
  for (const auto& r : rows)
    if (r.size() != rows[0].size())
      throw ConfigError("ragged CSV rows in " + path);
  return rows;
}

double parse_double(const std::string& s, const std::string& path) {
  const char* p = s.c_str();
  char* end = nullptr;
  double v = std::strtod(p, &end);
  while (end && *end && std::isspace(static_cast<unsigned char>(*end))) ++end;
  if (end == p || (end && *end))
    throw ConfigError("bad numeric cell '" + s + "' in " + path);
  return v;
}

long long parse_int(const std::string& s, const std::string& path) {
  const char* p = s.c_str();
  char* end = nullptr;
  long long v = std::strtoll(p, &end, 10);
  while (end && *end && std::isspace(static_cast<unsigned char>(*end))) ++end;
  if (end == p || (end && *end))
    throw ConfigError("bad integer cell '" + s + "' in " + path);
  return v;
}

}  // namespace

DGrid read_matrix_csv(const std::string& path) {
  const auto cells = read_cells(path);
  DGrid m(cells.size(), cells[0].size());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = parse_double(cells[i][j], path);
  return m;
}

IGrid read_table_csv(const std::string& path) {
  const auto cells = read_cells(path);
  IGrid m(cells.size(), cells[0].size());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = parse_int(cells[i][j], path);
  return m;
}

std::vector<double> read_vector_csv(const std::string& path) {
  const DGrid m = read_matrix_csv(path);
  if (m.rows() != 1 && m.cols() != 1)
    throw ConfigError("expected a vector (one row or one column) in " + path);
  return m.raw();
}

namespace {

template <typename G, typename Fmt>
void write_grid(const std::string& path, const G& m, Fmt fmt) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << fmt(m(i, j));
    }
    out << '\n';
  }
}

}  // namespace

void write_matrix_csv(const std::string& path, const DGrid& m) {
  write_grid(path, m, [](double v) { return format_double(v); });
}

void write_table_csv(const std::string& path, const IGrid& m) {
  write_grid(path, m, [](long long v) { return std::to_string(v); });
}

void write_vector_csv(const std::string& path, const std::vector<double>& v) {
  DGrid m(1, v.size());
  m.raw() = v;
  write_matrix_csv(path, m);
}

namespace {

std::vector<long long> margin_list(const nlohmann::json& v, const std::string& key,
                                   const std::filesystem::path& base) {
  std::vector<long long> out;
  if (v.is_string()) {
    std::filesystem::path p = v.get<std::string>();
    if (p.is_relative()) p = base / p;
    for (double x : read_vector_csv(p.string())) {
      const long long n = static_cast<long long>(x);
      if (static_cast<double>(n) != x)
        throw ConfigError(key + ": non-integer margin in " + p.string());
      out.push_back(n);
    }
  } else if (v.is_array()) {
    for (const auto& x : v) {
      if (!x.is_number_integer())
        throw ConfigError(key + ": expected integer entries");
      out.push_back(x.get<long long>());
    }
  } else {
    throw ConfigError(key + ": expected a list or a CSV path");
  }
  return out;
}

}  // namespace

ConstraintSet load_constraints(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open constraints file " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("constraints file " + path + ": " + e.what());
  }
  return detail::constraints_from_json(doc, std::filesystem::path(path).parent_path());
}

ConstraintSet detail::constraints_from_json(const nlohmann::json& doc,
                                            const std::filesystem::path& base) {
  if (!doc.is_object()) throw ConfigError("constraints: expected an object");
  ConstraintSet C;
  for (const auto& [key, val] : doc.items()) {
    if (key == "total") {
      if (!val.is_number_integer()) throw ConfigError("total: expected an integer");
      C.total = val.get<long long>();
    } else if (key == "row_sums") {
      C.row_sums = margin_list(val, key, base);
    } else if (key == "col_sums") {
      C.col_sums = margin_list(val, key, base);
    } else if (key == "fixed_cells") {
      if (!val.is_array()) throw ConfigError("fixed_cells: expected a list");
      for (const auto& t : val) {
        if (!t.is_array() || t.size() != 3 || !t[0].is_number_integer() ||
            !t[1].is_number_integer() || !t[2].is_number_integer())
          throw ConfigError("fixed_cells: entries are [i, j, value]");
        const long long i1 = t[0].get<long long>(), j1 = t[1].get<long long>();
        if (i1 < 1 || j1 < 1)
          throw ConfigError("fixed_cells: indices are 1-based");
        C.fixed_cells.push_back({static_cast<std::size_t>(i1 - 1),
                                 static_cast<std::size_t>(j1 - 1),
                                 t[2].get<long long>()});
      }
    } else if (key == "symmetric") {
      if (!val.is_boolean()) throw ConfigError("symmetric: expected a boolean");
      C.symmetric = val.get<bool>();
    } else {
      throw ConfigError("constraints file: unknown key '" + key + "'");
    }
  }
  return C;
}

}  // namespace odm
