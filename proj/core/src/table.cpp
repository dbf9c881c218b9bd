#include "odm/table.hpp"

namespace odm {

Margins summary_statistics(const Table& T) {
  Margins m;
  m.rows.assign(T.rows(), 0);
  m.cols.assign(T.cols(), 0);
  for (std::size_t i = 0; i < T.rows(); ++i)
    for (std::size_t j = 0; j < T.cols(); ++j) {
      const long long v = T(i, j);
      m.rows[i] += v;
      m.cols[j] += v;
      m.total += v;
    }
  return m;
}

std::vector<double> row_margins(const Intensity& L) {
  std::vector<double> r(L.rows(), 0.0);
  for (std::size_t i = 0; i < L.rows(); ++i)
    for (std::size_t j = 0; j < L.cols(); ++j) r[i] += L(i, j);
  return r;
}

std::vector<double> col_margins(const Intensity& L) {
  std::vector<double> c(L.cols(), 0.0);
  for (std::size_t i = 0; i < L.rows(); ++i)
    for (std::size_t j = 0; j < L.cols(); ++j) c[j] += L(i, j);
  return c;
}

double total_mass(const Intensity& L) {
  double t = 0.0;
  for (double v : L.raw()) t += v;
  return t;
}

}  // namespace odm
