#include "odm/table_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <string>

#include "odm/errors.hpp"

namespace odm {

namespace {

constexpr long long kUnbounded = std::numeric_limits<long long>::max();

std::vector<std::uint8_t> fixed_mask_of(std::size_t I, std::size_t J,
                                        const ConstraintSet& C, bool mirror) {
  std::vector<std::uint8_t> mask(I * J, 0);
  for (const auto& f : C.fixed_cells) {
    mask[f.i * J + f.j] = 1;
    if (mirror) mask[f.j * J + f.i] = 1;
  }
  return mask;
}

void plant_fixed(Table& T, const ConstraintSet& C, bool mirror) {
  for (const auto& f : C.fixed_cells) {
    T(f.i, f.j) = f.value;
    if (mirror) T(f.j, f.i) = f.value;
  }
}

// n units over non-negative weights, proportional shares rounded by largest
// remainder (ties broken by index). Weights must not all be zero when n > 0.
std::vector<long long> largest_remainder(long long n, const std::vector<double>& w) {
  const std::size_t k = w.size();
  std::vector<long long> out(k, 0);
  if (n == 0) return out;
  double total = 0.0;
  for (double x : w) total += x;
  if (!(total > 0.0))
    throw ConfigError("allocation over zero total weight");
  long long assigned = 0;
  std::vector<std::pair<double, std::size_t>> frac(k);
  for (std::size_t c = 0; c < k; ++c) {
    const double share = static_cast<double>(n) * w[c] / total;
    out[c] = static_cast<long long>(std::floor(share));
    assigned += out[c];
    frac[c] = {share - std::floor(share), c};
  }
  std::stable_sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
    return a.first > b.first;
  });
  const long long leftover = n - assigned;
  for (long long r = 0; r < leftover; ++r) ++out[frac[static_cast<std::size_t>(r)].second];
  return out;
}

// A line that must carry mass cannot keep an all-zero weight vector (extreme
// utilities underflow whole intensity rows to 0.0); fall back to uniform.
void rescue_zero_weights(std::vector<double>& w) {
  for (double x : w)
    if (x > 0.0) return;
  std::fill(w.begin(), w.end(), 1.0);
}

}  // namespace

Table sample_unconstrained(const Intensity& Lam, Rng& rng) {
  Table T(Lam.rows(), Lam.cols());
  for (std::size_t k = 0; k < Lam.size(); ++k)
    T.raw()[k] = rng.poisson(Lam.raw()[k]);
  return T;
}

Table sample_closed_form(const Intensity& Lam, const ConstraintSet& C, Rng& rng) {
  const std::size_t I = Lam.rows(), J = Lam.cols();
  if (validate_constraints(C, I, J) != Tractability::TRACTABLE)
    throw ConfigError("sample_closed_form: constraint set has no closed form");

  Table T(I, J, 0);
  plant_fixed(T, C, false);
  const auto fixed = fixed_mask_of(I, J, C, false);

  std::vector<long long> fixed_row(I, 0), fixed_col(J, 0);
  long long fixed_total = 0;
  for (const auto& f : C.fixed_cells) {
    fixed_row[f.i] += f.value;
    fixed_col[f.j] += f.value;
    fixed_total += f.value;
  }

  std::vector<double> w;
  std::vector<std::size_t> idx;
  std::vector<long long> counts;

  if (C.has_rows()) {
    for (std::size_t i = 0; i < I; ++i) {
      const long long rest = (*C.row_sums)[i] - fixed_row[i];
      if (rest < 0) throw ConfigError("fixed cells exceed row sum");
      w.clear();
      idx.clear();
      for (std::size_t j = 0; j < J; ++j)
        if (!fixed[i * J + j]) {
          w.push_back(Lam(i, j));
          idx.push_back(j);
        }
      if (rest > 0 && idx.empty())
        throw ConfigError("row " + std::to_string(i + 1) + " fully fixed below its sum");
      if (rest > 0) {
        rescue_zero_weights(w);
        rng.multinomial(rest, w, counts);
        for (std::size_t c = 0; c < idx.size(); ++c) T(i, idx[c]) = counts[c];
      }
    }
  } else if (C.has_cols()) {
    for (std::size_t j = 0; j < J; ++j) {
      const long long rest = (*C.col_sums)[j] - fixed_col[j];
      if (rest < 0) throw ConfigError("fixed cells exceed col sum");
      w.clear();
      idx.clear();
      for (std::size_t i = 0; i < I; ++i)
        if (!fixed[i * J + j]) {
          w.push_back(Lam(i, j));
          idx.push_back(i);
        }
      if (rest > 0 && idx.empty())
        throw ConfigError("col " + std::to_string(j + 1) + " fully fixed below its sum");
      if (rest > 0) {
        rescue_zero_weights(w);
        rng.multinomial(rest, w, counts);
        for (std::size_t c = 0; c < idx.size(); ++c) T(idx[c], j) = counts[c];
      }
    }
  } else if (C.total) {
    const long long rest = *C.total - fixed_total;
    if (rest < 0) throw ConfigError("fixed cells exceed total");
    w.clear();
    idx.clear();
    for (std::size_t k = 0; k < I * J; ++k)
      if (!fixed[k]) {
        w.push_back(Lam.raw()[k]);
        idx.push_back(k);
      }
    if (rest > 0 && idx.empty()) throw ConfigError("table fully fixed below its total");
    if (rest > 0) {
      rescue_zero_weights(w);
      rng.multinomial(rest, w, counts);
      for (std::size_t c = 0; c < idx.size(); ++c) T.raw()[idx[c]] = counts[c];
    }
  } else {
    for (std::size_t k = 0; k < I * J; ++k)
      if (!fixed[k]) T.raw()[k] = rng.poisson(Lam.raw()[k]);
  }
  return T;
}

double fisher_log_pmf(const Table& T, const Intensity& Lam, const ConstraintSet& C) {
  if (T.rows() != Lam.rows() || T.cols() != Lam.cols())
    throw ConfigError("fisher_log_pmf: shape mismatch");
  if (!is_admissible(T, C))
    throw ConfigError("fisher_log_pmf: table not admissible for the constraints");

  const Margins m = summary_statistics(T);
  const auto lr = row_margins(Lam);
  const auto lc = col_margins(Lam);
  const double lpp = std::log(total_mass(Lam));

  double lp = -std::lgamma(static_cast<double>(m.total) + 1.0);
  for (long long r : m.rows) lp += std::lgamma(static_cast<double>(r) + 1.0);
  for (long long c : m.cols) lp += std::lgamma(static_cast<double>(c) + 1.0);
  for (std::size_t i = 0; i < T.rows(); ++i)
    for (std::size_t j = 0; j < T.cols(); ++j) {
      const double t = static_cast<double>(T(i, j));
      if (t == 0.0) continue;  // skips 0 * ln(0) when a cell has no intensity
      const double lomega = std::log(Lam(i, j)) + lpp - std::log(lr[i]) - std::log(lc[j]);
      lp += t * lomega - std::lgamma(t + 1.0);
    }
  return lp;
}

namespace {

struct FiberDfs {
  std::size_t I, J;
  const ConstraintSet* C;
  std::size_t max_size;
  Table T;
  std::vector<long long> row_rem, col_rem;
  long long tot_rem = 0;
  std::vector<long long> fixed_at;  // -1 = free
  std::vector<Table>* out;

  void run() {
    if (!C->has_rows() && !C->has_cols() && !C->total)
      throw ConfigError("enumerate_fiber: no bounding statistic, fiber is unbounded");
    step(0);
  }

  void step(std::size_t idx) {
    if (idx == I * J) {
      if (C->total && tot_rem != 0) return;
      out->push_back(T);
      if (out->size() > max_size)
        throw ConfigError("enumerate_fiber: fiber exceeds max_size");
      return;
    }
    const std::size_t i = idx / J, j = idx % J;

    long long hi = kUnbounded;
    if (C->has_rows()) hi = std::min(hi, row_rem[i]);
    if (C->has_cols()) hi = std::min(hi, col_rem[j]);
    if (C->total) hi = std::min(hi, tot_rem);

    long long forced = -1;
    if (fixed_at[idx] >= 0) forced = fixed_at[idx];
    if (C->symmetric && j < i) {
      const long long mirror = T(j, i);
      if (forced >= 0 && forced != mirror) return;
      forced = mirror;
    }
    if (C->has_rows() && j == J - 1) {
      if (forced >= 0 && forced != row_rem[i]) return;
      forced = row_rem[i];
    }
    if (C->has_cols() && i == I - 1) {
      if (forced >= 0 && forced != col_rem[j]) return;
      forced = col_rem[j];
    }

    const long long lo = forced >= 0 ? forced : 0;
    const long long up = forced >= 0 ? forced : hi;
    for (long long v = lo; v <= up; ++v) {
      if (v > hi) break;
      T(i, j) = v;
      if (C->has_rows()) row_rem[i] -= v;
      if (C->has_cols()) col_rem[j] -= v;
      if (C->total) tot_rem -= v;
      step(idx + 1);
      if (C->has_rows()) row_rem[i] += v;
      if (C->has_cols()) col_rem[j] += v;
      if (C->total) tot_rem += v;
    }
    T(i, j) = 0;
  }
};

}  // namespace

std::vector<Table> enumerate_fiber(std::size_t I, std::size_t J, const ConstraintSet& C0,
                                   std::size_t max_size) {
  const ConstraintSet C = canonicalize_constraints(C0);
  validate_constraints(C, I, J);
  FiberDfs dfs;
  dfs.I = I;
  dfs.J = J;
  dfs.C = &C;
  dfs.max_size = max_size;
  dfs.T = Table(I, J, 0);
  if (C.has_rows()) dfs.row_rem = *C.row_sums;
  if (C.has_cols()) dfs.col_rem = *C.col_sums;
  dfs.tot_rem = C.total ? *C.total : 0;
  dfs.fixed_at.assign(I * J, -1);
  for (const auto& f : C.fixed_cells) {
    dfs.fixed_at[f.i * J + f.j] = f.value;
    if (C.symmetric) dfs.fixed_at[f.j * J + f.i] = f.value;
  }
  std::vector<Table> out;
  dfs.out = &out;
  dfs.run();
  return out;
}

ConstraintSet canonicalize_constraints(const ConstraintSet& C) {
  ConstraintSet out = C;
  if (C.symmetric) {
    if (C.has_rows() && !C.has_cols()) out.col_sums = *C.row_sums;
    if (C.has_cols() && !C.has_rows()) out.row_sums = *C.col_sums;
  }
  return out;
}

namespace {

// Exact integer table matching residual margins on the free-cell pattern:
// masked IPF seed, floor capped by remaining budgets, largest-remainder pass,
// direct pairing, then unit augmenting paths through occupied cells.
Table fit_margins(const Intensity& Lam, const std::vector<std::uint8_t>& fixed,
                  const std::vector<long long>& rows, const std::vector<long long>& cols) {
  const std::size_t I = rows.size(), J = cols.size();
  const long long need =
      std::accumulate(rows.begin(), rows.end(), 0LL);
  if (need != std::accumulate(cols.begin(), cols.end(), 0LL))
    throw ConfigError("init_table: margin totals disagree");

  DGrid S(I, J, 0.0);
  double lmax = 0.0;
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t j = 0; j < J; ++j)
      if (!fixed[i * J + j]) lmax = std::max(lmax, Lam(i, j));
  // underflowed intensity cells must not block a feasible pattern: every free
  // cell keeps a tiny positive seed weight
  const double wfloor = lmax > 0.0 ? lmax * 1e-12 : 1.0;
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t j = 0; j < J; ++j)
      if (!fixed[i * J + j]) S(i, j) = std::max(Lam(i, j), wfloor);

  for (std::size_t i = 0; i < I; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < J; ++j) s += S(i, j);
    if (s == 0.0 && rows[i] > 0)
      throw ConfigError("init_table: row " + std::to_string(i + 1) +
                        " has no free cells but positive residual");
  }
  for (std::size_t j = 0; j < J; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < I; ++i) s += S(i, j);
    if (s == 0.0 && cols[j] > 0)
      throw ConfigError("init_table: col " + std::to_string(j + 1) +
                        " has no free cells but positive residual");
  }

  // masked IPF (zero rows/cols stay zero)
  for (int it = 0; it < 500; ++it) {
    for (std::size_t i = 0; i < I; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < J; ++j) s += S(i, j);
      if (s > 0.0) {
        const double f = static_cast<double>(rows[i]) / s;
        for (std::size_t j = 0; j < J; ++j) S(i, j) *= f;
      }
    }
    double dev = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < I; ++i) s += S(i, j);
      if (s > 0.0) {
        const double f = static_cast<double>(cols[j]) / s;
        for (std::size_t i = 0; i < I; ++i) S(i, j) *= f;
        dev = std::max(dev, std::fabs(f - 1.0));
      }
    }
    if (dev < 1e-12) break;
  }

  Table T(I, J, 0);
  std::vector<long long> drow = rows, dcol = cols;
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t j = 0; j < J; ++j) {
      if (fixed[i * J + j]) continue;
      const long long v = std::min({static_cast<long long>(std::floor(S(i, j))),
                                    drow[i], dcol[j]});
      if (v > 0) {
        T(i, j) = v;
        drow[i] -= v;
        dcol[j] -= v;
      }
    }

  // largest fractional remainders first
  std::vector<std::pair<double, std::size_t>> frac;
  frac.reserve(I * J);
  for (std::size_t k = 0; k < I * J; ++k)
    if (!fixed[k]) frac.push_back({S.raw()[k] - std::floor(S.raw()[k]), k});
  std::stable_sort(frac.begin(), frac.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& fk : frac) {
    const std::size_t i = fk.second / J, j = fk.second % J;
    if (drow[i] > 0 && dcol[j] > 0) {
      ++T(i, j);
      --drow[i];
      --dcol[j];
    }
  }

  // direct pairing of remaining deficits over free cells
  for (std::size_t i = 0; i < I; ++i) {
    if (drow[i] == 0) continue;
    for (std::size_t j = 0; j < J && drow[i] > 0; ++j) {
      if (dcol[j] == 0 || fixed[i * J + j]) continue;
      const long long m = std::min(drow[i], dcol[j]);
      T(i, j) += m;
      drow[i] -= m;
      dcol[j] -= m;
    }
  }

  // augmenting repair: row -> col via a free cell (+1), col -> row via an
  // occupied free cell (-1); BFS from a deficit row to any deficit col
  for (std::size_t i0 = 0; i0 < I; ++i0) {
    while (drow[i0] > 0) {
      std::vector<int> prev_row(I, -2), prev_col(J, -2);
      std::deque<std::pair<bool, std::size_t>> q;  // (is_row, index)
      q.push_back({true, i0});
      prev_row[i0] = -1;
      long long hit = -1;
      while (!q.empty() && hit < 0) {
        auto [is_row, n] = q.front();
        q.pop_front();
        if (is_row) {
          for (std::size_t j = 0; j < J; ++j)
            if (prev_col[j] == -2 && !fixed[n * J + j]) {
              prev_col[j] = static_cast<int>(n);
              if (dcol[j] > 0) {
                hit = static_cast<long long>(j);
                break;
              }
              q.push_back({false, j});
            }
        } else {
          for (std::size_t i = 0; i < I; ++i)
            if (prev_row[i] == -2 && !fixed[i * J + n] && T(i, n) > 0) {
              prev_row[i] = static_cast<int>(n);
              q.push_back({true, i});
            }
        }
      }
      if (hit < 0)
        throw ConfigError("init_table: constraints infeasible on the free-cell pattern");
      // walk back: col <- row <- col <- ... <- row i0, alternating +1 / -1
      std::size_t j = static_cast<std::size_t>(hit);
      for (;;) {
        const std::size_t i = static_cast<std::size_t>(prev_col[j]);
        ++T(i, j);
        if (prev_row[i] == -1) break;
        j = static_cast<std::size_t>(prev_row[i]);
        --T(i, j);
      }
      --drow[i0];
      --dcol[static_cast<std::size_t>(hit)];
    }
  }
  return T;
}

Table init_symmetric(const ConstraintSet& C, const Intensity& Lam) {
  const std::size_t I = Lam.rows();
  Table T(I, I, 0);
  plant_fixed(T, C, true);
  const auto fixed = fixed_mask_of(I, I, C, true);

  std::vector<long long> fixed_row(I, 0);
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t j = 0; j < I; ++j)
      if (fixed[i * I + j]) fixed_row[i] += T(i, j);

  if (C.has_rows() || C.has_cols()) {
    const std::vector<long long>& r = C.has_rows() ? *C.row_sums : *C.col_sums;
    std::vector<long long> deficit(I, 0);
    for (std::size_t i = 0; i < I; ++i) {
      deficit[i] = r[i] - fixed_row[i];
      if (deficit[i] < 0)
        throw ConfigError("init_table: fixed cells exceed symmetric margin");
      if (!fixed[i * I + i]) {
        T(i, i) = deficit[i];
        deficit[i] = 0;
      }
    }
    // rows whose diagonal is pinned: pair leftover mass off-diagonal
    for (std::size_t i = 0; i < I; ++i) {
      for (std::size_t k = i + 1; k < I && deficit[i] > 0; ++k) {
        if (deficit[k] == 0 || fixed[i * I + k]) continue;
        const long long m = std::min(deficit[i], deficit[k]);
        T(i, k) += m;
        T(k, i) += m;
        deficit[i] -= m;
        deficit[k] -= m;
      }
      if (deficit[i] > 0)
        throw ConfigError("init_table: symmetric margins infeasible with fixed diagonal");
    }
    return T;
  }

  if (C.total) {
    long long rest = *C.total;
    for (std::size_t i = 0; i < I; ++i)
      for (std::size_t j = 0; j < I; ++j)
        if (fixed[i * I + j]) rest -= T(i, j);
    if (rest < 0) throw ConfigError("init_table: fixed cells exceed total");
    std::vector<double> w;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < I; ++i)
      if (!fixed[i * I + i]) {
        w.push_back(Lam(i, i));
        idx.push_back(i);
      }
    if (!idx.empty()) {
      rescue_zero_weights(w);
      const auto alloc = largest_remainder(rest, w);
      for (std::size_t c = 0; c < idx.size(); ++c) T(idx[c], idx[c]) = alloc[c];
      return T;
    }
    // no free diagonal: mass must sit in mirrored pairs, so it must be even
    for (std::size_t i = 0; i < I && rest > 0; ++i)
      for (std::size_t j = i + 1; j < I && rest > 0; ++j)
        if (!fixed[i * I + j]) {
          const long long m = rest / 2;
          T(i, j) += m;
          T(j, i) += m;
          rest -= 2 * m;
        }
    if (rest != 0)
      throw ConfigError("init_table: symmetric total infeasible without free diagonal");
    return T;
  }
  return T;  // fixed cells only: the mirrored plant is already admissible
}

}  // namespace

Table init_table(const ConstraintSet& C0, const Intensity& Lam) {
  const std::size_t I = Lam.rows(), J = Lam.cols();
  const ConstraintSet C = canonicalize_constraints(C0);
  validate_constraints(C, I, J);

  if (C.symmetric) {
    Table T = init_symmetric(C, Lam);
    if (!is_admissible(T, C))
      throw ConfigError("init_table: symmetric construction failed admissibility");
    return T;
  }

  Table T(I, J, 0);
  plant_fixed(T, C, false);
  const auto fixed = fixed_mask_of(I, J, C, false);

  std::vector<long long> fixed_row(I, 0), fixed_col(J, 0);
  long long fixed_total = 0;
  for (const auto& f : C.fixed_cells) {
    fixed_row[f.i] += f.value;
    fixed_col[f.j] += f.value;
    fixed_total += f.value;
  }

  if (C.has_rows() && C.has_cols()) {
    std::vector<long long> r(I), c(J);
    for (std::size_t i = 0; i < I; ++i) r[i] = (*C.row_sums)[i] - fixed_row[i];
    for (std::size_t j = 0; j < J; ++j) c[j] = (*C.col_sums)[j] - fixed_col[j];
    for (long long v : r)
      if (v < 0) throw ConfigError("init_table: fixed cells exceed a row sum");
    for (long long v : c)
      if (v < 0) throw ConfigError("init_table: fixed cells exceed a col sum");
    const Table F = fit_margins(Lam, fixed, r, c);
    for (std::size_t k = 0; k < I * J; ++k)
      if (!fixed[k]) T.raw()[k] = F.raw()[k];
  } else if (C.has_rows()) {
    for (std::size_t i = 0; i < I; ++i) {
      const long long rest = (*C.row_sums)[i] - fixed_row[i];
      if (rest < 0) throw ConfigError("init_table: fixed cells exceed a row sum");
      if (rest == 0) continue;
      std::vector<double> w;
      std::vector<std::size_t> idx;
      for (std::size_t j = 0; j < J; ++j)
        if (!fixed[i * J + j]) {
          w.push_back(Lam(i, j));
          idx.push_back(j);
        }
      if (idx.empty())
        throw ConfigError("init_table: row fully fixed below its sum");
      rescue_zero_weights(w);
      const auto alloc = largest_remainder(rest, w);
      for (std::size_t k = 0; k < idx.size(); ++k) T(i, idx[k]) = alloc[k];
    }
  } else if (C.has_cols()) {
    for (std::size_t j = 0; j < J; ++j) {
      const long long rest = (*C.col_sums)[j] - fixed_col[j];
      if (rest < 0) throw ConfigError("init_table: fixed cells exceed a col sum");
      if (rest == 0) continue;
      std::vector<double> w;
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < I; ++i)
        if (!fixed[i * J + j]) {
          w.push_back(Lam(i, j));
          idx.push_back(i);
        }
      if (idx.empty())
        throw ConfigError("init_table: col fully fixed below its sum");
      rescue_zero_weights(w);
      const auto alloc = largest_remainder(rest, w);
      for (std::size_t k = 0; k < idx.size(); ++k) T(idx[k], j) = alloc[k];
    }
  } else if (C.total) {
    const long long rest = *C.total - fixed_total;
    if (rest < 0) throw ConfigError("init_table: fixed cells exceed the total");
    std::vector<double> w;
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < I * J; ++k)
      if (!fixed[k]) {
        w.push_back(Lam.raw()[k]);
        idx.push_back(k);
      }
    if (rest > 0 && idx.empty())
      throw ConfigError("init_table: table fully fixed below its total");
    if (rest > 0) {
      rescue_zero_weights(w);
      const auto alloc = largest_remainder(rest, w);
      for (std::size_t k = 0; k < idx.size(); ++k) T.raw()[idx[k]] = alloc[k];
    }
  } else {
    for (std::size_t k = 0; k < I * J; ++k)
      if (!fixed[k]) T.raw()[k] = static_cast<long long>(std::floor(Lam.raw()[k] + 0.5));
  }

  if (!is_admissible(T, C))
    throw ConfigError("init_table: construction failed admissibility");
  return T;
}

}  // namespace odm
