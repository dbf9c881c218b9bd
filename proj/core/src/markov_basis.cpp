#include "odm/markov_basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>

#include "odm/errors.hpp"
#include "odm/table_sampler.hpp"

namespace odm {

namespace {

std::vector<std::uint8_t> fixed_mask_of(std::size_t I, std::size_t J,
                                        const ConstraintSet& C, bool mirror) {
  std::vector<std::uint8_t> mask(I * J, 0);
  for (const auto& f : C.fixed_cells) {
    mask[f.i * J + f.j] = 1;
    if (mirror) mask[f.j * J + f.i] = 1;
  }
  return mask;
}

}  // namespace

std::vector<MarkovBasisMove> build_markov_basis(std::size_t I, std::size_t J,
                                                const ConstraintSet& C) {
  std::vector<MarkovBasisMove> out;
  if (!C.symmetric) {
    const auto fixed = fixed_mask_of(I, J, C, false);
    for (std::size_t i1 = 0; i1 < I; ++i1)
      for (std::size_t i2 = i1 + 1; i2 < I; ++i2)
        for (std::size_t j1 = 0; j1 < J; ++j1)
          for (std::size_t j2 = j1 + 1; j2 < J; ++j2) {
            if (fixed[i1 * J + j1] || fixed[i2 * J + j2] || fixed[i1 * J + j2] ||
                fixed[i2 * J + j1])
              continue;
            MarkovBasisMove m;
            m.cells = {{i1, j1, +1}, {i2, j2, +1}, {i1, j2, -1}, {i2, j1, -1}};
            out.push_back(std::move(m));
          }
    return out;
  }

  // symmetric: mirror each corner move across (i,j) -> (j,i) and sum the
  // coefficients where coordinates collide (diagonal cells can reach ±2)
  const auto fixed = fixed_mask_of(I, I, C, true);
  std::set<std::vector<std::tuple<std::size_t, std::size_t, int>>> seen;
  for (std::size_t i1 = 0; i1 < I; ++i1)
    for (std::size_t i2 = i1 + 1; i2 < I; ++i2)
      for (std::size_t j1 = 0; j1 < I; ++j1)
        for (std::size_t j2 = j1 + 1; j2 < I; ++j2) {
          std::map<std::pair<std::size_t, std::size_t>, int> coef;
          auto add = [&](std::size_t a, std::size_t b, int c) {
            coef[{a, b}] += c;
            coef[{b, a}] += c;
          };
          add(i1, j1, +1);
          add(i2, j2, +1);
          add(i1, j2, -1);
          add(i2, j1, -1);

          std::vector<std::tuple<std::size_t, std::size_t, int>> key;
          bool touches_fixed = false;
          int g = 0;
          for (const auto& [cell, c] : coef) {
            if (c == 0) continue;
            if (fixed[cell.first * I + cell.second]) touches_fixed = true;
            key.emplace_back(cell.first, cell.second, c);
            g = std::gcd(g, std::abs(c));
          }
          if (touches_fixed || key.empty()) continue;
          if (g > 1)  // a corner mirrored onto itself doubles; halve it back
            for (auto& t : key) std::get<2>(t) /= g;
          if (std::get<2>(key.front()) < 0)  // sign-canonical: f and -f coincide
            for (auto& t : key) std::get<2>(t) = -std::get<2>(t);
          if (!seen.insert(key).second) continue;

          MarkovBasisMove m;
          for (const auto& [a, b, c] : key) m.cells.push_back({a, b, c});
          out.push_back(std::move(m));
        }
  return out;
}

ChainState make_chain(const Table& T0, const ConstraintSet& C0, const Intensity& Lam,
                      std::uint64_t seed, std::size_t explicit_limit) {
  const std::size_t I = T0.rows(), J = T0.cols();
  const ConstraintSet C = canonicalize_constraints(C0);
  validate_constraints(C, I, J);
  if (!C.has_rows() || !C.has_cols())
    throw ConfigError("make_chain: Markov-basis sampling requires both margins");
  if (!is_admissible(T0, C))
    throw ConfigError("make_chain: starting table is not admissible");

  ChainState st;
  st.T = T0;
  st.symmetric = C.symmetric;
  st.fixed_mask = fixed_mask_of(I, J, C, C.symmetric);
  st.rng = Rng(seed);

  const double plain_count = 0.25 * static_cast<double>(I) * static_cast<double>(I - 1) *
                             static_cast<double>(J) * static_cast<double>(J - 1);
  if (C.symmetric || plain_count <= static_cast<double>(explicit_limit)) {
    st.basis = build_markov_basis(I, J, C);
    st.implicit = false;
  } else {
    st.implicit = true;
  }
  set_intensity(st, Lam);
  return st;
}

void set_intensity(ChainState& st, const Intensity& Lam) {
  if (Lam.rows() != st.T.rows() || Lam.cols() != st.T.cols())
    throw ConfigError("set_intensity: shape mismatch");
  st.log_lambda.resize(Lam.size());
  for (std::size_t k = 0; k < Lam.size(); ++k) {
    const double v = Lam.raw()[k];
    if (v < 0.0 || !std::isfinite(v))
      throw NumericError("set_intensity: negative or non-finite intensity cell");
    // underflowed cells keep a finite, extremely unfavorable log weight so the
    // conditional stays well defined
    st.log_lambda[k] = v < 1e-300 ? -700.0 : std::log(v);
  }
}

namespace {

// exact conditional of the Poisson-product target along {T + eta f}; equals
// the both-margin (Fisher) conditional because margin terms cancel along f
void apply_gibbs(ChainState& st, const MoveEntry* cells, std::size_t n_cells) {
  const std::size_t J = st.T.cols();

  long long lo = std::numeric_limits<long long>::min();
  long long hi = std::numeric_limits<long long>::max();
  for (std::size_t c = 0; c < n_cells; ++c) {
    const long long t = st.T(cells[c].i, cells[c].j);
    const long long k = cells[c].coef;
    if (k > 0)
      lo = std::max(lo, -(t / k));
    else
      hi = std::min(hi, t / (-k));
  }
  if (lo > 0 || hi < 0 || lo == std::numeric_limits<long long>::min() ||
      hi == std::numeric_limits<long long>::max())
    throw NumericError("gibbs_mb_step: support interval does not bracket 0");

  ++st.steps;
  if (lo == hi) {
    ++st.degenerate;
    return;
  }

  const std::size_t width = static_cast<std::size_t>(hi - lo + 1);
  st.scratch.resize(width);
  double wmax = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < width; ++s) {
    const long long eta = lo + static_cast<long long>(s);
    double w = 0.0;
    for (std::size_t c = 0; c < n_cells; ++c) {
      const double t = static_cast<double>(st.T(cells[c].i, cells[c].j) +
                                           eta * cells[c].coef);
      w += t * st.log_lambda[cells[c].i * J + cells[c].j] - std::lgamma(t + 1.0);
    }
    st.scratch[s] = w;
    wmax = std::max(wmax, w);
  }
  double z = 0.0;
  for (std::size_t s = 0; s < width; ++s) {
    st.scratch[s] = std::exp(st.scratch[s] - wmax);
    z += st.scratch[s];
  }
  const double u = st.rng.uniform01() * z;
  double acc = 0.0;
  std::size_t pick = width - 1;
  for (std::size_t s = 0; s < width; ++s) {
    acc += st.scratch[s];
    if (u < acc) {
      pick = s;
      break;
    }
  }
  const long long eta = lo + static_cast<long long>(pick);
  if (eta != 0)
    for (std::size_t c = 0; c < n_cells; ++c)
      st.T(cells[c].i, cells[c].j) += eta * cells[c].coef;
}

}  // namespace

void gibbs_mb_step(ChainState& st) {
  if (st.implicit) {
    const std::size_t I = st.T.rows(), J = st.T.cols();
    MoveEntry cells[4];
    for (int tries = 0; tries < 100000; ++tries) {
      std::size_t i1 = st.rng.uniform_below(I);
      std::size_t i2 = st.rng.uniform_below(I - 1);
      if (i2 >= i1) ++i2;
      std::size_t j1 = st.rng.uniform_below(J);
      std::size_t j2 = st.rng.uniform_below(J - 1);
      if (j2 >= j1) ++j2;
      if (i2 < i1) std::swap(i1, i2);
      if (j2 < j1) std::swap(j1, j2);
      if (st.fixed_mask[i1 * J + j1] || st.fixed_mask[i2 * J + j2] ||
          st.fixed_mask[i1 * J + j2] || st.fixed_mask[i2 * J + j1])
        continue;
      cells[0] = {i1, j1, +1};
      cells[1] = {i2, j2, +1};
      cells[2] = {i1, j2, -1};
      cells[3] = {i2, j1, -1};
      apply_gibbs(st, cells, 4);
      return;
    }
    throw NumericError("gibbs_mb_step: could not draw a move avoiding fixed cells");
  }

  if (st.basis.empty()) {  // fully pinned fiber: the only admissible table is T
    ++st.steps;
    ++st.degenerate;
    return;
  }
  const auto& mv = st.basis[st.rng.uniform_below(st.basis.size())];
  apply_gibbs(st, mv.cells.data(), mv.cells.size());
}

void gibbs_mb_step(ChainState& st, const Intensity& Lam) {
  set_intensity(st, Lam);
  gibbs_mb_step(st);
}

}  // namespace odm
