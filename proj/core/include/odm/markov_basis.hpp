#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "odm/constraints.hpp"
#include "odm/rng.hpp"
#include "odm/table.hpp"

namespace odm {

struct MoveEntry {
  std::size_t i = 0;
  std::size_t j = 0;
  int coef = 0;  // cell change per unit eta
};

// An integer move f with all margin statistics zero: T -> T + eta f. Plain
// moves are 2x2 corners (+1,+1,-1,-1); symmetric moves mirror the corner
// across the diagonal with coefficients summed on coordinate collisions
// (diagonal cells can carry ±2).
struct MarkovBasisMove {
  std::vector<MoveEntry> cells;
};

// All I(I-1)J(J-1)/4 corner moves, minus any touching a fixed cell; symmetric
// mode emits deduplicated mirrored moves instead. Fixed cells are mirrored
// before filtering in symmetric mode.
std::vector<MarkovBasisMove> build_markov_basis(std::size_t I, std::size_t J,
                                                const ConstraintSet& C);

// Gibbs sampler state over the fiber of C. When the basis would be too large
// to materialize, moves are drawn implicitly: uniform unordered row and column
// pairs, rejecting draws that touch fixed cells — the same distribution as
// uniform over the materialized filtered basis.
struct ChainState {
  Table T;
  std::vector<MarkovBasisMove> basis;    // materialized moves (may be empty)
  std::vector<std::uint8_t> fixed_mask;  // I*J lookup for implicit rejection
  std::vector<double> log_lambda;        // ln Lambda_ij, row-major
  Rng rng{0};
  std::uint64_t steps = 0;
  std::uint64_t degenerate = 0;  // moves whose support collapsed to {0}
  bool symmetric = false;
  bool implicit = false;  // draw corner moves on the fly instead of basis[]
  std::vector<double> scratch;  // per-step conditional weights
};

// T0 must be admissible for C; C must pin both margins (symmetric sets with
// one family are canonicalized first). Bases up to explicit_limit moves are
// materialized; larger plain bases switch to implicit sampling.
ChainState make_chain(const Table& T0, const ConstraintSet& C, const Intensity& Lam,
                      std::uint64_t seed, std::size_t explicit_limit = (1u << 20));

// Refresh ln Lambda after the intensity changed (O(IJ)).
void set_intensity(ChainState& st, const Intensity& Lam);

// One Gibbs move: uniform move choice, eta from the exact conditional of the
// target along the feasible line {T + eta f >= 0}, computed cell-locally in
// log space. Always accepts.
void gibbs_mb_step(ChainState& st);

// Convenience per the sampler interface: refresh intensity, then one step.
void gibbs_mb_step(ChainState& st, const Intensity& Lam);

}  // namespace odm
