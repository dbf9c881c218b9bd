#pragma once

#include <cstddef>
#include <vector>

#include "odm/constraints.hpp"
#include "odm/rng.hpp"
#include "odm/table.hpp"

namespace odm {

// Independent Poisson(Lambda_ij) per cell, row-major draw order.
Table sample_unconstrained(const Intensity& Lam, Rng& rng);

// Exact draw for a tractable constraint set:
//   {} / cells only            -> Poisson on free cells
//   {total, cells...}          -> one multinomial over free cells
//   {row_sums, cells...}       -> one multinomial per row over its free cells
//   {col_sums, cells...}       -> one multinomial per column
// Fixed cells are planted first and their mass is subtracted from the margin
// they sit in (support restriction). Throws ConfigError if C is intractable
// or fixed mass exceeds a margin.
Table sample_closed_form(const Intensity& Lam, const ConstraintSet& C, Rng& rng);

// Unnormalized log mass of T under both-margin conditioning:
//   sum_i ln T_i+! + sum_j ln T_+j! - ln T_++! - sum_ij ln T_ij!
//   + sum_ij T_ij ln omega_ij,  omega_ij = Lam_ij Lam_++ / (Lam_i+ Lam_+j).
// Throws ConfigError when T is not admissible for C.
double fisher_log_pmf(const Table& T, const Intensity& Lam, const ConstraintSet& C);

// Exhaustive recursive enumeration of all tables admissible for C. Needs at
// least one bounding statistic (margins or total). Throws ConfigError when
// the fiber exceeds max_size or is unbounded.
std::vector<Table> enumerate_fiber(std::size_t I, std::size_t J, const ConstraintSet& C,
                                   std::size_t max_size);

// Deterministic admissible starting table: fixed cells planted, IPF of Lambda
// to the residual margins, floor, then greedy unit-mass repair along
// rows/columns (augmenting through occupied cells when blocked). Symmetric
// sets are filled along the diagonal with a paired off-diagonal fallback.
// Throws ConfigError when the constraint system is infeasible.
Table init_table(const ConstraintSet& C, const Intensity& Lam);

// If C is symmetric with one margin family given, returns a copy with both
// families pinned (T = T^t forces them equal); otherwise returns C unchanged.
ConstraintSet canonicalize_constraints(const ConstraintSet& C);

}  // namespace odm
