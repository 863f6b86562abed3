#pragma once

#include <vector>

#include "qploc/instance.hpp"
#include "qploc/lp.hpp"

namespace qploc {

// ---------------------------------------------------------------------------
// Reference solvers for testing. Everything here is deliberately brute force
// and shares no solver code with the production path: the instance oracle
// walks every open set and assignment, the LP oracle enumerates basic
// solutions. Sizes are guarded because both are exponential.
// ---------------------------------------------------------------------------

struct OracleResult {
  double value = 0.0;
  // All optimal assignments within tie_tol of the best value.
  std::vector<std::vector<int>> optima;
};

// Exact optimum by exhaustive search with feasibility pruning only.
// Throws SizeGuard for n > max_n and InfeasibleInstance when no assignment
// is feasible.
OracleResult enumerate_optimal(const Instance& inst, int max_n = 10,
                               double tie_tol = 1e-9);

// Objective of an assignment computed with naive loops (ordered pair double
// sum halved). Used to cross-check evaluate(); no feasibility checks.
double naive_cost(const Instance& inst, const std::vector<int>& assign);

// Optimal value of an Lp model by enumerating basic solutions (every choice
// of basic set plus bound side for the nonbasics). Requires every variable
// to carry at least one finite bound unless it is basic; returns +inf when
// no feasible basic solution exists. Throws SizeGuard when the combination
// count is out of reach.
double lp_vertex_optimum(const Lp& lp);

}  // namespace qploc
