#pragma once

#include <cstdint>
#include <vector>

#include "qploc/common.hpp"
#include "qploc/lp.hpp"

namespace qploc {

// ---------------------------------------------------------------------------
// Generic bounded-variable branch and bound over lpcore relaxations. The
// matheuristic uses it for the restricted facility-location and assignment
// subproblems; the branch-and-cut driver reuses the same node machinery.
//
// Node selection is best bound with depth-first plunging; the branching
// column is the most fractional integer column (lowest index on ties), so
// runs are deterministic. Branching tightens column bounds in place on the
// caller's model; the original bounds are restored before returning.
// ---------------------------------------------------------------------------

struct MilpOptions {
  int64_t node_limit = 5000;
  double time_limit = 5.0;  // seconds, kInf disables
  double tol_int = 1e-6;    // distance to nearest integer accepted as integral
  double tol_gap = 0.0;     // relative gap at which the search may stop early
};

struct MilpResult {
  LpStatus status = LpStatus::Infeasible;
  bool proven = false;      // tree exhausted or gap closed
  double obj = kInf;        // incumbent value, kInf when none found
  double bound = -kInf;     // global lower bound at exit
  std::vector<double> x;    // incumbent column values, empty when none
  int64_t nodes = 0;        // node LPs solved

  bool has_incumbent() const { return !x.empty(); }
};

// Minimizes lp subject to integrality of the columns with integer[j] != 0.
// Status Optimal / Infeasible only with proven == true; a node or time limit
// yields IterLimit with the best incumbent (if any) and the proved bound.
MilpResult solve_milp(Lp& lp, const std::vector<char>& integer,
                      const MilpOptions& opt = {});

}  // namespace qploc
