#pragma once

#include <functional>
#include <vector>

#include "qploc/bnc.hpp"
#include "qploc/instance.hpp"

namespace qploc {

// ---------------------------------------------------------------------------
// Two-phase primal heuristic. Phase one solves a linear facility-location
// restriction over a candidate column set (the support of the current master
// relaxation); phase two runs a first-improvement variable neighborhood
// descent over five move classes, then intensifies the assignment decisions
// with a fixed-openings assignment MILP. All moves respect the assignment,
// cardinality and capacity constraints, so every intermediate solution is
// feasible.
// ---------------------------------------------------------------------------

// The restricted location MILP is proven infeasible on the given support.
struct RlfInfeasible : SolverError {
  using SolverError::SolverError;
};

// The fixed-openings assignment MILP is proven infeasible.
struct GapInfeasible : SolverError {
  using SolverError::SolverError;
};

struct MatheurOptions {
  MilpOptions milp;  // node and time limits for the RLF and GAP subsolves
};

// Called after every accepted descent move with the new assignment and the
// exact recomputed objective. Test instrumentation; leave empty in production.
using AcceptHook = std::function<void(const std::vector<int>&, double)>;

// Linear relaxation of the objective (quadratic term dropped) restricted to
// facility columns in `support`, solved as a MILP. The returned solution is
// evaluated under the full objective. Throws RlfInfeasible when the support
// provably cannot carry the customers; falls back to a greedy build when the
// subsolve hits its limits without an incumbent or would be too large.
Solution constructive(const Instance& inst, const std::vector<int>& support,
                      const MilpOptions& opt = {});

// Assignment MILP for a fixed open set: locations pinned open, quadratic
// term dropped, customers outside `open_set` reassigned at minimum linear
// cost under the residual capacities. Returns a full assignment vector with
// facilities self-assigned. Throws GapInfeasible when proven infeasible.
std::vector<int> solve_gap(const Instance& inst, const std::vector<int>& open_set,
                           const MilpOptions& opt = {});

// First-improvement descent cycling shift, swap, open, close and exchange
// moves, restarting from shift after every improvement. The result is locally
// optimal for all five neighborhoods.
Solution vnd(const Instance& inst, const Solution& start, const AcceptHook& hook = {});

// Solves the fixed-openings assignment MILP at start's open set; if the
// assignment changed, polishes it with a shift+swap-only descent. Returns the
// better of start and the polished solution under the full objective.
Solution gap_intensify(const Instance& inst, const Solution& start,
                       const MilpOptions& opt = {});

// Deterministic greedy build: opens facilities from `support` (all when
// empty) until the customers fit, assigning by decreasing demand to the
// cheapest feasible facility. Last-resort fallback; throws
// InfeasibleInstance when even the widest attempt fails.
Solution greedy_solution(const Instance& inst, std::vector<int> support = {});

// Pipeline driver with support-change memoization: the whole run is a pure
// function of the support, so a repeated support returns the cached best.
class Matheuristic {
 public:
  explicit Matheuristic(const Instance& inst, MatheurOptions opt = {});

  // constructive (with widening fallback) -> vnd -> gap_intensify; keeps and
  // returns the best solution seen across calls.
  const Solution& run(const std::vector<int>& support);

  bool has_best() const { return have_best_; }
  const Solution& best() const { return best_; }

 private:
  const Instance* inst_;
  MatheurOptions opt_;
  std::vector<int> last_support_;
  bool have_best_ = false;
  Solution best_;
};

}  // namespace qploc
