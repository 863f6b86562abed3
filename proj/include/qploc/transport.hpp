#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <utility>
#include <vector>

#include "qploc/instance.hpp"

namespace qploc {

// ---------------------------------------------------------------------------
// Transportation problems and the pairwise cut separation built on them.
//
// The quadratic part of the objective decomposes over customer pairs: with
// both assignment rows fixed at marginals z(i,.) and z(j,.), the interaction
// cost of pair (i, j) is a K x M transportation problem whose duals price the
// master's z columns. solve_transport is a primal network simplex on the
// bipartite graph plus one artificial root node; separate_pair solves the
// pair at the query point, then reoptimizes at the core point with the
// query-optimal arcs freed to both signs, which pins those arcs' reduced
// costs at zero. The refined duals are therefore optimal at the query point
// and, among all such duals, undominated with respect to the core mass.
// ---------------------------------------------------------------------------

struct TransportProblem {
  std::vector<double> supplies;  // s_k >= 0
  std::vector<double> demands;   // t_m >= 0
  Mat cost;                      // K x M

  // Balance within 1e-9 and finite entries; throws UnbalancedProblem or
  // InvalidInstance.
  void validate() const;
};

// Duals of a transportation problem: alpha on the demand side, beta on the
// supply side, alpha_m + beta_k <= cost_km, and t.alpha + s.beta == gamma.
struct DualPair {
  std::vector<double> alpha;
  std::vector<double> beta;
  double gamma = 0.0;
};

// Spanning tree snapshot (arc ids) for warm starts. Arc numbering: real arcs
// k*M + m, then supply-to-root arcs K*M + k, then root-to-demand arcs
// K*M + K + m.
struct TransportBasis {
  std::vector<int> arcs;
  bool empty() const { return arcs.empty(); }
};

struct TransportResult {
  Mat flow;  // K x M
  DualPair duals;
  int64_t pivots = 0;
  bool warm_used = false;
};

TransportResult solve_transport(const TransportProblem& pb);
// Warm variant: tries to start from `basis` (falls back to a cold start when
// the tree does not fit the problem or is primal infeasible) and leaves the
// final tree in `basis`. When `trusted` the costs are known unchanged since
// `basis` was proven optimal, so a primal-feasible rebuild skips pricing.
TransportResult solve_transport(const TransportProblem& pb, TransportBasis& basis,
                                bool trusted = false);

// Human-readable tableau: costs, optimal flows, duals, reduced costs.
void dump_tableau(const TransportProblem& pb, const TransportResult& res,
                  std::ostream& out);

// ---------------------------------------------------------------------------
// Benders separation. Marginal matrices are n x n row-per-customer; every row
// of zbar and zcore must sum to 1. Returned duals are completed to the full
// facility range so the cut prices every master column:
//   eta >= sum_ik g_ik z_ik,  g_ik = sum_{j>i} beta^(i,j)_k
//                                   + sum_{j<i} alpha^(j,i)_k.
// ---------------------------------------------------------------------------

struct SeparationOptions {
  bool factor_shortcut = true;  // reuse trees across pairs of a factorized cost
  double support_eps = 1e-12;   // marginal mass below this drops the node
};

// Tree cache keyed by the (supply support, demand support) pattern. With a
// factorized cost the unscaled subproblem repeats across pairs, so a cache
// hit usually resolves without any pivot. Query-point trees and core-point
// trees live in separate maps because their marginals follow different
// shapes; core trees are stored from plain solves only, so they stay
// dual-feasible for every pair under the same cost slice.
class PairCache {
 public:
  TransportBasis* find(const std::vector<int>& ksup, const std::vector<int>& msup);
  void store(const std::vector<int>& ksup, const std::vector<int>& msup,
             TransportBasis basis);
  TransportBasis* find_core(const std::vector<int>& ksup,
                            const std::vector<int>& msup);
  void store_core(const std::vector<int>& ksup, const std::vector<int>& msup,
                  TransportBasis basis);
  void clear() {
    trees_.clear();
    core_trees_.clear();
  }
  size_t size() const { return trees_.size() + core_trees_.size(); }

 private:
  using Key = std::pair<std::vector<int>, std::vector<int>>;
  std::map<Key, TransportBasis> trees_;
  std::map<Key, TransportBasis> core_trees_;
};

// Duals for customer pair (i, j), i < j, separated at zbar with core mass
// zcore. gamma is the pair's true interaction value at zbar. alpha/beta are
// sized by `facilities` semantics: full n vectors, entries outside the given
// facility set left at 0 and never read.
DualPair separate_pair(int i, int j, const Mat& zbar, const Mat& zcore,
                       const Instance& inst,
                       const std::vector<int>& facilities,
                       PairCache* cache = nullptr,
                       const SeparationOptions& opt = {});

struct BendersCut {
  Mat coef;  // n x n, eta >= sum coef(i,k) z_ik

  double value_at(const Mat& z) const;
};

// Aggregated cut over all interacting pairs plus the true subproblem value
// at zbar. Pair order is fixed, so the result is deterministic.
std::pair<BendersCut, double> separate_all(const Mat& zbar, const Mat& zcore,
                                           const Instance& inst,
                                           const std::vector<int>& facilities,
                                           PairCache* cache = nullptr,
                                           const SeparationOptions& opt = {});

}  // namespace qploc
