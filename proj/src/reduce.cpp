#include "qploc/reduce.hpp"

#include <cmath>

namespace qploc {

namespace {

// Fixing on LP noise would cut off an optimal solution; everything here
// prunes only beyond this margin.
double safety_margin(double ub) { return 1e-6 * std::max(1.0, std::abs(ub)); }

void resolve_or_throw(MasterState& state) {
  if (state.solve() != LpStatus::Optimal)
    throw InfeasibleInstance("master relaxation infeasible after reduction");
}

}  // namespace

std::vector<int> eliminate_facilities(MasterState& state) {
  std::vector<int> removed;
  if (!state.has_incumbent()) return removed;
  const double ub = state.upper_bound();
  const double lb = state.lp_value();
  const double margin = safety_margin(ub);
  const auto& rc = state.lp().reduced_costs();
  const std::vector<int> cands = state.candidates();
  for (int k : cands) {
    if (state.fixed_open(k)) continue;
    if (state.candidates().size() <= 1) break;
    int col = state.zcol(k, k);
    if (state.lp().col_state(col) != VarState::AtLower) continue;
    if (state.lp().lower(col) != 0.0) continue;
    if (lb + rc[size_t(col)] > ub + margin) {
      state.eliminate(k);
      removed.push_back(k);
    }
  }
  if (!removed.empty()) resolve_or_throw(state);
  return removed;
}

std::vector<int> partial_enumeration(MasterState& state, PeMode mode) {
  std::vector<int> fixed;
  const double ub = state.upper_bound();
  const double margin = safety_margin(ub);
  const bool to_zero = mode == PeMode::FixAtZero;
  const double pin = to_zero ? 1.0 : 0.0;

  std::vector<int> probes;
  for (int k : state.candidates()) {
    if (state.fixed_open(k)) continue;
    double v = state.zbar()(k, k);
    if (to_zero ? v <= 0.2 : v >= 0.8) probes.push_back(k);
  }
  if (probes.empty()) return fixed;

  for (int k : probes) {
    if (to_zero && state.candidates().size() <= 1) break;
    int col = state.zcol(k, k);
    bool prune = false;
    state.lp().fix(col, pin);
    try {
      LpStatus st = state.solve_current();
      prune = st == LpStatus::Infeasible ||
              (st == LpStatus::Optimal && state.lp().obj_value() > ub + margin);
    } catch (const NumericalFailure&) {
      prune = false;  // never fix on a failed probe
    }
    state.lp().unfix(col);
    if (prune) {
      if (to_zero) {
        state.eliminate(k);
      } else {
        state.fix_open(k);
      }
      fixed.push_back(k);
    }
  }
  resolve_or_throw(state);
  return fixed;
}

}  // namespace qploc
