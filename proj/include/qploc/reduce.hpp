#pragma once

#include <vector>

#include "qploc/benders.hpp"

namespace qploc {

// ---------------------------------------------------------------------------
// Model reduction over the Benders master. Both routines only ever touch the
// location columns: closing facility k zeroes its whole column block, so one
// successful test removes n variables at once. Every reduction keeps the full
// set of optimal solutions reachable, which the safety margins below protect
// against LP noise.
// ---------------------------------------------------------------------------

enum class PeMode {
  FixAtZero,  // probe z_kk = 1 on candidates with small LP value
  FixAtOne,   // probe z_kk = 0 on candidates with large LP value
};

// Reduced cost elimination: with the master freshly solved, any location
// column nonbasic at zero whose reduced cost lifts the LP value beyond the
// incumbent cannot open in an optimal solution. Uses the CURRENT LP value
// (cuts included), not the running lower bound, so the reduced costs and the
// bound come from the same basis. Returns the facilities removed and leaves
// the master re-solved when anything was removed.
std::vector<int> eliminate_facilities(MasterState& state);

// What-if probes on the location columns. FixAtZero pins z_kk = 1 for every
// candidate with value at most 0.2; an infeasible probe or a probe optimum
// beyond the incumbent proves the facility closed. FixAtOne pins z_kk = 0
// for values at least 0.8 and fixes the facility open on the same evidence.
// Probes solve the model as it stands (no row generation), are undone after
// each test, and a numerical failure skips the candidate without fixing.
// Ends with a full re-solve so the state is optimal again.
std::vector<int> partial_enumeration(MasterState& state, PeMode mode);

}  // namespace qploc
