#pragma once

#include <string>
#include <vector>

#include "qploc/instance.hpp"
#include "qploc/lp.hpp"

namespace qploc {

// ---------------------------------------------------------------------------
// Linearized reformulations of the quadratic objective for bound computation.
// Every model keeps the location variables z(i,k) in [0,1] plus one
// nonnegative x column per product z(i,k)*z(j,m) over unordered customer
// pairs i < j. The configurations differ in which product-level rows are
// generated:
//
//   STD   three-row big-M style product envelope per x column
//   RL2   transportation marginals only: row sums of each pair block equal
//         the z row of one customer, column sums the other
//   RL3..RL8  RL2 plus product forms of the linking rows (z_ik <= z_kk), the
//         capacity rows, or both, each multiplied by z_jm or by (1 - z_jm)
//   RL1   everything, including the product forms of the cardinality row
//
// Product rows involving two assignments of the same customer are folded
// exactly: z(j,k)*z(j,m) is z(j,m) when k == m and 0 otherwise, so the
// generated rows remain valid for every feasible integer point.
// ---------------------------------------------------------------------------

enum class RltLevel { STD, RL1, RL2, RL3, RL4, RL5, RL6, RL7, RL8 };

const char* to_string(RltLevel level);
RltLevel rlt_level_from_name(const std::string& s);  // throws ParseError

struct RltConfig {
  RltLevel level = RltLevel::RL2;
  bool product_envelope = false;      // STD rows
  bool marginals = false;             // pair block row/column sums
  bool linking_z = false;             // (z_ik <= z_kk) * z_jm
  bool linking_complement = false;    // (z_ik <= z_kk) * (1 - z_jm)
  bool capacity_z = false;            // capacity row * z_jm
  bool capacity_complement = false;   // capacity row * (1 - z_jm)
  bool cardinality_z = false;         // cardinality row * z_jm
  bool cardinality_complement = false;
  bool redundant_bounds = false;      // x <= z_jm rows kept by the full model

  static RltConfig make(RltLevel level);
};

// Row counts per family, in generation order (tests and the bound CLI report
// them; base covers the location rows shared by every configuration).
struct RltRowCounts {
  int base = 0;
  int envelope = 0;
  int marginal_cols = 0;  // sums over the first customer's facility
  int marginal_rows = 0;  // sums over the second customer's facility
  int linking_z = 0;
  int linking_complement = 0;
  int capacity_z = 0;
  int capacity_complement = 0;
  int cardinality = 0;
  int redundant_bounds = 0;
};

struct RltModel {
  Lp lp;
  int n = 0;
  RltRowCounts rows;

  int col_z(int i, int k) const { return i * n + k; }
  // Canonical product column for z(a,b)*z(c,d), a != c; orders the pair.
  int col_x(int a, int b, int c, int d) const;
};

// Builds the LP relaxation (all columns continuous). The x space has
// n^2 * n * (n-1) / 2 columns, hence the size guard.
RltModel build_lp(const Instance& inst, const RltConfig& cfg, int max_n = 30);

// Optimal value of the LP relaxation; throws NumericalFailure when the
// solver does not reach optimality.
double lp_bound(const Instance& inst, const RltConfig& cfg, int max_n = 30);

}  // namespace qploc
