#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qploc/common.hpp"

namespace qploc {

// ---------------------------------------------------------------------------
// Problem variants. All four share one data model: "free" cardinality means
// p = n, uncapacitated means the capacity constraints are dropped entirely.
// ---------------------------------------------------------------------------

enum class Variant { UncapFree, UncapP, CapFree, CapP };

bool capacitated(Variant v);
bool p_bounded(Variant v);
const char* variant_name(Variant v);
Variant variant_from_name(const std::string& s);  // throws ParseError

// ---------------------------------------------------------------------------
// Quadratic interaction costs q(i,k,j,m): cost of serving customer i from
// facility k while customer j is served from facility m. Defined on unordered
// customer pairs; the accessor canonicalizes so q(i,k,j,m) == q(j,m,i,k) and
// q is 0 when i == j.
//
// Two storage forms:
//  * dense: full pair tensor, refuses n > kDenseLimit (memory guard)
//  * factorized: q(i<j,k,m) = tau * (w(i,j) * dist(k,m) + w(j,i) * dist(m,k))
// ---------------------------------------------------------------------------

class QuadCost {
 public:
  static constexpr int kDenseLimit = 60;

  QuadCost() = default;

  static QuadCost dense(int n);  // zero-filled
  static QuadCost factorized(Mat flow, Mat dist, double tau);

  bool is_factorized() const { return factorized_; }
  int n() const { return n_; }

  double operator()(int i, int k, int j, int m) const {
    if (i == j) return 0.0;
    if (i > j) {
      std::swap(i, j);
      std::swap(k, m);
    }
    if (factorized_) {
      return tau_ * (flow_(i, j) * dist_(k, m) + flow_(j, i) * dist_(m, k));
    }
    return q_[idx(i, k, j, m)];
  }

  // Mutable access for building dense tensors; requires i < j.
  double& dense_at(int i, int k, int j, int m);

  // Factorized internals (for the transportation shortcut and file output).
  double tau() const { return tau_; }
  const Mat& flow() const { return flow_; }
  const Mat& dist() const { return dist_; }
  bool symmetric_dist() const { return symmetric_dist_; }

  // Combined weight of the unordered pair {i, j}: tau * (w_ij + w_ji).
  // Only meaningful with a symmetric distance matrix, where the pair cost
  // matrix factorizes as pair_weight(i, j) * dist.
  double pair_weight(int i, int j) const {
    return tau_ * (flow_(i, j) + flow_(j, i));
  }

  // Max entry over the full tensor (used for cost scaling decisions).
  double max_entry() const;

 private:
  size_t idx(int i, int k, int j, int m) const {
    size_t pair = size_t(i) * n_ - size_t(i) * (i + 1) / 2 + (j - i - 1);
    return (pair * n_ + k) * n_ + m;
  }

  bool factorized_ = false;
  int n_ = 0;
  std::vector<double> q_;  // dense form
  Mat flow_, dist_;        // factorized form
  double tau_ = 0.0;
  bool symmetric_dist_ = false;
};

// ---------------------------------------------------------------------------
// Instance. capacity[k] is the gross capacity b_k; a facility placed at k
// serves its own demand, so the residual for other customers is
// b_k - d_k (slack_cap). Uncapacitated variants keep the arrays but never
// read them in models or feasibility checks.
// ---------------------------------------------------------------------------

struct Instance {
  int n = 0;
  int p = 0;  // p == n for the cardinality-free variants
  Variant variant = Variant::UncapFree;
  std::string name;

  std::vector<double> setup;     // f_k >= 0
  std::vector<double> capacity;  // b_k
  std::vector<double> demand;    // d_i >= 0
  Mat assign_cost;               // c(i,k) >= 0
  QuadCost quad;                 // q >= 0

  bool capacitated() const { return qploc::capacitated(variant); }
  bool p_bounded() const { return qploc::p_bounded(variant); }
  double slack_cap(int k) const { return capacity[k] - demand[k]; }
  double total_demand() const;

  // Throws InvalidInstance / DimensionMismatch when a field violates the data
  // contract (sizes, signs, p range, b_k >= d_k for capacitated).
  void validate() const;
};

struct CostBreakdown {
  double setup = 0.0;
  double linear = 0.0;
  double quadratic = 0.0;
  double total = 0.0;
};

struct Solution {
  std::vector<int> assign;  // assign[i] = serving facility; open <=> assign[k] == k
  CostBreakdown cost;
};

std::vector<int> open_facilities(const std::vector<int>& assign);

// Feasibility of an assignment vector: every assign[i] in range, facility set
// closed under self-assignment, |open| <= p, and capacities respected for
// capacitated variants. Throws InfeasibleSolution naming the violation.
void check_assignment(const Instance& inst, const std::vector<int>& assign);

// Full objective of a feasible assignment. Checks feasibility first.
CostBreakdown evaluate(const Instance& inst, const std::vector<int>& assign);

Solution make_solution(const Instance& inst, std::vector<int> assign);

// Objective change from re-serving customer i from `to` instead of its
// current facility (assignment otherwise unchanged; no feasibility checks,
// callers maintain capacity bookkeeping). Matches evaluate() exactly:
// moving then re-evaluating gives the old total plus this delta.
double reassign_delta(const Instance& inst, const std::vector<int>& assign,
                      int i, int to);

// ---------------------------------------------------------------------------
// Hub-network style cost construction: given node-to-node flows w and
// distances, build linear costs c(i,k) = (chi * O_i + delta * D_i) * dist(i,k)
// with O_i / D_i the total out/in flow of node i, and factorized quadratic
// costs with weight tau. Overwrites assign_cost and quad of `inst`.
// ---------------------------------------------------------------------------

struct UnitCosts {
  double chi = 2.0;    // collection (outbound) rate
  double tau = 0.75;   // transfer (inter-facility) rate
  double delta = 3.0;  // distribution (inbound) rate
};

void build_flow_costs(Instance& inst, const Mat& flow, const Mat& dist,
                      const UnitCosts& u = {});

// ---------------------------------------------------------------------------
// Benchmark generator. Nodes fall in three traffic classes (2% heavy with
// outflow in [100,1000], 38% medium in [10,100], rest light in [1,10]);
// coordinates are uniform on [0,100]^2, costs come from build_flow_costs,
// demand d_i = O_i, and setup/capacity levels come in loose ('L') and
// tight ('T') flavors. Deterministic in (n, seed, flags).
// ---------------------------------------------------------------------------

struct GenConfig {
  int n = 10;
  uint64_t seed = 1;
  Variant variant = Variant::UncapFree;
  int p = 0;               // used when the variant is p-bounded; 0 = n/4+1
  char setup_level = 'L';  // 'L' loose (cheaper), 'T' tight
  char cap_level = 'L';    // 'L' loose (roomier), 'T' tight
  UnitCosts units;
};

Instance generate_set1(const GenConfig& cfg);

// Small random instances with dense quadratic tensors, used by the self-test
// and the randomized acceptance suites. Always feasible by construction
// (one facility is given enough capacity to serve everything when p = 1).
Instance random_dense_instance(int n, uint64_t seed, Variant variant, int p);

// ---------------------------------------------------------------------------
// Text format round trip and the raw coordinate/flow reader. Formats are
// documented in the README.
// ---------------------------------------------------------------------------

void save_instance(const Instance& inst, std::ostream& out);
void save_instance(const Instance& inst, const std::string& path);

Instance load_instance(std::istream& in, const std::string& what = "<stream>");
Instance load_instance(const std::string& path);  // sniffs native vs raw format

struct RawReadOptions {
  double coord_scale = 0.001;  // dist = coord_scale * Euclidean distance
  double setup_scale = 1.0;
  UnitCosts units;
  Variant variant = Variant::UncapFree;
  int p = 0;
};

Instance load_raw_flow(const std::string& path, const RawReadOptions& opt);

}  // namespace qploc
