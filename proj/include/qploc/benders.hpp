#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "qploc/bnc.hpp"
#include "qploc/instance.hpp"
#include "qploc/lp.hpp"
#include "qploc/transport.hpp"

namespace qploc {

// ---------------------------------------------------------------------------
// Benders master over the location/assignment variables plus one epigraph
// column eta for the projected interaction cost. The master LP carries the
// assignment, linking, cardinality and capacity rows on z and a growing pool
// of aggregated optimality cuts eta >= sum g_ik z_ik; separation prices the
// cuts as transportation problems at a stabilized interior point.
//
// Linking rows z_ik <= z_kk are generated lazily above a size threshold: the
// master is solved, violated links are appended, and the loop repeats until
// none are violated, which yields the same optimum as building all n(n-1)
// rows upfront.
// ---------------------------------------------------------------------------

// The candidate facility set is too small to define a core point.
struct InvalidCardinality : SolverError {
  using SolverError::SolverError;
};

// Relative-interior stochastic matrix over the candidate set: rows sum to 1,
// the diagonal mass stays strictly below p, and columns outside the candidate
// set are zero. Used to seed the separation point.
struct CorePoint {
  Mat z0;
  std::vector<int> candidates;
  double eps = 0.0;
};

// Three-case closed form: diagonal p/h - eps inside the candidate set,
// off-diagonal (1 - diagonal)/(h-1) inside, uniform 1/h for rows outside
// (h = |candidates|, p clamped to h). eps < 0 picks the default: half the
// admissible upper bound for p >= 2, 1/(10h) for p = 1 where the closed-form
// bound degenerates. Throws InvalidCardinality when fewer than two candidates
// remain, InvalidInstance for an eps outside its admissible range.
CorePoint make_core_point(int n, const std::vector<int>& candidates, int p,
                          double eps = -1.0);

// Convex mix phi*zhat + (1-phi)*zbar; row sums are preserved. Requires
// matching shapes and 0 < phi < 1.
Mat update_separation_point(const Mat& zhat, const Mat& zbar, double phi);

struct BendersParams {
  double eps_cut = 100.0;      // absolute cut violation needed for insertion
  double kappa = 0.1;          // percent bound improvement below which to stop
  double phi = 0.5;            // separation point smoothing weight
  double time_limit = kInf;    // seconds; the state is returned flagged
  int max_root_iters = 400;
  int pe_period = 2;           // iterations between fix-at-zero probe passes
  int pool_cap = 5000;         // active cuts before forced archival
  int lazy_linking_above = 20; // build linking rows upfront up to this n
  bool use_matheur = true;
  bool use_reduction = true;
  MilpOptions heur_milp;       // limits for the heuristic subsolves
};

struct PoolEntry {
  BendersCut cut;
  int row = -1;            // master row index
  int iter_added = 0;
  double violation = 0.0;  // violation by the master optimum at insertion
  uint64_t point_hash = 0; // hash of the separation point that produced it
  int slack_streak = 0;    // consecutive solves with slack > 10 * eps_cut
  bool archived = false;   // rhs relaxed out of the active model
};

enum class RootExit : uint8_t {
  Running,
  Converged,         // no cut violated by more than eps_cut
  SmallImprovement,  // relative bound gain fell below kappa
  GapClosed,
  IterLimit,
  TimeLimit,
};

const char* to_string(RootExit e);

struct RootStats {
  int iter = 0;
  double lb = -kInf;
  double ub = kInf;
  int cuts = 0;
  int eliminated = 0;
  int fixed = 0;
  double seconds = 0.0;
};

// Master relaxation plus all root bookkeeping: bounds, incumbent, cut pool,
// candidate set and the current separation point. Single-owner; the reduction
// routines mutate it through the accessors below.
class MasterState {
 public:
  MasterState(const Instance& inst, const BendersParams& params = {});

  const Instance& instance() const { return *inst_; }
  const BendersParams& params() const { return params_; }
  int n() const { return n_; }

  int zcol(int i, int k) const { return i * n_ + k; }
  int eta_col() const { return n_ * n_; }

  // Full master solve: lazy linking loop, bookkeeping refresh, pool sweep.
  LpStatus solve();
  // Plain LP solve of the model as it stands. Used by probes so a what-if
  // question neither grows the row set nor touches the recorded bounds.
  LpStatus solve_current();

  double lp_value() const { return lp_value_; }   // last full solve
  double lower_bound() const { return lb_; }      // running max, stays valid
  double upper_bound() const;
  double eta_value() const { return eta_; }
  const Mat& zbar() const { return zbar_; }

  bool has_incumbent() const { return have_incumbent_; }
  const Solution& incumbent() const;
  bool offer_incumbent(const Solution& sol);  // keeps the better total

  const std::vector<int>& candidates() const { return candidates_; }
  std::vector<int> support(double eps = 1e-9) const;
  bool eliminated(int k) const { return eliminated_[size_t(k)] != 0; }
  bool fixed_open(int k) const { return fixed_open_[size_t(k)] != 0; }
  // Permanently zero facility k's whole column block. Refuses the last
  // candidate and fixed-open facilities.
  void eliminate(int k);
  void fix_open(int k);
  int num_eliminated() const;
  int num_fixed_open() const;

  // Appends eta - sum g z >= 0; archives the stalest cut first when the
  // active pool is full. Returns the pool index.
  int add_cut(const BendersCut& cut, int iter = 0, double violation = 0.0,
              uint64_t point_hash = 0);
  const std::vector<PoolEntry>& pool() const { return pool_; }
  int active_cuts() const;

  const Mat& separation_point() const { return zhat_; }
  // Core point over the surviving candidates; falls back to the current
  // master optimum when fewer than two candidates remain.
  void reset_separation_point();
  void mix_separation_point(double phi);

  Lp& lp() { return lp_; }
  const Lp& lp() const { return lp_; }
  PairCache& cache() { return cache_; }

  RootExit exit_reason() const { return exit_; }
  void set_exit(RootExit e) { exit_ = e; }
  bool time_limit_hit() const { return exit_ == RootExit::TimeLimit; }

  const std::vector<RootStats>& log() const { return log_; }
  void log_row(int iter, double seconds);
  void write_log(std::ostream& out) const;

 private:
  void build_model();
  int add_violated_linking(double tol);
  void refresh();        // zbar, eta, lp_value, lb after an optimal solve
  void sweep_pool();     // slack streak accounting and archival
  void archive(PoolEntry& e);
  void archive_stalest();

  const Instance* inst_ = nullptr;
  BendersParams params_;
  int n_ = 0;
  Lp lp_;
  bool lazy_linking_ = false;
  std::vector<char> linking_present_;  // n*n, row (i,k) already in the model

  Mat zbar_;
  double lp_value_ = -kInf;
  double lb_ = -kInf;
  double eta_ = 0.0;

  Solution incumbent_;
  bool have_incumbent_ = false;

  std::vector<char> eliminated_;
  std::vector<char> fixed_open_;
  std::vector<int> candidates_;

  std::vector<PoolEntry> pool_;
  Mat zhat_;
  PairCache cache_;

  RootExit exit_ = RootExit::Running;
  std::vector<RootStats> log_;
};

// Root cutting-plane loop: solve the master, run the matheuristic on the LP
// support, apply the reduction tests, separate at the stabilized point, add
// the cut when it is violated by more than eps_cut and reoptimize. Exits when
// no violated cut remains, the relative bound gain drops below kappa, the
// gap closes, or a limit is hit; the two cutting-plane exits finish with a
// fix-at-one then fix-at-zero probe pass.
MasterState root_loop(const Instance& inst, const BendersParams& params = {});

}  // namespace qploc
