#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "qploc/common.hpp"

namespace qploc {

enum class RowSense : uint8_t { LE, GE, EQ };

enum class LpStatus : uint8_t { Optimal, Infeasible, Unbounded, IterLimit };

const char* to_string(LpStatus s);

// Variable position in the current basis.
enum class VarState : uint8_t { Basic, AtLower, AtUpper, FreeZero };

// Snapshot sufficient to warm start: per-variable states (structural columns
// followed by one slack per row) plus the basic variable of each row.
struct Basis {
  std::vector<VarState> vstat;
  std::vector<int> basic;
  bool empty() const { return vstat.empty(); }
};

// ---------------------------------------------------------------------------
// Bounded-variable revised simplex over a mutable model. One object carries
// the model and its factorized basis so row additions, bound fixes and
// re-solves stay warm. Minimization only; flip objective signs to maximize.
//
// Internals: each row gets a slack (LE: s in [0, inf), GE: s in (-inf, 0],
// EQ: s = 0) so the working system is A x + s = rhs with an all-slack
// starting basis. The basis inverse is kept dense and updated per pivot,
// with periodic refactorization through Eigen's LU.
//
// Degeneracy: after stall_limit zero-length pivots the finite bounds are
// widened by tiny per-variable shifts (hash-seeded, escalating per round) so
// ties break and steps regain length; the shifts are removed before any
// result is reported and a clean phase pass settles the true model. Bland's
// rule remains the terminal fallback once the shift rounds are exhausted.
//
// Determinism: fixed pivot rules, no randomization, no timing dependence;
// two runs over the same model produce identical bases and iterates.
// ---------------------------------------------------------------------------

class Lp {
 public:
  struct Options {
    double tol_feas = 1e-7;    // bound/row violation accepted as feasible
    double tol_pivot = 1e-9;   // minimum acceptable pivot magnitude
    double tol_rc = 1e-9;      // reduced-cost threshold (scaled by |obj|)
    int refactor_every = 120;  // pivots between refactorizations
    int stall_limit = 2000;    // degenerate pivots before bound shifts
    int64_t iter_limit = 50'000'000;
  };

  Lp() = default;
  explicit Lp(Options opt) : opt_(opt) {}

  // --- model building ------------------------------------------------------
  int add_col(double obj, double lo, double hi);
  int add_row(RowSense sense, double rhs, const std::vector<int>& idx,
              const std::vector<double>& val);
  void reserve(int cols, int rows);

  void set_obj(int j, double c);
  void set_rhs(int r, double rhs);
  void set_bounds(int j, double lo, double hi);

  // Pin a variable to a value, remembering the original bounds; unfix
  // restores them. Nesting is the caller's responsibility (one level kept).
  void fix(int j, double v);
  void unfix(int j);

  int num_cols() const { return int(obj_.size()); }
  int num_rows() const { return int(sense_.size()); }

  double obj_coef(int j) const { return obj_[j]; }
  double lower(int j) const { return lo_[j]; }
  double upper(int j) const { return up_[j]; }
  RowSense row_sense(int r) const { return sense_[r]; }
  double row_rhs(int r) const { return rhs_[r]; }
  const std::vector<int>& row_idx(int r) const { return ridx_[r]; }
  const std::vector<double>& row_val(int r) const { return rval_[r]; }

  // --- solving --------------------------------------------------------------
  LpStatus solve();

  double obj_value() const { return objval_; }
  // Structural primal values.
  const std::vector<double>& x() const { return xstruct_; }
  // Row duals y with obj = y . rhs + sum of nonbasic rc * bound. For
  // minimization: LE rows have y <= 0, GE rows y >= 0, EQ rows free.
  const std::vector<double>& duals() const { return y_; }
  // Structural reduced costs c_j - y . A_j.
  const std::vector<double>& reduced_costs() const { return rcstruct_; }

  VarState col_state(int j) const { return vstat_[j]; }
  int64_t iterations() const { return total_iters_; }

  Basis basis() const;
  void load_basis(const Basis& b);
  void invalidate_basis() { basis_valid_ = false; }

  // Text dump of the model (LP-format-like, for external inspection).
  void write(std::ostream& out) const;

  const Options& options() const { return opt_; }
  Options& options() { return opt_; }

 private:
  // Variables are structural columns then slacks (index >= num_cols()).
  int nvar() const { return num_cols() + num_rows(); }
  double vlo(int v) const {
    double b = v < num_cols() ? lo_[v] : slo_[v - num_cols()];
    return shift_engaged_ && b > -kInf ? b - shift_[v] : b;
  }
  double vup(int v) const {
    double b = v < num_cols() ? up_[v] : sup_[v - num_cols()];
    return shift_engaged_ && b < kInf ? b + shift_[v] : b;
  }
  double vobj(int v) const { return v < num_cols() ? obj_[v] : 0.0; }

  void ensure_basis();
  bool refactorize();       // rebuild binv_ from basic_; false if repaired
  void compute_basics();    // x_B = B^-1 (rhs - N x_N)
  void engage_shifts();     // widen bounds to break a degenerate stall
  void restore_shifts();    // drop the shifts and recompute the iterate
  void ftran(std::vector<double>& col) const;
  void btran(std::vector<double>& row) const;
  void unpack_column(int v, std::vector<double>& dense) const;
  void pivot(int leave_pos, int enter, const std::vector<double>& col);
  LpStatus run_simplex(bool phase1);
  LpStatus run_simplex_inner(bool phase1);
  LpStatus run_dual();
  bool dual_feasible();
  double infeasibility() const;
  void extract_solution();

  Options opt_;

  // model
  std::vector<double> obj_, lo_, up_;
  std::vector<RowSense> sense_;
  std::vector<double> rhs_, slo_, sup_;
  std::vector<std::vector<int>> ridx_;
  std::vector<std::vector<double>> rval_;
  std::vector<std::vector<int>> cidx_;  // column-wise mirror: rows touching col
  std::vector<std::vector<double>> cval_;
  std::vector<double> fixed_lo_, fixed_up_;  // saved bounds for fix/unfix
  std::vector<uint8_t> fixed_;

  // basis & iterate
  bool basis_valid_ = false;
  std::vector<VarState> vstat_;
  std::vector<int> basic_;      // row -> variable
  std::vector<int> pos_in_basis_;  // variable -> row or -1
  std::vector<double> binv_;    // dense row-major m x m
  std::vector<double> xbasic_;  // value of basic_[r]
  std::vector<double> xnb_;     // cached nonbasic values by variable
  int pivots_since_refactor_ = 0;
  int64_t total_iters_ = 0;

  // anti-degeneracy bound shifts
  bool shift_engaged_ = false;
  int shift_rounds_ = 0;        // engages so far in the current solve
  std::vector<double> shift_;

  // results
  double objval_ = 0.0;
  std::vector<double> xstruct_, y_, rcstruct_;
};

}  // namespace qploc
