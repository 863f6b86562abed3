#include "qploc/lp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

namespace qploc {

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterLimit: return "iteration-limit";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Model building
// ---------------------------------------------------------------------------

int Lp::add_col(double obj, double lo, double hi) {
  int j = num_cols();
  obj_.push_back(obj);
  lo_.push_back(lo);
  up_.push_back(hi);
  cidx_.emplace_back();
  cval_.emplace_back();
  fixed_lo_.push_back(lo);
  fixed_up_.push_back(hi);
  fixed_.push_back(0);
  if (basis_valid_) {
    // Slack variable ids shift up by one; patch every index-bearing record.
    VarState st = lo > -kInf ? VarState::AtLower
                 : hi < kInf ? VarState::AtUpper
                             : VarState::FreeZero;
    vstat_.insert(vstat_.begin() + j, st);
    for (int& v : basic_) {
      if (v >= j) ++v;
    }
    pos_in_basis_.assign(nvar(), -1);
    for (int r = 0; r < num_rows(); ++r) pos_in_basis_[basic_[r]] = r;
    xnb_.insert(xnb_.begin() + j, 0.0);
  }
  return j;
}

void Lp::reserve(int cols, int rows) {
  obj_.reserve(cols);
  lo_.reserve(cols);
  up_.reserve(cols);
  ridx_.reserve(rows);
  rval_.reserve(rows);
}

int Lp::add_row(RowSense sense, double rhs, const std::vector<int>& idx,
                const std::vector<double>& val) {
  if (idx.size() != val.size()) throw DimensionMismatch("row idx/val size mismatch");
  int r = num_rows();
  for (int j : idx) {
    if (j < 0 || j >= num_cols()) throw IndexOutOfRange("row references unknown column");
  }
  sense_.push_back(sense);
  rhs_.push_back(rhs);
  slo_.push_back(sense == RowSense::GE ? -kInf : 0.0);
  sup_.push_back(sense == RowSense::LE ? kInf : 0.0);
  ridx_.push_back(idx);
  rval_.push_back(val);
  for (size_t t = 0; t < idx.size(); ++t) {
    cidx_[idx[t]].push_back(r);
    cval_[idx[t]].push_back(val[t]);
  }
  if (basis_valid_) {
    int m_old = r;
    // New slack enters the basis for its own row:
    //   Bn = [[B, 0], [rB, 1]]  =>  Bn^-1 = [[B^-1, 0], [-rB B^-1, 1]].
    std::vector<double> rB(m_old, 0.0);
    bool any = false;
    for (size_t t = 0; t < idx.size(); ++t) {
      int pos = pos_in_basis_[idx[t]];
      if (pos >= 0) {
        rB[pos] = val[t];
        any = true;
      }
    }
    std::vector<double> grown(size_t(m_old + 1) * (m_old + 1), 0.0);
    for (int i = 0; i < m_old; ++i) {
      std::copy(binv_.begin() + size_t(i) * m_old,
                binv_.begin() + size_t(i) * m_old + m_old,
                grown.begin() + size_t(i) * (m_old + 1));
    }
    double* last = grown.data() + size_t(m_old) * (m_old + 1);
    if (any) {
      for (int c = 0; c < m_old; ++c) {
        double acc = 0.0;
        for (int s = 0; s < m_old; ++s) acc += rB[s] * binv_[size_t(s) * m_old + c];
        last[c] = -acc;
      }
    }
    last[m_old] = 1.0;
    binv_ = std::move(grown);
    int slack = num_cols() + r;
    vstat_.insert(vstat_.begin() + slack, VarState::Basic);
    basic_.push_back(slack);
    pos_in_basis_.assign(nvar(), -1);
    for (int rr = 0; rr <= r; ++rr) pos_in_basis_[basic_[rr]] = rr;
    xbasic_.push_back(0.0);
    xnb_.insert(xnb_.begin() + slack, 0.0);
  }
  return r;
}

namespace {
void check_index(int i, int limit, const char* what) {
  if (i < 0 || i >= limit) {
    throw IndexOutOfRange(std::string(what) + " index " + std::to_string(i) +
                          " out of range");
  }
}
}  // namespace

void Lp::set_obj(int j, double c) {
  check_index(j, num_cols(), "column");
  obj_[j] = c;
}

void Lp::set_rhs(int r, double rhs) {
  check_index(r, num_rows(), "row");
  rhs_[r] = rhs;
}

void Lp::set_bounds(int j, double lo, double hi) {
  check_index(j, num_cols(), "column");
  lo_[j] = lo;
  up_[j] = hi;
}

void Lp::fix(int j, double v) {
  check_index(j, num_cols(), "column");
  if (!fixed_[j]) {
    fixed_lo_[j] = lo_[j];
    fixed_up_[j] = up_[j];
    fixed_[j] = 1;
  }
  lo_[j] = up_[j] = v;
}

void Lp::unfix(int j) {
  check_index(j, num_cols(), "column");
  if (!fixed_[j]) return;
  lo_[j] = fixed_lo_[j];
  up_[j] = fixed_up_[j];
  fixed_[j] = 0;
}

// ---------------------------------------------------------------------------
// Basis handling
// ---------------------------------------------------------------------------

Basis Lp::basis() const {
  Basis b;
  if (basis_valid_) {
    b.vstat = vstat_;
    b.basic = basic_;
  }
  return b;
}

void Lp::load_basis(const Basis& b) {
  if (b.empty() || int(b.vstat.size()) != nvar() || int(b.basic.size()) != num_rows()) {
    basis_valid_ = false;
    return;
  }
  vstat_ = b.vstat;
  basic_ = b.basic;
  pos_in_basis_.assign(nvar(), -1);
  for (int r = 0; r < num_rows(); ++r) pos_in_basis_[basic_[r]] = r;
  basis_valid_ = true;
  refactorize();  // falls back to the slack basis if the snapshot is singular
}

void Lp::ensure_basis() {
  if (basis_valid_) return;
  int m = num_rows();
  vstat_.assign(nvar(), VarState::AtLower);
  for (int j = 0; j < num_cols(); ++j) {
    vstat_[j] = lo_[j] > -kInf  ? VarState::AtLower
                : up_[j] < kInf ? VarState::AtUpper
                                : VarState::FreeZero;
  }
  basic_.resize(m);
  for (int r = 0; r < m; ++r) {
    basic_[r] = num_cols() + r;
    vstat_[num_cols() + r] = VarState::Basic;
  }
  pos_in_basis_.assign(nvar(), -1);
  for (int r = 0; r < m; ++r) pos_in_basis_[basic_[r]] = r;
  binv_.assign(size_t(m) * m, 0.0);
  for (int r = 0; r < m; ++r) binv_[size_t(r) * m + r] = 1.0;
  pivots_since_refactor_ = 0;
  basis_valid_ = true;
}

void Lp::unpack_column(int v, std::vector<double>& dense) const {
  std::fill(dense.begin(), dense.end(), 0.0);
  if (v < num_cols()) {
    const auto& ri = cidx_[v];
    const auto& rv = cval_[v];
    for (size_t t = 0; t < ri.size(); ++t) dense[ri[t]] = rv[t];
  } else {
    dense[v - num_cols()] = 1.0;
  }
}

bool Lp::refactorize() {
  int m = num_rows();
  if (m == 0) {
    binv_.clear();
    pivots_since_refactor_ = 0;
    return true;
  }
  Eigen::MatrixXd B(m, m);
  for (int round = 0; round < 3; ++round) {
    B.setZero();
    for (int pos = 0; pos < m; ++pos) {
      int v = basic_[pos];
      if (v < num_cols()) {
        const auto& ri = cidx_[v];
        const auto& rv = cval_[v];
        for (size_t t = 0; t < ri.size(); ++t) B(ri[t], pos) = rv[t];
      } else {
        B(v - num_cols(), pos) = 1.0;
      }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    const auto& LU = lu.matrixLU();
    double dmax = 0.0, dmin = kInf;
    for (int i = 0; i < m; ++i) {
      double d = std::abs(LU(i, i));
      dmax = std::max(dmax, d);
      dmin = std::min(dmin, d);
    }
    if (dmax > 0.0 && dmin >= 1e-11 * dmax) {
      Eigen::MatrixXd inv = lu.inverse();
      binv_.resize(size_t(m) * m);
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) binv_[size_t(i) * m + j] = inv(i, j);
      }
      pivots_since_refactor_ = 0;
      return round == 0;
    }
    // Near-singular basis: swap the rank-deficient columns for their rows'
    // slacks, which keeps the healthy part of the basis warm.
    Eigen::FullPivLU<Eigen::MatrixXd> flu(B);
    flu.setThreshold(1e-10);
    int rank =flu.rank();
    if (rank >= m) rank = m - 1;  // gate tripped, force at least one swap
    const auto& colperm = flu.permutationQ().indices();
    for (int t = rank; t < m; ++t) {
      int pos = colperm[t];
      int old = basic_[pos];
      int slack = num_cols() + pos;
      if (old == slack) continue;
      if (pos_in_basis_[slack] >= 0) continue;  // that slack is basic elsewhere
      double ov = xbasic_[pos];
      vstat_[old] = std::abs(ov - vlo(old)) <= std::abs(ov - vup(old)) &&
                            vlo(old) > -kInf
                        ? VarState::AtLower
                        : (vup(old) < kInf ? VarState::AtUpper : VarState::FreeZero);
      xnb_[old] = vstat_[old] == VarState::AtLower
                      ? vlo(old)
                      : (vstat_[old] == VarState::AtUpper ? vup(old) : 0.0);
      pos_in_basis_[old] = -1;
      basic_[pos] = slack;
      pos_in_basis_[slack] = pos;
      vstat_[slack] = VarState::Basic;
    }
  }
  // Repair failed; fall back to the all-slack basis. Correctness is kept,
  // warmth is lost.
  basis_valid_ = false;
  ensure_basis();
  return false;
}

void Lp::compute_basics() {
  int m = num_rows();
  xnb_.assign(nvar(), 0.0);
  for (int v = 0; v < nvar(); ++v) {
    if (vstat_[v] == VarState::Basic) continue;
    double lo = vlo(v), up = vup(v);
    switch (vstat_[v]) {
      case VarState::AtLower:
        if (lo > -kInf) {
          xnb_[v] = lo;
        } else if (up < kInf) {
          vstat_[v] = VarState::AtUpper;
          xnb_[v] = up;
        } else {
          vstat_[v] = VarState::FreeZero;
          xnb_[v] = 0.0;
        }
        break;
      case VarState::AtUpper:
        if (up < kInf) {
          xnb_[v] = up;
        } else if (lo > -kInf) {
          vstat_[v] = VarState::AtLower;
          xnb_[v] = lo;
        } else {
          vstat_[v] = VarState::FreeZero;
          xnb_[v] = 0.0;
        }
        break;
      default:
        if (lo > -kInf && lo == up) {
          vstat_[v] = VarState::AtLower;
          xnb_[v] = lo;
        } else {
          xnb_[v] = 0.0;
        }
        break;
    }
  }
  std::vector<double> rtil(m, 0.0);
  for (int r = 0; r < m; ++r) {
    double acc = 0.0;
    const auto& ri = ridx_[r];
    const auto& rv = rval_[r];
    for (size_t t = 0; t < ri.size(); ++t) {
      int j = ri[t];
      if (vstat_[j] != VarState::Basic) acc += rv[t] * xnb_[j];
    }
    int slack = num_cols() + r;
    if (vstat_[slack] != VarState::Basic) acc += xnb_[slack];
    rtil[r] = rhs_[r] - acc;
  }
  xbasic_.assign(m, 0.0);
  for (int r = 0; r < m; ++r) {
    double acc = 0.0;
    const double* row = binv_.data() + size_t(r) * m;
    for (int s = 0; s < m; ++s) acc += row[s] * rtil[s];
    xbasic_[r] = acc;
  }
}

void Lp::ftran(std::vector<double>& col) const {
  int m = num_rows();
  std::vector<double> out(m, 0.0);
  for (int s = 0; s < m; ++s) {
    double f = col[s];
    if (f == 0.0) continue;
    for (int r = 0; r < m; ++r) out[r] += binv_[size_t(r) * m + s] * f;
  }
  col = std::move(out);
}

void Lp::btran(std::vector<double>& row) const {
  int m = num_rows();
  std::vector<double> out(m, 0.0);
  for (int r = 0; r < m; ++r) {
    double f = row[r];
    if (f == 0.0) continue;
    const double* br = binv_.data() + size_t(r) * m;
    for (int c = 0; c < m; ++c) out[c] += f * br[c];
  }
  row = std::move(out);
}

void Lp::pivot(int leave_pos, int enter, const std::vector<double>& col) {
  int m = num_rows();
  double piv = col[leave_pos];
  double* lrow = binv_.data() + size_t(leave_pos) * m;
  double inv_piv = 1.0 / piv;
  for (int c = 0; c < m; ++c) lrow[c] *= inv_piv;
  for (int r = 0; r < m; ++r) {
    if (r == leave_pos) continue;
    double f = col[r];
    if (f == 0.0) continue;
    double* rr = binv_.data() + size_t(r) * m;
    for (int c = 0; c < m; ++c) rr[c] -= f * lrow[c];
  }
  int old = basic_[leave_pos];
  basic_[leave_pos] = enter;
  pos_in_basis_[old] = -1;
  pos_in_basis_[enter] = leave_pos;
  vstat_[enter] = VarState::Basic;
  ++pivots_since_refactor_;
}

double Lp::infeasibility() const {
  double s = 0.0;
  for (int r = 0; r < num_rows(); ++r) {
    int v = basic_[r];
    double lo = vlo(v), up = vup(v);
    if (xbasic_[r] < lo) s += lo - xbasic_[r];
    if (xbasic_[r] > up) s += xbasic_[r] - up;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Simplex iterations. phase1 minimizes the sum of basic bound violations
// with costs in {-1, 0, +1}; phase2 minimizes the real objective. Returns
// Optimal when no eligible entering variable remains (for phase 1 that means
// either feasible or genuinely infeasible, told apart by the residual).
// ---------------------------------------------------------------------------

void Lp::engage_shifts() {
  shift_engaged_ = true;
  ++shift_rounds_;
  shift_.assign(nvar(), 0.0);
  double base = 16.0 * opt_.tol_feas * std::pow(4.0, shift_rounds_ - 1);
  for (int v = 0; v < nvar(); ++v) {
    uint64_t h = (uint64_t(v) + 1) * 0x9E3779B97F4A7C15ull;
    h ^= uint64_t(shift_rounds_) * 0xBF58476D1CE4E5B9ull;
    h ^= h >> 31;
    h *= 0x94D049BB133111EBull;
    h ^= h >> 29;
    shift_[v] = base * (0.5 + double(h & 0xFFFF) / 65536.0);
  }
}

void Lp::restore_shifts() {
  shift_engaged_ = false;
  // Nonbasic values cached at shifted bounds snap back; recompute the iterate.
  compute_basics();
}

bool Lp::dual_feasible() {
  int m = num_rows();
  double cmax = 1.0;
  for (double c : obj_) cmax = std::max(cmax, std::abs(c));
  double tol = 10.0 * opt_.tol_rc * cmax;
  std::vector<double> y(m, 0.0);
  bool any = false;
  for (int r = 0; r < m; ++r) {
    y[r] = vobj(basic_[r]);
    any = any || y[r] != 0.0;
  }
  if (any) btran(y);
  for (int v = 0; v < nvar(); ++v) {
    if (vstat_[v] == VarState::Basic) continue;
    if (vlo(v) == vup(v)) continue;
    double rc = vobj(v);
    if (any) {
      if (v < num_cols()) {
        const auto& ri = cidx_[v];
        const auto& rv = cval_[v];
        for (size_t t = 0; t < ri.size(); ++t) rc -= y[ri[t]] * rv[t];
      } else {
        rc -= y[v - num_cols()];
      }
    }
    switch (vstat_[v]) {
      case VarState::AtLower:
        if (rc < -tol) return false;
        break;
      case VarState::AtUpper:
        if (rc > tol) return false;
        break;
      default:
        if (std::abs(rc) > tol) return false;
        break;
    }
  }
  return true;
}

// Dual simplex: walks a dual-feasible basis back to primal feasibility with
// monotone objective growth. This is the natural continuation after rows are
// added to a solved model, where the old basis stays dual feasible and the
// primal phase-1 face is pathologically degenerate. Exits Optimal on primal
// feasibility; IterLimit hands control back to the primal phases.
LpStatus Lp::run_dual() {
  int m = num_rows();
  if (m == 0) return LpStatus::Optimal;
  std::vector<double> y(m), rho(m), col(m);
  int64_t cap = total_iters_ + 4 * int64_t(m + nvar()) + 2000;

  for (;;) {
    if (total_iters_ > opt_.iter_limit || total_iters_ > cap) {
      return LpStatus::IterLimit;
    }
    if (pivots_since_refactor_ >= opt_.refactor_every) {
      if (!refactorize()) return LpStatus::IterLimit;
      compute_basics();
    }

    // Leaving variable: the basic with the largest bound violation.
    int lr = -1;
    double lviol = 16.0 * opt_.tol_feas;
    double s = 0.0;
    for (int r = 0; r < m; ++r) {
      int v = basic_[r];
      double viol_up = xbasic_[r] - vup(v);
      double viol_lo = vlo(v) - xbasic_[r];
      if (viol_up > lviol) {
        lviol = viol_up;
        lr = r;
        s = 1.0;
      }
      if (viol_lo > lviol) {
        lviol = viol_lo;
        lr = r;
        s = -1.0;
      }
    }
    if (lr < 0) return LpStatus::Optimal;

    ++total_iters_;

    std::fill(y.begin(), y.end(), 0.0);
    bool any = false;
    for (int r = 0; r < m; ++r) {
      y[r] = vobj(basic_[r]);
      any = any || y[r] != 0.0;
    }
    if (any) btran(y);
    std::fill(rho.begin(), rho.end(), 0.0);
    rho[lr] = 1.0;
    btran(rho);

    // Dual ratio test: the entering column must absorb the violation while
    // every reduced cost keeps its sign; ties resolve to the largest pivot.
    int enter = -1;
    double best_theta = kInf;
    double best_alpha = 0.0;
    for (int v = 0; v < nvar(); ++v) {
      if (vstat_[v] == VarState::Basic) continue;
      if (vlo(v) == vup(v)) continue;
      double alpha = 0.0, rc = vobj(v);
      if (v < num_cols()) {
        const auto& ri = cidx_[v];
        const auto& rv = cval_[v];
        for (size_t t = 0; t < ri.size(); ++t) {
          alpha += rho[ri[t]] * rv[t];
          if (any) rc -= y[ri[t]] * rv[t];
        }
      } else {
        alpha = rho[v - num_cols()];
        if (any) rc -= y[v - num_cols()];
      }
      double ahat = s * alpha;
      VarState st = vstat_[v];
      bool cand = (st == VarState::AtLower && ahat > opt_.tol_pivot) ||
                  (st == VarState::AtUpper && ahat < -opt_.tol_pivot) ||
                  (st == VarState::FreeZero && std::abs(ahat) > opt_.tol_pivot);
      if (!cand) continue;
      double theta = rc / ahat;
      if (theta < 0.0) theta = 0.0;
      if (theta < best_theta - 1e-12 ||
          (theta <= best_theta + 1e-12 && std::abs(alpha) > std::abs(best_alpha))) {
        best_theta = theta;
        enter = v;
        best_alpha = alpha;
      }
    }
    if (enter < 0) {
      // No column can absorb the violation at this tolerance; let the primal
      // phases render the final feasibility verdict.
      return LpStatus::IterLimit;
    }

    unpack_column(enter, col);
    ftran(col);
    double piv = col[lr];
    if (std::abs(piv) < 0.1 * std::abs(best_alpha) ||
        std::abs(piv) < opt_.tol_pivot) {
      // Column disagrees with the priced row: stale factorization.
      if (pivots_since_refactor_ > 0) {
        if (!refactorize()) return LpStatus::IterLimit;
        compute_basics();
        continue;
      }
      return LpStatus::IterLimit;
    }

    int vout = basic_[lr];
    double bound_target = s > 0 ? vup(vout) : vlo(vout);
    double delta = (xbasic_[lr] - bound_target) / piv;
    for (int r = 0; r < m; ++r) xbasic_[r] -= delta * col[r];
    vstat_[vout] = s > 0 ? VarState::AtUpper : VarState::AtLower;
    xnb_[vout] = bound_target;
    double enter_start = xnb_[enter];
    pivot(lr, enter, col);
    xbasic_[lr] = enter_start + delta;
  }
}

LpStatus Lp::run_simplex(bool phase1) {
  shift_rounds_ = 0;
  LpStatus s = run_simplex_inner(phase1);
  if (shift_engaged_) {
    restore_shifts();
    // Feasibility and optimality were judged against widened bounds; force
    // the caller to rerun the phases on the true model.
    if (s == LpStatus::Optimal) s = LpStatus::IterLimit;
  }
  return s;
}

LpStatus Lp::run_simplex_inner(bool phase1) {
  int m = num_rows();
  int n = num_cols();
  std::vector<double> y(m), col(m);

  double cmax = 1.0;
  if (!phase1) {
    for (double c : obj_) cmax = std::max(cmax, std::abs(c));
  }
  double tol_rc = opt_.tol_rc * cmax;
  double feas_eps = opt_.tol_feas * (1.0 + m);

  int stall = 0;
  bool bland = false;
  bool bland_sticky = false;

  // Degenerate bases can churn through pivots whose steps clear the stall
  // threshold yet move the objective by rounding noise only. A windowed
  // progress check catches that: no measurable improvement over a window
  // counts as a hard stall.
  auto phase_obj = [&]() {
    if (phase1) return infeasibility();
    double s = 0.0;
    for (int r = 0; r < m; ++r) s += vobj(basic_[r]) * xbasic_[r];
    for (int v = 0; v < nvar(); ++v) {
      if (vstat_[v] != VarState::Basic) s += vobj(v) * xnb_[v];
    }
    return s;
  };
  constexpr int kWindow = 512;
  int window_left = kWindow;
  double window_obj = kInf;

  auto hard_stall = [&]() {
    if (shift_rounds_ < 4) {
      engage_shifts();
      stall = 0;
      window_obj = kInf;
      window_left = kWindow;
    } else {
      // Shifts are exhausted; only Bland's rule still guarantees an exit, so
      // it must not be switched back off by noise-sized steps.
      bland = true;
      bland_sticky = true;
    }
  };

  for (;;) {
    if (total_iters_ > opt_.iter_limit) return LpStatus::IterLimit;
    if (pivots_since_refactor_ >= opt_.refactor_every) {
      bool clean = refactorize();
      compute_basics();
      if (!clean && !phase1) {
        // Basis was repaired; feasibility may be gone, caller restarts phases.
        return LpStatus::IterLimit;
      }
    }
    if (--window_left <= 0) {
      double cur = phase_obj();
      if (cur > window_obj - 1e-10 * (1.0 + std::abs(window_obj))) hard_stall();
      window_obj = cur;
      window_left = kWindow;
    }

    if (phase1 && infeasibility() <= feas_eps) return LpStatus::Optimal;

    // Price: y = cB . B^-1 with phase-dependent basic costs.
    std::fill(y.begin(), y.end(), 0.0);
    bool any_cost = false;
    for (int r = 0; r < m; ++r) {
      int v = basic_[r];
      if (phase1) {
        double lo = vlo(v), up = vup(v);
        if (xbasic_[r] < lo - opt_.tol_feas) {
          y[r] = -1.0;
          any_cost = true;
        } else if (xbasic_[r] > up + opt_.tol_feas) {
          y[r] = 1.0;
          any_cost = true;
        }
      } else {
        y[r] = vobj(v);
        any_cost = any_cost || y[r] != 0.0;
      }
    }
    if (any_cost) btran(y);

    // Entering variable.
    int enter = -1, dir = 0;
    double best = tol_rc;
    for (int v = 0; v < nvar(); ++v) {
      VarState st = vstat_[v];
      if (st == VarState::Basic) continue;
      double lo = vlo(v), up = vup(v);
      if (lo == up) continue;
      double rc = phase1 ? 0.0 : vobj(v);
      if (any_cost) {
        if (v < n) {
          const auto& ri = cidx_[v];
          const auto& rv = cval_[v];
          for (size_t t = 0; t < ri.size(); ++t) rc -= y[ri[t]] * rv[t];
        } else {
          rc -= y[v - n];
        }
      }
      double score = 0.0;
      int d = 0;
      if (st == VarState::AtLower && rc < -tol_rc) {
        score = -rc;
        d = +1;
      } else if (st == VarState::AtUpper && rc > tol_rc) {
        score = rc;
        d = -1;
      } else if (st == VarState::FreeZero && std::abs(rc) > tol_rc) {
        score = std::abs(rc);
        d = rc < 0 ? +1 : -1;
      }
      if (d == 0) continue;
      if (bland) {
        enter = v;
        dir = d;
        break;
      }
      if (score > best) {
        best = score;
        enter = v;
        dir = d;
      }
    }
    if (enter < 0) {
      if (phase1) {
        return infeasibility() <= feas_eps ? LpStatus::Optimal : LpStatus::Infeasible;
      }
      return LpStatus::Optimal;
    }
    ++total_iters_;  // counts pivot attempts, not pricing passes

    unpack_column(enter, col);
    ftran(col);

    // Entries this large mean the factorization has degraded into noise;
    // rebuild it and reprice rather than pivot on garbage.
    double colmax = 0.0;
    for (int r = 0; r < m; ++r) colmax = std::max(colmax, std::abs(col[r]));
    if (colmax > 1e9 && pivots_since_refactor_ > 0) {
      bool clean = refactorize();
      compute_basics();
      if (!clean && !phase1) return LpStatus::IterLimit;
      continue;
    }

    // Ratio test. Entering moves t >= 0 in direction dir; basic position r
    // moves at rate = -dir * col[r]. Each basic blocks at the first bound met
    // along its travel direction; a bound already violated in the travel
    // direction's wake imposes no block (phase 1 walks variables back in).
    double t_best = kInf;
    int leave_pos = -1;  // -2 = entering bound flip
    double span = dir > 0 ? vup(enter) - xnb_[enter] : xnb_[enter] - vlo(enter);

    // Exact blocking step of basic position r, kInf when it never blocks.
    auto block_t = [&](int r) -> double {
      double c = col[r];
      if (std::abs(c) < opt_.tol_pivot) return kInf;
      double rate = -dir * c;
      int v = basic_[r];
      double lo = vlo(v), up = vup(v);
      double target;
      if (rate > 0.0) {
        if (xbasic_[r] < lo - opt_.tol_feas) {
          target = lo;
        } else if (up < kInf) {
          target = up;
        } else {
          return kInf;
        }
      } else {
        if (xbasic_[r] > up + opt_.tol_feas) {
          target = up;
        } else if (lo > -kInf) {
          target = lo;
        } else {
          return kInf;
        }
      }
      double t = (target - xbasic_[r]) / rate;
      return t < 0.0 ? 0.0 : t;
    };

    if (bland) {
      // Exact minimum ratio with lowest-index tie break; finite termination.
      if (span < t_best) {
        t_best = span;
        leave_pos = -2;
      }
      for (int r = 0; r < m; ++r) {
        double t = block_t(r);
        if (t == kInf) continue;
        if (t < t_best - 1e-12 ||
            (t <= t_best + 1e-12 &&
             (leave_pos < 0 || basic_[r] < basic_[leave_pos]))) {
          t_best = t;
          leave_pos = r;
        }
      }
    } else {
      // Two-pass ratio test: first the loosest step any row tolerates with a
      // tol_feas overshoot, then the largest pivot among rows blocking within
      // it. Degenerate ties thus resolve toward well-conditioned bases.
      double t_max = span;
      for (int r = 0; r < m; ++r) {
        double t = block_t(r);
        if (t == kInf) continue;
        t_max = std::min(t_max, t + opt_.tol_feas / std::abs(col[r]));
      }
      if (span < kInf && span <= t_max) {
        t_best = span;
        leave_pos = -2;
      } else {
        double best_piv = 0.0;
        for (int r = 0; r < m; ++r) {
          double t = block_t(r);
          if (t > t_max) continue;
          if (leave_pos < 0 || std::abs(col[r]) > best_piv) {
            t_best = t;
            leave_pos = r;
            best_piv = std::abs(col[r]);
          }
        }
      }
    }

    if (leave_pos == -1) {
      if (phase1) {
        throw NumericalFailure("phase-1 improving ray (inconsistent bounds?)");
      }
      return LpStatus::Unbounded;
    }

    double t = t_best;
    if (t <= 1e-12) {
      if (++stall > opt_.stall_limit) hard_stall();
    } else {
      stall = 0;
      if (!bland_sticky) bland = false;
    }

    if (leave_pos == -2) {
      // Bound flip: entering jumps to its opposite bound, basis unchanged.
      for (int r = 0; r < m; ++r) xbasic_[r] += -dir * col[r] * t;
      vstat_[enter] = dir > 0 ? VarState::AtUpper : VarState::AtLower;
      xnb_[enter] = dir > 0 ? vup(enter) : vlo(enter);
      continue;
    }

    int vout = basic_[leave_pos];
    double rate_out = -dir * col[leave_pos];
    double out_val = xbasic_[leave_pos] + rate_out * t;
    double enter_start = xnb_[enter];
    for (int r = 0; r < m; ++r) xbasic_[r] += -dir * col[r] * t;
    double lo_out = vlo(vout), up_out = vup(vout);
    if (std::abs(out_val - lo_out) <= std::abs(out_val - up_out)) {
      vstat_[vout] = VarState::AtLower;
      xnb_[vout] = lo_out;
    } else {
      vstat_[vout] = VarState::AtUpper;
      xnb_[vout] = up_out;
    }
    pivot(leave_pos, enter, col);
    xbasic_[leave_pos] = enter_start + dir * t;
  }
}

LpStatus Lp::solve() {
  for (int j = 0; j < num_cols(); ++j) {
    if (lo_[j] > up_[j]) {
      objval_ = kInf;
      return LpStatus::Infeasible;
    }
  }
  shift_engaged_ = false;
  ensure_basis();
  if (pivots_since_refactor_ > 0) refactorize();
  compute_basics();

  double feas_eps = opt_.tol_feas * (1.0 + num_rows());

  // A dual-feasible basis (all-slack with nonnegative costs, or any basis
  // left by a previous solve before rows were added) reaches feasibility
  // fastest through dual pivots; the primal phases then only polish.
  if (infeasibility() > feas_eps && dual_feasible()) {
    run_dual();
    refactorize();
    compute_basics();
  }

  for (int attempt = 0; attempt < 40; ++attempt) {
    if (infeasibility() > feas_eps) {
      LpStatus s1 = run_simplex(true);
      if (s1 == LpStatus::Infeasible) return LpStatus::Infeasible;
      if (s1 == LpStatus::IterLimit && total_iters_ > opt_.iter_limit) {
        return LpStatus::IterLimit;
      }
      refactorize();
      compute_basics();
      continue;  // re-check feasibility with the fresh factorization
    }
    LpStatus s2 = run_simplex(false);
    if (s2 == LpStatus::IterLimit && total_iters_ <= opt_.iter_limit) {
      // Internal restart request after a basis repair.
      refactorize();
      compute_basics();
      continue;
    }
    if (s2 == LpStatus::Optimal || s2 == LpStatus::IterLimit) extract_solution();
    return s2;
  }
  throw NumericalFailure("simplex phase cycling; basis cannot be stabilized");
}

void Lp::extract_solution() {
  int m = num_rows(), n = num_cols();
  xstruct_.assign(n, 0.0);
  for (int j = 0; j < n; ++j) {
    xstruct_[j] = vstat_[j] == VarState::Basic ? xbasic_[pos_in_basis_[j]] : xnb_[j];
  }
  y_.assign(m, 0.0);
  for (int r = 0; r < m; ++r) y_[r] = vobj(basic_[r]);
  btran(y_);
  rcstruct_.assign(n, 0.0);
  objval_ = 0.0;
  for (int j = 0; j < n; ++j) {
    double rc = obj_[j];
    const auto& ri = cidx_[j];
    const auto& rv = cval_[j];
    for (size_t t = 0; t < ri.size(); ++t) rc -= y_[ri[t]] * rv[t];
    rcstruct_[j] = vstat_[j] == VarState::Basic ? 0.0 : rc;
    objval_ += obj_[j] * xstruct_[j];
  }
}

// ---------------------------------------------------------------------------
// Text emitter (LP-format flavored; enough to eyeball or feed other tools).
// ---------------------------------------------------------------------------

void Lp::write(std::ostream& out) const {
  out << "Minimize\n obj:";
  for (int j = 0; j < num_cols(); ++j) {
    if (obj_[j] == 0.0) continue;
    out << (obj_[j] >= 0 ? " +" : " ") << obj_[j] << " x" << j;
  }
  out << "\nSubject To\n";
  for (int r = 0; r < num_rows(); ++r) {
    out << " r" << r << ":";
    for (size_t t = 0; t < ridx_[r].size(); ++t) {
      double v = rval_[r][t];
      out << (v >= 0 ? " +" : " ") << v << " x" << ridx_[r][t];
    }
    const char* rel = sense_[r] == RowSense::LE   ? "<="
                      : sense_[r] == RowSense::GE ? ">="
                                                  : "=";
    out << " " << rel << " " << rhs_[r] << "\n";
  }
  out << "Bounds\n";
  for (int j = 0; j < num_cols(); ++j) {
    if (lo_[j] == -kInf && up_[j] == kInf) {
      out << " x" << j << " free\n";
    } else if (lo_[j] == -kInf) {
      out << " x" << j << " <= " << up_[j] << "\n";
    } else if (up_[j] == kInf) {
      out << " x" << j << " >= " << lo_[j] << "\n";
    } else {
      out << " " << lo_[j] << " <= x" << j << " <= " << up_[j] << "\n";
    }
  }
  out << "End\n";
}

}  // namespace qploc
