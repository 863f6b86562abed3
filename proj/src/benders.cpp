#include "qploc/benders.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <ostream>
#include <utility>

#include "qploc/matheur.hpp"
#include "qploc/reduce.hpp"

namespace qploc {

namespace {

constexpr double kLinkTol = 1e-7;     // linking violation that triggers a row
constexpr double kArchiveRhs = -1e9;  // rhs of an archived cut row
constexpr int kArchiveStreak = 20;    // slack solves before archival

uint64_t hash_matrix(const Mat& m) {
  uint64_t h = 1469598103934665603ull;
  for (double d : m.v) {
    uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    for (int s = 0; s < 64; s += 8) {
      h ^= (bits >> s) & 0xffull;
      h *= 1099511628211ull;
    }
  }
  return h;
}

}  // namespace

const char* to_string(RootExit e) {
  switch (e) {
    case RootExit::Running: return "running";
    case RootExit::Converged: return "converged";
    case RootExit::SmallImprovement: return "small-improvement";
    case RootExit::GapClosed: return "gap-closed";
    case RootExit::IterLimit: return "iter-limit";
    case RootExit::TimeLimit: return "time-limit";
  }
  return "?";
}

CorePoint make_core_point(int n, const std::vector<int>& candidates, int p,
                          double eps) {
  std::vector<int> H = candidates;
  std::sort(H.begin(), H.end());
  H.erase(std::unique(H.begin(), H.end()), H.end());
  if (int(H.size()) < 2)
    throw InvalidCardinality("core point needs at least two candidates");
  for (int k : H)
    if (k < 0 || k >= n)
      throw IndexOutOfRange("core point candidate out of range");
  if (p < 1) throw InvalidCardinality("core point needs p >= 1");

  const int h = int(H.size());
  const int pe = std::min(p, h);
  double eps_max = 1.0 / h;
  if (pe >= 2 && h > 2) eps_max = std::min(eps_max, double(pe - 1) / (h - 2));
  if (eps < 0.0) eps = pe >= 2 ? eps_max / 2 : 1.0 / (10.0 * h);
  if (!(eps > 0.0) || !(eps < eps_max))
    throw InvalidInstance("core point eps outside its admissible range");

  const double diag = double(pe) / h - eps;
  const double off = (1.0 - diag) / (h - 1);
  const double outside = 1.0 / h;

  std::vector<char> in_h(size_t(n), 0);
  for (int k : H) in_h[size_t(k)] = 1;

  CorePoint cp;
  cp.candidates = std::move(H);
  cp.eps = eps;
  cp.z0 = Mat(n, n);
  for (int i = 0; i < n; ++i) {
    for (int k : cp.candidates) {
      cp.z0(i, k) = !in_h[size_t(i)] ? outside : (i == k ? diag : off);
    }
  }
  return cp;
}

Mat update_separation_point(const Mat& zhat, const Mat& zbar, double phi) {
  if (!zhat.same_shape(zbar))
    throw DimensionMismatch("separation point mix needs matching shapes");
  if (!(phi > 0.0) || !(phi < 1.0))
    throw InvalidInstance("separation point weight must lie in (0, 1)");
  Mat out(zhat.rows, zhat.cols);
  for (size_t t = 0; t < out.v.size(); ++t)
    out.v[t] = phi * zhat.v[t] + (1.0 - phi) * zbar.v[t];
  return out;
}

// --------------------------------------------------------------------------
// MasterState
// --------------------------------------------------------------------------

MasterState::MasterState(const Instance& inst, const BendersParams& params)
    : inst_(&inst), params_(params), n_(inst.n) {
  inst.validate();
  eliminated_.assign(size_t(n_), 0);
  fixed_open_.assign(size_t(n_), 0);
  candidates_.resize(size_t(n_));
  for (int k = 0; k < n_; ++k) candidates_[size_t(k)] = k;
  lazy_linking_ = n_ > params_.lazy_linking_above;
  linking_present_.assign(size_t(n_) * size_t(n_), 0);
  build_model();
}

void MasterState::build_model() {
  int rows = n_ + (lazy_linking_ ? 0 : n_ * (n_ - 1)) +
             (inst_->p_bounded() ? 1 : 0) + (inst_->capacitated() ? n_ : 0);
  lp_.reserve(n_ * n_ + 1, rows);
  for (int i = 0; i < n_; ++i) {
    for (int k = 0; k < n_; ++k) {
      double c = inst_->assign_cost(i, k) + (i == k ? inst_->setup[size_t(k)] : 0.0);
      lp_.add_col(c, 0.0, 1.0);
    }
  }
  lp_.add_col(1.0, 0.0, kInf);  // interaction epigraph

  for (int i = 0; i < n_; ++i) {
    std::vector<int> idx(static_cast<size_t>(n_));
    std::vector<double> val(static_cast<size_t>(n_), 1.0);
    for (int k = 0; k < n_; ++k) idx[size_t(k)] = zcol(i, k);
    lp_.add_row(RowSense::EQ, 1.0, idx, val);
  }
  if (!lazy_linking_) {
    for (int i = 0; i < n_; ++i) {
      for (int k = 0; k < n_; ++k) {
        if (i == k) continue;
        lp_.add_row(RowSense::LE, 0.0, {zcol(i, k), zcol(k, k)}, {1.0, -1.0});
        linking_present_[size_t(zcol(i, k))] = 1;
      }
    }
  }
  if (inst_->p_bounded()) {
    std::vector<int> idx(static_cast<size_t>(n_));
    std::vector<double> val(static_cast<size_t>(n_), 1.0);
    for (int k = 0; k < n_; ++k) idx[size_t(k)] = zcol(k, k);
    lp_.add_row(RowSense::LE, double(inst_->p), idx, val);
  }
  if (inst_->capacitated()) {
    for (int k = 0; k < n_; ++k) {
      std::vector<int> idx;
      std::vector<double> val;
      for (int i = 0; i < n_; ++i) {
        if (i == k) continue;
        idx.push_back(zcol(i, k));
        val.push_back(inst_->demand[size_t(i)]);
      }
      idx.push_back(zcol(k, k));
      val.push_back(-inst_->slack_cap(k));
      lp_.add_row(RowSense::LE, 0.0, idx, val);
    }
  }
  zbar_ = Mat(n_, n_);
  zhat_ = Mat(n_, n_);
}

LpStatus MasterState::solve() {
  LpStatus st;
  while (true) {
    st = lp_.solve();
    if (st != LpStatus::Optimal) return st;
    if (!lazy_linking_ || add_violated_linking(kLinkTol) == 0) break;
  }
  refresh();
  sweep_pool();
  return st;
}

LpStatus MasterState::solve_current() { return lp_.solve(); }

int MasterState::add_violated_linking(double tol) {
  const auto& x = lp_.x();
  int added = 0;
  for (int k = 0; k < n_; ++k) {
    if (eliminated_[size_t(k)]) continue;
    double diag = x[size_t(zcol(k, k))];
    for (int i = 0; i < n_; ++i) {
      if (i == k) continue;
      int col = zcol(i, k);
      if (linking_present_[size_t(col)]) continue;
      if (x[size_t(col)] - diag > tol) {
        lp_.add_row(RowSense::LE, 0.0, {col, zcol(k, k)}, {1.0, -1.0});
        linking_present_[size_t(col)] = 1;
        ++added;
      }
    }
  }
  return added;
}

void MasterState::refresh() {
  lp_value_ = lp_.obj_value();
  if (lp_value_ > lb_) lb_ = lp_value_;
  const auto& x = lp_.x();
  eta_ = x[size_t(eta_col())];
  // Separation needs exactly stochastic rows; clamp LP noise and renormalize.
  for (int i = 0; i < n_; ++i) {
    double sum = 0.0;
    for (int k = 0; k < n_; ++k) {
      double v = std::max(0.0, x[size_t(zcol(i, k))]);
      zbar_(i, k) = v;
      sum += v;
    }
    if (sum > 0.5) {
      for (int k = 0; k < n_; ++k) zbar_(i, k) /= sum;
    }
  }
}

void MasterState::sweep_pool() {
  double trip = 10.0 * params_.eps_cut;
  for (auto& e : pool_) {
    if (e.archived) continue;
    double slack = eta_ - e.cut.value_at(zbar_);
    if (slack > trip) {
      if (++e.slack_streak >= kArchiveStreak) archive(e);
    } else {
      e.slack_streak = 0;
    }
  }
}

void MasterState::archive(PoolEntry& e) {
  lp_.set_rhs(e.row, kArchiveRhs);
  e.archived = true;
}

void MasterState::archive_stalest() {
  PoolEntry* pick = nullptr;
  double pick_slack = -kInf;
  for (auto& e : pool_) {
    if (e.archived) continue;
    double slack = eta_ - e.cut.value_at(zbar_);
    if (!pick || e.slack_streak > pick->slack_streak ||
        (e.slack_streak == pick->slack_streak && slack > pick_slack)) {
      pick = &e;
      pick_slack = slack;
    }
  }
  if (pick) archive(*pick);
}

int MasterState::add_cut(const BendersCut& cut, int iter, double violation,
                         uint64_t point_hash) {
  if (cut.coef.rows != n_ || cut.coef.cols != n_)
    throw DimensionMismatch("cut matrix does not match the instance");
  if (active_cuts() >= params_.pool_cap) archive_stalest();
  std::vector<int> idx{eta_col()};
  std::vector<double> val{1.0};
  for (int i = 0; i < n_; ++i) {
    for (int k = 0; k < n_; ++k) {
      double g = cut.coef(i, k);
      if (std::abs(g) > 1e-13) {
        idx.push_back(zcol(i, k));
        val.push_back(-g);
      }
    }
  }
  PoolEntry e;
  e.cut = cut;
  e.row = lp_.add_row(RowSense::GE, 0.0, idx, val);
  e.iter_added = iter;
  e.violation = violation;
  e.point_hash = point_hash;
  pool_.push_back(std::move(e));
  return int(pool_.size()) - 1;
}

int MasterState::active_cuts() const {
  int c = 0;
  for (const auto& e : pool_)
    if (!e.archived) ++c;
  return c;
}

double MasterState::upper_bound() const {
  return have_incumbent_ ? incumbent_.cost.total : kInf;
}

const Solution& MasterState::incumbent() const {
  if (!have_incumbent_) throw InvalidInstance("no incumbent available");
  return incumbent_;
}

bool MasterState::offer_incumbent(const Solution& sol) {
  if (have_incumbent_ && sol.cost.total >= incumbent_.cost.total) return false;
  incumbent_ = sol;
  have_incumbent_ = true;
  return true;
}

std::vector<int> MasterState::support(double eps) const {
  std::vector<int> out;
  for (int k : candidates_)
    if (zbar_(k, k) > eps) out.push_back(k);
  return out;
}

void MasterState::eliminate(int k) {
  if (k < 0 || k >= n_) throw IndexOutOfRange("facility index out of range");
  if (eliminated_[size_t(k)]) return;
  if (fixed_open_[size_t(k)])
    throw InvalidInstance("cannot eliminate a facility fixed open");
  if (candidates_.size() <= 1)
    throw InvalidInstance("cannot eliminate the last candidate facility");
  for (int i = 0; i < n_; ++i) lp_.set_bounds(zcol(i, k), 0.0, 0.0);
  eliminated_[size_t(k)] = 1;
  candidates_.erase(std::remove(candidates_.begin(), candidates_.end(), k),
                    candidates_.end());
}

void MasterState::fix_open(int k) {
  if (k < 0 || k >= n_) throw IndexOutOfRange("facility index out of range");
  if (eliminated_[size_t(k)])
    throw InvalidInstance("cannot open an eliminated facility");
  lp_.set_bounds(zcol(k, k), 1.0, 1.0);
  fixed_open_[size_t(k)] = 1;
}

int MasterState::num_eliminated() const {
  return int(std::count(eliminated_.begin(), eliminated_.end(), char(1)));
}

int MasterState::num_fixed_open() const {
  return int(std::count(fixed_open_.begin(), fixed_open_.end(), char(1)));
}

void MasterState::reset_separation_point() {
  if (int(candidates_.size()) >= 2) {
    zhat_ = make_core_point(n_, candidates_, inst_->p).z0;
  } else {
    zhat_ = zbar_;
  }
}

void MasterState::mix_separation_point(double phi) {
  zhat_ = update_separation_point(zhat_, zbar_, phi);
}

void MasterState::log_row(int iter, double seconds) {
  RootStats r;
  r.iter = iter;
  r.lb = lb_;
  r.ub = upper_bound();
  r.cuts = int(pool_.size());
  r.eliminated = num_eliminated();
  r.fixed = num_fixed_open();
  r.seconds = seconds;
  log_.push_back(r);
}

void MasterState::write_log(std::ostream& out) const {
  auto old = out.precision(12);
  out << "iter,lb,ub,cuts,eliminated,fixed,time\n";
  for (const auto& r : log_) {
    out << r.iter << ',' << r.lb << ',' << r.ub << ',' << r.cuts << ','
        << r.eliminated << ',' << r.fixed << ',' << r.seconds << '\n';
  }
  out.precision(old);
}

// --------------------------------------------------------------------------
// Root cutting-plane loop
// --------------------------------------------------------------------------

MasterState root_loop(const Instance& inst, const BendersParams& params) {
  MasterState st(inst, params);
  Stopwatch clock;
  Deadline deadline(params.time_limit);
  if (st.solve() != LpStatus::Optimal)
    throw InfeasibleInstance("master relaxation did not solve at the root");
  st.reset_separation_point();
  st.log_row(0, clock.seconds());

  Matheuristic heur(inst, MatheurOptions{params.heur_milp});

  int iter = 0;
  RootExit exit = RootExit::IterLimit;
  bool final_probes = false;
  while (true) {
    if (deadline.expired()) {
      exit = RootExit::TimeLimit;
      break;
    }
    if (iter >= params.max_root_iters) {
      exit = RootExit::IterLimit;
      break;
    }
    ++iter;

    if (params.use_matheur) st.offer_incumbent(heur.run(st.support()));

    if (params.use_reduction) {
      size_t before = st.candidates().size();
      eliminate_facilities(st);
      if (iter % params.pe_period == 0)
        partial_enumeration(st, PeMode::FixAtZero);
      if (st.candidates().size() != before) st.reset_separation_point();
    }

    double ub = st.upper_bound();
    if (ub < kInf &&
        ub - st.lower_bound() <= 1e-6 * std::max(1.0, std::abs(ub))) {
      exit = RootExit::GapClosed;
      break;
    }

    st.mix_separation_point(params.phi);
    auto sep = separate_all(st.zbar(), st.separation_point(), inst,
                            st.candidates(), &st.cache());
    double violation = sep.first.value_at(st.zbar()) - st.eta_value();
    if (violation <= params.eps_cut) {
      exit = RootExit::Converged;
      final_probes = true;
      break;
    }

    st.add_cut(sep.first, iter, violation, hash_matrix(st.separation_point()));
    double lb_before = st.lower_bound();
    if (st.solve() != LpStatus::Optimal)
      throw NumericalFailure("master reoptimization failed at the root");
    st.log_row(iter, clock.seconds());
    double gain = (st.lower_bound() - lb_before) /
                  std::max(1.0, std::abs(lb_before)) * 100.0;
    if (gain < params.kappa) {
      exit = RootExit::SmallImprovement;
      final_probes = true;
      break;
    }
  }

  if (final_probes && params.use_reduction && !deadline.expired()) {
    size_t before = st.candidates().size();
    partial_enumeration(st, PeMode::FixAtOne);
    partial_enumeration(st, PeMode::FixAtZero);
    if (st.candidates().size() != before) st.reset_separation_point();
  }
  st.set_exit(exit);
  st.log_row(iter, clock.seconds());
  return st;
}

}  // namespace qploc
