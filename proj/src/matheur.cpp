#include "qploc/matheur.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

namespace qploc {

namespace {

// Dense LP kernel guards: above kMaxMilpCols the subsolve is replaced by the
// greedy build, between kStrongLinkCols and that the location MILP switches
// to aggregated linking rows (same integer hull, far fewer rows).
constexpr long long kMaxMilpCols = 20000;
constexpr long long kStrongLinkCols = 4000;

double improve_tol(double total) { return 1e-9 * (1.0 + std::abs(total)); }

std::vector<int> sorted_unique(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

void check_facility_set(const Instance& inst, const std::vector<int>& s,
                        const char* what) {
  for (int k : s) {
    if (k < 0 || k >= inst.n)
      throw IndexOutOfRange(std::string(what) + ": facility " + std::to_string(k));
  }
}

// Indices ordered by decreasing demand, ties by index.
std::vector<int> demand_order(const Instance& inst) {
  std::vector<int> order(inst.n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return inst.demand[a] > inst.demand[b];
  });
  return order;
}

// Descent state. Loads and the objective are rebuilt from scratch after every
// accepted move, so drift cannot accumulate and every accepted assignment is
// re-validated by evaluate().
struct SearchState {
  const Instance& inst;
  std::vector<int> assign;
  std::vector<double> load;  // demand served per facility, own demand included
  std::vector<int> open;     // ascending
  double total = 0.0;

  SearchState(const Instance& I, std::vector<int> a) : inst(I), assign(std::move(a)) {
    resync();
  }

  bool is_open(int k) const { return assign[k] == k; }
  double avail(int k) const { return inst.capacity[k] - load[k]; }

  void resync() {
    total = evaluate(inst, assign).total;
    load.assign(inst.n, 0.0);
    for (int i = 0; i < inst.n; ++i) load[assign[i]] += inst.demand[i];
    open = open_facilities(assign);
  }

  void adopt(std::vector<int> a, const AcceptHook& hook) {
    assign = std::move(a);
    resync();
    if (hook) hook(assign, total);
  }
};

// Shift: move one customer to another open facility with room.
bool explore_shift(SearchState& s, const AcceptHook& hook) {
  const Instance& inst = s.inst;
  bool cap = inst.capacitated();
  for (int j = 0; j < inst.n; ++j) {
    if (s.is_open(j)) continue;
    for (int k : s.open) {
      if (k == s.assign[j]) continue;
      if (cap && s.avail(k) < inst.demand[j]) continue;
      if (reassign_delta(inst, s.assign, j, k) < -improve_tol(s.total)) {
        std::vector<int> a = s.assign;
        a[j] = k;
        s.adopt(std::move(a), hook);
        return true;
      }
    }
  }
  return false;
}

// Swap: exchange the facilities of two customers; each target must have room
// once its own leaver is discounted.
bool explore_swap(SearchState& s, const AcceptHook& hook) {
  const Instance& inst = s.inst;
  bool cap = inst.capacitated();
  for (int i1 = 0; i1 < inst.n; ++i1) {
    if (s.is_open(i1)) continue;
    int k1 = s.assign[i1];
    for (int i2 = i1 + 1; i2 < inst.n; ++i2) {
      if (s.is_open(i2)) continue;
      int k2 = s.assign[i2];
      if (k1 == k2) continue;
      if (cap && (s.avail(k1) + inst.demand[i1] < inst.demand[i2] ||
                  s.avail(k2) + inst.demand[i2] < inst.demand[i1]))
        continue;
      double d = reassign_delta(inst, s.assign, i1, k2);
      s.assign[i1] = k2;  // two-step probe, restored below
      d += reassign_delta(inst, s.assign, i2, k1);
      s.assign[i1] = k1;
      if (d < -improve_tol(s.total)) {
        std::vector<int> a = s.assign;
        a[i1] = k2;
        a[i2] = k1;
        s.adopt(std::move(a), hook);
        return true;
      }
    }
  }
  return false;
}

// Open: add one facility and greedily pull in customers that get cheaper,
// largest demand first.
bool explore_open(SearchState& s, const AcceptHook& hook) {
  const Instance& inst = s.inst;
  if (inst.p_bounded() && int(s.open.size()) >= inst.p) return false;
  bool cap = inst.capacitated();
  std::vector<int> order = demand_order(inst);
  for (int k = 0; k < inst.n; ++k) {
    if (s.is_open(k)) continue;
    std::vector<int> cand = s.assign;
    double delta = inst.setup[k] + reassign_delta(inst, cand, k, k);
    cand[k] = k;
    double hk = cap ? inst.slack_cap(k) : kInf;
    for (int j : order) {
      if (j == k || s.is_open(j)) continue;
      if (inst.assign_cost(j, k) > inst.assign_cost(j, s.assign[j])) continue;
      if (cap && hk < inst.demand[j]) continue;
      delta += reassign_delta(inst, cand, j, k);
      cand[j] = k;
      hk -= inst.demand[j];
    }
    if (delta < -improve_tol(s.total)) {
      s.adopt(std::move(cand), hook);
      return true;
    }
  }
  return false;
}

// Close: drop one facility, sending each of its customers (largest demand
// first) to the cheapest remaining facility with room.
bool explore_close(SearchState& s, const AcceptHook& hook) {
  const Instance& inst = s.inst;
  if (int(s.open.size()) <= 1) return false;
  bool cap = inst.capacitated();
  std::vector<int> order = demand_order(inst);
  for (int k : s.open) {
    std::vector<int> cand = s.assign;
    std::vector<double> hh(inst.n, 0.0);
    for (int r : s.open) hh[r] = s.avail(r);
    double delta = -inst.setup[k];
    bool ok = true;
    for (int j : order) {
      if (s.assign[j] != k) continue;
      int best = -1;
      double bc = kInf;
      for (int m : s.open) {
        if (m == k) continue;
        if (cap && hh[m] < inst.demand[j]) continue;
        double c = inst.assign_cost(j, m);
        if (c < bc) {
          bc = c;
          best = m;
        }
      }
      if (best < 0) {
        ok = false;
        break;
      }
      delta += reassign_delta(inst, cand, j, best);
      cand[j] = best;
      if (cap) hh[best] -= inst.demand[j];
    }
    if (ok && delta < -improve_tol(s.total)) {
      s.adopt(std::move(cand), hook);
      return true;
    }
  }
  return false;
}

// Exchange: swap one open facility for a closed one and rebuild the whole
// assignment nearest-first; exchanges that cannot fit are discarded.
bool explore_exchange(SearchState& s, const AcceptHook& hook) {
  const Instance& inst = s.inst;
  bool cap = inst.capacitated();
  std::vector<int> order = demand_order(inst);
  std::vector<int> open_now = s.open;
  for (int m : open_now) {
    for (int i = 0; i < inst.n; ++i) {
      if (s.is_open(i)) continue;
      std::vector<int> cand(inst.n, -1);
      std::vector<double> hh(inst.n, 0.0);
      for (int r : open_now) {
        if (r == m) continue;
        cand[r] = r;
        hh[r] = cap ? inst.slack_cap(r) : kInf;
      }
      cand[i] = i;
      hh[i] = cap ? inst.slack_cap(i) : kInf;
      bool ok = true;
      for (int j : order) {
        if (cand[j] == j) continue;
        int best = -1;
        double bc = kInf;
        for (int r = 0; r < inst.n; ++r) {
          if (cand[r] != r) continue;
          if (cap && hh[r] < inst.demand[j]) continue;
          double c = inst.assign_cost(j, r);
          if (c < bc) {
            bc = c;
            best = r;
          }
        }
        if (best < 0) {
          ok = false;
          break;
        }
        cand[j] = best;
        hh[best] -= inst.demand[j];
      }
      if (!ok) continue;
      double tot = evaluate(inst, cand).total;
      if (tot < s.total - improve_tol(s.total)) {
        s.adopt(std::move(cand), hook);
        return true;
      }
    }
  }
  return false;
}

Solution descend(const Instance& inst, const Solution& start, const AcceptHook& hook,
                 int max_level) {
  SearchState s(inst, start.assign);
  int level = 1;
  while (level <= max_level) {
    bool moved = false;
    switch (level) {
      case 1: moved = explore_shift(s, hook); break;
      case 2: moved = explore_swap(s, hook); break;
      case 3: moved = explore_open(s, hook); break;
      case 4: moved = explore_close(s, hook); break;
      case 5: moved = explore_exchange(s, hook); break;
    }
    level = moved ? 1 : level + 1;
  }
  return make_solution(inst, s.assign);
}

// Round a relaxation row of 0/1 columns to its argmax entry.
int argmax_position(const std::vector<double>& x, int base, int count) {
  int best = 0;
  for (int t = 1; t < count; ++t) {
    if (x[base + t] > x[base + best]) best = t;
  }
  return best;
}

}  // namespace

Solution greedy_solution(const Instance& inst, std::vector<int> support) {
  std::vector<int> S;
  if (support.empty()) {
    S.resize(inst.n);
    std::iota(S.begin(), S.end(), 0);
  } else {
    S = sorted_unique(std::move(support));
    check_facility_set(inst, S, "greedy_solution");
  }
  bool cap = inst.capacitated();
  std::vector<int> order = S;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return cap ? inst.slack_cap(a) > inst.slack_cap(b)
               : inst.setup[a] < inst.setup[b];
  });
  std::vector<int> cust = demand_order(inst);

  int maxh = std::min(inst.p, int(order.size()));
  std::vector<char> in_h(inst.n, 0);
  for (int h = 1; h <= maxh; ++h) {
    in_h[order[h - 1]] = 1;
    // Two placement passes: cheapest feasible target, then roomiest feasible
    // target, which packs better when capacities are tight.
    for (int pass = 0; pass < (cap ? 2 : 1); ++pass) {
      std::vector<int> assign(inst.n, -1);
      std::vector<double> hh(inst.n, 0.0);
      for (int r = 0; r < inst.n; ++r) {
        if (in_h[r]) {
          assign[r] = r;
          hh[r] = cap ? inst.slack_cap(r) : kInf;
        }
      }
      bool ok = true;
      for (int j : cust) {
        if (assign[j] == j) continue;
        int best = -1;
        double score = kInf;
        for (int r = 0; r < inst.n; ++r) {
          if (!in_h[r] || hh[r] < inst.demand[j]) continue;
          double v = pass == 0 ? inst.assign_cost(j, r) : -hh[r];
          if (v < score) {
            score = v;
            best = r;
          }
        }
        if (best < 0) {
          ok = false;
          break;
        }
        assign[j] = best;
        hh[best] -= inst.demand[j];
      }
      if (ok) return make_solution(inst, std::move(assign));
    }
  }
  throw InfeasibleInstance("greedy build could not place all customers");
}

Solution constructive(const Instance& inst, const std::vector<int>& support,
                      const MilpOptions& opt) {
  std::vector<int> S = sorted_unique(support);
  if (S.empty()) throw RlfInfeasible("constructive: empty support");
  check_facility_set(inst, S, "constructive");

  int n = inst.n, h = int(S.size());
  long long cols = (long long)n * h;
  if (cols > kMaxMilpCols) {
    try {
      return greedy_solution(inst, S);
    } catch (const InfeasibleInstance& e) {
      throw RlfInfeasible(e.what());
    }
  }

  Lp lp;
  auto zc = [&](int i, int t) { return i * h + t; };
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < h; ++t) {
      int k = S[t];
      double c = inst.assign_cost(i, k) + (i == k ? inst.setup[k] : 0.0);
      lp.add_col(c, 0.0, 1.0);
    }
  }
  for (int i = 0; i < n; ++i) {
    std::vector<int> idx(h);
    std::vector<double> val(h, 1.0);
    for (int t = 0; t < h; ++t) idx[t] = zc(i, t);
    lp.add_row(RowSense::EQ, 1.0, idx, val);
  }
  if (cols <= kStrongLinkCols) {
    for (int t = 0; t < h; ++t) {
      int k = S[t];
      for (int i = 0; i < n; ++i) {
        if (i == k) continue;
        lp.add_row(RowSense::LE, 0.0, {zc(i, t), zc(k, t)}, {1.0, -1.0});
      }
    }
  } else {
    for (int t = 0; t < h; ++t) {
      int k = S[t];
      std::vector<int> idx;
      std::vector<double> val;
      for (int i = 0; i < n; ++i) {
        if (i == k) continue;
        idx.push_back(zc(i, t));
        val.push_back(1.0);
      }
      idx.push_back(zc(k, t));
      val.push_back(-double(n - 1));
      lp.add_row(RowSense::LE, 0.0, idx, val);
    }
  }
  if (inst.p_bounded()) {
    std::vector<int> idx(h);
    std::vector<double> val(h, 1.0);
    for (int t = 0; t < h; ++t) idx[t] = zc(S[t], t);
    lp.add_row(RowSense::LE, double(inst.p), idx, val);
  }
  if (inst.capacitated()) {
    for (int t = 0; t < h; ++t) {
      int k = S[t];
      std::vector<int> idx;
      std::vector<double> val;
      for (int i = 0; i < n; ++i) {
        if (i == k) continue;
        idx.push_back(zc(i, t));
        val.push_back(inst.demand[i]);
      }
      idx.push_back(zc(k, t));
      val.push_back(-inst.slack_cap(k));
      lp.add_row(RowSense::LE, 0.0, idx, val);
    }
  }

  MilpResult r = solve_milp(lp, std::vector<char>(n * h, 1), opt);
  if (r.status == LpStatus::Infeasible)
    throw RlfInfeasible("constructive: support cannot serve all customers");
  if (!r.has_incumbent()) {
    try {
      return greedy_solution(inst, S);
    } catch (const InfeasibleInstance& e) {
      throw RlfInfeasible(e.what());
    }
  }
  std::vector<int> assign(n);
  for (int i = 0; i < n; ++i) assign[i] = S[argmax_position(r.x, i * h, h)];
  return make_solution(inst, std::move(assign));
}

std::vector<int> solve_gap(const Instance& inst, const std::vector<int>& open_set,
                           const MilpOptions& opt) {
  std::vector<int> H = sorted_unique(open_set);
  if (H.empty()) throw GapInfeasible("solve_gap: empty open set");
  check_facility_set(inst, H, "solve_gap");

  int h = int(H.size());
  std::vector<int> assign(inst.n, -1);
  std::vector<int> cust;
  {
    std::vector<char> in_h(inst.n, 0);
    for (int k : H) in_h[k] = 1;
    for (int i = 0; i < inst.n; ++i) {
      if (in_h[i])
        assign[i] = i;
      else
        cust.push_back(i);
    }
  }
  if (cust.empty()) return assign;

  int nc = int(cust.size());
  long long cols = (long long)nc * h;
  auto greedy_fallback = [&]() -> std::vector<int> {
    Solution g = greedy_solution(inst, H);  // throws on failure
    return g.assign;
  };
  if (cols > kMaxMilpCols) {
    try {
      return greedy_fallback();
    } catch (const InfeasibleInstance& e) {
      throw GapInfeasible(e.what());
    }
  }

  Lp lp;
  auto xc = [&](int ci, int t) { return ci * h + t; };
  for (int ci = 0; ci < nc; ++ci) {
    for (int t = 0; t < h; ++t) lp.add_col(inst.assign_cost(cust[ci], H[t]), 0.0, 1.0);
  }
  for (int ci = 0; ci < nc; ++ci) {
    std::vector<int> idx(h);
    std::vector<double> val(h, 1.0);
    for (int t = 0; t < h; ++t) idx[t] = xc(ci, t);
    lp.add_row(RowSense::EQ, 1.0, idx, val);
  }
  if (inst.capacitated()) {
    for (int t = 0; t < h; ++t) {
      std::vector<int> idx(nc);
      std::vector<double> val(nc);
      for (int ci = 0; ci < nc; ++ci) {
        idx[ci] = xc(ci, t);
        val[ci] = inst.demand[cust[ci]];
      }
      lp.add_row(RowSense::LE, inst.slack_cap(H[t]), idx, val);
    }
  }

  MilpResult r = solve_milp(lp, std::vector<char>(nc * h, 1), opt);
  if (r.status == LpStatus::Infeasible)
    throw GapInfeasible("solve_gap: capacities cannot carry the customers");
  if (!r.has_incumbent()) {
    try {
      return greedy_fallback();
    } catch (const InfeasibleInstance& e) {
      throw GapInfeasible(e.what());
    }
  }
  for (int ci = 0; ci < nc; ++ci)
    assign[cust[ci]] = H[argmax_position(r.x, ci * h, h)];
  return assign;
}

Solution vnd(const Instance& inst, const Solution& start, const AcceptHook& hook) {
  return descend(inst, start, hook, 5);
}

Solution gap_intensify(const Instance& inst, const Solution& start,
                       const MilpOptions& opt) {
  check_assignment(inst, start.assign);
  std::vector<int> assign = solve_gap(inst, open_facilities(start.assign), opt);
  if (assign == start.assign) return start;
  Solution polished = descend(inst, make_solution(inst, std::move(assign)), {}, 2);
  return polished.cost.total < start.cost.total ? polished : start;
}

Matheuristic::Matheuristic(const Instance& inst, MatheurOptions opt)
    : inst_(&inst), opt_(opt) {}

const Solution& Matheuristic::run(const std::vector<int>& support) {
  std::vector<int> S = sorted_unique(support);
  if (have_best_ && S == last_support_) return best_;
  last_support_ = S;

  Solution start;
  try {
    start = constructive(*inst_, S, opt_.milp);
  } catch (const RlfInfeasible&) {
    if (int(S.size()) == inst_->n) throw InfeasibleInstance("no feasible assignment");
    std::vector<int> full(inst_->n);
    std::iota(full.begin(), full.end(), 0);
    try {
      start = constructive(*inst_, full, opt_.milp);
    } catch (const RlfInfeasible& e) {
      throw InfeasibleInstance(e.what());
    }
  }

  Solution out = gap_intensify(*inst_, vnd(*inst_, start), opt_.milp);
  if (!have_best_ || out.cost.total < best_.cost.total) {
    best_ = std::move(out);
    have_best_ = true;
  }
  return best_;
}

}  // namespace qploc
