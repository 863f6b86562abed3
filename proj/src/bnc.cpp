#include "qploc/bnc.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <tuple>
#include <utility>

namespace qploc {

namespace {

// A node carries the full list of bound tightenings along its path; they are
// applied in order on top of the root bounds, so a later entry for the same
// column supersedes an earlier one.
struct Node {
  double bound = -kInf;  // parent LP value, valid lower bound for the subtree
  int64_t seq = 0;       // insertion order, deterministic tie-break
  std::vector<std::tuple<int, double, double>> tight;
};

struct BestBoundOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.seq > b.seq;
  }
};

}  // namespace

MilpResult solve_milp(Lp& lp, const std::vector<char>& integer,
                      const MilpOptions& opt) {
  const int n = lp.num_cols();
  if (int(integer.size()) != n)
    throw DimensionMismatch("solve_milp: one integrality flag per column required");

  std::vector<double> root_lo(n), root_up(n);
  for (int j = 0; j < n; ++j) {
    root_lo[j] = lp.lower(j);
    root_up[j] = lp.upper(j);
  }
  auto restore_root = [&] {
    for (int j = 0; j < n; ++j) lp.set_bounds(j, root_lo[j], root_up[j]);
  };

  Deadline deadline(opt.time_limit);
  MilpResult res;
  std::priority_queue<Node, std::vector<Node>, BestBoundOrder> pool;
  int64_t seq = 0;
  pool.push(Node{-kInf, seq++, {}});
  Node plunge;
  bool have_plunge = false;
  bool limit_hit = false;

  auto prune_eps = [&] {
    return res.obj < kInf ? opt.tol_gap * std::max(1.0, std::abs(res.obj)) : 0.0;
  };

  while (have_plunge || !pool.empty()) {
    if (res.nodes >= opt.node_limit || deadline.expired()) {
      limit_hit = true;
      break;
    }
    Node node;
    if (have_plunge) {
      node = std::move(plunge);
      have_plunge = false;
    } else {
      node = pool.top();
      pool.pop();
    }
    if (node.bound >= res.obj - prune_eps()) continue;

    restore_root();
    for (const auto& [j, lo, hi] : node.tight) lp.set_bounds(j, lo, hi);
    ++res.nodes;
    LpStatus st = lp.solve();
    if (st == LpStatus::Infeasible) continue;
    if (st == LpStatus::Unbounded) {
      restore_root();
      res.status = LpStatus::Unbounded;
      return res;
    }
    double obj = lp.obj_value();
    if (obj >= res.obj - prune_eps()) continue;

    const std::vector<double>& x = lp.x();
    int bj = -1;
    double bdist = opt.tol_int;
    for (int j = 0; j < n; ++j) {
      if (!integer[j]) continue;
      double f = x[j] - std::floor(x[j]);
      double dist = std::min(f, 1.0 - f);
      if (dist > bdist) {
        bdist = dist;
        bj = j;
      }
    }
    if (bj < 0) {
      res.obj = obj;
      res.x = x;
      continue;
    }

    double lo = lp.lower(bj), hi = lp.upper(bj);
    double frac = x[bj] - std::floor(x[bj]);
    Node down{obj, seq++, node.tight};
    down.tight.emplace_back(bj, lo, std::floor(x[bj]));
    Node up{obj, seq++, node.tight};
    up.tight.emplace_back(bj, std::ceil(x[bj]), hi);
    if (frac <= 0.5) {
      plunge = std::move(down);
      pool.push(std::move(up));
    } else {
      plunge = std::move(up);
      pool.push(std::move(down));
    }
    have_plunge = true;
  }

  restore_root();
  if (limit_hit) {
    res.status = LpStatus::IterLimit;
    double lb = res.obj;
    if (have_plunge) lb = std::min(lb, plunge.bound);
    if (!pool.empty()) lb = std::min(lb, pool.top().bound);
    res.bound = lb;
  } else {
    res.proven = true;
    res.status = res.obj < kInf ? LpStatus::Optimal : LpStatus::Infeasible;
    res.bound = res.obj;
  }
  return res;
}

}  // namespace qploc
