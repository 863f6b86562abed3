#include "qploc/oracle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>

namespace qploc {

double naive_cost(const Instance& inst, const std::vector<int>& assign) {
  double setup = 0.0;
  for (int k = 0; k < inst.n; ++k) {
    if (assign[k] == k) setup += inst.setup[k];
  }
  double lin = 0.0;
  for (int i = 0; i < inst.n; ++i) lin += inst.assign_cost(i, assign[i]);
  double quad = 0.0;
  for (int i = 0; i < inst.n; ++i) {
    for (int j = 0; j < inst.n; ++j) {
      if (i == j) continue;
      quad += inst.quad(i, assign[i], j, assign[j]);
    }
  }
  return setup + lin + quad / 2.0;
}

namespace {

struct Search {
  const Instance& inst;
  std::vector<int> open;      // current open set
  std::vector<double> load;   // demand served per open facility
  std::vector<int> assign;
  double tie_tol;
  double best = kInf;
  std::vector<std::pair<double, std::vector<int>>> pool;
  bool any_feasible = false;

  explicit Search(const Instance& i, double tol) : inst(i), tie_tol(tol) {
    assign.assign(inst.n, -1);
    load.assign(inst.n, 0.0);
  }

  void leaf() {
    any_feasible = true;
    double c = naive_cost(inst, assign);
    if (c < best - tie_tol) {
      best = c;
      // Drop pool entries that are no longer within the tie band.
      std::erase_if(pool, [&](const auto& e) { return e.first > best + tie_tol; });
    }
    if (c <= best + tie_tol) pool.emplace_back(c, assign);
  }

  void place(int i) {
    if (i == inst.n) {
      leaf();
      return;
    }
    if (assign[i] >= 0) {  // facility node, pre-assigned to itself
      place(i + 1);
      return;
    }
    for (int k : open) {
      if (inst.capacitated() && load[k] + inst.demand[i] > inst.capacity[k] + 1e-9) {
        continue;
      }
      assign[i] = k;
      load[k] += inst.demand[i];
      place(i + 1);
      load[k] -= inst.demand[i];
      assign[i] = -1;
    }
  }

  void run_subset(unsigned mask) {
    open.clear();
    for (int k = 0; k < inst.n; ++k) {
      if (mask & (1u << k)) open.push_back(k);
    }
    std::fill(assign.begin(), assign.end(), -1);
    for (int k : open) {
      assign[k] = k;
      load[k] = inst.demand[k];
    }
    place(0);
    for (int k : open) load[k] = 0.0;
  }
};

}  // namespace

OracleResult enumerate_optimal(const Instance& inst, int max_n, double tie_tol) {
  if (inst.n > max_n) {
    throw SizeGuard("enumeration oracle limited to n <= " + std::to_string(max_n));
  }
  inst.validate();
  Search s(inst, tie_tol);
  unsigned full = (1u << inst.n) - 1;
  for (unsigned mask = 1; mask <= full; ++mask) {
    if (std::popcount(mask) > inst.p) continue;
    if (inst.capacitated()) {
      double cap = 0.0;
      for (int k = 0; k < inst.n; ++k) {
        if (mask & (1u << k)) cap += inst.capacity[k];
      }
      if (cap < inst.total_demand() - 1e-9) continue;
    }
    s.run_subset(mask);
  }
  if (!s.any_feasible) {
    throw InfeasibleInstance("no feasible assignment exists for '" + inst.name + "'");
  }
  OracleResult r;
  r.value = s.best;
  for (auto& [c, a] : s.pool) {
    if (c <= s.best + tie_tol) r.optima.push_back(a);
  }
  return r;
}

// ---------------------------------------------------------------------------
// LP oracle
// ---------------------------------------------------------------------------

namespace {

struct VertexEnum {
  int n, m, N;
  Eigen::MatrixXd A;  // m x N full matrix including slack identity
  std::vector<double> lo, up, cost;
  std::vector<double> rhs;
  double best = kInf;
  long budget = 30'000'000;

  void consider(const std::vector<int>& basic) {
    // Nonbasic variables must offer a finite bound to sit on.
    std::vector<int> nonbasic;
    std::vector<char> in_b(N, 0);
    for (int v : basic) in_b[v] = 1;
    for (int v = 0; v < N; ++v) {
      if (!in_b[v]) nonbasic.push_back(v);
    }
    std::vector<int> two_sided;
    std::vector<double> xn(N, 0.0);
    for (int v : nonbasic) {
      bool fl = lo[v] > -kInf, fu = up[v] < kInf;
      if (!fl && !fu) return;  // free nonbasic: no vertex from this set
      if (fl && fu && lo[v] != up[v]) {
        two_sided.push_back(v);
        xn[v] = lo[v];
      } else {
        xn[v] = fl ? lo[v] : up[v];
      }
    }
    if (two_sided.size() > 22) throw SizeGuard("vertex oracle pattern blowup");

    Eigen::MatrixXd B(m, m);
    for (int c = 0; c < m; ++c) B.col(c) = A.col(basic[c]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
    if (lu.rank() < m) return;

    long patterns = 1L << two_sided.size();
    budget -= patterns * (m > 0 ? m : 1);
    if (budget < 0) throw SizeGuard("vertex oracle work budget exhausted");

    for (long pat = 0; pat < patterns; ++pat) {
      for (size_t t = 0; t < two_sided.size(); ++t) {
        int v = two_sided[t];
        xn[v] = (pat >> t) & 1 ? up[v] : lo[v];
      }
      Eigen::VectorXd r(m);
      for (int i = 0; i < m; ++i) r(i) = rhs[i];
      for (int v : nonbasic) {
        if (xn[v] != 0.0) r -= A.col(v) * xn[v];
      }
      Eigen::VectorXd xb = lu.solve(r);
      bool ok = true;
      double obj = 0.0;
      for (int c = 0; c < m && ok; ++c) {
        int v = basic[c];
        double x = xb(c);
        if (x < lo[v] - 1e-9 || x > up[v] + 1e-9) ok = false;
        obj += cost[v] * x;
      }
      if (!ok) continue;
      for (int v : nonbasic) obj += cost[v] * xn[v];
      best = std::min(best, obj);
    }
  }

  void combos(int start, std::vector<int>& cur) {
    if (int(cur.size()) == m) {
      consider(cur);
      return;
    }
    int need = m - int(cur.size());
    for (int v = start; v + need <= N; ++v) {
      cur.push_back(v);
      combos(v + 1, cur);
      cur.pop_back();
    }
  }
};

}  // namespace

double lp_vertex_optimum(const Lp& lp) {
  VertexEnum e;
  e.n = lp.num_cols();
  e.m = lp.num_rows();
  e.N = e.n + e.m;
  if (e.n > 14 || e.m > 8) {
    throw SizeGuard("vertex oracle limited to small models");
  }
  e.A = Eigen::MatrixXd::Zero(e.m, e.N);
  for (int r = 0; r < e.m; ++r) {
    const auto& idx = lp.row_idx(r);
    const auto& val = lp.row_val(r);
    for (size_t t = 0; t < idx.size(); ++t) e.A(r, idx[t]) += val[t];
    e.A(r, e.n + r) = 1.0;
    e.rhs.push_back(lp.row_rhs(r));
  }
  e.lo.resize(e.N);
  e.up.resize(e.N);
  e.cost.assign(e.N, 0.0);
  for (int j = 0; j < e.n; ++j) {
    e.lo[j] = lp.lower(j);
    e.up[j] = lp.upper(j);
    e.cost[j] = lp.obj_coef(j);
  }
  for (int r = 0; r < e.m; ++r) {
    switch (lp.row_sense(r)) {
      case RowSense::LE:
        e.lo[e.n + r] = 0.0;
        e.up[e.n + r] = kInf;
        break;
      case RowSense::GE:
        e.lo[e.n + r] = -kInf;
        e.up[e.n + r] = 0.0;
        break;
      case RowSense::EQ:
        e.lo[e.n + r] = 0.0;
        e.up[e.n + r] = 0.0;
        break;
    }
  }
  if (e.m == 0) {
    // Pure box problem: each variable sits at its cheaper finite bound.
    double obj = 0.0;
    for (int j = 0; j < e.n; ++j) {
      double cl = e.cost[j] >= 0 ? e.lo[j] : e.up[j];
      if (cl <= -kInf || cl >= kInf) return -kInf;  // unbounded box
      obj += e.cost[j] * cl;
    }
    return obj;
  }
  std::vector<int> cur;
  e.combos(0, cur);
  return e.best;
}

}  // namespace qploc
