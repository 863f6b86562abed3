#include "qploc/instance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qploc {

bool capacitated(Variant v) {
  return v == Variant::CapFree || v == Variant::CapP;
}

bool p_bounded(Variant v) {
  return v == Variant::UncapP || v == Variant::CapP;
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::UncapFree: return "uncap-free";
    case Variant::UncapP: return "uncap-p";
    case Variant::CapFree: return "cap-free";
    case Variant::CapP: return "cap-p";
  }
  return "?";
}

Variant variant_from_name(const std::string& s) {
  if (s == "uncap-free") return Variant::UncapFree;
  if (s == "uncap-p") return Variant::UncapP;
  if (s == "cap-free") return Variant::CapFree;
  if (s == "cap-p") return Variant::CapP;
  throw ParseError("unknown variant name: '" + s + "'");
}

// ---------------------------------------------------------------------------
// QuadCost
// ---------------------------------------------------------------------------

QuadCost QuadCost::dense(int n) {
  if (n > kDenseLimit) {
    throw SizeGuard("dense quadratic tensor refused for n = " +
                    std::to_string(n) + " (limit " +
                    std::to_string(kDenseLimit) + "); use the factorized form");
  }
  QuadCost q;
  q.factorized_ = false;
  q.n_ = n;
  size_t pairs = size_t(n) * (n - 1) / 2;
  q.q_.assign(pairs * n * n, 0.0);
  return q;
}

QuadCost QuadCost::factorized(Mat flow, Mat dist, double tau) {
  if (!flow.square() || !dist.square() || flow.rows != dist.rows) {
    throw DimensionMismatch("factorized quadratic: flow and dist must be square and same size");
  }
  QuadCost q;
  q.factorized_ = true;
  q.n_ = flow.rows;
  q.tau_ = tau;
  q.flow_ = std::move(flow);
  q.dist_ = std::move(dist);
  q.symmetric_dist_ = true;
  for (int i = 0; i < q.n_ && q.symmetric_dist_; ++i) {
    for (int j = i + 1; j < q.n_; ++j) {
      if (q.dist_(i, j) != q.dist_(j, i)) {
        q.symmetric_dist_ = false;
        break;
      }
    }
  }
  return q;
}

double& QuadCost::dense_at(int i, int k, int j, int m) {
  if (factorized_) throw SolverError("dense_at on factorized quadratic");
  if (!(i < j)) throw SolverError("dense_at requires i < j");
  return q_[idx(i, k, j, m)];
}

double QuadCost::max_entry() const {
  if (!factorized_) {
    double mx = 0.0;
    for (double x : q_) mx = std::max(mx, x);
    return mx;
  }
  double mw = 0.0, md = 0.0;
  for (double x : flow_.v) mw = std::max(mw, x);
  for (double x : dist_.v) md = std::max(md, x);
  return tau_ * 2.0 * mw * md;
}

// ---------------------------------------------------------------------------
// Instance
// ---------------------------------------------------------------------------

double Instance::total_demand() const {
  return std::accumulate(demand.begin(), demand.end(), 0.0);
}

void Instance::validate() const {
  if (n <= 0) throw InvalidInstance("n must be positive");
  if (int(setup.size()) != n || int(capacity.size()) != n ||
      int(demand.size()) != n) {
    throw DimensionMismatch("setup/capacity/demand arrays must have length n");
  }
  if (assign_cost.rows != n || assign_cost.cols != n) {
    throw DimensionMismatch("assign_cost must be n x n");
  }
  if (quad.n() != n) throw DimensionMismatch("quadratic cost size differs from n");
  if (p < 1 || p > n) {
    throw InvalidInstance("p = " + std::to_string(p) + " outside [1, n]");
  }
  for (int k = 0; k < n; ++k) {
    if (setup[k] < 0) throw InvalidInstance("negative setup cost at " + std::to_string(k));
    if (demand[k] < 0) throw InvalidInstance("negative demand at " + std::to_string(k));
  }
  for (double c : assign_cost.v) {
    if (c < 0) throw InvalidInstance("negative assignment cost");
  }
  if (capacitated()) {
    for (int k = 0; k < n; ++k) {
      if (capacity[k] < demand[k]) {
        throw InvalidInstance("capacity below own demand at facility " +
                              std::to_string(k));
      }
    }
  }
  if (quad.is_factorized()) {
    if (quad.tau() < 0) throw InvalidInstance("negative quadratic weight");
    for (double w : quad.flow().v) {
      if (w < 0) throw InvalidInstance("negative flow entry");
    }
    for (double d : quad.dist().v) {
      if (d < 0) throw InvalidInstance("negative distance entry");
    }
  } else {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
          for (int m = 0; m < n; ++m) {
            if (quad(i, k, j, m) < 0) throw InvalidInstance("negative quadratic cost");
          }
        }
      }
    }
  }
}

std::vector<int> open_facilities(const std::vector<int>& assign) {
  std::vector<int> open;
  for (int k = 0; k < int(assign.size()); ++k) {
    if (assign[k] == k) open.push_back(k);
  }
  return open;
}

void check_assignment(const Instance& inst, const std::vector<int>& assign) {
  if (int(assign.size()) != inst.n) {
    throw InfeasibleSolution("assignment length " + std::to_string(assign.size()) +
                             " differs from n = " + std::to_string(inst.n));
  }
  for (int i = 0; i < inst.n; ++i) {
    if (assign[i] < 0 || assign[i] >= inst.n) {
      throw InfeasibleSolution("assign[" + std::to_string(i) + "] out of range");
    }
  }
  // Facilities host themselves: a(i) = k requires a(k) = k.
  for (int i = 0; i < inst.n; ++i) {
    int k = assign[i];
    if (assign[k] != k) {
      throw InfeasibleSolution("customer " + std::to_string(i) + " assigned to " +
                               std::to_string(k) + " which is not open");
    }
  }
  int open_count = 0;
  for (int k = 0; k < inst.n; ++k) {
    if (assign[k] == k) ++open_count;
  }
  if (open_count > inst.p) {
    throw InfeasibleSolution("open facilities " + std::to_string(open_count) +
                             " exceed p = " + std::to_string(inst.p));
  }
  if (inst.capacitated()) {
    std::vector<double> load(inst.n, 0.0);
    for (int i = 0; i < inst.n; ++i) load[assign[i]] += inst.demand[i];
    for (int k = 0; k < inst.n; ++k) {
      if (assign[k] == k && load[k] > inst.capacity[k] + 1e-9) {
        throw InfeasibleSolution("capacity exceeded at facility " + std::to_string(k) +
                                 ": load " + std::to_string(load[k]) + " > b " +
                                 std::to_string(inst.capacity[k]));
      }
    }
  }
}

CostBreakdown evaluate(const Instance& inst, const std::vector<int>& assign) {
  check_assignment(inst, assign);
  CostBreakdown b;
  for (int k = 0; k < inst.n; ++k) {
    if (assign[k] == k) b.setup += inst.setup[k];
  }
  for (int i = 0; i < inst.n; ++i) b.linear += inst.assign_cost(i, assign[i]);
  for (int i = 0; i < inst.n; ++i) {
    for (int j = i + 1; j < inst.n; ++j) {
      b.quadratic += inst.quad(i, assign[i], j, assign[j]);
    }
  }
  b.total = b.setup + b.linear + b.quadratic;
  return b;
}

Solution make_solution(const Instance& inst, std::vector<int> assign) {
  Solution s;
  s.cost = evaluate(inst, assign);
  s.assign = std::move(assign);
  return s;
}

double reassign_delta(const Instance& inst, const std::vector<int>& assign,
                      int i, int to) {
  int from = assign[i];
  if (from == to) return 0.0;
  double d = inst.assign_cost(i, to) - inst.assign_cost(i, from);
  for (int l = 0; l < inst.n; ++l) {
    if (l == i) continue;
    d += inst.quad(i, to, l, assign[l]) - inst.quad(i, from, l, assign[l]);
  }
  return d;
}

// ---------------------------------------------------------------------------
// Cost construction from flows and distances
// ---------------------------------------------------------------------------

void build_flow_costs(Instance& inst, const Mat& flow, const Mat& dist,
                      const UnitCosts& u) {
  if (!flow.square() || flow.rows != inst.n) {
    throw DimensionMismatch("flow matrix must be n x n");
  }
  if (!dist.square() || dist.rows != inst.n) {
    throw DimensionMismatch("distance matrix must be n x n");
  }
  int n = inst.n;
  std::vector<double> out(n, 0.0), in(n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      out[i] += flow(i, j);
      in[j] += flow(i, j);
    }
  }
  inst.assign_cost = Mat(n, n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      inst.assign_cost(i, k) = (u.chi * out[i] + u.delta * in[i]) * dist(i, k);
    }
  }
  inst.quad = QuadCost::factorized(flow, dist, u.tau);
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

Instance generate_set1(const GenConfig& cfg) {
  int n = cfg.n;
  if (n < 10) throw InvalidInstance("generator needs n >= 10");
  Rng rng(cfg.seed);

  // Traffic classes: counts rounded to nearest, remainder to the light class.
  int n_hl = int(std::floor(0.02 * n + 0.5));
  int n_ml = int(std::floor(0.38 * n + 0.5));
  if (n_hl + n_ml > n) n_ml = n - n_hl;
  std::vector<int> cls(n, 2);  // 0 heavy, 1 medium, 2 light
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);
  for (int r = 0; r < n_hl; ++r) cls[order[r]] = 0;
  for (int r = n_hl; r < n_hl + n_ml; ++r) cls[order[r]] = 1;

  std::vector<double> outflow(n);
  for (int i = 0; i < n; ++i) {
    double lo = cls[i] == 0 ? 100.0 : cls[i] == 1 ? 10.0 : 1.0;
    double hi = cls[i] == 0 ? 1000.0 : cls[i] == 1 ? 100.0 : 10.0;
    outflow[i] = rng.uniform(lo, hi);
  }

  // Split each node's outflow across the other nodes by normalized shares.
  Mat flow(n, n, 0.0);
  for (int i = 0; i < n; ++i) {
    std::vector<double> share(n, 0.0);
    double tot = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      share[j] = rng.uniform();
      tot += share[j];
    }
    for (int j = 0; j < n; ++j) {
      if (j != i) flow(i, j) = outflow[i] * share[j] / tot;
    }
  }

  std::vector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = rng.uniform(0.0, 100.0);
    y[i] = rng.uniform(0.0, 100.0);
  }
  Mat dist(n, n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      dist(i, j) = std::hypot(x[i] - x[j], y[i] - y[j]);
    }
  }

  Instance inst;
  inst.n = n;
  inst.variant = cfg.variant;
  inst.p = p_bounded(cfg.variant) ? (cfg.p > 0 ? cfg.p : n / 4 + 1) : n;
  inst.name = "set1-n" + std::to_string(n) + "-s" + std::to_string(cfg.seed) +
              "-" + cfg.setup_level + cfg.cap_level;
  inst.demand = outflow;
  build_flow_costs(inst, flow, dist, cfg.units);

  double mean_c = 0.0;
  for (double c : inst.assign_cost.v) mean_c += c;
  mean_c /= double(n) * n;
  double mean_o = std::accumulate(outflow.begin(), outflow.end(), 0.0) / n;

  double f_base = 3.5 * mean_c * n * (cfg.setup_level == 'T' ? 2.0 : 1.0);
  inst.setup.resize(n);
  for (int k = 0; k < n; ++k) {
    inst.setup[k] =
        f_base * (0.8 + 0.4 * rng.uniform()) * std::sqrt(outflow[k] / mean_o);
  }

  double total_d = inst.total_demand();
  int p_gen = std::max(2, (n + 19) / 20);
  if (inst.p_bounded()) p_gen = std::min(p_gen, inst.p);
  double mult = cfg.cap_level == 'T' ? 1.1 : 1.5;
  inst.capacity.resize(n);
  for (int k = 0; k < n; ++k) {
    inst.capacity[k] = std::max(1.1 * inst.demand[k], mult * total_d / p_gen);
  }

  inst.validate();
  return inst;
}

Instance random_dense_instance(int n, uint64_t seed, Variant variant, int p) {
  Rng rng(seed);
  Instance inst;
  inst.n = n;
  inst.variant = variant;
  inst.p = p_bounded(variant) ? p : n;
  inst.name = "rand-n" + std::to_string(n) + "-s" + std::to_string(seed) + "-" +
              variant_name(variant);
  inst.demand.resize(n);
  for (int i = 0; i < n; ++i) inst.demand[i] = rng.uniform(1.0, 10.0);
  double total_d = inst.total_demand();

  inst.setup.resize(n);
  for (int k = 0; k < n; ++k) inst.setup[k] = rng.uniform(0.0, 60.0);

  inst.capacity.resize(n);
  for (int k = 0; k < n; ++k) {
    inst.capacity[k] = inst.demand[k] + rng.uniform(0.3, 0.6) * total_d;
  }
  // One facility can always hold everything, so every p >= 1 is feasible.
  inst.capacity[rng.uniform_int(0, n - 1)] = total_d + 1.0;

  inst.assign_cost = Mat(n, n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      inst.assign_cost(i, k) = i == k ? 0.0 : rng.uniform(1.0, 100.0);
    }
  }

  inst.quad = QuadCost::dense(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        for (int m = 0; m < n; ++m) {
          inst.quad.dense_at(i, k, j, m) = rng.uniform(0.0, 12.0);
        }
      }
    }
  }

  inst.validate();
  return inst;
}

}  // namespace qploc
