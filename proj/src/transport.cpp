#include "qploc/transport.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace qploc {

void TransportProblem::validate() const {
  int K = int(supplies.size()), M = int(demands.size());
  if (cost.rows != K || cost.cols != M) {
    throw DimensionMismatch("transport cost must be #supplies x #demands");
  }
  double ssum = 0.0, tsum = 0.0;
  for (double s : supplies) {
    if (!std::isfinite(s) || s < -1e-12) throw InvalidInstance("bad supply value");
    ssum += s;
  }
  for (double t : demands) {
    if (!std::isfinite(t) || t < -1e-12) throw InvalidInstance("bad demand value");
    tsum += t;
  }
  for (double c : cost.v) {
    if (!std::isfinite(c)) throw InvalidInstance("non-finite transport cost");
  }
  if (std::abs(ssum - tsum) > 1e-9) {
    throw UnbalancedProblem("transport imbalance: supply " + std::to_string(ssum) +
                            " vs demand " + std::to_string(tsum));
  }
}

namespace {

// Primal network simplex on the bipartite graph plus an artificial root.
// Arc a < K*M is supply a/M -> demand a%M; then K supply->root arcs and M
// root->demand arcs, all priced above any 2-arc real path so they carry no
// flow at optimality. Real arcs may be marked free (flow of either sign);
// that pins their reduced cost to zero at the optimum, which is how duals
// are confined to the optimal face of a previous solve. Anti-cycling: the
// tree is kept strongly feasible (every zero-flow bounded tree arc points
// toward the root) and the leaving arc is the last blocking arc along the
// cycle starting from the apex.
struct NetSimplex {
  const TransportProblem& pb;
  const std::vector<uint8_t>* free_arcs;  // real-arc mask or null
  int K, M, N, root;
  double cart, tol;

  std::vector<int> parent, parc;  // per node: parent node, connecting arc
  std::vector<uint8_t> up;        // arc directed node -> parent
  std::vector<double> flow;       // on the parent arc
  std::vector<int> depth, order;  // breadth-first order from the root
  std::vector<double> pi;
  int64_t pivots = 0;

  NetSimplex(const TransportProblem& p, const std::vector<uint8_t>* fr)
      : pb(p), free_arcs(fr), K(int(p.supplies.size())), M(int(p.demands.size())) {
    N = K + M + 1;
    root = K + M;
    double cmax = 0.0;
    for (double c : pb.cost.v) cmax = std::max(cmax, std::abs(c));
    cart = 1.0 + 2.0 * cmax;
    tol = 1e-10 * (1.0 + cmax);
    parent.assign(N, -1);
    parc.assign(N, -1);
    up.assign(N, 0);
    flow.assign(N, 0.0);
    depth.assign(N, 0);
    pi.assign(N, 0.0);
  }

  bool is_free(int a) const { return free_arcs && a < K * M && (*free_arcs)[a]; }

  double arc_cost(int a) const { return a < K * M ? pb.cost.v[a] : cart; }

  void arc_ends(int a, int& tail, int& head) const {
    if (a < K * M) {
      tail = a / M;
      head = K + a % M;
    } else if (a < K * M + K) {
      tail = a - K * M;
      head = root;
    } else {
      tail = root;
      head = K + (a - K * M - K);
    }
  }

  void rebuild_order() {
    std::vector<std::vector<int>> kids(N);
    for (int x = 0; x < N; ++x) {
      if (parent[x] >= 0) kids[parent[x]].push_back(x);
    }
    order.clear();
    order.reserve(N);
    order.push_back(root);
    depth[root] = 0;
    for (size_t h = 0; h < order.size(); ++h) {
      int x = order[h];
      for (int c : kids[x]) {
        depth[c] = depth[x] + 1;
        order.push_back(c);
      }
    }
    if (int(order.size()) != N) throw NumericalFailure("transport tree is not spanning");
  }

  void rebuild_pi() {
    pi[root] = 0.0;
    for (size_t h = 1; h < order.size(); ++h) {
      int x = order[h];
      double c = arc_cost(parc[x]);
      pi[x] = up[x] ? pi[parent[x]] + c : pi[parent[x]] - c;
    }
  }

  void cold_start() {
    for (int k = 0; k < K; ++k) {
      parent[k] = root;
      parc[k] = K * M + k;
      up[k] = 1;
      flow[k] = pb.supplies[k];
    }
    for (int m = 0; m < M; ++m) {
      parent[K + m] = root;
      parc[K + m] = K * M + K + m;
      up[K + m] = 0;
      flow[K + m] = pb.demands[m];
    }
    parent[root] = -1;
    parc[root] = -1;
    rebuild_order();
    rebuild_pi();
  }

  // Leaf-elimination flows for the current tree; returns the minimum flow on
  // bounded arcs so callers can detect primal infeasibility of a reused tree.
  double recompute_flows() {
    std::vector<double> r(N, 0.0);
    for (int k = 0; k < K; ++k) r[k] = pb.supplies[k];
    for (int m = 0; m < M; ++m) r[K + m] = -pb.demands[m];
    double fmin = 0.0;
    for (size_t h = order.size(); h-- > 1;) {
      int x = order[h];
      double f = up[x] ? r[x] : -r[x];
      flow[x] = f;
      if (!is_free(parc[x])) fmin = std::min(fmin, f);
      if (up[x]) {
        r[parent[x]] += f;
      } else {
        r[parent[x]] -= f;
      }
    }
    return fmin;
  }

  // Rebuild the tree from an arc list; false when it is not a spanning tree
  // of this problem or is primal infeasible for the current marginals.
  bool adopt(const std::vector<int>& arcs) {
    if (int(arcs.size()) != K + M) return false;
    std::vector<std::vector<std::pair<int, int>>> adj(N);
    for (int a : arcs) {
      if (a < 0 || a >= K * M + K + M) return false;
      int t, h;
      arc_ends(a, t, h);
      adj[t].push_back({h, a});
      adj[h].push_back({t, a});
    }
    std::vector<uint8_t> seen(N, 0);
    parent[root] = -1;
    parc[root] = -1;
    seen[root] = 1;
    std::vector<int> queue{root};
    for (size_t h = 0; h < queue.size(); ++h) {
      int x = queue[h];
      for (auto [o, a] : adj[x]) {
        if (seen[o]) continue;
        seen[o] = 1;
        parent[o] = x;
        parc[o] = a;
        int t, hd;
        arc_ends(a, t, hd);
        up[o] = uint8_t(t == o);
        queue.push_back(o);
      }
    }
    for (uint8_t s : seen) {
      if (!s) return false;
    }
    rebuild_order();
    if (recompute_flows() < -1e-12) return false;
    // Degenerate flows may carry round-off dust of either sign; snap them so
    // later ratio tests see clean zeros.
    for (int x = 0; x < K + M; ++x) {
      if (!is_free(parc[x]) && std::abs(flow[x]) <= 1e-12) flow[x] = 0.0;
    }
    rebuild_pi();
    return true;
  }

  double reduced_cost(int a) const { return pb.cost.v[a] - pi[a / M] + pi[K + a % M]; }

  // Candidate arc with the direction its flow should move, or -1. Block
  // search over real arcs with a rotating start; free arcs violate in either
  // sign. `only` restricts the scan (first pass over a reused optimal tree
  // whose bounded arcs are known priced out).
  int price(int& start, int& dir, const std::vector<int>* only) const {
    if (only) {
      int best = -1;
      double bestv = tol;
      for (int a : *only) {
        double rc = reduced_cost(a);
        double v = is_free(a) ? std::abs(rc) : -rc;
        if (v > bestv) {
          bestv = v;
          best = a;
          dir = rc < 0 ? +1 : -1;
        }
      }
      return best;
    }
    int A = K * M;
    if (A == 0) return -1;
    int block = std::max(8, int(std::sqrt(double(A))) + 1);
    int best = -1;
    double bestv = tol;
    for (int t = 0; t < A; ++t) {
      int a = (start + t) % A;
      double rc = reduced_cost(a);
      double v = is_free(a) ? std::abs(rc) : -rc;
      if (v > bestv) {
        bestv = v;
        best = a;
        dir = rc < 0 ? +1 : -1;
      }
      if ((t + 1) % block == 0 && best >= 0) break;
    }
    if (best >= 0) start = (best + 1) % A;
    return best;
  }

  bool pivot_on(int enter, int dir) {
    int tail, head;
    arc_ends(enter, tail, head);
    // Circulation enters at eu and leaves at ev; dir < 0 pushes against the
    // arc's orientation (free arc going negative).
    int eu = dir > 0 ? tail : head;
    int ev = dir > 0 ? head : tail;

    static thread_local std::vector<int> upath, vpath;
    upath.clear();
    vpath.clear();
    int x = eu, y = ev;
    while (x != y) {
      if (depth[x] >= depth[y]) {
        upath.push_back(x);
        x = parent[x];
      } else {
        vpath.push_back(y);
        y = parent[y];
      }
    }

    // Bounded arcs against the circulation block at zero; free arcs never do.
    double theta = kInf;
    for (int xu : upath) {
      if (up[xu] && !is_free(parc[xu])) theta = std::min(theta, flow[xu]);
    }
    for (int xv : vpath) {
      if (!up[xv] && !is_free(parc[xv])) theta = std::min(theta, flow[xv]);
    }
    if (theta == kInf) throw NumericalFailure("transport: unbounded cycle");

    // Leaving arc: the last blocking arc when the cycle is traversed along
    // the circulation starting at the apex. That traversal runs down the eu
    // side (upath back to front), across the entering arc, then up the ev
    // side (vpath front to back), so later assignments win in both loops and
    // any ev-side match overrides the eu side.
    int leave = -1;
    bool on_u = false;
    for (int h = int(upath.size()) - 1; h >= 0; --h) {
      int xu = upath[h];
      if (up[xu] && !is_free(parc[xu]) && flow[xu] <= theta) {
        leave = xu;
        on_u = true;
      }
    }
    for (size_t h = 0; h < vpath.size(); ++h) {
      int xv = vpath[h];
      if (!up[xv] && !is_free(parc[xv]) && flow[xv] <= theta) {
        leave = xv;
        on_u = false;
      }
    }
    if (leave < 0) throw NumericalFailure("transport: no blocking arc");

    for (int xu : upath) flow[xu] += up[xu] ? -theta : theta;
    for (int xv : vpath) flow[xv] += up[xv] ? theta : -theta;

    // Re-hang the cut subtree on the entering arc: reverse the parent chain
    // from the entering endpoint inside the subtree up to the leaving arc.
    int inside = on_u ? eu : ev;
    int outside = on_u ? ev : eu;
    static thread_local std::vector<int> chain;
    chain.clear();
    for (int c = inside;; c = parent[c]) {
      chain.push_back(c);
      if (c == leave) break;
    }
    static thread_local std::vector<int> cp;
    static thread_local std::vector<uint8_t> cu;
    static thread_local std::vector<double> cf;
    cp.resize(chain.size());
    cu.resize(chain.size());
    cf.resize(chain.size());
    for (size_t i = 0; i < chain.size(); ++i) {
      cp[i] = parc[chain[i]];
      cu[i] = up[chain[i]];
      cf[i] = flow[chain[i]];
    }
    parent[chain[0]] = outside;
    parc[chain[0]] = enter;
    up[chain[0]] = uint8_t(chain[0] == tail);
    flow[chain[0]] = dir > 0 ? theta : -theta;
    for (size_t i = 1; i < chain.size(); ++i) {
      parent[chain[i]] = chain[i - 1];
      parc[chain[i]] = cp[i - 1];
      up[chain[i]] = uint8_t(!cu[i - 1]);
      flow[chain[i]] = cf[i - 1];
    }
    rebuild_order();
    rebuild_pi();
    ++pivots;
    return true;
  }

  // `first_pass` optionally restricts the first pricing round; once anything
  // pivots, scanning reverts to all arcs.
  void optimize(const std::vector<int>* first_pass = nullptr) {
    int start = 0;
    int64_t guard = 20000 + 50LL * int64_t(K + 2) * int64_t(M + 2);
    if (first_pass) {
      int dir = 0;
      int enter = price(start, dir, first_pass);
      if (enter < 0) return;  // reused tree is already optimal for this problem
      pivot_on(enter, dir);
    }
    for (;;) {
      int dir = 0;
      int enter = price(start, dir, nullptr);
      if (enter < 0) return;
      pivot_on(enter, dir);
      if (pivots > guard) throw NumericalFailure("transport: pivot guard tripped");
    }
  }

  TransportResult extract() const {
    TransportResult res;
    res.flow = Mat(K, M, 0.0);
    for (int x = 0; x < K + M; ++x) {
      int a = parc[x];
      if (a < K * M) res.flow.v[a] = is_free(a) ? flow[x] : std::max(0.0, flow[x]);
    }
    res.duals.beta.resize(K);
    res.duals.alpha.resize(M);
    for (int k = 0; k < K; ++k) res.duals.beta[k] = pi[k];
    for (int m = 0; m < M; ++m) res.duals.alpha[m] = -pi[K + m];
    if (M > 0) {
      // Gauge: anchor the first demand dual at zero so degenerate optima and
      // the artificial-root offset cannot leak into the reported duals.
      double g = res.duals.alpha[0];
      for (double& a : res.duals.alpha) a -= g;
      for (double& b : res.duals.beta) b += g;
    }
    double gamma = 0.0;
    for (int m = 0; m < M; ++m) gamma += pb.demands[m] * res.duals.alpha[m];
    for (int k = 0; k < K; ++k) gamma += pb.supplies[k] * res.duals.beta[k];
    res.duals.gamma = gamma;
    res.pivots = pivots;
    return res;
  }

  void save_basis(TransportBasis& basis) const {
    basis.arcs.clear();
    basis.arcs.reserve(K + M);
    for (int x = 0; x < K + M; ++x) basis.arcs.push_back(parc[x]);
  }
};

TransportResult run_simplex(const TransportProblem& pb, TransportBasis& basis,
                            bool trusted, const std::vector<uint8_t>* free_arcs,
                            const std::vector<int>* free_list) {
  pb.validate();
  int K = int(pb.supplies.size()), M = int(pb.demands.size());
  if (K == 0 || M == 0) {
    // Balance forces all marginals to be ~0; nothing to ship.
    TransportResult res;
    res.flow = Mat(K, M, 0.0);
    res.duals.alpha.assign(M, 0.0);
    res.duals.beta.assign(K, 0.0);
    basis.arcs.clear();
    return res;
  }
  NetSimplex ns(pb, free_arcs);
  bool warm = !basis.empty() && ns.adopt(basis.arcs);
  if (!warm) ns.cold_start();
  try {
    if (warm && trusted) {
      // Costs unchanged since the tree was optimal: only free arcs (absent or
      // bounded back then) can violate, so one restricted pass settles it.
      if (free_list && !free_list->empty()) {
        ns.optimize(free_list);
      }
    } else {
      ns.optimize();
    }
  } catch (const NumericalFailure&) {
    // An adopted tree need not be strongly feasible, so the anti-cycling
    // argument does not cover it; one cold restart does.
    if (!warm) throw;
    warm = false;
    ns.pivots = 0;
    ns.cold_start();
    ns.optimize();
  }
  TransportResult res = ns.extract();
  res.warm_used = warm;
  ns.save_basis(basis);
  return res;
}

}  // namespace

TransportResult solve_transport(const TransportProblem& pb) {
  TransportBasis scratch;
  return run_simplex(pb, scratch, false, nullptr, nullptr);
}

TransportResult solve_transport(const TransportProblem& pb, TransportBasis& basis,
                                bool trusted) {
  return run_simplex(pb, basis, trusted, nullptr, nullptr);
}

void dump_tableau(const TransportProblem& pb, const TransportResult& res,
                  std::ostream& out) {
  int K = int(pb.supplies.size()), M = int(pb.demands.size());
  out << "transport " << K << "x" << M << "  value " << res.duals.gamma << "  pivots "
      << res.pivots << "\n";
  out << std::setprecision(6);
  out << "        ";
  for (int m = 0; m < M; ++m) out << std::setw(11) << "t=" + std::to_string(m);
  out << "\n";
  for (int k = 0; k < K; ++k) {
    out << "s=" << std::setw(3) << k << " | ";
    for (int m = 0; m < M; ++m) {
      out << std::setw(10) << pb.cost(k, m) << (res.flow(k, m) > 1e-9 ? "*" : " ");
    }
    out << "  supply " << pb.supplies[k] << "  beta " << res.duals.beta[k] << "\n";
  }
  out << "demand  ";
  for (int m = 0; m < M; ++m) out << std::setw(11) << pb.demands[m];
  out << "\nalpha   ";
  for (int m = 0; m < M; ++m) out << std::setw(11) << res.duals.alpha[m];
  out << "\n";
}

// ---------------------------------------------------------------------------
// Separation
// ---------------------------------------------------------------------------

TransportBasis* PairCache::find(const std::vector<int>& ksup,
                                const std::vector<int>& msup) {
  auto it = trees_.find({ksup, msup});
  return it == trees_.end() ? nullptr : &it->second;
}

void PairCache::store(const std::vector<int>& ksup, const std::vector<int>& msup,
                      TransportBasis basis) {
  trees_[{ksup, msup}] = std::move(basis);
}

TransportBasis* PairCache::find_core(const std::vector<int>& ksup,
                                     const std::vector<int>& msup) {
  auto it = core_trees_.find({ksup, msup});
  return it == core_trees_.end() ? nullptr : &it->second;
}

void PairCache::store_core(const std::vector<int>& ksup, const std::vector<int>& msup,
                           TransportBasis basis) {
  core_trees_[{ksup, msup}] = std::move(basis);
}

DualPair separate_pair(int i, int j, const Mat& zbar, const Mat& zcore,
                       const Instance& inst, const std::vector<int>& facilities,
                       PairCache* cache, const SeparationOptions& opt) {
  if (i >= j) throw InvalidInstance("separate_pair requires i < j");
  int n = inst.n;
  DualPair out;
  out.alpha.assign(n, 0.0);
  out.beta.assign(n, 0.0);

  bool shortcut =
      opt.factor_shortcut && inst.quad.is_factorized() && inst.quad.symmetric_dist();
  double scale = 1.0;
  if (shortcut) {
    scale = inst.quad.pair_weight(i, j);
    if (scale <= 0.0) return out;  // no interaction, zero duals are maximal-trivial
  }

  // The query and core points generally have different supports; the solve
  // runs on their union so the query-optimal arcs exist in the refinement.
  std::vector<int> ksup, msup;
  for (int k : facilities) {
    if (zcore(i, k) + zbar(i, k) > opt.support_eps) ksup.push_back(k);
  }
  for (int m : facilities) {
    if (zcore(j, m) + zbar(j, m) > opt.support_eps) msup.push_back(m);
  }
  // A massless side would leave the dual completion with an empty minimum;
  // keep the full range there (the solve itself is trivial either way).
  if (ksup.empty()) ksup = facilities;
  if (msup.empty()) msup = facilities;
  int Ks = int(ksup.size()), Ms = int(msup.size());

  Mat cost(Ks, Ms);
  for (int a = 0; a < Ks; ++a) {
    for (int b = 0; b < Ms; ++b) {
      cost(a, b) = shortcut ? inst.quad.dist()(ksup[a], msup[b])
                            : inst.quad(i, ksup[a], j, msup[b]);
    }
  }

  // First solve at the query point: its value is the pair's true interaction
  // cost, and the support of its optimal flow spans the optimal dual face.
  TransportProblem query;
  query.supplies.resize(Ks);
  query.demands.resize(Ms);
  for (int a = 0; a < Ks; ++a) query.supplies[a] = zbar(i, ksup[a]);
  for (int b = 0; b < Ms; ++b) query.demands[b] = zbar(j, msup[b]);
  query.cost = cost;

  TransportBasis qlocal;
  TransportBasis* qtree = &qlocal;
  bool qtrusted = false;
  if (cache) {
    if (TransportBasis* hit = cache->find(ksup, msup)) {
      qtree = hit;
      qtrusted = shortcut;  // identical unscaled costs under this support key
    }
  }
  TransportResult qres = run_simplex(query, *qtree, qtrusted, nullptr, nullptr);
  if (cache && qtree == &qlocal) cache->store(ksup, msup, std::move(qlocal));

  // Refine on the core point with the query-optimal arcs freed: at the new
  // optimum every freed arc prices to zero, which confines the duals to the
  // query-optimal face, and among those duals the core objective is maximal.
  std::vector<uint8_t> freed(size_t(Ks) * Ms, 0);
  std::vector<int> freed_list;
  for (int a = 0; a < Ks; ++a) {
    for (int b = 0; b < Ms; ++b) {
      if (qres.flow(a, b) > 1e-12) {
        freed[size_t(a) * Ms + b] = 1;
        freed_list.push_back(a * Ms + b);
      }
    }
  }
  TransportProblem core;
  core.supplies.resize(Ks);
  core.demands.resize(Ms);
  for (int a = 0; a < Ks; ++a) core.supplies[a] = zcore(i, ksup[a]);
  for (int b = 0; b < Ms; ++b) core.demands[b] = zcore(j, msup[b]);
  core.cost = cost;

  TransportResult cres;
  if (cache) {
    // A plain (no freed arcs) core tree is dual feasible for any marginals
    // under the same cost slice, so it can seed every pair with this support
    // pattern; the pair-specific freed solve must not overwrite it.
    TransportBasis* hit = cache->find_core(ksup, msup);
    if (!hit) {
      TransportBasis plain;
      run_simplex(core, plain, false, nullptr, nullptr);
      cache->store_core(ksup, msup, std::move(plain));
      hit = cache->find_core(ksup, msup);
    }
    TransportBasis work = *hit;
    cres = run_simplex(core, work, shortcut, &freed, &freed_list);
  } else {
    TransportBasis scratch;
    cres = run_simplex(core, scratch, false, &freed, &freed_list);
  }
  for (int b = 0; b < Ms; ++b) out.alpha[msup[b]] = scale * cres.duals.alpha[b];
  for (int a = 0; a < Ks; ++a) out.beta[ksup[a]] = scale * cres.duals.beta[a];

  // Complete the duals over the whole facility set so every master column has
  // a valid (and greedily maximal) coefficient: first the missing supply side
  // against surviving alpha, then the missing demand side against all beta.
  std::vector<uint8_t> in_k(n, 0), in_m(n, 0);
  for (int k : ksup) in_k[k] = 1;
  for (int m : msup) in_m[m] = 1;
  for (int k : facilities) {
    if (in_k[k]) continue;
    double best = kInf;
    for (int m : msup) best = std::min(best, inst.quad(i, k, j, m) - out.alpha[m]);
    out.beta[k] = best;
  }
  for (int m : facilities) {
    if (in_m[m]) continue;
    double best = kInf;
    for (int k : facilities) best = std::min(best, inst.quad(i, k, j, m) - out.beta[k]);
    out.alpha[m] = best;
  }

  // The freed arcs carry the whole query mass and price at cost there, so the
  // dual product below equals the pair's true interaction value at zbar.
  double gamma = 0.0;
  for (int k : facilities) gamma += out.beta[k] * zbar(i, k);
  for (int m : facilities) gamma += out.alpha[m] * zbar(j, m);
  out.gamma = gamma;
  return out;
}

double BendersCut::value_at(const Mat& z) const {
  double v = 0.0;
  for (size_t t = 0; t < coef.v.size(); ++t) v += coef.v[t] * z.v[t];
  return v;
}

std::pair<BendersCut, double> separate_all(const Mat& zbar, const Mat& zcore,
                                           const Instance& inst,
                                           const std::vector<int>& facilities,
                                           PairCache* cache,
                                           const SeparationOptions& opt) {
  int n = inst.n;
  BendersCut cut;
  cut.coef = Mat(n, n, 0.0);
  double total = 0.0;
  bool fact = inst.quad.is_factorized();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      // Nonnegative flows: zero combined weight means a zero cost slice.
      if (fact && inst.quad.pair_weight(i, j) <= 0.0) continue;
      DualPair d = separate_pair(i, j, zbar, zcore, inst, facilities, cache, opt);
      for (int k : facilities) {
        cut.coef(i, k) += d.beta[k];
        cut.coef(j, k) += d.alpha[k];
      }
      total += d.gamma;
    }
  }
  return {cut, total};
}

}  // namespace qploc
