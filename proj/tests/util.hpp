#pragma once

#include <utility>
#include <vector>

#include "qploc/common.hpp"
#include "qploc/instance.hpp"
#include "qploc/lp.hpp"
#include "qploc/transport.hpp"

namespace qploc::testutil {

// Any-variant feasible assignment sampler: random open set of size <= p with
// aggregate capacity, customers packed greedily. Returns empty on failure.
inline std::vector<int> sample_assignment(const Instance& inst, Rng& rng) {
  int n = inst.n;
  for (int tries = 0; tries < 50; ++tries) {
    int h = rng.uniform_int(1, inst.p);
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(0, i)]);
    std::vector<int> open(perm.begin(), perm.begin() + h);
    std::vector<int> assign(n, -1);
    std::vector<double> load(n, 0.0);
    for (int k : open) {
      assign[k] = k;
      load[k] = inst.demand[k];
    }
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      if (assign[i] >= 0) continue;
      int pick = -1;
      for (int k : open) {
        if (!inst.capacitated() || load[k] + inst.demand[i] <= inst.capacity[k]) {
          pick = k;
          break;
        }
      }
      if (pick < 0) {
        ok = false;
      } else {
        assign[i] = pick;
        load[pick] += inst.demand[i];
      }
    }
    if (ok) return assign;
  }
  return {};
}

// The same transportation problem as an explicit LP, for oracle comparisons.
inline Lp lp_of_transport(const TransportProblem& pb) {
  int K = int(pb.supplies.size()), M = int(pb.demands.size());
  Lp lp;
  for (int k = 0; k < K; ++k) {
    for (int m = 0; m < M; ++m) lp.add_col(pb.cost(k, m), 0.0, kInf);
  }
  for (int k = 0; k < K; ++k) {
    std::vector<int> idx(M);
    std::vector<double> val(M, 1.0);
    for (int m = 0; m < M; ++m) idx[m] = k * M + m;
    lp.add_row(RowSense::EQ, pb.supplies[k], idx, val);
  }
  for (int m = 0; m < M; ++m) {
    std::vector<int> idx(K);
    std::vector<double> val(K, 1.0);
    for (int k = 0; k < K; ++k) idx[k] = k * M + m;
    lp.add_row(RowSense::EQ, pb.demands[m], idx, val);
  }
  return lp;
}

inline TransportProblem random_transport(uint64_t seed, int K, int M,
                                         double cost_hi = 20.0) {
  Rng rng(seed);
  TransportProblem pb;
  pb.supplies.resize(K);
  pb.demands.resize(M);
  double ssum = 0.0, tsum = 0.0;
  for (int k = 0; k < K; ++k) {
    pb.supplies[k] = rng.uniform(0.1, 5.0);
    ssum += pb.supplies[k];
  }
  for (int m = 0; m < M; ++m) {
    pb.demands[m] = rng.uniform(0.1, 5.0);
    tsum += pb.demands[m];
  }
  for (int m = 0; m < M; ++m) pb.demands[m] *= ssum / tsum;
  pb.cost = Mat(K, M);
  for (double& c : pb.cost.v) c = rng.uniform(0.0, cost_hi);
  return pb;
}

// A strictly positive random point on the probability simplex.
inline std::vector<double> random_simplex_row(Rng& rng, int n) {
  std::vector<double> row(n);
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    row[k] = 0.01 + rng.uniform(0.0, 1.0);
    sum += row[k];
  }
  for (double& v : row) v /= sum;
  return row;
}

inline Mat random_marginals(uint64_t seed, int n) {
  Rng rng(seed);
  Mat z(n, n);
  for (int i = 0; i < n; ++i) {
    auto row = random_simplex_row(rng, n);
    for (int k = 0; k < n; ++k) z(i, k) = row[k];
  }
  return z;
}

inline std::vector<int> all_facilities(int n) {
  std::vector<int> f(n);
  for (int k = 0; k < n; ++k) f[k] = k;
  return f;
}

}  // namespace qploc::testutil
