#include <doctest.h>

#include <cmath>
#include <vector>

#include "qploc/bnc.hpp"
#include "qploc/lp.hpp"

using namespace qploc;

namespace {

struct Knapsack {
  std::vector<double> value, weight;
  double cap = 0.0;
};

Knapsack random_knapsack(uint64_t seed, int n) {
  Rng rng(seed);
  Knapsack k;
  k.value.resize(n);
  k.weight.resize(n);
  double wsum = 0.0;
  for (int j = 0; j < n; ++j) {
    k.value[j] = rng.uniform(1.0, 10.0);
    k.weight[j] = rng.uniform(1.0, 6.0);
    wsum += k.weight[j];
  }
  k.cap = 0.4 * wsum;
  return k;
}

// Maximizing value = minimizing its negation.
Lp knapsack_lp(const Knapsack& k) {
  int n = int(k.value.size());
  Lp lp;
  std::vector<int> idx(n);
  for (int j = 0; j < n; ++j) idx[j] = lp.add_col(-k.value[j], 0.0, 1.0);
  lp.add_row(RowSense::LE, k.cap, idx, k.weight);
  return lp;
}

double knapsack_enum(const Knapsack& k) {
  int n = int(k.value.size());
  double best = 0.0;
  for (int mask = 0; mask < (1 << n); ++mask) {
    double w = 0.0, v = 0.0;
    for (int j = 0; j < n; ++j) {
      if (mask >> j & 1) {
        w += k.weight[j];
        v += k.value[j];
      }
    }
    if (w <= k.cap && -v < best) best = -v;
  }
  return best;
}

// Openings y (binary, cost f) feed capacity to continuous flows t (profit r)
// that must jointly cover a demand floor.
Lp coverage_lp(uint64_t seed, int ny, int nt, std::vector<char>& integer) {
  Rng rng(seed);
  Lp lp;
  std::vector<int> ycol(ny), tcol(nt);
  for (int j = 0; j < ny; ++j) ycol[j] = lp.add_col(rng.uniform(2.0, 9.0), 0.0, 1.0);
  for (int m = 0; m < nt; ++m) tcol[m] = lp.add_col(-rng.uniform(0.5, 2.0), 0.0, 4.0);
  double capsum = 0.0;
  for (int m = 0; m < nt; ++m) {
    std::vector<int> idx{tcol[m]};
    std::vector<double> val{1.0};
    for (int j = 0; j < ny; ++j) {
      double a = rng.uniform(0.5, 3.0);
      idx.push_back(ycol[j]);
      val.push_back(-a);
      capsum += a;
    }
    lp.add_row(RowSense::LE, 0.0, idx, val);
  }
  std::vector<double> ones(nt, 1.0);
  lp.add_row(RowSense::GE, 0.15 * capsum, tcol, ones);
  integer.assign(lp.num_cols(), 0);
  for (int j = 0; j < ny; ++j) integer[ycol[j]] = 1;
  return lp;
}

}  // namespace

TEST_SUITE("milp") {

TEST_CASE("no integer columns reduces to the lp optimum") {
  Lp lp;
  int a = lp.add_col(-1.0, 0.0, 1.0);
  int b = lp.add_col(-2.0, 0.0, 1.0);
  lp.add_row(RowSense::LE, 1.5, {a, b}, {1.0, 1.0});
  MilpResult r = solve_milp(lp, {0, 0});
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.proven);
  CHECK(r.nodes == 1);
  CHECK(r.obj == doctest::Approx(-2.5).epsilon(1e-9));
  CHECK(r.bound == doctest::Approx(-2.5).epsilon(1e-9));
}

TEST_CASE("binary knapsacks match exhaustive enumeration") {
  for (uint64_t seed = 1; seed <= 12; ++seed) {
    CAPTURE(seed);
    Knapsack k = random_knapsack(seed, 10);
    Lp lp = knapsack_lp(k);
    MilpResult r = solve_milp(lp, std::vector<char>(10, 1));
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.proven);
    double best = knapsack_enum(k);
    CHECK(r.obj == doctest::Approx(best).epsilon(1e-9));

    REQUIRE(r.has_incumbent());
    double w = 0.0, v = 0.0;
    for (int j = 0; j < 10; ++j) {
      double xj = r.x[j];
      CHECK(std::abs(xj - std::round(xj)) <= 1e-6);
      w += k.weight[j] * std::round(xj);
      v += k.value[j] * std::round(xj);
    }
    CHECK(w <= k.cap + 1e-6);
    CHECK(-v == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("mixed binary and continuous model matches fix-and-solve enumeration") {
  for (uint64_t seed = 3; seed <= 7; ++seed) {
    CAPTURE(seed);
    std::vector<char> integer;
    Lp lp = coverage_lp(seed, 6, 3, integer);
    MilpResult r = solve_milp(lp, integer);

    std::vector<char> dummy;
    Lp oracle = coverage_lp(seed, 6, 3, dummy);
    double best = kInf;
    for (int mask = 0; mask < (1 << 6); ++mask) {
      for (int j = 0; j < 6; ++j) oracle.fix(j, mask >> j & 1 ? 1.0 : 0.0);
      if (oracle.solve() == LpStatus::Optimal) best = std::min(best, oracle.obj_value());
      for (int j = 0; j < 6; ++j) oracle.unfix(j);
    }

    if (best == kInf) {
      CHECK(r.status == LpStatus::Infeasible);
    } else {
      REQUIRE(r.status == LpStatus::Optimal);
      CHECK(r.obj == doctest::Approx(best).epsilon(1e-7));
    }
  }
}

TEST_CASE("infeasible binary model is proven infeasible") {
  Lp lp;
  int a = lp.add_col(1.0, 0.0, 1.0);
  int b = lp.add_col(1.0, 0.0, 1.0);
  lp.add_row(RowSense::GE, 3.0, {a, b}, {1.0, 1.0});
  MilpResult r = solve_milp(lp, {1, 1});
  CHECK(r.status == LpStatus::Infeasible);
  CHECK(r.proven);
  CHECK(!r.has_incumbent());
}

TEST_CASE("node limit yields a limit status and a valid global bound") {
  Knapsack k = random_knapsack(17, 10);
  Lp lp = knapsack_lp(k);
  MilpOptions opt;
  opt.node_limit = 1;
  MilpResult r = solve_milp(lp, std::vector<char>(10, 1), opt);
  double best = knapsack_enum(k);
  CHECK(r.status == LpStatus::IterLimit);
  CHECK(!r.proven);
  CHECK(r.nodes <= 1);
  CHECK(r.bound <= best + 1e-9);
  if (r.has_incumbent()) CHECK(r.obj >= best - 1e-9);
}

TEST_CASE("caller bounds are restored after the search") {
  Knapsack k = random_knapsack(5, 10);
  Lp lp = knapsack_lp(k);
  REQUIRE(lp.solve() == LpStatus::Optimal);
  double relax = lp.obj_value();

  MilpResult r = solve_milp(lp, std::vector<char>(10, 1));
  REQUIRE(r.status == LpStatus::Optimal);
  for (int j = 0; j < 10; ++j) {
    CHECK(lp.lower(j) == 0.0);
    CHECK(lp.upper(j) == 1.0);
  }
  REQUIRE(lp.solve() == LpStatus::Optimal);
  CHECK(lp.obj_value() == doctest::Approx(relax).epsilon(1e-9));
  CHECK(relax <= r.obj + 1e-9);
}

TEST_CASE("integral relaxation is accepted at the root") {
  Rng rng(23);
  int n = 3;
  std::vector<double> cost(n * n);
  for (double& c : cost) c = rng.uniform(1.0, 9.0);

  Lp lp;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) lp.add_col(cost[i * n + j], 0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    std::vector<int> idx(n);
    std::vector<double> val(n, 1.0);
    for (int j = 0; j < n; ++j) idx[j] = i * n + j;
    lp.add_row(RowSense::EQ, 1.0, idx, val);
  }
  for (int j = 0; j < n; ++j) {
    std::vector<int> idx(n);
    std::vector<double> val(n, 1.0);
    for (int i = 0; i < n; ++i) idx[i] = i * n + j;
    lp.add_row(RowSense::EQ, 1.0, idx, val);
  }

  MilpResult r = solve_milp(lp, std::vector<char>(n * n, 1));
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.nodes == 1);

  // All six assignments by hand.
  double best = kInf;
  int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  for (auto& pm : perms) {
    double v = 0.0;
    for (int i = 0; i < n; ++i) v += cost[i * n + pm[i]];
    best = std::min(best, v);
  }
  CHECK(r.obj == doctest::Approx(best).epsilon(1e-9));
}

TEST_CASE("search is deterministic across repeated runs") {
  Knapsack k = random_knapsack(9, 10);
  Lp a = knapsack_lp(k), b = knapsack_lp(k);
  MilpResult ra = solve_milp(a, std::vector<char>(10, 1));
  MilpResult rb = solve_milp(b, std::vector<char>(10, 1));
  CHECK(ra.obj == rb.obj);
  CHECK(ra.nodes == rb.nodes);
  CHECK(ra.x == rb.x);
}

}  // TEST_SUITE
