#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "qploc/benders.hpp"
#include "qploc/instance.hpp"
#include "qploc/matheur.hpp"
#include "qploc/oracle.hpp"
#include "qploc/reduce.hpp"
#include "qploc/rlt.hpp"
#include "util.hpp"

using namespace qploc;

namespace {

constexpr Variant kVariants[] = {Variant::UncapFree, Variant::UncapP,
                                 Variant::CapFree, Variant::CapP};

Instance zero_quad(Instance inst) {
  inst.quad = QuadCost::dense(inst.n);
  return inst;
}

Mat z_of(const std::vector<int>& assign, int n) {
  Mat z(n, n);
  for (int i = 0; i < n; ++i) z(i, assign[i]) = 1.0;
  return z;
}

// Visits every feasible assignment vector of a small instance.
template <typename F>
void for_each_feasible(const Instance& inst, F&& fn) {
  std::vector<int> assign(size_t(inst.n), 0);
  while (true) {
    bool ok = true;
    try {
      check_assignment(inst, assign);
    } catch (const InfeasibleSolution&) {
      ok = false;
    }
    if (ok) fn(assign);
    int pos = inst.n - 1;
    while (pos >= 0 && assign[size_t(pos)] == inst.n - 1) {
      assign[size_t(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++assign[size_t(pos)];
  }
}

double row_sum(const Mat& m, int i) {
  double s = 0.0;
  for (int k = 0; k < m.cols; ++k) s += m(i, k);
  return s;
}

}  // namespace

TEST_SUITE("benders") {

TEST_CASE("core point matches the documented closed form") {
  CorePoint cp = make_core_point(4, {0, 1, 2, 3}, 2, 0.1);
  CHECK(cp.eps == doctest::Approx(0.1));
  double diag_sum = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int k = 0; k < 4; ++k) {
      CHECK(cp.z0(i, k) == doctest::Approx(i == k ? 0.4 : 0.2));
    }
    CHECK(row_sum(cp.z0, i) == doctest::Approx(1.0));
    diag_sum += cp.z0(i, i);
  }
  CHECK(diag_sum == doctest::Approx(1.6));
  CHECK(diag_sum < 2.0);
}

TEST_CASE("core point identities hold across candidate sets and p") {
  const int n = 7;
  const std::vector<std::vector<int>> sets = {
      {0, 1, 2, 3, 4, 5, 6}, {1, 3}, {0, 2, 5}, {2, 3, 4, 6}};
  for (const auto& H : sets) {
    for (int p : {1, 2, 3, 7}) {
      CAPTURE(H.size());
      CAPTURE(p);
      CorePoint cp = make_core_point(n, H, p);
      const int h = int(H.size());
      const int pe = std::min(p, h);
      std::vector<char> in_h(n, 0);
      for (int k : H) in_h[size_t(k)] = 1;
      double diag_sum = 0.0;
      for (int i = 0; i < n; ++i) {
        CHECK(row_sum(cp.z0, i) == doctest::Approx(1.0).epsilon(1e-12));
        for (int k = 0; k < n; ++k) {
          if (!in_h[size_t(k)]) {
            CHECK(cp.z0(i, k) == 0.0);
          } else {
            CHECK(cp.z0(i, k) > 0.0);
            CHECK(cp.z0(i, k) < 1.0);
          }
        }
        if (in_h[size_t(i)]) diag_sum += cp.z0(i, i);
      }
      CHECK(diag_sum == doctest::Approx(pe - h * cp.eps).epsilon(1e-12));
      CHECK(diag_sum < double(p));
    }
  }
  CHECK_THROWS_AS(make_core_point(7, {}, 2), InvalidCardinality);
  CHECK_THROWS_AS(make_core_point(7, {3}, 2), InvalidCardinality);
  CHECK_THROWS_AS(make_core_point(7, {0, 1}, 0), InvalidCardinality);
  CHECK_THROWS_AS(make_core_point(7, {0, 9}, 2), IndexOutOfRange);
  CHECK_THROWS_AS(make_core_point(4, {0, 1, 2, 3}, 2, 0.9), InvalidInstance);
  CHECK_THROWS_AS(make_core_point(4, {0, 1, 2, 3}, 2, 0.0), InvalidInstance);
}

TEST_CASE("core point sits strictly inside the location rows for p >= 2") {
  const int n = 6;
  const std::vector<std::vector<int>> sets = {{0, 1, 2, 3, 4, 5}, {1, 4}, {0, 2, 3}};
  for (const auto& H : sets) {
    for (int p : {2, 3}) {
      CorePoint cp = make_core_point(n, H, p);
      double diag_total = 0.0;
      for (int k : H) diag_total += cp.z0(k, k);
      CHECK(diag_total < double(p) - 1e-12);
      for (int k : H) {
        for (int i = 0; i < n; ++i) {
          if (i == k) continue;
          CHECK(cp.z0(i, k) < cp.z0(k, k) - 1e-12);
        }
      }
    }
  }
}

TEST_CASE("separation point update mixes convexly") {
  Mat z = testutil::random_marginals(3, 5);
  CHECK(update_separation_point(z, z, 0.5).v == z.v);

  Mat a(2, 2), b(2, 2);
  a(0, 0) = 1.0;
  a(0, 1) = 0.0;
  a(1, 0) = 0.25;
  a(1, 1) = 0.75;
  b(0, 0) = 0.0;
  b(0, 1) = 1.0;
  b(1, 0) = 0.75;
  b(1, 1) = 0.25;
  Mat mixed = update_separation_point(a, b, 0.5);
  CHECK(mixed(0, 0) == doctest::Approx(0.5));
  CHECK(mixed(0, 1) == doctest::Approx(0.5));
  CHECK(mixed(1, 0) == doctest::Approx(0.5));

  Mat zb = testutil::random_marginals(11, 5);
  Mat out = update_separation_point(z, zb, 0.3);
  for (int i = 0; i < 5; ++i)
    CHECK(row_sum(out, i) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(update_separation_point(z, zb, 0.0), InvalidInstance);
  CHECK_THROWS_AS(update_separation_point(z, zb, 1.0), InvalidInstance);
  Mat wrong(4, 4);
  CHECK_THROWS_AS(update_separation_point(z, wrong, 0.5), DimensionMismatch);
}

TEST_CASE("interaction-free instances converge immediately") {
  for (Variant v : kVariants) {
    for (uint64_t seed : {1, 2}) {
      CAPTURE(variant_name(v));
      CAPTURE(seed);
      Instance inst = zero_quad(random_dense_instance(6, seed, v, 2));
      BendersParams params;
      params.use_matheur = false;
      MasterState st = root_loop(inst, params);
      CHECK(st.exit_reason() == RootExit::Converged);
      CHECK(st.pool().empty());
      CHECK(st.eta_value() <= 1e-9);
      int max_iter = 0;
      for (const auto& r : st.log()) max_iter = std::max(max_iter, r.iter);
      CHECK(max_iter <= 2);
      double rl2 = lp_bound(inst, RltConfig::make(RltLevel::RL2));
      CHECK(st.lower_bound() == doctest::Approx(rl2).epsilon(1e-7));
    }
  }
}

TEST_CASE("fully converged root matches the marginal relaxation bound") {
  BendersParams params;
  params.eps_cut = 1e-6;
  params.kappa = 0.0;
  params.max_root_iters = 5000;
  params.use_reduction = false;
  params.use_matheur = false;
  for (Variant v : kVariants) {
    CAPTURE(variant_name(v));
    Instance inst = random_dense_instance(6, 3, v, 2);
    MasterState st = root_loop(inst, params);
    REQUIRE(st.exit_reason() == RootExit::Converged);
    double rl2 = lp_bound(inst, RltConfig::make(RltLevel::RL2));
    CHECK(std::abs(st.lower_bound() - rl2) <=
          1e-6 * std::max(1.0, std::abs(rl2)));
    OracleResult oracle = enumerate_optimal(inst);
    CHECK(st.lower_bound() <= oracle.value + 1e-6 * std::abs(oracle.value));
    CHECK(st.upper_bound() >= oracle.value - 1e-9);
    CHECK(st.lower_bound() <= st.upper_bound() + 1e-6);
  }
}

TEST_CASE("lower bound climbs and every cut is violated at insertion") {
  Instance inst = random_dense_instance(6, 7, Variant::CapP, 2);
  BendersParams params;
  params.eps_cut = 1e-4;
  params.kappa = 1e-3;
  params.max_root_iters = 300;
  MasterState st = root_loop(inst, params);
  REQUIRE(!st.log().empty());
  double prev = -kInf;
  for (const auto& r : st.log()) {
    CHECK(r.lb >= prev - 1e-9);
    prev = r.lb;
  }
  CHECK(!st.pool().empty());
  for (const auto& e : st.pool()) CHECK(e.violation > params.eps_cut);
  REQUIRE(st.has_incumbent());
  CostBreakdown rebuilt = evaluate(inst, st.incumbent().assign);
  CHECK(rebuilt.total == doctest::Approx(st.incumbent().cost.total));
  OracleResult oracle = enumerate_optimal(inst);
  CHECK(st.upper_bound() >= oracle.value - 1e-9);
  CHECK(st.lower_bound() <= oracle.value + 1e-6 * std::abs(oracle.value));

  std::ostringstream log_text;
  st.write_log(log_text);
  CHECK(log_text.str().rfind("iter,lb,ub,cuts,eliminated,fixed,time\n", 0) == 0);
}

TEST_CASE("pool cuts are valid for every feasible assignment") {
  BendersParams params;
  params.eps_cut = 1e-6;
  params.kappa = 0.0;
  params.max_root_iters = 5000;
  params.use_reduction = false;
  params.use_matheur = false;
  for (Variant v : {Variant::UncapP, Variant::CapP}) {
    CAPTURE(variant_name(v));
    Instance inst = random_dense_instance(5, 11, v, 2);
    MasterState st = root_loop(inst, params);
    REQUIRE(!st.pool().empty());
    int feasible = 0;
    for_each_feasible(inst, [&](const std::vector<int>& assign) {
      ++feasible;
      double quad = evaluate(inst, assign).quadratic;
      Mat z = z_of(assign, inst.n);
      for (const auto& e : st.pool()) {
        CHECK(e.cut.value_at(z) <= quad + 1e-6 * std::max(1.0, quad));
      }
    });
    CHECK(feasible > 0);
  }
}

TEST_CASE("lazy linking row generation reaches the upfront optimum") {
  Instance inst = random_dense_instance(6, 4, Variant::CapFree, 2);
  BendersParams lazy;
  lazy.eps_cut = 1e-6;
  lazy.kappa = 0.0;
  lazy.max_root_iters = 5000;
  lazy.use_reduction = false;
  lazy.use_matheur = false;
  lazy.lazy_linking_above = 0;
  BendersParams upfront = lazy;
  upfront.lazy_linking_above = 100;
  MasterState a = root_loop(inst, lazy);
  MasterState b = root_loop(inst, upfront);
  REQUIRE(a.exit_reason() == RootExit::Converged);
  REQUIRE(b.exit_reason() == RootExit::Converged);
  CHECK(std::abs(a.lower_bound() - b.lower_bound()) <=
        1e-7 * std::max(1.0, std::abs(b.lower_bound())));
  CHECK(a.lp().num_rows() <= b.lp().num_rows());
}

TEST_CASE("eliminations zero the separation point columns") {
  Instance inst = random_dense_instance(5, 9, Variant::UncapFree, 5);
  inst.setup[4] = 1e8;
  BendersParams params;
  MasterState st(inst, params);
  REQUIRE(st.solve() == LpStatus::Optimal);
  st.offer_incumbent(greedy_solution(inst, {0, 1, 2, 3}));
  std::vector<int> removed = eliminate_facilities(st);
  REQUIRE(std::find(removed.begin(), removed.end(), 4) != removed.end());
  CHECK(st.eliminated(4));
  CHECK(std::find(st.candidates().begin(), st.candidates().end(), 4) ==
        st.candidates().end());
  st.reset_separation_point();
  const Mat& zhat = st.separation_point();
  for (int i = 0; i < inst.n; ++i) {
    CHECK(zhat(i, 4) == 0.0);
    CHECK(row_sum(zhat, i) == doctest::Approx(1.0).epsilon(1e-12));
  }

  MasterState from_root = root_loop(inst, params);
  CHECK((from_root.eliminated(4) ||
         from_root.exit_reason() == RootExit::GapClosed));
}

TEST_CASE("time limit returns a flagged state") {
  Instance inst = random_dense_instance(6, 13, Variant::UncapP, 2);
  BendersParams params;
  params.time_limit = 0.0;
  MasterState st = root_loop(inst, params);
  CHECK(st.time_limit_hit());
  CHECK(st.exit_reason() == RootExit::TimeLimit);
  CHECK(st.lower_bound() > -kInf);
  CHECK(!st.log().empty());
}

TEST_CASE("slack cuts are archived after a sustained streak") {
  Instance inst = zero_quad(random_dense_instance(4, 2, Variant::UncapFree, 4));
  BendersParams params;
  params.eps_cut = 1e-3;
  MasterState st(inst, params);
  REQUIRE(st.solve() == LpStatus::Optimal);
  double value = st.lp_value();
  BendersCut loose;
  loose.coef = Mat(4, 4, -1.0);
  st.add_cut(loose);
  for (int t = 0; t < 25 && !st.pool()[0].archived; ++t) {
    REQUIRE(st.solve() == LpStatus::Optimal);
  }
  CHECK(st.pool()[0].archived);
  CHECK(st.active_cuts() == 0);
  CHECK(st.lp().row_rhs(st.pool()[0].row) < -1e8);
  CHECK(st.lp_value() == doctest::Approx(value).epsilon(1e-9));
}

TEST_CASE("a full pool archives before growing") {
  Instance inst = zero_quad(random_dense_instance(4, 5, Variant::UncapFree, 4));
  BendersParams params;
  params.pool_cap = 2;
  MasterState st(inst, params);
  REQUIRE(st.solve() == LpStatus::Optimal);
  for (double level : {-1.0, -2.0, -3.0}) {
    BendersCut cut;
    cut.coef = Mat(4, 4, level);
    st.add_cut(cut);
    REQUIRE(st.solve() == LpStatus::Optimal);
  }
  CHECK(st.pool().size() == 3);
  CHECK(st.active_cuts() <= 2);
}

TEST_CASE("master state bookkeeping stays consistent") {
  Instance inst = random_dense_instance(5, 6, Variant::UncapP, 2);
  MasterState st(inst, {});
  REQUIRE(st.solve() == LpStatus::Optimal);
  CHECK(st.eta_value() == doctest::Approx(0.0));
  for (int i = 0; i < inst.n; ++i)
    CHECK(row_sum(st.zbar(), i) == doctest::Approx(1.0).epsilon(1e-9));
  for (int k : st.support())
    CHECK(st.zbar()(k, k) > 1e-9);

  st.fix_open(2);
  CHECK(st.fixed_open(2));
  CHECK(st.num_fixed_open() == 1);
  CHECK_THROWS_AS(st.eliminate(2), InvalidInstance);

  st.eliminate(3);
  CHECK(st.eliminated(3));
  CHECK(st.candidates().size() == 4);
  CHECK_THROWS_AS(st.fix_open(3), InvalidInstance);
  REQUIRE(st.solve() == LpStatus::Optimal);
  for (int i = 0; i < inst.n; ++i) CHECK(st.zbar()(i, 3) == 0.0);

  st.eliminate(0);
  st.eliminate(1);
  st.eliminate(4);
  CHECK(st.candidates() == std::vector<int>{2});
  CHECK_THROWS_AS(st.eliminate(2), InvalidInstance);
  REQUIRE(st.solve() == LpStatus::Optimal);
  CHECK(st.num_eliminated() == 4);
}

}  // TEST_SUITE
