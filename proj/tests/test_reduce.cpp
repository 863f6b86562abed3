#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "qploc/benders.hpp"
#include "qploc/instance.hpp"
#include "qploc/oracle.hpp"
#include "qploc/reduce.hpp"

using namespace qploc;

namespace {

// Five customers, facility 0 free and dominant: column 0 costs nothing while
// every other column costs 1 per unit plus a setup of 5.
Instance dominant_column_instance() {
  Instance inst;
  inst.n = 5;
  inst.p = 5;
  inst.variant = Variant::UncapFree;
  inst.name = "dominant-column";
  inst.setup = {0.0, 5.0, 5.0, 5.0, 5.0};
  inst.capacity.assign(5, 1e9);
  inst.demand.assign(5, 1.0);
  inst.assign_cost = Mat(5, 5, 1.0);
  for (int i = 0; i < 5; ++i) inst.assign_cost(i, 0) = 0.0;
  inst.quad = QuadCost::dense(5);
  inst.validate();
  return inst;
}

bool contains(const std::vector<int>& xs, int k) {
  return std::find(xs.begin(), xs.end(), k) != xs.end();
}

}  // namespace

TEST_SUITE("reduce") {

TEST_CASE("no incumbent blocks reduced cost elimination") {
  Instance inst = dominant_column_instance();
  MasterState st(inst, {});
  REQUIRE(st.solve() == LpStatus::Optimal);
  CHECK(eliminate_facilities(st).empty());
  CHECK(st.num_eliminated() == 0);
}

TEST_CASE("matching bounds reduce to positive reduced costs") {
  Instance inst = dominant_column_instance();
  BendersParams params;
  params.lazy_linking_above = 0;
  MasterState st(inst, params);
  REQUIRE(st.solve() == LpStatus::Optimal);
  CHECK(st.lp_value() == doctest::Approx(0.0));
  st.offer_incumbent(make_solution(inst, {0, 0, 0, 0, 0}));
  CHECK(st.upper_bound() == doctest::Approx(0.0));

  std::vector<int> removed = eliminate_facilities(st);
  std::sort(removed.begin(), removed.end());
  CHECK(removed == std::vector<int>{1, 2, 3, 4});
  CHECK(st.candidates() == std::vector<int>{0});
  CHECK(st.num_eliminated() == 4);
  CHECK(st.lp_value() == doctest::Approx(0.0));
}

TEST_CASE("zero reduced costs remove nothing") {
  Instance inst = dominant_column_instance();
  inst.setup.assign(5, 0.0);
  inst.assign_cost = Mat(5, 5, 0.0);
  BendersParams params;
  params.lazy_linking_above = 0;
  MasterState st(inst, params);
  REQUIRE(st.solve() == LpStatus::Optimal);
  st.offer_incumbent(make_solution(inst, {0, 0, 0, 0, 0}));
  CHECK(eliminate_facilities(st).empty());
  CHECK(st.num_eliminated() == 0);
}

TEST_CASE("fixed open facilities are exempt from elimination") {
  Instance inst = dominant_column_instance();
  BendersParams params;
  params.lazy_linking_above = 0;
  MasterState st(inst, params);
  st.fix_open(1);
  REQUIRE(st.solve() == LpStatus::Optimal);
  st.offer_incumbent(make_solution(inst, {1, 1, 1, 1, 1}));

  std::vector<int> removed = eliminate_facilities(st);
  std::sort(removed.begin(), removed.end());
  CHECK(removed == std::vector<int>{2, 3, 4});
  CHECK(!st.eliminated(1));
  CHECK(contains(st.candidates(), 0));
  CHECK(contains(st.candidates(), 1));
}

TEST_CASE("an infeasible open probe eliminates the facility") {
  // One open facility serves everyone under p = 1; facility 3 has unit slack,
  // so pinning it open strands the other thirty units of demand.
  Instance inst;
  inst.n = 4;
  inst.p = 1;
  inst.variant = Variant::CapP;
  inst.name = "tight-tail";
  inst.setup.assign(4, 0.0);
  inst.capacity = {100.0, 100.0, 100.0, 11.0};
  inst.demand.assign(4, 10.0);
  inst.assign_cost = Mat(4, 4, 1.0);
  for (int k = 0; k < 3; ++k) inst.assign_cost(k, k) = 0.0;
  for (int i = 0; i < 4; ++i) inst.assign_cost(i, 3) = 50.0;
  inst.quad = QuadCost::dense(4);
  inst.validate();

  MasterState st(inst, {});
  REQUIRE(st.solve() == LpStatus::Optimal);
  REQUIRE(st.zbar()(3, 3) <= 0.2);

  std::vector<int> removed = partial_enumeration(st, PeMode::FixAtZero);
  CHECK(removed == std::vector<int>{3});
  CHECK(st.eliminated(3));
  CHECK(st.candidates().size() == 3);
  CHECK(st.lp_value() == doctest::Approx(3.0));
}

TEST_CASE("an infeasible closed probe pins the facility open") {
  // Only facility 0 can absorb the full demand under p = 1, so probing it
  // closed leaves every customer stranded.
  Instance inst;
  inst.n = 4;
  inst.p = 1;
  inst.variant = Variant::CapP;
  inst.name = "mandatory-hub";
  inst.setup.assign(4, 0.0);
  inst.capacity = {1000.0, 11.0, 11.0, 11.0};
  inst.demand.assign(4, 10.0);
  inst.assign_cost = Mat(4, 4, 1.0);
  for (int i = 0; i < 4; ++i) inst.assign_cost(i, 0) = 0.0;
  inst.quad = QuadCost::dense(4);
  inst.validate();

  MasterState st(inst, {});
  REQUIRE(st.solve() == LpStatus::Optimal);
  REQUIRE(st.zbar()(0, 0) >= 0.8);

  std::vector<int> fixed = partial_enumeration(st, PeMode::FixAtOne);
  CHECK(fixed == std::vector<int>{0});
  CHECK(st.fixed_open(0));
  CHECK(st.lp_value() == doctest::Approx(0.0));
}

TEST_CASE("probes leave the relaxation untouched when nothing fixes") {
  Instance inst = random_dense_instance(6, 5, Variant::UncapP, 2);
  MasterState st(inst, {});
  REQUIRE(st.solve() == LpStatus::Optimal);
  double before = st.lp_value();
  CHECK(partial_enumeration(st, PeMode::FixAtZero).empty());
  CHECK(partial_enumeration(st, PeMode::FixAtOne).empty());
  CHECK(st.num_eliminated() == 0);
  CHECK(st.num_fixed_open() == 0);
  CHECK(st.lp_value() == doctest::Approx(before).epsilon(1e-9));
}

TEST_CASE("reductions keep an oracle optimum reachable") {
  constexpr Variant kVariants[] = {Variant::UncapFree, Variant::UncapP,
                                   Variant::CapFree, Variant::CapP};
  BendersParams params;
  params.eps_cut = 1e-4;
  params.kappa = 0.05;
  params.max_root_iters = 200;
  for (Variant v : kVariants) {
    for (uint64_t seed : {1, 2, 3}) {
      CAPTURE(variant_name(v));
      CAPTURE(seed);
      Instance inst = random_dense_instance(6, seed, v, 2);
      MasterState st = root_loop(inst, params);
      OracleResult oracle = enumerate_optimal(inst);
      CHECK(st.upper_bound() >= oracle.value - 1e-9);
      CHECK(st.lower_bound() <=
            oracle.value + 1e-6 * std::max(1.0, std::abs(oracle.value)));
      bool reachable = false;
      for (const auto& assign : oracle.optima) {
        bool ok = true;
        for (int k = 0; k < inst.n; ++k) {
          if (st.eliminated(k) && assign[size_t(k)] == k) ok = false;
          if (st.fixed_open(k) && assign[size_t(k)] != k) ok = false;
        }
        if (ok) {
          reachable = true;
          break;
        }
      }
      CHECK(reachable);
    }
  }
}

}  // TEST_SUITE
