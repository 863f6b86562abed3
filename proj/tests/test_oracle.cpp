#include <doctest.h>

#include "qploc/instance.hpp"
#include "qploc/oracle.hpp"

using namespace qploc;

TEST_CASE("single node enumeration") {
  Instance inst;
  inst.n = 1;
  inst.p = 1;
  inst.variant = Variant::CapP;
  inst.setup = {3.5};
  inst.capacity = {2.0};
  inst.demand = {1.0};
  inst.assign_cost = Mat(1, 1, 0.0);
  inst.quad = QuadCost::dense(1);
  auto res = enumerate_optimal(inst);
  CHECK(res.value == doctest::Approx(3.5));
  REQUIRE(res.optima.size() == 1);
  CHECK(res.optima[0] == std::vector<int>{0});
}

TEST_CASE("p equals one reduces to a single-median scan") {
  Instance inst = random_dense_instance(7, 31, Variant::UncapP, 1);
  auto res = enumerate_optimal(inst);
  double best = kInf;
  std::vector<int> arg;
  for (int k = 0; k < inst.n; ++k) {
    std::vector<int> assign(inst.n, k);
    double v = naive_cost(inst, assign);
    if (v < best - 1e-12) {
      best = v;
      arg = assign;
    }
  }
  CHECK(res.value == doctest::Approx(best).epsilon(1e-12));
  REQUIRE(!res.optima.empty());
  CHECK(res.optima[0] == arg);
}

TEST_CASE("enumeration agrees with naive evaluation of its optima") {
  for (auto variant : {Variant::UncapFree, Variant::UncapP, Variant::CapFree, Variant::CapP}) {
    for (uint64_t seed : {1u, 2u, 3u}) {
      Instance inst = random_dense_instance(6, seed, variant, 3);
      auto res = enumerate_optimal(inst);
      REQUIRE(!res.optima.empty());
      for (const auto& assign : res.optima) {
        check_assignment(inst, assign);
        CHECK(naive_cost(inst, assign) == doctest::Approx(res.value).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("capacity can make an instance infeasible") {
  Instance inst;
  inst.n = 3;
  inst.p = 1;
  inst.variant = Variant::CapP;
  inst.setup = {1.0, 1.0, 1.0};
  inst.demand = {50.0, 1.0, 1.0};
  inst.capacity = {50.5, 1.2, 1.1};
  inst.assign_cost = Mat(3, 3, 1.0);
  inst.quad = QuadCost::dense(3);
  CHECK_THROWS_AS(enumerate_optimal(inst), InfeasibleInstance);
  // Customer 0 pins facility 0 open with only 0.5 residual, so customers 1
  // and 2 each need their own site: p = 2 is still infeasible, p = 3 works.
  inst.p = 2;
  CHECK_THROWS_AS(enumerate_optimal(inst), InfeasibleInstance);
  inst.p = 3;
  auto res = enumerate_optimal(inst);
  CHECK(res.value < kInf);
  REQUIRE(res.optima.size() == 1);
  CHECK(res.optima[0] == std::vector<int>{0, 1, 2});
}

TEST_CASE("symmetric two-node instance yields a tie pool") {
  Instance inst;
  inst.n = 2;
  inst.p = 2;
  inst.variant = Variant::UncapFree;
  inst.setup = {4.0, 4.0};
  inst.demand = {1.0, 1.0};
  inst.capacity = {2.0, 2.0};
  inst.assign_cost = Mat(2, 2, 0.0);
  inst.assign_cost(0, 1) = 2.0;
  inst.assign_cost(1, 0) = 2.0;
  inst.quad = QuadCost::dense(2);
  // Opening either single facility costs 4 + 2; both are optimal, and opening
  // both costs 8 which is worse.
  auto res = enumerate_optimal(inst);
  CHECK(res.value == doctest::Approx(6.0));
  CHECK(res.optima.size() == 2);
}

TEST_CASE("enumeration size guard") {
  Instance inst = random_dense_instance(6, 1, Variant::UncapFree, 6);
  CHECK_THROWS_AS(enumerate_optimal(inst, 5), SizeGuard);
}

TEST_CASE("quadratic term steers the optimal configuration") {
  // Two customers with a huge interaction cost when served by distant
  // facilities; the optimum must co-locate them despite linear preferences.
  int n = 4;
  Instance inst;
  inst.n = n;
  inst.p = 2;
  inst.variant = Variant::UncapP;
  inst.setup.assign(n, 1.0);
  inst.demand.assign(n, 1.0);
  inst.capacity.assign(n, 100.0);
  inst.assign_cost = Mat(n, n, 10.0);
  for (int i = 0; i < n; ++i) inst.assign_cost(i, i) = 0.0;
  inst.assign_cost(2, 0) = 1.0;  // customer 2 prefers facility 0
  inst.assign_cost(3, 1) = 1.0;  // customer 3 prefers facility 1
  inst.quad = QuadCost::dense(n);
  for (int k = 0; k < n; ++k) {
    for (int m = 0; m < n; ++m) {
      if (k != m) inst.quad.dense_at(2, k, 3, m) = 1000.0;
    }
  }
  auto res = enumerate_optimal(inst);
  REQUIRE(!res.optima.empty());
  for (const auto& assign : res.optima) CHECK(assign[2] == assign[3]);
}
