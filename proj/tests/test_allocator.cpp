#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>

#include "doctest.h"
#include "maddr/allocator.hpp"
#include "maddr/metrics.hpp"
#include "maddr/scenario.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace maddr;

namespace {

AllocationInput input(std::vector<int> hops, std::int64_t packets, double tau = 0.02,
                      double dist = 6.0) {
    AllocationInput in;
    in.params = testing::table1();
    in.packets = packets;
    in.source_sink_distance = dist;
    for (int h : hops) in.paths.push_back({h, tau, 0});
    return in;
}

AllocationInput from_scenario(NodeId source, std::int64_t packets) {
    const Scenario s = testing::load("maddr13");
    const Topology t = s.topology();
    const SourceConfig& cfg = s.source(source);
    SourceSpec spec = make_source_spec(t, cfg, resolve_paths(s, t, cfg));
    spec.packets = packets;
    return AllocationInput::from_source(s.params, spec);
}

void near(const std::vector<std::int64_t>& got, std::vector<std::int64_t> want, int tol) {
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK_MESSAGE(std::llabs(got[i] - want[i]) <= tol, "path ", i, ": ", got[i], " vs ", want[i]);
    }
}

}  // namespace

TEST_CASE("zero budget gives zero quota") {
    CHECK(solve_quota_bound(testing::table1(), 4, 0.02, 6.0, 0.0) == 0.0);
    CHECK_THROWS_AS(solve_quota_bound(testing::table1(), 4, 0.02, 6.0, -1.0), DomainError);
}

TEST_CASE("quota bound sits on the EDP curve") {
    const NetworkParams p = testing::table1();
    const auto o = oracle::from(p);
    for (int h = 1; h <= 10; ++h) {
        for (double rhs : {1e-9, 1e-4, 0.3, 25.0}) {
            const double x = solve_quota_bound(p, h, 0.02, 6.0, rhs);
            CHECK(oracle::path_edp(o, x, h, 0.02, 6.0) == doctest::Approx(rhs).epsilon(1e-9));
        }
    }
}

TEST_CASE("quota bound matches the integer scan") {
    const NetworkParams p = testing::table1();
    const auto o = oracle::from(p);
    const double rhs = metrics::path_edp(p, 40, 4, 0.02, 6.0);
    const double x = solve_quota_bound(p, 6, 0.02, 6.0, rhs);
    const auto brute = oracle::brute_quota(o, 6, 0.02, 6.0, rhs, 1000);
    CHECK(std::llabs(static_cast<std::int64_t>(std::floor(x)) - brute) <= 1);
}

TEST_CASE("apportion examples") {
    const std::vector<double> eq{1, 1, 1};
    CHECK(apportion(eq, 100) == std::vector<std::int64_t>{34, 33, 33});
    CHECK(apportion(eq, 99) == std::vector<std::int64_t>{33, 33, 33});
    CHECK(apportion(eq, 0) == std::vector<std::int64_t>{0, 0, 0});
    const std::vector<double> w{0.5, 0.25, 0.25};
    CHECK(apportion(w, 10) == std::vector<std::int64_t>{5, 3, 2});
    const std::vector<double> zero{0, 0};
    CHECK_THROWS_AS(apportion(zero, 3), DegenerateAllocationError);
    CHECK_THROWS_AS(apportion(std::vector<double>{}, 3), DomainError);
}

TEST_CASE("apportion agrees with Hamilton's method on random weights") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> w(0.0, 50.0);
    std::uniform_int_distribution<int> n(1, 8);
    std::uniform_int_distribution<std::int64_t> total(0, 5000);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> weights(n(rng));
        for (double& x : weights) x = w(rng);
        const std::int64_t d = total(rng);
        const auto got = apportion(weights, d);
        CHECK(std::accumulate(got.begin(), got.end(), std::int64_t{0}) == d);
        CHECK(got == oracle::hamilton(weights, d));
    }
}

TEST_CASE("single-source split examples") {
    const Allocation one = allocate_single_source(input({4}, 77));
    CHECK(one.quotas == std::vector<std::int64_t>{77});
    const Allocation same = allocate_single_source(input({4, 4, 4, 4}, 101));
    for (auto q : same.quotas) CHECK(std::llabs(q - 25) <= 1);
    CHECK(same.total() == 101);
    const Allocation none = allocate_single_source(input({3, 5}, 0));
    CHECK(none.quotas == std::vector<std::int64_t>{0, 0});
}

TEST_CASE("fewer hops never get less data") {
    const Allocation a = allocate_single_source(input({3, 4, 7, 9, 12}, 500));
    for (std::size_t i = 1; i < a.quotas.size(); ++i) CHECK(a.quotas[i - 1] >= a.quotas[i]);
}

TEST_CASE("thirteen-node sources at D = 100") {
    near(scheme_allocation(Scheme::strategic, from_scenario(NodeId{1}, 100)).quotas, {30, 40, 30}, 3);
    near(scheme_allocation(Scheme::strategic, from_scenario(NodeId{3}, 100)).quotas, {45, 35, 20}, 3);
    near(scheme_allocation(Scheme::strategic, from_scenario(NodeId{10}, 100)).quotas, {37, 37, 26}, 3);
}

TEST_CASE("contention discount") {
    AllocationInput in = input({4, 4}, 90);
    CHECK(allocate_multi_source(in).quotas == allocate_single_source(in).quotas);
    in.paths[1].contention = 5;
    CHECK(allocate_multi_source(in).quotas == std::vector<std::int64_t>{90, 0});

    AllocationInput three = input({3, 4, 5}, 120);
    three.paths[0].contention = 4;
    const Allocation a = allocate_multi_source(three);
    CHECK(a.quotas[0] == 0);
    CHECK(a.total() == 120);
    const Allocation b = allocate_single_source(input({4, 5}, 120));
    CHECK(a.quotas[1] == b.quotas[0]);
    CHECK(a.quotas[2] == b.quotas[1]);

    AllocationInput dead = input({2, 2}, 10);
    dead.paths[0].contention = 3;
    dead.paths[1].contention = 3;
    CHECK_THROWS_AS(allocate_multi_source(dead), DegenerateAllocationError);
    dead.paths[1].contention = 4;
    CHECK_THROWS_AS(allocate_multi_source(dead), DomainError);
}

TEST_CASE("contention moves data away from busy paths") {
    AllocationInput in = input({4, 4, 4}, 300);
    const auto base = allocate_multi_source(in).quotas;
    in.paths[2].contention = 2;
    const auto busy = allocate_multi_source(in).quotas;
    CHECK(busy[2] < base[2]);
    CHECK(busy[0] >= base[0]);
}

TEST_CASE("schemes 1 and 2") {
    CHECK(scheme_allocation(Scheme::single_path, input({3, 4, 7}, 100)).quotas ==
          std::vector<std::int64_t>{100, 0, 0});
    CHECK(scheme_allocation(Scheme::single_path, input({5, 3, 3}, 9)).quotas ==
          std::vector<std::int64_t>{0, 9, 0});
    CHECK(scheme_allocation(Scheme::equal_split, input({9, 22, 5, 20, 7}, 100)).quotas ==
          std::vector<std::int64_t>(5, 20));
    CHECK(scheme_allocation(Scheme::equal_split, input({3, 4, 7}, 100)).quotas ==
          std::vector<std::int64_t>{34, 33, 33});
    CHECK_THROWS_AS(scheme_from_int(4), DomainError);
}

TEST_CASE("bad inputs") {
    CHECK_THROWS_AS(allocate_single_source(input({}, 10)), DomainError);
    CHECK_THROWS_AS(allocate_single_source(input({0}, 10)), DomainError);
    CHECK_THROWS_AS(allocate_single_source(input({3}, -1)), DomainError);
    CHECK_THROWS_AS(allocate_single_source(input({3}, 10, 0.0)), DomainError);
}
