#include <random>
#include <set>

#include "doctest.h"
#include "maddr/discovery.hpp"
#include "maddr/scenario.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace maddr;
using testing::ids;

namespace {

Topology place(const std::vector<Position>& pos, NodeId sink, double range = 2.4) {
    std::vector<NodeSpec> specs;
    for (std::size_t i = 0; i < pos.size(); ++i) {
        specs.push_back({NodeId{static_cast<int>(i) + 1}, pos[i], false, {}});
    }
    NetworkParams p = testing::table1();
    p.radio_range = range;
    return build_topology(specs, p, {}, {}, {}, sink);
}

std::vector<std::vector<NodeId>> sequences(const std::vector<PathInfo>& paths) {
    std::vector<std::vector<NodeId>> out;
    for (const auto& p : paths) out.push_back(p.nodes);
    return out;
}

}  // namespace

TEST_CASE("line graph has one route") {
    const Topology t = place({{0, 0}, {2, 0}, {4, 0}}, NodeId{3});
    const auto paths = discover_paths(t, NodeId{1}, NodeId{3}, 3);
    REQUIRE(paths.size() == 1);
    CHECK(paths[0].hops == 2);
    CHECK(paths[0].nodes == ids({1, 2, 3}));
}

TEST_CASE("complete graph on four nodes") {
    const Topology t = place({{0, 0}, {1, 0}, {0, 1}, {1, 1}}, NodeId{4});
    const auto paths = discover_paths(t, NodeId{1}, NodeId{4}, 5);
    CHECK(sequences(paths) ==
          std::vector<std::vector<NodeId>>{ids({1, 4}), ids({1, 2, 4}), ids({1, 3, 4})});
    CHECK(discover_paths(t, NodeId{1}, NodeId{4}, 2).size() == 2);
}

TEST_CASE("thirteen-node layout, source 1") {
    const Topology t = testing::load("maddr13").topology();
    const auto paths = discover_paths(t, NodeId{1}, NodeId{6}, 3);
    REQUIRE(paths.size() == 3);
    std::set<std::set<NodeId>> got;
    for (const auto& p : paths) got.insert({p.interior().begin(), p.interior().end()});
    const std::set<std::set<NodeId>> want{{NodeId{2}, NodeId{3}, NodeId{4}, NodeId{5}},
                                          {NodeId{7}, NodeId{8}, NodeId{9}},
                                          {NodeId{10}, NodeId{11}, NodeId{12}, NodeId{13}}};
    CHECK(got == want);
}

TEST_CASE("five-chain layout yields every chain") {
    const Scenario s = testing::load("single_source_5path");
    const auto paths = discover_paths(s.topology(), NodeId{1}, s.sink, 5);
    std::vector<int> hops;
    for (const auto& p : paths) hops.push_back(p.hops);
    CHECK(hops == std::vector<int>{5, 7, 9, 20, 22});
}

TEST_CASE("unreachable sink") {
    const Topology t = place({{0, 0}, {2, 0}, {9, 0}}, NodeId{3});
    CHECK_THROWS_AS(discover_paths(t, NodeId{1}, NodeId{3}, 3), UnreachableError);
    CHECK_THROWS_AS(discover_paths(t, NodeId{1}, NodeId{1}, 3), DomainError);
}

TEST_CASE("discovery matches exhaustive enumeration on random layouts") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> coord(0.0, 6.0);
    int compared = 0;
    for (int trial = 0; trial < 120; ++trial) {
        const int n = 6 + trial % 7;
        std::vector<Position> pos(n);
        for (auto& q : pos) q = {coord(rng), coord(rng)};
        const Topology t = place(pos, NodeId{n});
        oracle::Graph g(n);
        for (int i = 0; i < n; ++i) {
            for (NodeId nb : t.neighbors(NodeId{i + 1})) g[i].push_back(nb.value - 1);
        }
        const auto want = oracle::disjoint_paths(g, 0, n - 1, 4);
        if (want.empty()) {
            CHECK_THROWS_AS(discover_paths(t, NodeId{1}, NodeId{n}, 4), UnreachableError);
            continue;
        }
        const auto got = discover_paths(t, NodeId{1}, NodeId{n}, 4);
        REQUIRE(got.size() == want.size());
        for (std::size_t k = 0; k < got.size(); ++k) {
            std::vector<int> seq;
            for (NodeId id : got[k].nodes) seq.push_back(id.value - 1);
            CHECK(seq == want[k]);
        }
        CHECK(locally_disjoint(got));
        CHECK(got.size() <= t.neighbors(NodeId{1}).size());
        CHECK(sequences(got) == sequences(discover_paths(t, NodeId{1}, NodeId{n}, 4)));
        ++compared;
    }
    CHECK(compared > 60);
}

TEST_CASE("tau from the hello round trip") {
    CHECK(per_hop_tau(0.0, 0.4, 5) == doctest::Approx(0.04));
    CHECK(per_hop_tau(1.0, 1.0, 3) == 0.0);
    CHECK(per_hop_tau(0.0, 0.8, 5) == doctest::Approx(2 * per_hop_tau(0.0, 0.4, 5)));
    CHECK(one_way_delay(0.5, 0.9) == doctest::Approx(0.2));
    CHECK_THROWS_AS(per_hop_tau(1.0, 0.5, 3), ClockError);
    CHECK_THROWS_AS(per_hop_tau(0.0, 0.5, 0), DomainError);
}

TEST_CASE("choke probe counting") {
    const Topology t = place({{0, 0}, {2, 0}, {4, 0}, {6, 0}, {8, 0}}, NodeId{5});
    const PathInfo path = validate_path(t, ids({1, 2, 3, 4, 5}));
    std::map<NodeId, double> occ;
    std::set<NodeId> dead;
    ProbeView view{[&](NodeId n) { return occ[n]; }, [&](NodeId n) { return dead.count(n) == 0; }};

    CHECK(choke_probe(t, path, view) == 0);
    occ[NodeId{3}] = 0.6;
    CHECK(choke_probe(t, path, view) == 1);
    occ[NodeId{3}] = 0.5;
    CHECK(choke_probe(t, path, view) == 0);
    for (int i = 1; i <= 5; ++i) occ[NodeId{i}] = 0.9;
    CHECK(choke_probe(t, path, view) == path.hops);  // 3 interior + sink, source excluded
    occ[NodeId{2}] = 0.0;
    CHECK(choke_probe(t, path, view) == path.hops - 1);
    dead.insert(NodeId{4});
    try {
        choke_probe(t, path, view);
        FAIL("expected ProbeFailedError");
    } catch (const ProbeFailedError& e) {
        CHECK(e.node() == NodeId{4});
    }
}

TEST_CASE("routing table") {
    const Topology t = testing::load("maddr13").topology();
    const RoutingTable rt = build_routing_table(t, NodeId{1}, NodeId{6}, 3, 1.5);
    CHECK(rt.owner == NodeId{1});
    CHECK(rt.paths_to(NodeId{6}).size() == 3);
    CHECK(rt.created_at == 1.5);
    CHECK_THROWS_AS(rt.paths_to(NodeId{5}), RoutingError);
}

TEST_CASE("refresh policy") {
    RefreshPolicy p;
    CHECK(p.on_event(NetworkEvent::initial_join));
    p.rebuilt();
    CHECK_FALSE(p.on_event(NetworkEvent::link_failed));
    CHECK(p.on_event(NetworkEvent::node_failed));
    p.rebuilt();
    CHECK_FALSE(p.on_event(NetworkEvent::node_failed));
    CHECK(p.on_event(NetworkEvent::node_failed));
    p.rebuilt();
    CHECK_FALSE(p.on_event(NetworkEvent::node_joined));
    CHECK(p.joins_since_build() == 1);
    CHECK(p.on_event(NetworkEvent::node_joined));
    CHECK(p.joins_since_build() == 0);
}
