#include "maddr/discovery.hpp"

#include <deque>
#include <limits>
#include <set>

#include <fmt/format.h>

namespace maddr {

namespace {

constexpr int kUnreached = std::numeric_limits<int>::max();

// Hop distances to `target` over nodes not in `blocked`. The target's own
// entry is 0; blocked nodes stay unreached.
std::map<NodeId, int> hops_to(const Topology& t, NodeId target, const std::set<NodeId>& blocked) {
    std::map<NodeId, int> dist;
    dist[target] = 0;
    std::deque<NodeId> frontier{target};
    while (!frontier.empty()) {
        const NodeId cur = frontier.front();
        frontier.pop_front();
        for (NodeId nb : t.neighbors(cur)) {
            if (blocked.count(nb) != 0 || dist.count(nb) != 0) continue;
            dist[nb] = dist[cur] + 1;
            frontier.push_back(nb);
        }
    }
    return dist;
}

int lookup(const std::map<NodeId, int>& dist, NodeId n) {
    const auto it = dist.find(n);
    return it == dist.end() ? kUnreached : it->second;
}

}  // namespace

std::vector<PathInfo> discover_paths(const Topology& topology, NodeId source, NodeId sink,
                                     std::size_t max_paths) {
    if (source == sink) throw DomainError("source and sink must differ");
    if (!topology.contains(source) || !topology.contains(sink)) {
        throw ScenarioError("discovery endpoints must be topology nodes");
    }
    std::vector<PathInfo> found;
    std::set<NodeId> blocked;
    bool direct_used = false;
    while (found.size() < max_paths) {
        // The source is blocked for the BFS from the sink so paths never loop back.
        std::set<NodeId> bfs_blocked = blocked;
        bfs_blocked.insert(source);
        const auto dist = hops_to(topology, sink, bfs_blocked);

        int best = kUnreached;
        for (NodeId nb : topology.neighbors(source)) {
            if (nb == sink && direct_used) continue;
            if (nb != sink && blocked.count(nb) != 0) continue;
            best = std::min(best, lookup(dist, nb));
        }
        if (best == kUnreached) break;

        std::vector<NodeId> seq{source};
        NodeId cur = source;
        int remaining = best;  // hops from the next node to the sink
        while (cur != sink) {
            NodeId next;
            for (NodeId nb : topology.neighbors(cur)) {  // ascending id
                if (nb == sink && cur == source && direct_used) continue;
                if (nb != sink && (blocked.count(nb) != 0 || nb == source)) continue;
                if (lookup(dist, nb) == remaining) {
                    next = nb;
                    break;
                }
            }
            seq.push_back(next);
            cur = next;
            --remaining;
        }
        PathInfo p = validate_path(topology, seq);
        if (p.hops == 1) direct_used = true;
        for (NodeId n : p.interior()) blocked.insert(n);
        found.push_back(std::move(p));
    }
    if (found.empty() && max_paths > 0) {
        throw UnreachableError(
            fmt::format("no path from {} to sink {}", source.value, sink.value));
    }
    return found;
}

double one_way_delay(double hello_sent, double reply_received) {
    if (reply_received < hello_sent) {
        throw ClockError("reply received before the hello was sent");
    }
    return (reply_received - hello_sent) / 2.0;
}

double per_hop_tau(double hello_sent, double reply_received, int hops) {
    if (hops < 1) throw DomainError("hop count must be at least 1");
    return one_way_delay(hello_sent, reply_received) / hops;
}

int choke_probe(const Topology& topology, const PathInfo& path, const ProbeView& view,
                double threshold) {
    int count = 0;
    for (std::size_t i = 1; i < path.nodes.size(); ++i) {
        const NodeId n = path.nodes[i];
        if (!topology.contains(n)) throw ScenarioError("probe path references unknown node");
        if (view.alive && !view.alive(n)) {
            throw ProbeFailedError(n, fmt::format("choke probe stopped at failed node {}", n.value));
        }
        if (view.occupancy && view.occupancy(n) > threshold) ++count;
    }
    return count;
}

const std::vector<PathInfo>& RoutingTable::paths_to(NodeId destination) const {
    const auto it = routes.find(destination);
    if (it == routes.end()) {
        throw RoutingError(fmt::format("no routes from {} to {}", owner.value, destination.value));
    }
    return it->second;
}

RoutingTable build_routing_table(const Topology& topology, NodeId source, NodeId sink,
                                 std::size_t max_paths, double now) {
    RoutingTable table;
    table.owner = source;
    table.params = topology.params();
    table.created_at = now;
    table.routes[sink] = discover_paths(topology, source, sink, max_paths);
    return table;
}

bool RefreshPolicy::on_event(NetworkEvent event) {
    bool rebuild = false;
    switch (event) {
        case NetworkEvent::initial_join:
            rebuild = true;
            break;
        case NetworkEvent::node_joined:
            rebuild = ++joins_ >= 2;
            break;
        case NetworkEvent::node_failed:
        case NetworkEvent::link_failed:
            rebuild = ++failures_ >= 2;
            break;
    }
    if (rebuild) rebuilt();
    return rebuild;
}

void RefreshPolicy::rebuilt() {
    failures_ = 0;
    joins_ = 0;
}

}  // namespace maddr
