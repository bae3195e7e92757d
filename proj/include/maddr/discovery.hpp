#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <vector>

#include "maddr/model.hpp"

namespace maddr {

/// Up to min(max_paths, degree(source)) interior-node-disjoint paths, found by
/// repeatedly taking the lexicographically smallest fewest-hop path and removing
/// its interior nodes. A direct source-sink link is used at most once.
std::vector<PathInfo> discover_paths(const Topology& topology, NodeId source, NodeId sink,
                                     std::size_t max_paths);

/// Half the hello/reply round trip.
double one_way_delay(double hello_sent, double reply_received);

/// Per-hop tau: half the round trip spread over the path's hops.
double per_hop_tau(double hello_sent, double reply_received, int hops);

/// Runtime node state the choke probe reads.
struct ProbeView {
    std::function<double(NodeId)> occupancy;   // fraction of data queue in use
    std::function<bool(NodeId)> alive;
};

/// Counts the nodes after the source (interior and sink) whose queue is more
/// than `threshold` full. Throws ProbeFailedError at a failed node.
int choke_probe(const Topology& topology, const PathInfo& path, const ProbeView& view,
                double threshold = 0.5);

struct RoutingTable {
    NodeId owner;
    std::map<NodeId, std::vector<PathInfo>> routes;  // by destination
    NetworkParams params;                            // parameters reported in replies
    double created_at{0.0};
    bool stale{false};

    const std::vector<PathInfo>& paths_to(NodeId destination) const;
};

RoutingTable build_routing_table(const Topology& topology, NodeId source, NodeId sink,
                                 std::size_t max_paths, double now = 0.0);

enum class NetworkEvent { initial_join, node_joined, node_failed, link_failed };

/// Decides when a source must rebuild its routing table: on its own join, or
/// once two or more failures (or two or more joins) pile up since the last build.
class RefreshPolicy {
public:
    bool on_event(NetworkEvent event);
    void rebuilt();

    int failures_since_build() const { return failures_; }
    int joins_since_build() const { return joins_; }

private:
    int failures_{0};
    int joins_{0};
};

}  // namespace maddr
