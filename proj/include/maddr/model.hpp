#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "maddr/types.hpp"

namespace maddr {

/// Global radio, energy and timing constants shared by every node.
///
/// Rates are per second (J/s); per-bit costs are obtained by multiplying with
/// the bit times. `sensing_power` is the effective per-node sensing/processing
/// draw K_r.
struct NetworkParams {
    double tx_electronics{1.024e-3};      // e_t, J/s
    double tx_amplifier{1e-6};            // e_d, J/s per m^k
    double path_loss_exponent{2.0};       // k
    double rx_electronics{0.8192e-3};     // e_r, J/s
    double bit_tx_time{2e-5};             // T_1b, s
    double bit_rx_time{2e-5};             // T_2b, s
    double sensing_power{0.024};          // K_r
    double packet_bits{1000.0};           // S
    double radio_range{2.4};              // R_radio, m
    double initial_energy{23760.0};       // J per node
    double idle_power{409.6e-6};          // W, only used when idle accounting is on

    /// Throws DomainError when a field is out of range.
    void validate() const;
};

struct Position {
    double x{0.0};
    double y{0.0};
};

double distance(Position a, Position b);

enum class NodeStatus { alive, failed };

struct Node {
    NodeId id;
    Position position;
    double residual_energy{0.0};
    double queue_bits{0.0};      // M_i
    int neighbor_count{0};       // N_i
    bool is_redundant{false};
    NodeStatus status{NodeStatus::alive};
};

enum class LinkStatus { up, down };

struct Link {
    NodeId a;
    NodeId b;
    double bit_rate{50000.0};    // b_j, bits/s
    double delay{0.0};           // l_j, s
    LinkStatus status{LinkStatus::up};
};

struct LinkDefaults {
    double bit_rate{50000.0};
    double delay{0.0};
};

struct LinkOverride {
    NodeId a;
    NodeId b;
    std::optional<double> bit_rate;
    std::optional<double> delay;
};

struct NodeSpec {
    NodeId id;
    Position position;
    bool redundant{false};
    std::optional<double> queue_bits;
};

/// A route from a source to the sink with its per-path parameters.
struct PathInfo {
    std::vector<NodeId> nodes;   // source first, sink last
    int hops{0};                 // H_j
    double tau{0.0};             // per-packet per-hop latency, s
    double hop_distance{0.0};    // source-sink distance / H_j
    int contention{0};           // C_j
    double queue_delay{0.0};     // q_j

    NodeId source() const { return nodes.front(); }
    NodeId sink() const { return nodes.back(); }
    std::span<const NodeId> interior() const {
        return std::span<const NodeId>(nodes).subspan(1, nodes.size() - 2);
    }
};

class Topology {
public:
    Topology() = default;

    const NetworkParams& params() const { return params_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const Node& node(NodeId id) const;
    bool contains(NodeId id) const { return index_.count(id) != 0; }

    /// Active neighbors sorted by id. Standby redundant nodes are never listed.
    const std::vector<NodeId>& neighbors(NodeId id) const;
    bool adjacent(NodeId a, NodeId b) const;
    const Link& link(NodeId a, NodeId b) const;
    const std::vector<Link>& links() const { return links_; }

    /// Redundant nodes within radio range of `id`, nearest first (ties by id).
    std::vector<NodeId> redundant_near(NodeId id) const;
    std::vector<NodeId> redundant_nodes() const;

    const std::vector<NodeId>& sources() const { return sources_; }
    NodeId sink() const { return sink_; }
    double distance(NodeId a, NodeId b) const;

    /// Per-hop latency S/b + l for the given link with zero queuing.
    double link_latency(NodeId a, NodeId b) const;

    friend Topology build_topology(std::span<const NodeSpec>, const NetworkParams&,
                                   const LinkDefaults&, std::span<const LinkOverride>,
                                   std::span<const NodeId>, NodeId);

private:
    NetworkParams params_;
    std::vector<Node> nodes_;
    std::map<NodeId, std::size_t> index_;
    std::vector<std::vector<NodeId>> adjacency_;
    std::vector<Link> links_;
    std::map<std::pair<NodeId, NodeId>, std::size_t> link_index_;
    std::vector<NodeId> sources_;
    NodeId sink_;
};

/// Builds the unit-disk topology: every pair of active nodes within
/// `params.radio_range` is linked in both directions. Throws ConnectivityError
/// when a declared source cannot reach the sink.
Topology build_topology(std::span<const NodeSpec> nodes, const NetworkParams& params,
                        const LinkDefaults& defaults, std::span<const LinkOverride> overrides,
                        std::span<const NodeId> sources, NodeId sink);

/// Checks adjacency and distinctness of a node sequence and fills in H_j,
/// the zero-load tau and the average hop distance.
PathInfo validate_path(const Topology& topology, std::span<const NodeId> sequence);

/// True when no two paths share an interior node.
bool locally_disjoint(std::span<const PathInfo> paths);

struct SourceSpec {
    NodeId source;
    std::int64_t packets{0};               // D
    double source_sink_distance{0.0};      // T_dist
    std::vector<PathInfo> paths;

    double mean_hops() const;
    double mean_tau() const;
};

enum class PacketKind { data, hello, reply, choke, beacon };

inline constexpr int kControlPriority = std::numeric_limits<int>::max();

const char* to_string(PacketKind kind);

struct Packet {
    std::int64_t uid{0};           // global creation order, also the "newest" tie-break
    PacketKind kind{PacketKind::data};
    int priority{1};
    NodeId source;
    NodeId destination;
    int path_id{0};
    std::int64_t seq{0};
    double size_bits{1000.0};
    int route_id{-1};              // index into the engine's route table
    int hop{0};                    // index of the current holder within the route
    NodeId next_hop;
    int copy{0};
    double enqueued_at{0.0};
    double injected_at{0.0};
    int contention_count{0};       // choke counter carried by probe packets
    int attempts{0};               // failed attempts on the current hop

    bool is_control() const { return kind != PacketKind::data; }
};

Packet make_control_packet(PacketKind kind, NodeId source, NodeId destination, double size_bits);

}  // namespace maddr
