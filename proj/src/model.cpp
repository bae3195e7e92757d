#include "maddr/model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>

#include <fmt/format.h>

namespace maddr {

namespace {

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }
bool finite_nonnegative(double v) { return std::isfinite(v) && v >= 0.0; }

std::pair<NodeId, NodeId> link_key(NodeId a, NodeId b) {
    return a < b ? std::pair{a, b} : std::pair{b, a};
}

}  // namespace

void NetworkParams::validate() const {
    const auto require = [](bool ok, const char* name) {
        if (!ok) throw DomainError(fmt::format("network parameter {} out of range", name));
    };
    require(finite_positive(tx_electronics), "e_t");
    require(finite_nonnegative(tx_amplifier), "e_d");
    require(std::isfinite(path_loss_exponent) && path_loss_exponent >= 2.0 &&
                path_loss_exponent <= 4.0,
            "k");
    require(finite_nonnegative(rx_electronics), "e_r");
    require(finite_positive(bit_tx_time), "T_1b");
    require(finite_positive(bit_rx_time), "T_2b");
    require(finite_nonnegative(sensing_power), "K_r");
    require(finite_positive(packet_bits), "S");
    require(finite_positive(radio_range), "R_radio");
    require(finite_positive(initial_energy), "initial_energy");
    require(finite_nonnegative(idle_power), "idle_power");
}

double distance(Position a, Position b) { return std::hypot(a.x - b.x, a.y - b.y); }

const char* to_string(PacketKind kind) {
    switch (kind) {
        case PacketKind::data: return "data";
        case PacketKind::hello: return "hello";
        case PacketKind::reply: return "reply";
        case PacketKind::choke: return "choke";
        case PacketKind::beacon: return "beacon";
    }
    return "?";
}

Packet make_control_packet(PacketKind kind, NodeId source, NodeId destination, double size_bits) {
    Packet p;
    p.kind = kind;
    p.priority = kControlPriority;
    p.source = source;
    p.destination = destination;
    p.size_bits = size_bits;
    return p;
}

const Node& Topology::node(NodeId id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) throw ScenarioError(fmt::format("unknown node {}", id.value));
    return nodes_[it->second];
}

const std::vector<NodeId>& Topology::neighbors(NodeId id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) throw ScenarioError(fmt::format("unknown node {}", id.value));
    return adjacency_[it->second];
}

bool Topology::adjacent(NodeId a, NodeId b) const { return link_index_.count(link_key(a, b)) != 0; }

const Link& Topology::link(NodeId a, NodeId b) const {
    const auto it = link_index_.find(link_key(a, b));
    if (it == link_index_.end()) {
        throw RoutingError(fmt::format("no link between {} and {}", a.value, b.value));
    }
    return links_[it->second];
}

double Topology::distance(NodeId a, NodeId b) const {
    return maddr::distance(node(a).position, node(b).position);
}

double Topology::link_latency(NodeId a, NodeId b) const {
    const Link& l = link(a, b);
    return params_.packet_bits / l.bit_rate + l.delay;
}

std::vector<NodeId> Topology::redundant_nodes() const {
    std::vector<NodeId> out;
    for (const Node& n : nodes_) {
        if (n.is_redundant) out.push_back(n.id);
    }
    return out;
}

std::vector<NodeId> Topology::redundant_near(NodeId id) const {
    const Position origin = node(id).position;
    std::vector<std::pair<double, NodeId>> found;
    for (const Node& n : nodes_) {
        if (!n.is_redundant || n.id == id) continue;
        const double d = maddr::distance(origin, n.position);
        if (d <= params_.radio_range) found.emplace_back(d, n.id);
    }
    std::sort(found.begin(), found.end());
    std::vector<NodeId> out;
    out.reserve(found.size());
    for (const auto& [d, n] : found) out.push_back(n);
    return out;
}

Topology build_topology(std::span<const NodeSpec> specs, const NetworkParams& params,
                        const LinkDefaults& defaults, std::span<const LinkOverride> overrides,
                        std::span<const NodeId> sources, NodeId sink) {
    params.validate();
    if (!finite_positive(defaults.bit_rate) || !finite_nonnegative(defaults.delay)) {
        throw DomainError("link defaults out of range");
    }
    if (specs.size() < 2) throw ScenarioError("a topology needs at least a source and a sink");

    Topology t;
    t.params_ = params;
    for (const NodeSpec& s : specs) {
        if (!std::isfinite(s.position.x) || !std::isfinite(s.position.y)) {
            throw ScenarioError(fmt::format("node {} has a non-finite position", s.id.value));
        }
        if (!s.id.valid()) throw ScenarioError("node ids must be non-negative");
        if (t.index_.count(s.id) != 0) {
            throw DuplicateNodeError(s.id, fmt::format("duplicate node id {}", s.id.value));
        }
        t.index_[s.id] = t.nodes_.size();
        Node n;
        n.id = s.id;
        n.position = s.position;
        n.residual_energy = params.initial_energy;
        n.queue_bits = s.queue_bits.value_or(0.0);
        n.is_redundant = s.redundant;
        t.nodes_.push_back(n);
    }
    t.adjacency_.assign(t.nodes_.size(), {});

    // Nodes are visited in id order so neighbor lists come out sorted.
    std::vector<std::size_t> order(t.nodes_.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return t.nodes_[a].id < t.nodes_[b].id; });
    for (std::size_t i = 0; i < order.size(); ++i) {
        const Node& a = t.nodes_[order[i]];
        if (a.is_redundant) continue;
        for (std::size_t j = i + 1; j < order.size(); ++j) {
            const Node& b = t.nodes_[order[j]];
            if (b.is_redundant) continue;
            if (distance(a.position, b.position) > params.radio_range) continue;
            t.adjacency_[order[i]].push_back(b.id);
            t.adjacency_[order[j]].push_back(a.id);
            t.link_index_[link_key(a.id, b.id)] = t.links_.size();
            t.links_.push_back(Link{std::min(a.id, b.id), std::max(a.id, b.id), defaults.bit_rate,
                                    defaults.delay, LinkStatus::up});
        }
    }
    for (auto& list : t.adjacency_) std::sort(list.begin(), list.end());
    for (std::size_t i = 0; i < t.nodes_.size(); ++i) {
        t.nodes_[i].neighbor_count = static_cast<int>(t.adjacency_[i].size());
    }

    for (const LinkOverride& o : overrides) {
        const auto it = t.link_index_.find(link_key(o.a, o.b));
        if (it == t.link_index_.end()) {
            throw ScenarioError(
                fmt::format("link override {}-{} is not within radio range", o.a.value, o.b.value));
        }
        Link& l = t.links_[it->second];
        if (o.bit_rate) {
            if (!finite_positive(*o.bit_rate)) throw DomainError("link bit rate must be positive");
            l.bit_rate = *o.bit_rate;
        }
        if (o.delay) {
            if (!finite_nonnegative(*o.delay)) throw DomainError("link delay must be non-negative");
            l.delay = *o.delay;
        }
    }

    if (!t.contains(sink)) throw ScenarioError(fmt::format("sink {} is not a node", sink.value));
    if (t.node(sink).is_redundant) throw ScenarioError("the sink cannot be a redundant node");
    t.sink_ = sink;

    // One BFS from the sink answers reachability for every source.
    std::set<NodeId> reached{sink};
    std::deque<NodeId> frontier{sink};
    while (!frontier.empty()) {
        const NodeId cur = frontier.front();
        frontier.pop_front();
        for (NodeId nb : t.neighbors(cur)) {
            if (reached.insert(nb).second) frontier.push_back(nb);
        }
    }
    for (NodeId s : sources) {
        if (!t.contains(s)) throw ScenarioError(fmt::format("source {} is not a node", s.value));
        if (s == sink) throw ScenarioError("a source cannot be the sink");
        if (t.node(s).is_redundant) throw ScenarioError("a source cannot be a redundant node");
        if (reached.count(s) == 0) {
            throw ConnectivityError(
                s, fmt::format("sink {} is unreachable from source {}", sink.value, s.value));
        }
        t.sources_.push_back(s);
    }
    return t;
}

PathInfo validate_path(const Topology& topology, std::span<const NodeId> sequence) {
    if (sequence.size() < 2) {
        throw InvalidPathError(0, "a path needs at least two nodes");
    }
    std::set<NodeId> seen;
    for (NodeId n : sequence) {
        if (!topology.contains(n)) {
            throw ScenarioError(fmt::format("path references unknown node {}", n.value));
        }
        if (!seen.insert(n).second) {
            throw DuplicateNodeError(n, fmt::format("node {} repeats in path", n.value));
        }
    }
    double latency = 0.0;
    for (std::size_t i = 0; i + 1 < sequence.size(); ++i) {
        if (!topology.adjacent(sequence[i], sequence[i + 1])) {
            throw InvalidPathError(i, fmt::format("hop {} ({} -> {}) is not a link", i,
                                                  sequence[i].value, sequence[i + 1].value));
        }
        latency += topology.link_latency(sequence[i], sequence[i + 1]);
    }
    PathInfo p;
    p.nodes.assign(sequence.begin(), sequence.end());
    p.hops = static_cast<int>(sequence.size()) - 1;
    p.tau = latency / p.hops;
    p.hop_distance = topology.distance(sequence.front(), sequence.back()) / p.hops;
    return p;
}

bool locally_disjoint(std::span<const PathInfo> paths) {
    std::set<NodeId> used;
    for (const PathInfo& p : paths) {
        for (NodeId n : p.interior()) {
            if (!used.insert(n).second) return false;
        }
    }
    return true;
}

double SourceSpec::mean_hops() const {
    if (paths.empty()) return 0.0;
    double sum = 0.0;
    for (const PathInfo& p : paths) sum += p.hops;
    return sum / static_cast<double>(paths.size());
}

double SourceSpec::mean_tau() const {
    if (paths.empty()) return 0.0;
    double sum = 0.0;
    for (const PathInfo& p : paths) sum += p.tau;
    return sum / static_cast<double>(paths.size());
}

}  // namespace maddr
