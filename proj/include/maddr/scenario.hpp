#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "maddr/allocator.hpp"
#include "maddr/energy.hpp"
#include "maddr/model.hpp"
#include "maddr/queue.hpp"

namespace maddr {

enum class Forwarding {
    pipelined,          // a node forwards each packet as soon as it has it
    store_and_forward,  // a node forwards a path's batch only once it holds all of it
};

enum class Transmitter {
    per_node,  // a node sends one packet at a time over all its links
    per_link,  // every outgoing link has its own transmitter
};

struct SourceConfig {
    NodeId id;
    std::int64_t packets{0};
    Scheme scheme{Scheme::strategic};
    bool contention_aware{false};
    int priority{1};
    std::vector<std::vector<NodeId>> paths;  // explicit routes; empty means discover
    std::optional<std::vector<std::int64_t>> quotas;  // fixed split, bypasses the allocator
    int copies_per_path{0};  // > 0 sends every packet on every path (replication)
};

enum class FaultKind {
    node,         // the node stops sending and receiving
    transmitter,  // the node still receives but can no longer transmit
    link,         // one link goes down
};

struct ScheduledFault {
    FaultKind kind{FaultKind::node};
    NodeId node;
    NodeId peer;  // second endpoint for link faults
    double time{0.0};
};

struct FaultConfig {
    int max_attempts{10};  // m
    bool receiver_timer{true};
    std::vector<ScheduledFault> schedule;
};

struct EngineConfig {
    std::optional<double> queue_bits;   // M_i for every node without its own value
    int subqueue_packets{50};           // used when queue_bits is not given
    QueueDiscipline discipline{QueueDiscipline::fragmented};
    Forwarding forwarding{Forwarding::pipelined};
    Transmitter transmitter{Transmitter::per_node};
    EnergyMode energy_mode{EnergyMode::per_bit};
    SensingMode sensing{SensingMode::per_interval};
    bool idle_energy{false};
    double loss_probability{0.0};
    std::int64_t event_cap{50'000'000};
    double choke_threshold{0.5};
    bool control_phase{true};            // hello/reply and choke probes before data
    std::optional<double> probe_at;      // re-probe C_j at this time and report it
    std::optional<double> control_packet_bits;  // defaults to S
};

struct Scenario {
    std::string name;
    std::uint64_t seed{1};
    NetworkParams params;
    LinkDefaults link_defaults;
    std::vector<LinkOverride> link_overrides;
    std::vector<NodeSpec> nodes;
    NodeId sink;
    std::vector<SourceConfig> sources;
    std::size_t max_paths{3};
    EngineConfig engine;
    FaultConfig faults;

    std::vector<NodeId> source_ids() const;
    Topology topology() const;
    const SourceConfig& source(NodeId id) const;
    SourceConfig& source(NodeId id);
};

Scenario scenario_from_json_text(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);
std::string scenario_to_json_text(const Scenario& scenario);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

/// FNV-1a 64 over the canonical JSON form.
std::uint64_t scenario_hash(const Scenario& scenario);
std::string hash_hex(std::uint64_t hash);

/// Paths for a source: the explicit ones when present (validated and checked
/// for disjointness), discovery otherwise or when `rediscover` is set.
std::vector<PathInfo> resolve_paths(const Scenario& scenario, const Topology& topology,
                                    const SourceConfig& source, bool rediscover = false);

SourceSpec make_source_spec(const Topology& topology, const SourceConfig& source,
                            std::vector<PathInfo> paths);

/// Portable uniform double in [0, 1) from a 64-bit Mersenne Twister draw.
double uniform01(std::uint64_t draw);

struct GeneratorOptions {
    int count{1000};
    double width{501.0};
    double height{501.0};
    double radius{2.4};
    std::uint64_t seed{1};
    std::int64_t packets{100};
};

struct GeneratedTopology {
    Scenario scenario;
    bool connected{true};
};

/// Uniform random placement; node 1 is the source and node `count` the sink.
GeneratedTopology generate_topology(const GeneratorOptions& options);

}  // namespace maddr
