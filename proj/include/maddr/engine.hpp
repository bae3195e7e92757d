#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "maddr/model.hpp"
#include "maddr/scenario.hpp"

namespace maddr {

enum class DropCause { overflow, fault_abort };

struct PathMetrics {
    NodeId source;
    int path_index{0};
    std::vector<NodeId> nodes;
    int hops{0};
    double tau{0.0};               // per-hop tau the allocator used (measured when probed)
    int contention{0};             // C_j at data start
    std::int64_t quota{0};
    double raw_quota{0.0};
    bool exceeds_bound{false};
    std::int64_t injected{0};
    std::int64_t delivered{0};     // first copies accepted by the sink
    std::int64_t arrivals{0};      // every copy reaching the sink
    double delivery_time{0.0};     // last sink arrival, from data start
    double mean_queue_wait{0.0};   // measured q_j per packet per hop
    double analytic_delay{0.0};    // Delta tau H
    double analytic_energy{0.0};   // path energy model for the quota
};

struct SourceMetrics {
    NodeId id;
    std::int64_t packets{0};
    Scheme scheme{Scheme::strategic};
    double completion_time{0.0};
    double energy{0.0};            // communication energy attributed to this source
    std::int64_t injected{0};
    std::int64_t delivered{0};
    std::int64_t duplicates{0};
    std::int64_t dropped_overflow{0};
    std::int64_t dropped_fault{0};
    std::int64_t undeliverable{0}; // quota never injected because its path was abandoned
};

struct FaultRecord {
    NodeId node;                   // serial number judged faulty
    std::optional<double> fault_time;  // scheduled fault behind it, if any
    double detected_at{0.0};
    NodeId detector;
    std::string mechanism;         // sender_beacon, receiver_timer, self_beacon
    NodeId replacement;            // physical node that took over; invalid when abandoned
    bool abandoned{false};
};

struct ChokeSample {
    double time{0.0};
    NodeId source;
    int path_index{0};
    int count{0};
    bool failed{false};
};

struct DispatchRecord {
    double time{0.0};
    NodeId node;
    NodeId next_hop;
    std::int64_t uid{0};
    NodeId source;
    double wait{0.0};
    bool control{false};
};

struct RunMetrics {
    std::string scenario;
    std::string scenario_hash;
    std::uint64_t seed{0};
    double data_start{0.0};
    double net_completion{0.0};
    double duration{0.0};
    double total_energy{0.0};
    double transmit_energy{0.0};
    double receive_energy{0.0};
    double control_energy{0.0};
    double sensing_energy{0.0};
    double idle_energy{0.0};
    double energy_imbalance{0.0};
    std::int64_t injected{0};
    std::int64_t delivered{0};
    std::int64_t duplicates{0};
    std::int64_t dropped_overflow{0};
    std::int64_t dropped_fault{0};
    std::int64_t undeliverable{0};
    std::int64_t control_dropped{0};
    std::int64_t retransmissions{0};
    std::int64_t table_refreshes{0};
    std::int64_t events{0};
    std::vector<SourceMetrics> sources;
    std::vector<PathMetrics> paths;
    std::vector<FaultRecord> faults;
    std::vector<ChokeSample> choke_samples;
    std::vector<DispatchRecord> dispatches;
    std::map<NodeId, double> residual_energy;  // by physical node
    std::map<NodeId, double> spent_energy;     // by physical node

    const SourceMetrics& source(NodeId id) const;
};

struct RunOptions {
    bool rediscover{false};
    std::ostream* trace{nullptr};
    std::optional<std::uint64_t> seed;
    bool record_dispatch{false};
};

/// Runs a scenario to quiescence. Identical scenario and seed give identical
/// metrics and trace.
RunMetrics run(const Scenario& scenario, const RunOptions& options = {});

}  // namespace maddr
