#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "maddr/engine.hpp"
#include "maddr/report.hpp"
#include "maddr/scenario.hpp"

namespace maddr {

enum class Framework { traditional = 1, equal_split = 2, strategic = 3 };

const char* to_string(Framework f);

/// Reconfigures every source of `base` for one multi-source framework:
/// traditional replicates all data on every path over drop-tail FIFO queues
/// with no probing; the other two use fragmented queues with an equal or a
/// contention-aware strategic split.
Scenario framework_scenario(const Scenario& base, Framework framework, std::int64_t packets);

/// Sets one source's packet count and scheme.
Scenario scheme_scenario(const Scenario& base, NodeId source, Scheme scheme, std::int64_t packets);

struct OrderingCheck {
    std::string name;
    bool pass{false};
    std::string detail;
};

struct SchemeCell {
    std::int64_t packets{0};
    Scheme scheme{Scheme::single_path};
    std::uint64_t seed{0};
    RunMetrics metrics;
    double delay{0.0};          // source completion time
    double energy{0.0};         // total network energy
    double delay_cv{0.0};       // coefficient of variation of per-path delays (paths with data)
};

struct SchemeComparison {
    NodeId source;
    std::string scenario_hash;
    std::vector<SchemeCell> cells;
    std::vector<OrderingCheck> checks;

    const SchemeCell& cell(std::int64_t packets, Scheme scheme, std::uint64_t seed) const;
};

struct FrameworkCell {
    std::int64_t packets{0};
    Framework framework{Framework::strategic};
    std::uint64_t seed{0};
    RunMetrics metrics;
};

struct FrameworkComparison {
    std::string scenario_hash;
    std::vector<FrameworkCell> cells;
    std::vector<OrderingCheck> checks;

    const FrameworkCell& cell(std::int64_t packets, Framework framework, std::uint64_t seed) const;
};

struct ExperimentSpec {
    std::string name;
    std::vector<std::int64_t> packets{100, 200};
    int repetitions{1};
    std::vector<std::uint64_t> seeds;  // one per repetition; derived from the scenario seed if empty
    unsigned jobs{1};

    std::vector<std::uint64_t> resolved_seeds(std::uint64_t base) const;
};

double coefficient_of_variation(const std::vector<double>& values);

SchemeComparison run_scheme_comparison(const Scenario& scenario, const ExperimentSpec& spec,
                                       NodeId source = {});

FrameworkComparison run_multisource_frameworks(const Scenario& scenario,
                                               const ExperimentSpec& spec);

Table scheme_table(const SchemeComparison& c);
Table scheme_paths_table(const SchemeComparison& c);
Table framework_table(const FrameworkComparison& c);
Table checks_table(const std::vector<OrderingCheck>& checks);

/// Runs `count` independent jobs on up to `jobs` threads; results land by index.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& body);

}  // namespace maddr
