#include "maddr/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <numeric>
#include <thread>

#include <fmt/format.h>

namespace maddr {

namespace {

// Orderings are compared with a little slack for floating-point noise.
bool le(double a, double b) { return a <= b + 1e-9 * std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace

const char* to_string(Framework f) {
    switch (f) {
        case Framework::traditional: return "traditional";
        case Framework::equal_split: return "equal";
        case Framework::strategic: return "strategic";
    }
    return "?";
}

Scenario framework_scenario(const Scenario& base, Framework framework, std::int64_t packets) {
    Scenario s = base;
    for (SourceConfig& c : s.sources) {
        c.packets = packets;
        c.quotas.reset();
        c.copies_per_path = 0;
        c.contention_aware = false;
    }
    switch (framework) {
        case Framework::traditional:
            s.engine.discipline = QueueDiscipline::fifo;
            s.engine.control_phase = false;
            for (SourceConfig& c : s.sources) c.copies_per_path = 1;
            break;
        case Framework::equal_split:
            s.engine.discipline = QueueDiscipline::fragmented;
            for (SourceConfig& c : s.sources) c.scheme = Scheme::equal_split;
            break;
        case Framework::strategic:
            s.engine.discipline = QueueDiscipline::fragmented;
            for (SourceConfig& c : s.sources) {
                c.scheme = Scheme::strategic;
                c.contention_aware = true;
            }
            break;
    }
    return s;
}

Scenario scheme_scenario(const Scenario& base, NodeId source, Scheme scheme, std::int64_t packets) {
    Scenario s = base;
    SourceConfig& c = s.source(source);
    c.packets = packets;
    c.scheme = scheme;
    c.quotas.reset();
    c.copies_per_path = 0;
    return s;
}

std::vector<std::uint64_t> ExperimentSpec::resolved_seeds(std::uint64_t base) const {
    if (repetitions < 1) throw DomainError("repetitions must be at least 1");
    if (!seeds.empty()) {
        if (seeds.size() != static_cast<std::size_t>(repetitions)) {
            throw DomainError("need exactly one seed per repetition");
        }
        std::vector<std::uint64_t> sorted = seeds;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw DomainError("repetition seeds must be distinct");
        }
        return seeds;
    }
    std::vector<std::uint64_t> out;
    for (int i = 0; i < repetitions; ++i) out.push_back(base + static_cast<std::uint64_t>(i));
    return out;
}

double coefficient_of_variation(const std::vector<double>& values) {
    if (values.size() < 2) return 0.0;
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (mean == 0.0) return 0.0;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / n) / mean;
}

void parallel_for(std::size_t count, unsigned jobs,
                  const std::function<void(std::size_t)>& body) {
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

const SchemeCell& SchemeComparison::cell(std::int64_t packets, Scheme scheme,
                                         std::uint64_t seed) const {
    for (const SchemeCell& c : cells) {
        if (c.packets == packets && c.scheme == scheme && c.seed == seed) return c;
    }
    throw Error("no such scheme cell");
}

const FrameworkCell& FrameworkComparison::cell(std::int64_t packets, Framework framework,
                                               std::uint64_t seed) const {
    for (const FrameworkCell& c : cells) {
        if (c.packets == packets && c.framework == framework && c.seed == seed) return c;
    }
    throw Error("no such framework cell");
}

SchemeComparison run_scheme_comparison(const Scenario& scenario, const ExperimentSpec& spec,
                                       NodeId source) {
    if (scenario.sources.empty()) throw ScenarioError("scenario has no sources");
    SchemeComparison out;
    out.source = source.valid() ? source : scenario.sources.front().id;
    out.scenario_hash = hash_hex(scenario_hash(scenario));
    const auto seeds = spec.resolved_seeds(scenario.seed);
    for (std::int64_t d : spec.packets) {
        for (std::uint64_t seed : seeds) {
            for (Scheme s : {Scheme::single_path, Scheme::equal_split, Scheme::strategic}) {
                SchemeCell c;
                c.packets = d;
                c.scheme = s;
                c.seed = seed;
                out.cells.push_back(std::move(c));
            }
        }
    }
    parallel_for(out.cells.size(), spec.jobs, [&](std::size_t i) {
        SchemeCell& c = out.cells[i];
        Scenario s = scheme_scenario(scenario, out.source, c.scheme, c.packets);
        RunOptions opts;
        opts.seed = c.seed;
        c.metrics = run(s, opts);
        c.delay = c.metrics.source(out.source).completion_time;
        c.energy = c.metrics.total_energy;
        std::vector<double> delays;
        for (const PathMetrics& p : c.metrics.paths) {
            if (p.source == out.source && p.quota > 0) delays.push_back(p.delivery_time);
        }
        c.delay_cv = coefficient_of_variation(delays);
    });
    for (std::int64_t d : spec.packets) {
        for (std::uint64_t seed : seeds) {
            const SchemeCell& s1 = out.cell(d, Scheme::single_path, seed);
            const SchemeCell& s2 = out.cell(d, Scheme::equal_split, seed);
            const SchemeCell& s3 = out.cell(d, Scheme::strategic, seed);
            out.checks.push_back(
                {fmt::format("delay S3<=S2<=S1 D={} seed={}", d, seed),
                 le(s3.delay, s2.delay) && le(s2.delay, s1.delay),
                 fmt::format("{:.6f} {:.6f} {:.6f}", s3.delay, s2.delay, s1.delay)});
            out.checks.push_back(
                {fmt::format("energy S1<=S3<=S2 D={} seed={}", d, seed),
                 le(s1.energy, s3.energy) && le(s3.energy, s2.energy),
                 fmt::format("{:.9f} {:.9f} {:.9f}", s1.energy, s3.energy, s2.energy)});
        }
    }
    return out;
}

FrameworkComparison run_multisource_frameworks(const Scenario& scenario,
                                               const ExperimentSpec& spec) {
    FrameworkComparison out;
    out.scenario_hash = hash_hex(scenario_hash(scenario));
    const auto seeds = spec.resolved_seeds(scenario.seed);
    for (std::int64_t d : spec.packets) {
        for (std::uint64_t seed : seeds) {
            for (Framework f : {Framework::traditional, Framework::equal_split, Framework::strategic}) {
                FrameworkCell c;
                c.packets = d;
                c.framework = f;
                c.seed = seed;
                out.cells.push_back(std::move(c));
            }
        }
    }
    parallel_for(out.cells.size(), spec.jobs, [&](std::size_t i) {
        FrameworkCell& c = out.cells[i];
        RunOptions opts;
        opts.seed = c.seed;
        c.metrics = run(framework_scenario(scenario, c.framework, c.packets), opts);
    });
    for (std::int64_t d : spec.packets) {
        for (std::uint64_t seed : seeds) {
            const RunMetrics& t = out.cell(d, Framework::traditional, seed).metrics;
            const RunMetrics& e = out.cell(d, Framework::equal_split, seed).metrics;
            const RunMetrics& s = out.cell(d, Framework::strategic, seed).metrics;
            out.checks.push_back({fmt::format("net delay strategic<=equal<=traditional D={} seed={}", d, seed),
                                  le(s.net_completion, e.net_completion) &&
                                      le(e.net_completion, t.net_completion),
                                  fmt::format("{:.6f} {:.6f} {:.6f}", s.net_completion,
                                              e.net_completion, t.net_completion)});
            out.checks.push_back({fmt::format("net energy strategic<=equal<=traditional D={} seed={}", d, seed),
                                  le(s.total_energy, e.total_energy) &&
                                      le(e.total_energy, t.total_energy),
                                  fmt::format("{:.9f} {:.9f} {:.9f}", s.total_energy,
                                              e.total_energy, t.total_energy)});
            for (const SourceMetrics& sm : s.sources) {
                const SourceMetrics& em = e.source(sm.id);
                const SourceMetrics& tm = t.source(sm.id);
                out.checks.push_back(
                    {fmt::format("source {} delay strategic<=equal<=traditional D={} seed={}",
                                 sm.id.value, d, seed),
                     le(sm.completion_time, em.completion_time) &&
                         le(em.completion_time, tm.completion_time),
                     fmt::format("{:.6f} {:.6f} {:.6f}", sm.completion_time, em.completion_time,
                                 tm.completion_time)});
                out.checks.push_back(
                    {fmt::format("source {} energy strategic<=equal<=traditional D={} seed={}",
                                 sm.id.value, d, seed),
                     le(sm.energy, em.energy) && le(em.energy, tm.energy),
                     fmt::format("{:.9f} {:.9f} {:.9f}", sm.energy, em.energy, tm.energy)});
            }
        }
    }
    return out;
}

Table scheme_table(const SchemeComparison& c) {
    Table t;
    t.columns = {"scenario_hash", "seed", "source", "packets", "scheme", "delay", "energy",
                 "delay_cv", "delivered", "dropped"};
    for (const SchemeCell& cell : c.cells) {
        const SourceMetrics& s = cell.metrics.source(c.source);
        t.add({str(c.scenario_hash), num(static_cast<std::int64_t>(cell.seed)), num(c.source.value),
               num(cell.packets), num(static_cast<int>(cell.scheme)), num(cell.delay),
               num(cell.energy), num(cell.delay_cv), num(s.delivered),
               num(s.dropped_overflow + s.dropped_fault)});
    }
    return t;
}

Table scheme_paths_table(const SchemeComparison& c) {
    Table t;
    t.columns = {"scenario_hash", "seed", "packets", "scheme", "path", "hops", "quota",
                 "delivery_time", "analytic_delay"};
    for (const SchemeCell& cell : c.cells) {
        for (const PathMetrics& p : cell.metrics.paths) {
            if (p.source != c.source) continue;
            t.add({str(c.scenario_hash), num(static_cast<std::int64_t>(cell.seed)),
                   num(cell.packets), num(static_cast<int>(cell.scheme)), num(p.path_index + 1),
                   num(p.hops), num(p.quota), num(p.delivery_time), num(p.analytic_delay)});
        }
    }
    return t;
}

Table framework_table(const FrameworkComparison& c) {
    Table t;
    t.columns = {"scenario_hash", "seed", "framework", "source", "packets", "delay", "energy",
                 "delivered", "duplicates", "dropped"};
    for (const FrameworkCell& cell : c.cells) {
        const RunMetrics& m = cell.metrics;
        for (const SourceMetrics& s : m.sources) {
            t.add({str(c.scenario_hash), num(static_cast<std::int64_t>(cell.seed)),
                   str(to_string(cell.framework)), num(s.id.value), num(cell.packets),
                   num(s.completion_time), num(s.energy), num(s.delivered), num(s.duplicates),
                   num(s.dropped_overflow + s.dropped_fault)});
        }
        t.add({str(c.scenario_hash), num(static_cast<std::int64_t>(cell.seed)),
               str(to_string(cell.framework)), str("net"), num(cell.packets),
               num(m.net_completion), num(m.total_energy), num(m.delivered), num(m.duplicates),
               num(m.dropped_overflow + m.dropped_fault)});
    }
    return t;
}

Table checks_table(const std::vector<OrderingCheck>& checks) {
    Table t;
    t.columns = {"check", "result", "values"};
    for (const OrderingCheck& c : checks) {
        t.add({str(c.name), str(c.pass ? "PASS" : "FAIL"), str(c.detail)});
    }
    return t;
}

}  // namespace maddr
