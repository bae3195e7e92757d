#include "maddr/cli.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "maddr/allocator.hpp"
#include "maddr/discovery.hpp"
#include "maddr/engine.hpp"
#include "maddr/experiments.hpp"
#include "maddr/metrics.hpp"
#include "maddr/report.hpp"
#include "maddr/scenario.hpp"

namespace maddr {

namespace {

namespace fs = std::filesystem;

struct Options {
    std::string scenario;
    std::string out;
    std::string format{"text"};
    std::optional<std::uint64_t> seed;
    std::optional<int> scheme;
    std::optional<std::int64_t> packets;
    std::optional<int> source;
    bool choke{false};
    std::optional<double> probe_at;
    bool trace{false};
    bool plot_data{false};
    bool rediscover{false};
    unsigned jobs{1};
    std::string suite{"schemes"};
    std::vector<std::int64_t> packet_list{100, 200};
    int repetitions{1};
    int verbosity{0};

    // gen-topology
    int count{1000};
    double width{501.0};
    double height{501.0};
    double radius{2.4};
    std::int64_t gen_packets{100};
};

// Files are rendered in memory and only written once everything succeeded.
using FileSet = std::vector<std::pair<std::string, std::string>>;

std::string render(const Table& t, OutputFormat f) {
    std::ostringstream os;
    write_table(t, f, os);
    return os.str();
}

void write_files(const std::string& dir, const FileSet& files) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error(fmt::format("cannot create output directory {}", dir));
    for (const auto& [name, body] : files) {
        std::ofstream f(fs::path(dir) / name, std::ios::binary);
        if (!f) throw std::runtime_error(fmt::format("cannot write {}/{}", dir, name));
        f << body;
    }
}

std::string series(const std::vector<std::pair<double, double>>& pts) {
    std::string out;
    for (const auto& [x, y] : pts) out += fmt::format("{:.9f} {:.9f}\n", x, y);
    return out;
}

Scenario load_with_overrides(const Options& o) {
    Scenario s = load_scenario(o.scenario);
    if (o.seed) s.seed = *o.seed;
    for (SourceConfig& c : s.sources) {
        if (o.source && c.id.value != *o.source) continue;
        if (o.packets) {
            if (*o.packets < 0) throw ScenarioError("--packets must be non-negative");
            c.packets = *o.packets;
            c.quotas.reset();
        }
        if (o.scheme) {
            c.scheme = scheme_from_int(*o.scheme);
            c.quotas.reset();
        }
    }
    if (o.source) (void)s.source(NodeId{*o.source});
    return s;
}

std::vector<const SourceConfig*> selected_sources(const Scenario& s, const Options& o) {
    std::vector<const SourceConfig*> out;
    for (const SourceConfig& c : s.sources) {
        if (!o.source || c.id.value == *o.source) out.push_back(&c);
    }
    return out;
}

int cmd_discover(const Options& o, std::ostream& out) {
    const Scenario s = load_with_overrides(o);
    const Topology topo = s.topology();
    const OutputFormat fmt_out = format_from_string(o.format);
    Table t;
    t.columns = {"source", "path", "nodes", "hops", "tau", "hop_distance"};
    for (const SourceConfig* c : selected_sources(s, o)) {
        const auto paths = resolve_paths(s, topo, *c, o.rediscover);
        for (std::size_t j = 0; j < paths.size(); ++j) {
            const PathInfo& p = paths[j];
            t.add({num(c->id.value), num(static_cast<int>(j) + 1), str(join_nodes(p.nodes)),
                   num(p.hops), num(p.tau), num(p.hop_distance)});
        }
    }
    if (fmt_out == OutputFormat::text) {
        const NetworkParams& p = s.params;
        out << fmt::format(
            "parameters: K_r={} e_t={} e_d={} k={} e_r={} T_1b={} T_2b={} S={} R_radio={}\n",
            p.sensing_power, p.tx_electronics, p.tx_amplifier, p.path_loss_exponent,
            p.rx_electronics, p.bit_tx_time, p.bit_rx_time, p.packet_bits, p.radio_range);
    }
    write_table(t, fmt_out, out);
    return kExitOk;
}

int cmd_allocate(const Options& o, std::ostream& out) {
    Scenario s = load_with_overrides(o);
    const Topology topo = s.topology();
    const OutputFormat fmt_out = format_from_string(o.format);

    // With --choke the contention counts come from probing a loaded run.
    std::map<std::pair<int, int>, int> probed;
    if (o.choke) {
        Scenario loaded = s;
        loaded.engine.probe_at = o.probe_at ? o.probe_at : s.engine.probe_at;
        if (!loaded.engine.probe_at) loaded.engine.probe_at = 0.0;
        RunOptions ro;
        ro.rediscover = o.rediscover;
        const RunMetrics m = run(loaded, ro);
        for (const ChokeSample& c : m.choke_samples) {
            if (!c.failed) probed[{c.source.value, c.path_index}] = c.count;
        }
    }

    Table t;
    t.columns = {"source", "path", "hops", "tau", "contention", "raw_quota", "quota",
                 "within_bound"};
    for (const SourceConfig* c : selected_sources(s, o)) {
        const auto paths = resolve_paths(s, topo, *c, o.rediscover);
        AllocationInput in;
        in.params = s.params;
        in.packets = c->packets;
        in.source_sink_distance = topo.distance(c->id, topo.sink());
        for (std::size_t j = 0; j < paths.size(); ++j) {
            int contention = 0;
            const auto it = probed.find({c->id.value, static_cast<int>(j)});
            if (it != probed.end()) contention = std::min(it->second, paths[j].hops + 1);
            in.paths.push_back({paths[j].hops, paths[j].tau, contention});
        }
        const Allocation a = scheme_allocation(c->scheme, in, o.choke || c->contention_aware);
        for (std::size_t j = 0; j < paths.size(); ++j) {
            const bool has_bound = j < a.raw_quotas.size() && !a.raw_quotas.empty();
            t.add({num(c->id.value), num(static_cast<int>(j) + 1), num(paths[j].hops),
                   num(paths[j].tau), num(in.paths[j].contention),
                   has_bound ? num(a.raw_quotas[j]) : str(""), num(a.quotas[j]),
                   has_bound ? flag(!a.exceeds_bound[j]) : str("")});
        }
    }
    write_table(t, fmt_out, out);
    return kExitOk;
}

int cmd_run(const Options& o, std::ostream& out) {
    const Scenario s = load_with_overrides(o);
    const OutputFormat fmt_out = format_from_string(o.format);
    std::ostringstream trace;
    RunOptions ro;
    ro.rediscover = o.rediscover;
    if (o.trace) ro.trace = &trace;
    const RunMetrics m = run(s, ro);

    FileSet files;
    const std::string ext = extension(fmt_out);
    files.emplace_back("metrics" + ext, render(paths_table(m), fmt_out));
    files.emplace_back("sources" + ext, render(sources_table(m), fmt_out));
    files.emplace_back("faults" + ext, render(faults_table(m), fmt_out));
    files.emplace_back("choke" + ext, render(choke_table(m), fmt_out));
    files.emplace_back("summary.txt", render(summary_table(m), OutputFormat::text));
    if (o.trace) files.emplace_back("trace.csv", "time,kind,node,packet\n" + trace.str());
    if (o.plot_data) {
        std::vector<std::pair<double, double>> alloc;
        std::vector<std::pair<double, double>> delay;
        for (std::size_t i = 0; i < m.paths.size(); ++i) {
            alloc.emplace_back(static_cast<double>(i + 1), static_cast<double>(m.paths[i].quota));
            delay.emplace_back(static_cast<double>(i + 1), m.paths[i].delivery_time);
        }
        files.emplace_back("plot_path_allocation.dat", series(alloc));
        files.emplace_back("plot_path_delay.dat", series(delay));
    }
    if (!o.out.empty()) {
        write_files(o.out, files);
    } else {
        out << files[4].second;
    }
    return kExitOk;
}

int cmd_experiment(const Options& o, std::ostream& out) {
    const Scenario s = load_with_overrides(o);
    const OutputFormat fmt_out = format_from_string(o.format);
    ExperimentSpec spec;
    spec.name = o.suite;
    spec.packets = o.packet_list;
    spec.repetitions = o.repetitions;
    spec.jobs = o.jobs;
    const std::string ext = extension(fmt_out);
    FileSet files;
    std::vector<OrderingCheck> checks;
    if (o.suite == "schemes") {
        const NodeId src = o.source ? NodeId{*o.source} : NodeId{};
        const SchemeComparison c = run_scheme_comparison(s, spec, src);
        checks = c.checks;
        files.emplace_back("schemes" + ext, render(scheme_table(c), fmt_out));
        files.emplace_back("scheme_paths" + ext, render(scheme_paths_table(c), fmt_out));
        if (o.plot_data) {
            for (std::int64_t d : spec.packets) {
                std::vector<std::pair<double, double>> delay;
                std::vector<std::pair<double, double>> energy;
                for (const SchemeCell& cell : c.cells) {
                    if (cell.packets != d || cell.seed != c.cells.front().seed) continue;
                    delay.emplace_back(static_cast<double>(cell.scheme), cell.delay);
                    energy.emplace_back(static_cast<double>(cell.scheme), cell.energy);
                }
                files.emplace_back(fmt::format("plot_delay_vs_scheme_D{}.dat", d), series(delay));
                files.emplace_back(fmt::format("plot_energy_vs_scheme_D{}.dat", d), series(energy));
                const SchemeCell& s3 = c.cell(d, Scheme::strategic, c.cells.front().seed);
                std::vector<std::pair<double, double>> alloc;
                std::vector<std::pair<double, double>> pdelay;
                for (const PathMetrics& p : s3.metrics.paths) {
                    if (p.source != c.source) continue;
                    alloc.emplace_back(p.path_index + 1.0, static_cast<double>(p.quota));
                    pdelay.emplace_back(p.path_index + 1.0, p.delivery_time);
                }
                files.emplace_back(fmt::format("plot_path_allocation_D{}.dat", d), series(alloc));
                files.emplace_back(fmt::format("plot_path_delay_D{}.dat", d), series(pdelay));
            }
        }
    } else if (o.suite == "frameworks") {
        const FrameworkComparison c = run_multisource_frameworks(s, spec);
        checks = c.checks;
        files.emplace_back("frameworks" + ext, render(framework_table(c), fmt_out));
        if (o.plot_data) {
            for (std::int64_t d : spec.packets) {
                std::vector<std::pair<double, double>> delay;
                std::vector<std::pair<double, double>> energy;
                for (const FrameworkCell& cell : c.cells) {
                    if (cell.packets != d || cell.seed != c.cells.front().seed) continue;
                    delay.emplace_back(static_cast<double>(cell.framework), cell.metrics.net_completion);
                    energy.emplace_back(static_cast<double>(cell.framework), cell.metrics.total_energy);
                }
                files.emplace_back(fmt::format("plot_delay_vs_framework_D{}.dat", d), series(delay));
                files.emplace_back(fmt::format("plot_energy_vs_framework_D{}.dat", d), series(energy));
            }
        }
    } else {
        throw CLI::ValidationError("--suite", "must be schemes or frameworks");
    }
    const std::string check_text = render(checks_table(checks), OutputFormat::text);
    files.emplace_back("checks" + ext, render(checks_table(checks), fmt_out));
    if (!o.out.empty()) {
        write_files(o.out, files);
    } else {
        out << files.front().second;
    }
    out << check_text;
    return kExitOk;
}

int cmd_gen_topology(const Options& o, std::ostream& out, std::ostream& err) {
    GeneratorOptions g;
    g.count = o.count;
    g.width = o.width;
    g.height = o.height;
    g.radius = o.radius;
    g.seed = o.seed.value_or(1);
    g.packets = o.gen_packets;
    const GeneratedTopology gen = generate_topology(g);
    if (!gen.connected) {
        err << fmt::format("warning: source {} cannot reach sink {} at radius {}\n",
                           gen.scenario.sources.front().id.value, gen.scenario.sink.value,
                           g.radius);
    }
    const std::string text = scenario_to_json_text(gen.scenario);
    if (o.out.empty()) {
        out << text;
    } else {
        std::ofstream f(o.out, std::ios::binary);
        if (!f) throw std::runtime_error(fmt::format("cannot write {}", o.out));
        f << text;
    }
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-source multipath routing simulator for sensor networks", "maddr"};
    app.require_subcommand(1);
    Options o;

    const auto common = [&](CLI::App* sub, bool needs_out) {
        sub->add_option("--scenario", o.scenario, "scenario JSON file")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--format", o.format, "csv, text or json-lines")
            ->check(CLI::IsMember({"csv", "text", "json-lines"}));
        sub->add_option("--seed", o.seed, "seed override");
        sub->add_option("--source", o.source, "restrict to one source id");
        sub->add_flag("--rediscover", o.rediscover, "ignore explicit paths and run discovery");
        sub->add_flag("-v,--verbose", o.verbosity, "more output");
        if (needs_out) sub->add_option("--out", o.out, "output directory");
    };

    CLI::App* discover = app.add_subcommand("discover", "list each source's paths");
    common(discover, false);

    CLI::App* allocate = app.add_subcommand("allocate", "per-path packet quotas");
    common(allocate, false);
    allocate->add_option("--packets", o.packets, "packets per source");
    allocate->add_option("--scheme", o.scheme, "1, 2 or 3")->check(CLI::Range(1, 3));
    allocate->add_flag("--choke", o.choke, "use contention counts probed during a run");
    allocate->add_option("--probe-at", o.probe_at, "probe time after data start for --choke");

    CLI::App* run_cmd = app.add_subcommand("run", "simulate a scenario");
    common(run_cmd, true);
    run_cmd->add_option("--packets", o.packets, "packets per source");
    run_cmd->add_option("--scheme", o.scheme, "1, 2 or 3")->check(CLI::Range(1, 3));
    run_cmd->add_flag("--trace", o.trace, "write the event trace");
    run_cmd->add_flag("--plot-data", o.plot_data, "write two-column plot series");

    CLI::App* experiment = app.add_subcommand("experiment", "run a packaged comparison");
    common(experiment, true);
    experiment->add_option("--suite", o.suite, "schemes or frameworks")
        ->check(CLI::IsMember({"schemes", "frameworks"}));
    experiment->add_option("--packets", o.packet_list, "packet counts, comma separated")
        ->delimiter(',');
    experiment->add_option("--repetitions", o.repetitions, "repetitions per cell")
        ->check(CLI::PositiveNumber);
    experiment->add_option("--jobs", o.jobs, "parallel runs")->check(CLI::PositiveNumber);
    experiment->add_flag("--plot-data", o.plot_data, "write two-column plot series");

    CLI::App* gen = app.add_subcommand("gen-topology", "random uniform deployment");
    gen->add_option("--count", o.count, "node count")->check(CLI::Range(2, 10'000'000));
    gen->add_option("--width", o.width, "area width (m)")->check(CLI::PositiveNumber);
    gen->add_option("--height", o.height, "area height (m)")->check(CLI::PositiveNumber);
    gen->add_option("--radius", o.radius, "radio range (m)")->check(CLI::PositiveNumber);
    gen->add_option("--seed", o.seed, "placement seed");
    gen->add_option("--packets", o.gen_packets, "packets for the source");
    gen->add_option("--out", o.out, "output file (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o_out;
        std::ostringstream o_err;
        const int code = app.exit(e, o_out, o_err);
        out << o_out.str();
        err << o_err.str();
        return code == 0 ? kExitOk : kExitUsage;
    }
    if (experiment->parsed() && o.packet_list.empty()) {
        err << "error: --packets needs at least one value\n";
        return kExitUsage;
    }

    try {
        if (discover->parsed()) return cmd_discover(o, out);
        if (allocate->parsed()) return cmd_allocate(o, out);
        if (run_cmd->parsed()) return cmd_run(o, out);
        if (experiment->parsed()) return cmd_experiment(o, out);
        if (gen->parsed()) return cmd_gen_topology(o, out, err);
    } catch (const CLI::Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const SimulationError& e) {
        err << "simulation error: " << e.what() << '\n';
        return kExitSimulation;
    } catch (const Error& e) {
        err << "scenario error: " << e.what() << '\n';
        return kExitScenario;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace maddr
