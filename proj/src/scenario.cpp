#include "maddr/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "maddr/discovery.hpp"

namespace maddr {

using nlohmann::json;

namespace {

template <typename E>
struct EnumName {
    E value;
    const char* name;
};

constexpr EnumName<QueueDiscipline> kDisciplines[] = {
    {QueueDiscipline::fragmented, "fragmented"}, {QueueDiscipline::fifo, "fifo"}};
constexpr EnumName<Forwarding> kForwardings[] = {
    {Forwarding::pipelined, "pipelined"}, {Forwarding::store_and_forward, "store_and_forward"}};
constexpr EnumName<Transmitter> kTransmitters[] = {{Transmitter::per_node, "per_node"},
                                                   {Transmitter::per_link, "per_link"}};
constexpr EnumName<EnergyMode> kEnergyModes[] = {{EnergyMode::per_bit, "per_bit"},
                                                 {EnergyMode::per_packet, "per_packet"}};
constexpr EnumName<SensingMode> kSensingModes[] = {{SensingMode::per_interval, "per_interval"},
                                                   {SensingMode::per_second, "per_second"}};
constexpr EnumName<FaultKind> kFaultKinds[] = {{FaultKind::node, "node"},
                                               {FaultKind::transmitter, "transmitter"},
                                               {FaultKind::link, "link"}};

template <typename E, std::size_t N>
E parse_enum(const json& j, const char* field, const EnumName<E> (&table)[N]) {
    const std::string s = j.get<std::string>();
    for (const auto& e : table) {
        if (s == e.name) return e.value;
    }
    throw ScenarioError(fmt::format("unknown value '{}' for {}", s, field));
}

template <typename E, std::size_t N>
const char* enum_name(E v, const EnumName<E> (&table)[N]) {
    for (const auto& e : table) {
        if (e.value == v) return e.name;
    }
    return "?";
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

NodeId read_id(const json& j) { return NodeId{j.get<std::int32_t>()}; }

std::vector<NodeId> read_ids(const json& j) {
    std::vector<NodeId> out;
    for (const auto& v : j) out.push_back(read_id(v));
    return out;
}

json ids_to_json(const std::vector<NodeId>& ids) {
    json a = json::array();
    for (NodeId n : ids) a.push_back(n.value);
    return a;
}

NetworkParams read_params(const json& j) {
    NetworkParams p;
    read_opt(j, "e_t", p.tx_electronics);
    read_opt(j, "e_d", p.tx_amplifier);
    read_opt(j, "k", p.path_loss_exponent);
    read_opt(j, "e_r", p.rx_electronics);
    read_opt(j, "T_1b", p.bit_tx_time);
    read_opt(j, "T_2b", p.bit_rx_time);
    read_opt(j, "K_r", p.sensing_power);
    read_opt(j, "S", p.packet_bits);
    read_opt(j, "R_radio", p.radio_range);
    read_opt(j, "initial_energy", p.initial_energy);
    read_opt(j, "idle_power", p.idle_power);
    return p;
}

json params_to_json(const NetworkParams& p) {
    return json{{"e_t", p.tx_electronics},   {"e_d", p.tx_amplifier},
                {"k", p.path_loss_exponent}, {"e_r", p.rx_electronics},
                {"T_1b", p.bit_tx_time},     {"T_2b", p.bit_rx_time},
                {"K_r", p.sensing_power},    {"S", p.packet_bits},
                {"R_radio", p.radio_range},  {"initial_energy", p.initial_energy},
                {"idle_power", p.idle_power}};
}

Scenario from_json(const json& j) {
    Scenario s;
    read_opt(j, "name", s.name);
    read_opt(j, "seed", s.seed);
    if (j.contains("params")) s.params = read_params(j.at("params"));
    if (j.contains("links")) {
        const json& l = j.at("links");
        read_opt(l, "bit_rate", s.link_defaults.bit_rate);
        read_opt(l, "delay", s.link_defaults.delay);
        if (l.contains("overrides")) {
            for (const json& o : l.at("overrides")) {
                LinkOverride lo;
                lo.a = read_id(o.at("a"));
                lo.b = read_id(o.at("b"));
                if (o.contains("bit_rate")) lo.bit_rate = o.at("bit_rate").get<double>();
                if (o.contains("delay")) lo.delay = o.at("delay").get<double>();
                s.link_overrides.push_back(lo);
            }
        }
    }
    if (!j.contains("nodes")) throw ScenarioError("scenario has no nodes");
    for (const json& n : j.at("nodes")) {
        NodeSpec spec;
        spec.id = read_id(n.at("id"));
        spec.position = {n.at("x").get<double>(), n.at("y").get<double>()};
        read_opt(n, "redundant", spec.redundant);
        if (n.contains("queue_bits")) spec.queue_bits = n.at("queue_bits").get<double>();
        s.nodes.push_back(spec);
    }
    if (!j.contains("sink")) throw ScenarioError("scenario has no sink");
    s.sink = read_id(j.at("sink"));
    if (j.contains("sources")) {
        for (const json& src : j.at("sources")) {
            SourceConfig c;
            c.id = read_id(src.at("id"));
            read_opt(src, "packets", c.packets);
            if (src.contains("scheme")) c.scheme = scheme_from_int(src.at("scheme").get<int>());
            read_opt(src, "contention_aware", c.contention_aware);
            read_opt(src, "priority", c.priority);
            read_opt(src, "copies_per_path", c.copies_per_path);
            if (src.contains("paths")) {
                for (const json& p : src.at("paths")) c.paths.push_back(read_ids(p));
            }
            if (src.contains("quotas")) {
                c.quotas = src.at("quotas").get<std::vector<std::int64_t>>();
            }
            if (c.packets < 0) throw ScenarioError("packet counts must be non-negative");
            s.sources.push_back(std::move(c));
        }
    }
    if (j.contains("max_paths")) s.max_paths = j.at("max_paths").get<std::size_t>();
    if (j.contains("engine")) {
        const json& e = j.at("engine");
        EngineConfig& c = s.engine;
        if (e.contains("queue_bits")) c.queue_bits = e.at("queue_bits").get<double>();
        read_opt(e, "subqueue_packets", c.subqueue_packets);
        if (e.contains("discipline")) c.discipline = parse_enum(e.at("discipline"), "discipline", kDisciplines);
        if (e.contains("forwarding")) c.forwarding = parse_enum(e.at("forwarding"), "forwarding", kForwardings);
        if (e.contains("transmitter")) c.transmitter = parse_enum(e.at("transmitter"), "transmitter", kTransmitters);
        if (e.contains("energy_mode")) c.energy_mode = parse_enum(e.at("energy_mode"), "energy_mode", kEnergyModes);
        if (e.contains("sensing")) c.sensing = parse_enum(e.at("sensing"), "sensing", kSensingModes);
        read_opt(e, "idle_energy", c.idle_energy);
        read_opt(e, "loss_probability", c.loss_probability);
        read_opt(e, "event_cap", c.event_cap);
        read_opt(e, "choke_threshold", c.choke_threshold);
        read_opt(e, "control_phase", c.control_phase);
        if (e.contains("probe_at")) c.probe_at = e.at("probe_at").get<double>();
        if (e.contains("control_packet_bits")) {
            c.control_packet_bits = e.at("control_packet_bits").get<double>();
        }
        if (c.subqueue_packets < 0) throw ScenarioError("subqueue_packets must be non-negative");
        if (!(c.loss_probability >= 0.0 && c.loss_probability < 1.0)) {
            throw ScenarioError("loss_probability must lie in [0, 1)");
        }
    }
    if (j.contains("faults")) {
        const json& f = j.at("faults");
        read_opt(f, "max_attempts", s.faults.max_attempts);
        read_opt(f, "receiver_timer", s.faults.receiver_timer);
        if (s.faults.max_attempts < 1) throw ScenarioError("max_attempts must be at least 1");
        if (f.contains("schedule")) {
            for (const json& e : f.at("schedule")) {
                ScheduledFault sf;
                if (e.contains("kind")) sf.kind = parse_enum(e.at("kind"), "fault kind", kFaultKinds);
                sf.node = read_id(e.at("node"));
                if (e.contains("peer")) sf.peer = read_id(e.at("peer"));
                read_opt(e, "time", sf.time);
                if (sf.kind == FaultKind::link && !sf.peer.valid()) {
                    throw ScenarioError("link faults need a peer");
                }
                s.faults.schedule.push_back(sf);
            }
        }
    }
    return s;
}

json to_json(const Scenario& s) {
    json j;
    j["name"] = s.name;
    j["seed"] = s.seed;
    j["params"] = params_to_json(s.params);
    json links{{"bit_rate", s.link_defaults.bit_rate}, {"delay", s.link_defaults.delay}};
    if (!s.link_overrides.empty()) {
        json arr = json::array();
        for (const LinkOverride& o : s.link_overrides) {
            json e{{"a", o.a.value}, {"b", o.b.value}};
            if (o.bit_rate) e["bit_rate"] = *o.bit_rate;
            if (o.delay) e["delay"] = *o.delay;
            arr.push_back(e);
        }
        links["overrides"] = arr;
    }
    j["links"] = links;
    json nodes = json::array();
    for (const NodeSpec& n : s.nodes) {
        json e{{"id", n.id.value}, {"x", n.position.x}, {"y", n.position.y}};
        if (n.redundant) e["redundant"] = true;
        if (n.queue_bits) e["queue_bits"] = *n.queue_bits;
        nodes.push_back(e);
    }
    j["nodes"] = nodes;
    j["sink"] = s.sink.value;
    json sources = json::array();
    for (const SourceConfig& c : s.sources) {
        json e{{"id", c.id.value},
               {"packets", c.packets},
               {"scheme", static_cast<int>(c.scheme)},
               {"contention_aware", c.contention_aware},
               {"priority", c.priority}};
        if (c.copies_per_path > 0) e["copies_per_path"] = c.copies_per_path;
        if (!c.paths.empty()) {
            json paths = json::array();
            for (const auto& p : c.paths) paths.push_back(ids_to_json(p));
            e["paths"] = paths;
        }
        if (c.quotas) e["quotas"] = *c.quotas;
        sources.push_back(e);
    }
    j["sources"] = sources;
    j["max_paths"] = s.max_paths;
    const EngineConfig& c = s.engine;
    json e{{"subqueue_packets", c.subqueue_packets},
           {"discipline", enum_name(c.discipline, kDisciplines)},
           {"forwarding", enum_name(c.forwarding, kForwardings)},
           {"transmitter", enum_name(c.transmitter, kTransmitters)},
           {"energy_mode", enum_name(c.energy_mode, kEnergyModes)},
           {"sensing", enum_name(c.sensing, kSensingModes)},
           {"idle_energy", c.idle_energy},
           {"loss_probability", c.loss_probability},
           {"event_cap", c.event_cap},
           {"choke_threshold", c.choke_threshold},
           {"control_phase", c.control_phase}};
    if (c.control_packet_bits) e["control_packet_bits"] = *c.control_packet_bits;
    if (c.queue_bits) e["queue_bits"] = *c.queue_bits;
    if (c.probe_at) e["probe_at"] = *c.probe_at;
    j["engine"] = e;
    json sched = json::array();
    for (const ScheduledFault& f : s.faults.schedule) {
        json fe{{"kind", enum_name(f.kind, kFaultKinds)}, {"node", f.node.value}, {"time", f.time}};
        if (f.peer.valid()) fe["peer"] = f.peer.value;
        sched.push_back(fe);
    }
    j["faults"] = json{{"max_attempts", s.faults.max_attempts},
                       {"receiver_timer", s.faults.receiver_timer},
                       {"schedule", sched}};
    return j;
}

}  // namespace

std::vector<NodeId> Scenario::source_ids() const {
    std::vector<NodeId> out;
    for (const SourceConfig& c : sources) out.push_back(c.id);
    return out;
}

Topology Scenario::topology() const {
    const auto ids = source_ids();
    return build_topology(nodes, params, link_defaults, link_overrides, ids, sink);
}

const SourceConfig& Scenario::source(NodeId id) const {
    for (const SourceConfig& c : sources) {
        if (c.id == id) return c;
    }
    throw ScenarioError(fmt::format("{} is not a source", id.value));
}

SourceConfig& Scenario::source(NodeId id) {
    return const_cast<SourceConfig&>(std::as_const(*this).source(id));
}

Scenario scenario_from_json_text(const std::string& text) {
    try {
        return from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw ScenarioError(fmt::format("malformed scenario: {}", e.what()));
    } catch (const DomainError& e) {
        throw ScenarioError(e.what());
    }
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError(fmt::format("cannot open scenario file {}", path.string()));
    std::stringstream buf;
    buf << in.rdbuf();
    return scenario_from_json_text(buf.str());
}

std::string scenario_to_json_text(const Scenario& scenario) {
    return to_json(scenario).dump(2) + "\n";
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ScenarioError(fmt::format("cannot write {}", path.string()));
    out << scenario_to_json_text(scenario);
}

std::uint64_t scenario_hash(const Scenario& scenario) {
    const std::string canon = to_json(scenario).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t hash) { return fmt::format("{:016x}", hash); }

std::vector<PathInfo> resolve_paths(const Scenario& scenario, const Topology& topology,
                                    const SourceConfig& source, bool rediscover) {
    if (source.paths.empty() || rediscover) {
        return discover_paths(topology, source.id, topology.sink(), scenario.max_paths);
    }
    std::vector<PathInfo> out;
    for (const auto& seq : source.paths) {
        PathInfo p = validate_path(topology, seq);
        if (p.source() != source.id || p.sink() != topology.sink()) {
            throw ScenarioError(fmt::format("path for source {} must run from it to the sink",
                                            source.id.value));
        }
        out.push_back(std::move(p));
    }
    if (!locally_disjoint(out)) {
        throw ScenarioError(
            fmt::format("explicit paths of source {} share interior nodes", source.id.value));
    }
    return out;
}

SourceSpec make_source_spec(const Topology& topology, const SourceConfig& source,
                            std::vector<PathInfo> paths) {
    SourceSpec spec;
    spec.source = source.id;
    spec.packets = source.packets;
    spec.source_sink_distance = topology.distance(source.id, topology.sink());
    spec.paths = std::move(paths);
    return spec;
}

double uniform01(std::uint64_t draw) { return static_cast<double>(draw >> 11) * 0x1.0p-53; }

GeneratedTopology generate_topology(const GeneratorOptions& options) {
    if (options.count < 2) throw DomainError("a generated topology needs at least 2 nodes");
    if (!(options.width > 0.0) || !(options.height > 0.0) || !(options.radius > 0.0)) {
        throw DomainError("area and radius must be positive");
    }
    std::mt19937_64 rng(options.seed);
    GeneratedTopology g;
    Scenario& s = g.scenario;
    s.name = fmt::format("random-{}-seed{}", options.count, options.seed);
    s.seed = options.seed;
    s.params.radio_range = options.radius;
    for (int i = 1; i <= options.count; ++i) {
        NodeSpec n;
        n.id = NodeId{i};
        n.position.x = uniform01(rng()) * options.width;
        n.position.y = uniform01(rng()) * options.height;
        s.nodes.push_back(n);
    }
    s.sink = NodeId{options.count};
    SourceConfig src;
    src.id = NodeId{1};
    src.packets = options.packets;
    s.sources.push_back(src);
    try {
        (void)s.topology();
    } catch (const ConnectivityError&) {
        g.connected = false;
    }
    return g;
}

}  // namespace maddr
