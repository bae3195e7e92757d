#include "maddr/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <queue>
#include <random>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "maddr/allocator.hpp"
#include "maddr/discovery.hpp"
#include "maddr/energy.hpp"
#include "maddr/metrics.hpp"
#include "maddr/queue.hpp"

namespace maddr {

const SourceMetrics& RunMetrics::source(NodeId id) const {
    for (const SourceMetrics& s : sources) {
        if (s.id == id) return s;
    }
    throw SimulationError(fmt::format("no metrics for source {}", id.value));
}

namespace {

enum class EvType { fault, service_done, arrival, rx_timer, control_start, data_start, choke_launch };

int rank_of(EvType t) {
    switch (t) {
        case EvType::fault: return 0;
        case EvType::service_done: return 1;
        case EvType::arrival: return 2;
        case EvType::rx_timer: return 3;
        default: return 4;
    }
}

const char* trace_name(EvType t) {
    switch (t) {
        case EvType::fault: return "fault";
        case EvType::service_done: return "service";
        case EvType::arrival: return "arrival";
        case EvType::rx_timer: return "timer";
        case EvType::control_start: return "control";
        case EvType::data_start: return "start";
        case EvType::choke_launch: return "probe";
    }
    return "?";
}

struct Event {
    double time{0.0};
    int rank{0};
    std::int32_t node{-1};
    std::uint64_t seq{0};
    EvType type{EvType::fault};
    Packet packet;
    std::size_t server{0};
    std::uint64_t epoch{0};
    NodeId aux;
    std::size_t index{0};
};

struct EventLater {
    bool operator()(const Event& a, const Event& b) const {
        return std::tie(a.time, a.rank, a.node, a.seq) > std::tie(b.time, b.rank, b.node, b.seq);
    }
};

struct Route {
    std::size_t source_index{0};
    int path_index{0};
    PathInfo path;
    std::int64_t quota{0};
    std::int64_t remaining{0};
    std::int64_t injected{0};
    std::int64_t arrivals{0};
    std::int64_t delivered{0};
    double last_arrival{0.0};
    bool abandoned{false};
    std::vector<std::int64_t> arrived_at;
    std::vector<std::int64_t> dropped_before;
    std::vector<std::vector<Packet>> staged;
    double wait_sum{0.0};
    std::int64_t wait_count{0};
    double raw_quota{0.0};
    bool exceeds{false};
    std::int64_t next_seq{0};
};

struct NodeState {
    NodeId id;
    NodeId phys;
    bool alive{true};
    bool tx_ok{true};
    bool self_faulty{false};
    bool abandoned{false};
    FragmentedQueue queue;
    std::vector<bool> busy;
    std::uint64_t epoch{0};
    bool is_source{false};
    std::size_t source_index{0};
};

struct PhysState {
    double active_from{0.0};
    std::optional<double> active_to;
    double busy_time{0.0};
    bool used{false};
    bool dead{false};
};

struct HopState {
    std::int64_t expected{0};
    std::int64_t arrived{0};
    std::int64_t dropped{0};
    bool seen{false};
    std::uint64_t gen{0};
    double tau{0.0};

    bool done() const { return arrived + dropped >= expected; }
};

struct SourceState {
    const SourceConfig* config{nullptr};
    std::vector<std::size_t> routes;
    SourceMetrics metrics;
    std::vector<char> seen_seq;
    std::int64_t next_seq{0};
    RefreshPolicy policy;
};

using HopKey = std::pair<NodeId, NodeId>;

class Simulator {
public:
    Simulator(const Scenario& scenario, const RunOptions& options);
    RunMetrics run();

private:
    NodeState& state(NodeId id);
    Position position(NodeId phys) const { return topo_.node(phys).position; }
    void schedule(Event ev);
    void trace(const Event& ev);

    void on_fault(const Event& ev);
    void on_service_done(Event& ev);
    void on_arrival(Event& ev);
    void on_timer(const Event& ev);
    void on_control_start();
    void on_data_start();
    void on_choke_launch();

    void kick(NodeId id);
    void serve(NodeState& n);
    bool refill(NodeState& n);
    void transmit(NodeState& n, std::size_t server, Packet pkt);
    void enqueue(NodeState& n, const Packet& pkt);
    void drop(const Packet& pkt, DropCause cause);
    void check_release(Route& r, std::size_t index);
    void check_all_releases();
    void route_undeliverable(Route& r);

    void start_fault_check(NodeState& x, NodeId suspect);
    void resolve_beacon(NodeState& x, const Packet& beacon, bool ok);
    void replace(NodeId failed, NodeId detector, FaultRecord record);
    void rearm(const HopKey& key);
    void kill_phys(NodeId phys);
    std::optional<double> last_fault_time(NodeId id) const;
    void debit(NodeId phys, double joules, EnergyCategory cat, NodeId source);
    void launch_choke(Route& r, std::size_t route_id, bool initial);
    void control_done(std::size_t route_id);
    bool is_source(NodeId id) const;

    void finalize();
    RunMetrics collect() const;

    const Scenario& sc_;
    RunOptions opts_;
    Topology topo_;
    NetworkParams params_;
    EngineConfig cfg_;
    double control_bits_{1000.0};
    std::mt19937_64 rng_;
    EnergyLedger ledger_;

    std::map<NodeId, NodeState> nodes_;
    std::map<NodeId, PhysState> phys_;
    std::set<NodeId> used_redundant_;
    std::set<HopKey> down_links_;
    std::vector<SourceState> sources_;
    std::vector<Route> routes_;
    std::map<HopKey, HopState> hops_;
    std::map<HopKey, int> consecutive_;
    std::set<HopKey> pending_beacon_;
    std::map<std::int64_t, NodeId> beacon_suspect_;
    std::set<std::int64_t> initial_chokes_;
    std::map<NodeId, std::vector<double>> fault_times_;
    std::vector<ScheduledFault> fault_list_;

    std::priority_queue<Event, std::vector<Event>, EventLater> events_;
    std::uint64_t next_seq_{0};
    std::int64_t next_uid_{0};
    double now_{0.0};
    double data_start_{0.0};
    bool data_started_{false};
    std::size_t pending_control_{0};
    bool timers_enabled_{false};

    std::int64_t retransmissions_{0};
    std::int64_t control_dropped_{0};
    std::int64_t table_refreshes_{0};
    std::int64_t event_count_{0};
    std::vector<FaultRecord> fault_records_;
    std::vector<ChokeSample> choke_samples_;
    std::vector<DispatchRecord> dispatches_;
};

Simulator::Simulator(const Scenario& scenario, const RunOptions& options)
    : sc_(scenario),
      opts_(options),
      topo_(scenario.topology()),
      params_(scenario.params),
      cfg_(scenario.engine),
      control_bits_(scenario.engine.control_packet_bits.value_or(scenario.params.packet_bits)),
      rng_(options.seed.value_or(scenario.seed)),
      ledger_(topo_.nodes()) {
    if (!(control_bits_ > 0.0)) throw ScenarioError("control packets need a positive size");
    for (const Node& node : topo_.nodes()) {
        PhysState ps;
        ps.used = !node.is_redundant;
        phys_[node.id] = ps;
        if (node.is_redundant) continue;
        NodeState n;
        n.id = node.id;
        n.phys = node.id;
        const auto& nbs = topo_.neighbors(node.id);
        std::size_t cap = static_cast<std::size_t>(std::max(cfg_.subqueue_packets, 0));
        if (node.queue_bits > 0.0) {
            cap = FragmentedQueue::capacity_for(node.queue_bits, node.neighbor_count, params_.packet_bits);
        } else if (cfg_.queue_bits) {
            cap = FragmentedQueue::capacity_for(*cfg_.queue_bits, node.neighbor_count, params_.packet_bits);
        }
        if (cfg_.discipline == QueueDiscipline::fifo) cap *= std::max<std::size_t>(nbs.size(), 1);
        n.queue = FragmentedQueue(node.id, nbs, cap, cfg_.discipline);
        const std::size_t servers =
            cfg_.transmitter == Transmitter::per_link ? std::max<std::size_t>(nbs.size(), 1) : 1;
        n.busy.assign(servers, false);
        nodes_.emplace(node.id, std::move(n));
    }

    for (const SourceConfig& cfg : sc_.sources) {
        SourceState s;
        s.config = &cfg;
        s.metrics.id = cfg.id;
        s.metrics.packets = cfg.packets;
        s.metrics.scheme = cfg.scheme;
        auto paths = resolve_paths(sc_, topo_, cfg, opts_.rediscover);
        for (std::size_t j = 0; j < paths.size(); ++j) {
            Route r;
            r.source_index = sources_.size();
            r.path_index = static_cast<int>(j);
            r.path = std::move(paths[j]);
            const std::size_t len = r.path.nodes.size();
            r.arrived_at.assign(len, 0);
            r.dropped_before.assign(len, 0);
            r.staged.assign(len, {});
            s.routes.push_back(routes_.size());
            routes_.push_back(std::move(r));
        }
        NodeState& n = state(cfg.id);
        n.is_source = true;
        n.source_index = sources_.size();
        sources_.push_back(std::move(s));
    }

    fault_list_ = sc_.faults.schedule;
    for (std::size_t i = 0; i < fault_list_.size(); ++i) {
        const ScheduledFault& f = fault_list_[i];
        if (!topo_.contains(f.node)) {
            throw ScenarioError(fmt::format("fault references unknown node {}", f.node.value));
        }
        if (f.kind == FaultKind::link && !topo_.adjacent(f.node, f.peer)) {
            throw ScenarioError(
                fmt::format("fault references missing link {}-{}", f.node.value, f.peer.value));
        }
        if (!(f.time >= 0.0)) throw ScenarioError("fault times must be non-negative");
        Event ev;
        ev.time = f.time;
        ev.type = EvType::fault;
        ev.node = f.node.value;
        ev.index = i;
        schedule(ev);
    }
    timers_enabled_ =
        sc_.faults.receiver_timer && (!fault_list_.empty() || cfg_.loss_probability > 0.0);

    Event start;
    start.type = cfg_.control_phase ? EvType::control_start : EvType::data_start;
    schedule(start);
}

NodeState& Simulator::state(NodeId id) {
    const auto it = nodes_.find(id);
    if (it == nodes_.end()) throw SimulationError(fmt::format("no active node {}", id.value));
    return it->second;
}

bool Simulator::is_source(NodeId id) const {
    for (const SourceState& s : sources_) {
        if (s.config->id == id) return true;
    }
    return false;
}

void Simulator::schedule(Event ev) {
    ev.rank = rank_of(ev.type);
    ev.seq = next_seq_++;
    events_.push(std::move(ev));
}

void Simulator::trace(const Event& ev) {
    if (opts_.trace == nullptr) return;
    const bool has_packet = ev.type == EvType::service_done || ev.type == EvType::arrival;
    *opts_.trace << fmt::format("{:.9f},{},{},{}\n", ev.time, trace_name(ev.type), ev.node,
                                has_packet ? ev.packet.uid : -1);
}

void Simulator::debit(NodeId phys, double joules, EnergyCategory cat, NodeId source) {
    const auto d = ledger_.debit(phys, joules, cat, source);
    if (d.depleted) kill_phys(phys);
}

void Simulator::kill_phys(NodeId phys) {
    PhysState& ps = phys_[phys];
    if (ps.dead) return;
    ps.dead = true;
    if (!ps.active_to) ps.active_to = now_;
    for (auto& [id, n] : nodes_) {
        if (n.phys == phys) {
            n.alive = false;
            fault_times_[id].push_back(now_);
        }
    }
}

std::optional<double> Simulator::last_fault_time(NodeId id) const {
    const auto it = fault_times_.find(id);
    if (it == fault_times_.end() || it->second.empty()) return std::nullopt;
    return it->second.back();
}

RunMetrics Simulator::run() {
    for (;;) {
        while (!events_.empty()) {
            Event ev = events_.top();
            events_.pop();
            now_ = ev.time;
            if (++event_count_ > cfg_.event_cap) {
                throw LivelockError(fmt::format(
                    "event cap {} reached at t={:.6f} with {} events pending", cfg_.event_cap,
                    now_, events_.size()));
            }
            trace(ev);
            switch (ev.type) {
                case EvType::fault: on_fault(ev); break;
                case EvType::service_done: on_service_done(ev); break;
                case EvType::arrival: on_arrival(ev); break;
                case EvType::rx_timer: on_timer(ev); break;
                case EvType::control_start: on_control_start(); break;
                case EvType::data_start: on_data_start(); break;
                case EvType::choke_launch: on_choke_launch(); break;
            }
        }
        if (data_started_) break;
        // Control traffic that never came back (lost to a fault) must not stall the run.
        Event start;
        start.time = now_;
        start.type = EvType::data_start;
        schedule(start);
    }
    finalize();
    return collect();
}

void Simulator::on_fault(const Event& ev) {
    const ScheduledFault& f = fault_list_[ev.index];
    const auto it = nodes_.find(f.node);
    if (it == nodes_.end()) {
        // A standby node failing just takes it out of the replacement pool.
        PhysState& ps = phys_[f.node];
        ps.dead = true;
        return;
    }
    NodeState& n = it->second;
    fault_times_[f.node].push_back(now_);
    switch (f.kind) {
        case FaultKind::node:
            kill_phys(n.phys);
            break;
        case FaultKind::transmitter:
            n.tx_ok = false;
            break;
        case FaultKind::link: {
            const NodeId a = n.phys;
            const NodeId b = state(f.peer).phys;
            down_links_.insert(a < b ? HopKey{a, b} : HopKey{b, a});
            fault_times_[f.peer].push_back(now_);
            break;
        }
    }
}

void Simulator::on_control_start() {
    for (std::size_t i = 0; i < routes_.size(); ++i) {
        Route& r = routes_[i];
        if (sources_[r.source_index].config->packets <= 0) continue;
        Packet hello = make_control_packet(PacketKind::hello, r.path.source(), topo_.sink(),
                                           control_bits_);
        hello.uid = next_uid_++;
        hello.route_id = static_cast<int>(i);
        hello.hop = 0;
        hello.next_hop = r.path.nodes[1];
        hello.injected_at = now_;
        hello.enqueued_at = now_;
        ++pending_control_;
        enqueue(state(r.path.source()), hello);
    }
    if (pending_control_ == 0) {
        Event start;
        start.time = now_;
        start.type = EvType::data_start;
        schedule(start);
        return;
    }
    for (auto& [id, n] : nodes_) kick(id);
}

void Simulator::control_done(std::size_t route_id) {
    (void)route_id;
    if (pending_control_ == 0) return;
    if (--pending_control_ == 0 && !data_started_) {
        Event start;
        start.time = now_;
        start.type = EvType::data_start;
        schedule(start);
    }
}

void Simulator::launch_choke(Route& r, std::size_t route_id, bool initial) {
    Packet choke = make_control_packet(PacketKind::choke, r.path.source(), topo_.sink(),
                                       control_bits_);
    choke.uid = next_uid_++;
    choke.route_id = static_cast<int>(route_id);
    choke.hop = 0;
    choke.next_hop = r.path.nodes[1];
    choke.injected_at = now_;
    choke.enqueued_at = now_;
    if (initial) initial_chokes_.insert(choke.uid);
    NodeState& src = state(r.path.source());
    enqueue(src, choke);
    kick(src.id);
}

void Simulator::on_choke_launch() {
    for (std::size_t i = 0; i < routes_.size(); ++i) {
        if (routes_[i].abandoned) continue;
        launch_choke(routes_[i], i, false);
    }
}

void Simulator::on_data_start() {
    if (data_started_) return;
    data_started_ = true;
    data_start_ = now_;
    pending_control_ = 0;
    for (SourceState& s : sources_) {
        const SourceConfig& cfg = *s.config;
        const std::size_t n = s.routes.size();
        std::vector<std::int64_t> quotas(n, 0);
        std::vector<double> raw(n, 0.0);
        std::vector<bool> exceeds(n, false);
        if (cfg.copies_per_path > 0) {
            std::fill(quotas.begin(), quotas.end(), cfg.packets);
        } else if (cfg.quotas) {
            if (cfg.quotas->size() != n) {
                throw ScenarioError(fmt::format("source {} lists {} quotas for {} paths",
                                                cfg.id.value, cfg.quotas->size(), n));
            }
            std::int64_t sum = 0;
            for (std::int64_t q : *cfg.quotas) {
                if (q < 0) throw ScenarioError("quotas must be non-negative");
                sum += q;
            }
            if (sum != cfg.packets) {
                throw ScenarioError(fmt::format("quotas of source {} sum to {}, not {}",
                                                cfg.id.value, sum, cfg.packets));
            }
            quotas = *cfg.quotas;
        } else {
            AllocationInput in;
            in.params = params_;
            in.packets = cfg.packets;
            in.source_sink_distance = topo_.distance(cfg.id, topo_.sink());
            for (std::size_t idx : s.routes) {
                const Route& r = routes_[idx];
                in.paths.push_back({r.path.hops, r.path.tau, r.path.contention});
            }
            const Allocation a = scheme_allocation(cfg.scheme, in, cfg.contention_aware);
            quotas = a.quotas;
            raw = a.raw_quotas;
            exceeds = a.exceeds_bound;
        }
        for (std::size_t j = 0; j < n; ++j) {
            Route& r = routes_[s.routes[j]];
            r.quota = quotas[j];
            r.remaining = quotas[j];
            r.raw_quota = j < raw.size() ? raw[j] : 0.0;
            r.exceeds = j < exceeds.size() && exceeds[j];
            for (std::size_t i = 1; i < r.path.nodes.size(); ++i) {
                HopState& h = hops_[{r.path.nodes[i - 1], r.path.nodes[i]}];
                h.expected += r.quota;
                h.tau = std::max(h.tau, r.path.tau);
            }
        }
        s.seen_seq.assign(static_cast<std::size_t>(cfg.packets), 0);
    }
    if (cfg_.probe_at) {
        Event probe;
        probe.time = now_ + *cfg_.probe_at;
        probe.type = EvType::choke_launch;
        schedule(probe);
    }
    for (SourceState& s : sources_) kick(s.config->id);
}

bool Simulator::refill(NodeState& n) {
    if (!data_started_ || !n.is_source || !n.alive || n.abandoned) return false;
    SourceState& s = sources_[n.source_index];
    const SourceConfig& cfg = *s.config;
    bool any = false;
    bool progress = true;
    while (progress) {
        progress = false;
        for (std::size_t idx : s.routes) {
            Route& r = routes_[idx];
            if (r.remaining <= 0 || r.abandoned) continue;
            const NodeId next = r.path.nodes[1];
            if (n.queue.paused(next) || !n.queue.has_room_toward(next)) continue;
            Packet p;
            p.uid = next_uid_++;
            p.kind = PacketKind::data;
            p.priority = cfg.priority;
            p.source = cfg.id;
            p.destination = topo_.sink();
            p.path_id = r.path_index;
            p.seq = cfg.copies_per_path > 0 ? r.next_seq++ : s.next_seq++;
            p.copy = cfg.copies_per_path > 0 ? r.path_index : 0;
            p.size_bits = params_.packet_bits;
            p.route_id = static_cast<int>(idx);
            p.hop = 0;
            p.next_hop = next;
            p.enqueued_at = now_;
            p.injected_at = now_;
            --r.remaining;
            ++r.injected;
            ++s.metrics.injected;
            enqueue(n, p);
            progress = true;
            any = true;
        }
    }
    return any;
}

void Simulator::kick(NodeId id) {
    const auto it = nodes_.find(id);
    if (it == nodes_.end()) return;
    NodeState& n = it->second;
    serve(n);
    if (refill(n)) serve(n);
}

void Simulator::serve(NodeState& n) {
    if (!n.alive || n.self_faulty || n.abandoned) return;
    if (cfg_.transmitter == Transmitter::per_node) {
        if (n.busy[0]) return;
        if (auto p = n.queue.dispatch_next()) transmit(n, 0, *p);
        return;
    }
    const auto& nbs = n.queue.neighbors();
    for (std::size_t i = 0; i < nbs.size() && i < n.busy.size(); ++i) {
        if (n.busy[i]) continue;
        if (auto p = n.queue.dispatch_toward(nbs[i])) transmit(n, i, *p);
        if (!n.alive) return;
    }
}

void Simulator::transmit(NodeState& n, std::size_t server, Packet pkt) {
    if (pkt.attempts > 0) {
        ++retransmissions_;
    } else if (!pkt.is_control()) {
        Route& r = routes_[static_cast<std::size_t>(pkt.route_id)];
        r.wait_sum += now_ - pkt.enqueued_at;
        ++r.wait_count;
    }
    if (opts_.record_dispatch) {
        dispatches_.push_back({now_, n.id, pkt.next_hop, pkt.uid, pkt.source,
                               now_ - pkt.enqueued_at, pkt.is_control()});
    }
    const NodeState& peer = state(pkt.next_hop);
    const Link& link = topo_.link(n.id, pkt.next_hop);
    const double tx = pkt.size_bits / link.bit_rate;
    const double d = maddr::distance(position(n.phys), position(peer.phys));
    const NodeId attributed = is_source(pkt.source) ? pkt.source : NodeId{};
    const EnergyCategory cat = pkt.is_control() ? EnergyCategory::control : EnergyCategory::transmit;
    n.busy[server] = true;
    phys_[n.phys].busy_time += tx;
    Event ev;
    ev.time = now_ + tx;
    ev.type = EvType::service_done;
    ev.node = n.id.value;
    ev.packet = pkt;
    ev.server = server;
    ev.epoch = n.epoch;
    schedule(std::move(ev));
    debit(n.phys, transmit_energy(params_, cfg_.energy_mode, pkt.size_bits, d, link.bit_rate), cat,
          attributed);
}

void Simulator::enqueue(NodeState& n, const Packet& pkt) {
    const EnqueueResult res = n.queue.enqueue(pkt);
    if (res.dropped) drop(*res.dropped, DropCause::overflow);
}

void Simulator::drop(const Packet& pkt, DropCause cause) {
    if (pkt.is_control()) {
        ++control_dropped_;
        if ((pkt.kind == PacketKind::hello || pkt.kind == PacketKind::reply ||
             initial_chokes_.count(pkt.uid) != 0) &&
            !data_started_) {
            control_done(static_cast<std::size_t>(pkt.route_id));
        }
        return;
    }
    Route& r = routes_[static_cast<std::size_t>(pkt.route_id)];
    SourceState& s = sources_[r.source_index];
    if (cause == DropCause::overflow) {
        ++s.metrics.dropped_overflow;
    } else {
        ++s.metrics.dropped_fault;
    }
    const std::size_t len = r.path.nodes.size();
    for (std::size_t i = static_cast<std::size_t>(pkt.hop) + 1; i < len; ++i) {
        ++r.dropped_before[i];
        ++hops_[{r.path.nodes[i - 1], r.path.nodes[i]}].dropped;
    }
    if (cfg_.forwarding == Forwarding::store_and_forward) {
        for (std::size_t i = static_cast<std::size_t>(pkt.hop) + 1; i + 1 < len; ++i) {
            check_release(r, i);
        }
    }
}

void Simulator::check_release(Route& r, std::size_t index) {
    auto& staged = r.staged[index];
    if (staged.empty()) return;
    if (r.arrived_at[index] + r.dropped_before[index] < r.quota) return;
    NodeState& n = state(r.path.nodes[index]);
    std::vector<Packet> batch;
    batch.swap(staged);
    for (Packet& p : batch) {
        p.enqueued_at = now_;
        enqueue(n, p);
    }
    kick(n.id);
}

void Simulator::check_all_releases() {
    if (cfg_.forwarding != Forwarding::store_and_forward) return;
    for (Route& r : routes_) {
        for (std::size_t i = 1; i + 1 < r.path.nodes.size(); ++i) check_release(r, i);
    }
}

void Simulator::route_undeliverable(Route& r) {
    if (r.remaining <= 0) return;
    const std::int64_t left = r.remaining;
    r.remaining = 0;
    sources_[r.source_index].metrics.undeliverable += left;
    for (std::size_t i = 1; i < r.path.nodes.size(); ++i) {
        r.dropped_before[i] += left;
        hops_[{r.path.nodes[i - 1], r.path.nodes[i]}].dropped += left;
    }
}

void Simulator::on_service_done(Event& ev) {
    NodeState& x = state(NodeId{ev.node});
    Packet pkt = ev.packet;
    if (ev.epoch != x.epoch) {
        // The sender was replaced mid-transmission; the packet went with it.
        drop(pkt, DropCause::fault_abort);
        return;
    }
    x.busy[ev.server] = false;
    const NodeId y_id = pkt.next_hop;
    NodeState& y = state(y_id);
    const HopKey phys_key = x.phys < y.phys ? HopKey{x.phys, y.phys} : HopKey{y.phys, x.phys};
    bool ok = x.alive && x.tx_ok && !x.self_faulty && y.alive && !y.abandoned &&
              down_links_.count(phys_key) == 0;
    if (ok && cfg_.loss_probability > 0.0 && uniform01(rng_()) < cfg_.loss_probability) ok = false;

    if (pkt.kind == PacketKind::beacon) {
        resolve_beacon(x, pkt, ok);
        kick(x.id);
        return;
    }
    if (ok) {
        consecutive_[{x.id, y_id}] = 0;
        pkt.attempts = 0;
        Event arr;
        arr.time = now_ + topo_.link(x.id, y_id).delay;
        arr.type = EvType::arrival;
        arr.node = y_id.value;
        arr.packet = pkt;
        arr.epoch = y.epoch;
        arr.aux = x.id;
        schedule(std::move(arr));
    } else {
        if (!x.alive) {
            // A dead sender keeps the packet; recovery or the final sweep deals with it.
            x.queue.push_front(pkt);
            return;
        }
        ++pkt.attempts;
        x.queue.push_front(pkt);
        const int failures = ++consecutive_[{x.id, y_id}];
        if (failures >= sc_.faults.max_attempts) {
            x.queue.pause(y_id);
            start_fault_check(x, y_id);
        }
    }
    kick(x.id);
}

void Simulator::start_fault_check(NodeState& x, NodeId suspect) {
    if (!pending_beacon_.insert({x.id, suspect}).second) return;
    NodeId target;
    double best = std::numeric_limits<double>::infinity();
    for (NodeId c : topo_.neighbors(x.id)) {
        if (c == suspect || state(c).abandoned) continue;
        const double d = maddr::distance(position(x.phys), position(state(c).phys));
        if (d < best) {
            best = d;
            target = c;
        }
    }
    if (!target.valid()) {
        // No third node to beacon; only the receiver-side timer can settle it.
        pending_beacon_.erase({x.id, suspect});
        return;
    }
    Packet beacon = make_control_packet(PacketKind::beacon, x.id, target, control_bits_);
    beacon.uid = next_uid_++;
    beacon.next_hop = target;
    beacon.enqueued_at = now_;
    beacon_suspect_[beacon.uid] = suspect;
    x.queue.push_front(beacon);
}

void Simulator::resolve_beacon(NodeState& x, const Packet& beacon, bool ok) {
    const NodeId suspect = beacon_suspect_.at(beacon.uid);
    beacon_suspect_.erase(beacon.uid);
    pending_beacon_.erase({x.id, suspect});
    if (ok) {
        NodeState& c = state(beacon.next_hop);
        Event arr;
        arr.time = now_ + topo_.link(x.id, c.id).delay;
        arr.type = EvType::arrival;
        arr.node = c.id.value;
        arr.packet = beacon;
        arr.epoch = c.epoch;
        arr.aux = x.id;
        schedule(std::move(arr));
        FaultRecord rec;
        rec.node = suspect;
        rec.fault_time = last_fault_time(suspect);
        rec.detected_at = now_;
        rec.detector = x.id;
        rec.mechanism = "sender_beacon";
        replace(suspect, x.id, rec);
        return;
    }
    // Nobody heard the beacon either: the sender itself is at fault.
    x.self_faulty = true;
    FaultRecord rec;
    rec.node = x.id;
    rec.fault_time = last_fault_time(x.id);
    rec.detected_at = now_;
    rec.detector = x.id;
    rec.mechanism = "self_beacon";
    fault_records_.push_back(rec);
}

void Simulator::replace(NodeId failed, NodeId detector, FaultRecord record) {
    NodeState& n = state(failed);
    if (n.abandoned) return;

    const Position origin = position(state(detector).phys);
    NodeId chosen;
    double best = std::numeric_limits<double>::infinity();
    for (NodeId r : topo_.redundant_nodes()) {
        if (used_redundant_.count(r) != 0 || phys_[r].dead) continue;
        const double d = maddr::distance(origin, position(r));
        if (d > params_.radio_range) continue;
        if (d < best) {
            best = d;
            chosen = r;
        }
    }

    for (const Packet& p : n.queue.drain()) drop(p, DropCause::fault_abort);
    for (Route& r : routes_) {
        for (std::size_t i = 0; i < r.path.nodes.size(); ++i) {
            if (r.path.nodes[i] != failed || r.staged[i].empty()) continue;
            std::vector<Packet> lost;
            lost.swap(r.staged[i]);
            for (const Packet& p : lost) drop(p, DropCause::fault_abort);
        }
    }
    ++n.epoch;
    std::fill(n.busy.begin(), n.busy.end(), false);
    PhysState& old = phys_[n.phys];
    if (!old.active_to) old.active_to = now_;

    const auto& nbs = topo_.neighbors(failed);
    if (chosen.valid()) {
        used_redundant_.insert(chosen);
        PhysState& fresh = phys_[chosen];
        fresh.used = true;
        fresh.active_from = now_;
        n.phys = chosen;
        n.alive = true;
        n.tx_ok = true;
        n.self_faulty = false;
        record.replacement = chosen;
        for (NodeId w : nbs) {
            NodeState& ws = state(w);
            ws.queue.resume(failed);
            n.queue.resume(w);
            consecutive_[{w, failed}] = 0;
            consecutive_[{failed, w}] = 0;
            pending_beacon_.erase({w, failed});
        }
        for (auto& [key, h] : hops_) {
            if ((key.first == failed || key.second == failed) && h.seen) rearm(key);
        }
        // The replacement notice travels down each affected path, so downstream
        // receivers do not mistake the upstream gap for a fault of their own.
        for (const Route& r : routes_) {
            const auto& seq = r.path.nodes;
            const auto at = std::find(seq.begin(), seq.end(), failed);
            if (at == seq.end()) continue;
            for (auto i = static_cast<std::size_t>(at - seq.begin()) + 1; i + 1 < seq.size(); ++i) {
                const HopKey key{seq[i], seq[i + 1]};
                const auto hit = hops_.find(key);
                if (hit != hops_.end() && hit->second.seen) rearm(key);
            }
        }
    } else {
        record.abandoned = true;
        n.abandoned = true;
        n.alive = false;
        for (NodeId w : nbs) {
            NodeState& ws = state(w);
            for (const Packet& p : ws.queue.drain_toward(failed)) drop(p, DropCause::fault_abort);
        }
        for (Route& r : routes_) {
            const auto& seq = r.path.nodes;
            if (std::find(seq.begin(), seq.end(), failed) == seq.end()) continue;
            r.abandoned = true;
            route_undeliverable(r);
        }
    }

    for (SourceState& s : sources_) {
        bool touched = false;
        for (std::size_t idx : s.routes) {
            const auto& seq = routes_[idx].path.nodes;
            touched = touched || std::find(seq.begin(), seq.end(), failed) != seq.end();
        }
        if (touched && s.policy.on_event(NetworkEvent::node_failed)) ++table_refreshes_;
    }
    fault_records_.push_back(record);
    check_all_releases();
    kick(failed);
    for (NodeId w : nbs) kick(w);
}

void Simulator::rearm(const HopKey& key) {
    HopState& h = hops_[key];
    ++h.gen;
    if (!timers_enabled_ || h.done()) return;
    Event ev;
    ev.time = now_ + sc_.faults.max_attempts * h.tau;
    ev.type = EvType::rx_timer;
    ev.node = key.second.value;
    ev.aux = key.first;
    ev.epoch = h.gen;
    schedule(std::move(ev));
}

void Simulator::on_timer(const Event& ev) {
    const HopKey key{ev.aux, NodeId{ev.node}};
    const HopState& h = hops_[key];
    if (ev.epoch != h.gen || h.done()) return;
    NodeState& b = state(key.second);
    NodeState& a = state(key.first);
    if (!b.alive || b.abandoned || b.self_faulty || a.abandoned) return;
    FaultRecord rec;
    rec.node = a.id;
    rec.fault_time = last_fault_time(a.id);
    rec.detected_at = now_;
    rec.detector = b.id;
    rec.mechanism = "receiver_timer";
    replace(a.id, b.id, rec);
}

void Simulator::on_arrival(Event& ev) {
    NodeState& y = state(NodeId{ev.node});
    Packet pkt = ev.packet;
    if (ev.epoch != y.epoch) {
        drop(pkt, DropCause::fault_abort);
        return;
    }
    const Link& link = topo_.link(ev.aux, y.id);
    phys_[y.phys].busy_time += pkt.size_bits / link.bit_rate;
    const NodeId attributed = is_source(pkt.source) ? pkt.source : NodeId{};
    debit(y.phys, receive_energy(params_, cfg_.energy_mode, pkt.size_bits, link.bit_rate),
          pkt.is_control() ? EnergyCategory::control : EnergyCategory::receive, attributed);

    if (pkt.kind == PacketKind::beacon) return;
    Route& r = routes_[static_cast<std::size_t>(pkt.route_id)];
    const auto& seq = r.path.nodes;
    const std::size_t last = seq.size() - 1;

    if (pkt.kind == PacketKind::reply) {
        --pkt.hop;
        if (pkt.hop == 0) {
            r.path.tau = per_hop_tau(pkt.injected_at, now_, r.path.hops);
            launch_choke(r, static_cast<std::size_t>(pkt.route_id), true);
            return;
        }
        pkt.next_hop = seq[static_cast<std::size_t>(pkt.hop) - 1];
        pkt.enqueued_at = now_;
        enqueue(y, pkt);
        kick(y.id);
        return;
    }

    ++pkt.hop;
    const auto hop = static_cast<std::size_t>(pkt.hop);
    if (pkt.kind == PacketKind::hello) {
        if (hop == last) {
            Packet reply = make_control_packet(PacketKind::reply, y.id, r.path.source(), control_bits_);
            reply.uid = next_uid_++;
            reply.route_id = pkt.route_id;
            reply.hop = static_cast<int>(last);
            reply.next_hop = seq[last - 1];
            reply.injected_at = pkt.injected_at;
            reply.enqueued_at = now_;
            reply.source = r.path.source();
            enqueue(y, reply);
        } else {
            pkt.next_hop = seq[hop + 1];
            pkt.enqueued_at = now_;
            enqueue(y, pkt);
        }
        kick(y.id);
        return;
    }
    if (pkt.kind == PacketKind::choke) {
        const bool initial = initial_chokes_.count(pkt.uid) != 0;
        if (y.queue.occupancy() > cfg_.choke_threshold) ++pkt.contention_count;
        const auto finish = [&](bool failed) {
            choke_samples_.push_back({now_ - (data_started_ ? data_start_ : 0.0), r.path.source(),
                                      r.path_index, pkt.contention_count, failed});
            if (failed) {
                SourceState& s = sources_[r.source_index];
                if (s.policy.on_event(NetworkEvent::node_failed)) ++table_refreshes_;
            }
            if (initial) {
                if (!failed) {
                    r.path.contention = std::min(pkt.contention_count, r.path.hops + 1);
                }
                initial_chokes_.erase(pkt.uid);
                control_done(static_cast<std::size_t>(pkt.route_id));
            }
        };
        if (hop == last) {
            finish(false);
            return;
        }
        const NodeState& next = state(seq[hop + 1]);
        if (!next.alive || next.abandoned) {
            finish(true);
            return;
        }
        pkt.next_hop = seq[hop + 1];
        pkt.enqueued_at = now_;
        enqueue(y, pkt);
        kick(y.id);
        return;
    }

    // Data.
    ++r.arrived_at[hop];
    const HopKey key{ev.aux, y.id};
    HopState& h = hops_[key];
    ++h.arrived;
    h.seen = true;
    rearm(key);

    SourceState& s = sources_[r.source_index];
    if (hop == last) {
        ++r.arrivals;
        r.last_arrival = now_;
        char& seen = s.seen_seq[static_cast<std::size_t>(pkt.seq)];
        if (seen != 0) {
            ++s.metrics.duplicates;
        } else {
            seen = 1;
            ++r.delivered;
            ++s.metrics.delivered;
        }
        return;
    }
    const NodeId next = seq[hop + 1];
    pkt.next_hop = next;
    pkt.enqueued_at = now_;
    if (state(next).abandoned) {
        drop(pkt, DropCause::fault_abort);
        return;
    }
    if (cfg_.forwarding == Forwarding::store_and_forward) {
        r.staged[hop].push_back(pkt);
        check_release(r, hop);
        return;
    }
    enqueue(y, pkt);
    kick(y.id);
}

void Simulator::finalize() {
    for (auto& [id, n] : nodes_) {
        for (const Packet& p : n.queue.drain()) drop(p, DropCause::fault_abort);
    }
    for (Route& r : routes_) {
        for (auto& staged : r.staged) {
            std::vector<Packet> lost;
            lost.swap(staged);
            for (const Packet& p : lost) drop(p, DropCause::fault_abort);
        }
        route_undeliverable(r);
    }
    const double end = now_;
    for (auto& [id, ps] : phys_) {
        if (!ps.used) continue;
        const double span = std::max(0.0, ps.active_to.value_or(end) - ps.active_from);
        const double sensing = cfg_.sensing == SensingMode::per_interval
                                   ? params_.sensing_power
                                   : params_.sensing_power * span;
        ledger_.debit(id, sensing, EnergyCategory::sensing);
        if (cfg_.idle_energy) {
            const double idle = params_.idle_power * std::max(0.0, span - ps.busy_time);
            ledger_.debit(id, idle, EnergyCategory::idle);
        }
    }
}

RunMetrics Simulator::collect() const {
    RunMetrics m;
    m.scenario = sc_.name;
    m.scenario_hash = hash_hex(scenario_hash(sc_));
    m.seed = opts_.seed.value_or(sc_.seed);
    m.data_start = data_start_;
    m.duration = now_;
    m.transmit_energy = ledger_.category_total(EnergyCategory::transmit);
    m.receive_energy = ledger_.category_total(EnergyCategory::receive);
    m.control_energy = ledger_.category_total(EnergyCategory::control);
    m.sensing_energy = ledger_.category_total(EnergyCategory::sensing);
    m.idle_energy = ledger_.category_total(EnergyCategory::idle);
    m.total_energy = ledger_.total_debited();
    m.energy_imbalance = ledger_.imbalance();
    m.control_dropped = control_dropped_;
    m.retransmissions = retransmissions_;
    m.table_refreshes = table_refreshes_;
    m.events = event_count_;
    m.faults = fault_records_;
    m.choke_samples = choke_samples_;
    m.dispatches = dispatches_;
    m.residual_energy = ledger_.residuals();
    m.spent_energy = ledger_.spent_by_node();

    for (const SourceState& s : sources_) {
        SourceMetrics sm = s.metrics;
        sm.energy = ledger_.source_total(sm.id);
        const double dist = topo_.distance(sm.id, topo_.sink());
        for (std::size_t idx : s.routes) {
            const Route& r = routes_[idx];
            PathMetrics pm;
            pm.source = sm.id;
            pm.path_index = r.path_index;
            pm.nodes = r.path.nodes;
            pm.hops = r.path.hops;
            pm.tau = r.path.tau;
            pm.contention = r.path.contention;
            pm.quota = r.quota;
            pm.raw_quota = r.raw_quota;
            pm.exceeds_bound = r.exceeds;
            pm.injected = r.injected;
            pm.delivered = r.delivered;
            pm.arrivals = r.arrivals;
            pm.delivery_time = r.arrivals > 0 ? r.last_arrival - data_start_ : 0.0;
            pm.mean_queue_wait = r.wait_count > 0 ? r.wait_sum / static_cast<double>(r.wait_count) : 0.0;
            pm.analytic_delay = metrics::path_delay(static_cast<double>(r.quota), r.path.tau, r.path.hops);
            pm.analytic_energy = dist > 0.0
                                     ? metrics::path_energy(params_, static_cast<double>(r.quota),
                                                            r.path.hops, dist)
                                     : 0.0;
            sm.completion_time = std::max(sm.completion_time, pm.delivery_time);
            m.paths.push_back(std::move(pm));
        }
        m.net_completion = std::max(m.net_completion, sm.completion_time);
        m.injected += sm.injected;
        m.delivered += sm.delivered;
        m.duplicates += sm.duplicates;
        m.dropped_overflow += sm.dropped_overflow;
        m.dropped_fault += sm.dropped_fault;
        m.undeliverable += sm.undeliverable;
        m.sources.push_back(std::move(sm));
    }
    return m;
}

}  // namespace

RunMetrics run(const Scenario& scenario, const RunOptions& options) {
    Simulator sim(scenario, options);
    return sim.run();
}

}  // namespace maddr
