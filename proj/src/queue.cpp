#include "maddr/queue.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace maddr {

namespace {

// Lower priority loses; among equals the newest (largest uid) loses.
bool worse_victim(const Packet& a, const Packet& b) {
    if (a.priority != b.priority) return a.priority < b.priority;
    return a.uid > b.uid;
}

}  // namespace

FragmentedQueue::FragmentedQueue(NodeId owner, std::vector<NodeId> neighbors,
                                 std::size_t subqueue_capacity, QueueDiscipline discipline)
    : owner_(owner),
      discipline_(discipline),
      neighbors_(std::move(neighbors)),
      capacity_(subqueue_capacity) {
    std::sort(neighbors_.begin(), neighbors_.end());
    const std::size_t lanes = discipline_ == QueueDiscipline::fifo ? 1 : neighbors_.size();
    lanes_.resize(lanes);
    paused_.assign(neighbors_.size(), false);
}

std::size_t FragmentedQueue::capacity_for(double queue_bits, int neighbor_count,
                                          double packet_bits) {
    if (neighbor_count <= 0 || !(packet_bits > 0.0) || !(queue_bits >= 0.0)) return 0;
    return static_cast<std::size_t>(std::floor(queue_bits / (neighbor_count * packet_bits)));
}

std::size_t FragmentedQueue::lane_for(NodeId next_hop) const {
    const auto it = std::lower_bound(neighbors_.begin(), neighbors_.end(), next_hop);
    if (it == neighbors_.end() || *it != next_hop) {
        throw RoutingError(fmt::format("node {} has no neighbor {}", owner_.value, next_hop.value));
    }
    if (discipline_ == QueueDiscipline::fifo) return 0;
    return static_cast<std::size_t>(it - neighbors_.begin());
}

EnqueueResult FragmentedQueue::enqueue(const Packet& packet) {
    const std::size_t lane = lane_for(packet.next_hop);
    if (discipline_ == QueueDiscipline::fragmented && packet.is_control()) {
        control_.push_back(packet);
        return {};
    }
    auto& q = lanes_[lane];
    if (q.size() < capacity_) {
        q.push_back(packet);
        return {};
    }
    if (discipline_ == QueueDiscipline::fifo || q.empty()) {
        return {false, packet};
    }
    auto victim = std::max_element(q.begin(), q.end(), [](const Packet& a, const Packet& b) {
        return worse_victim(b, a);
    });
    if (!worse_victim(*victim, packet)) return {false, packet};
    Packet dropped = *victim;
    q.erase(victim);
    q.push_back(packet);
    return {true, dropped};
}

void FragmentedQueue::push_front(const Packet& packet) {
    const std::size_t lane = lane_for(packet.next_hop);
    if (discipline_ == QueueDiscipline::fragmented && packet.is_control()) {
        control_.push_front(packet);
    } else {
        lanes_[lane].push_front(packet);
    }
}

std::optional<Packet> FragmentedQueue::dispatch_next() {
    const auto is_paused = [&](NodeId n) { return paused(n); };
    if (!control_.empty()) {
        // Control packets go out in order; a paused neighbor only blocks its own.
        for (auto it = control_.begin(); it != control_.end(); ++it) {
            if (is_paused(it->next_hop)) continue;
            Packet p = *it;
            control_.erase(it);
            return p;
        }
    }
    if (discipline_ == QueueDiscipline::fifo) {
        auto& q = lanes_.front();
        if (q.empty() || is_paused(q.front().next_hop)) return std::nullopt;
        Packet p = q.front();
        q.pop_front();
        return p;
    }
    const std::size_t n = lanes_.size();
    for (std::size_t step = 0; step < n; ++step) {
        const std::size_t lane = (cursor_ + step) % n;
        if (lanes_[lane].empty() || paused_[lane]) continue;
        Packet p = lanes_[lane].front();
        lanes_[lane].pop_front();
        cursor_ = (lane + 1) % n;
        return p;
    }
    return std::nullopt;
}

std::optional<Packet> FragmentedQueue::dispatch_toward(NodeId neighbor) {
    const std::size_t lane = lane_for(neighbor);
    if (paused(neighbor)) return std::nullopt;
    for (auto it = control_.begin(); it != control_.end(); ++it) {
        if (it->next_hop != neighbor) continue;
        Packet p = *it;
        control_.erase(it);
        return p;
    }
    auto& q = lanes_[lane];
    if (discipline_ == QueueDiscipline::fifo) {
        if (q.empty() || q.front().next_hop != neighbor) return std::nullopt;
    } else if (q.empty()) {
        return std::nullopt;
    }
    Packet p = q.front();
    q.pop_front();
    return p;
}

std::size_t FragmentedQueue::data_size() const {
    std::size_t total = 0;
    for (const auto& q : lanes_) {
        for (const Packet& p : q) total += p.is_control() ? 0 : 1;
    }
    return total;
}

std::size_t FragmentedQueue::data_capacity() const { return capacity_ * lanes_.size(); }

std::size_t FragmentedQueue::size_toward(NodeId neighbor) const {
    const std::size_t lane = lane_for(neighbor);
    if (discipline_ == QueueDiscipline::fragmented) return lanes_[lane].size();
    return static_cast<std::size_t>(
        std::count_if(lanes_[0].begin(), lanes_[0].end(),
                      [&](const Packet& p) { return p.next_hop == neighbor; }));
}

bool FragmentedQueue::has_room_toward(NodeId neighbor) const {
    return lanes_[lane_for(neighbor)].size() < capacity_;
}

double FragmentedQueue::occupancy() const {
    const std::size_t cap = data_capacity();
    if (cap == 0) return 0.0;
    return static_cast<double>(data_size()) / static_cast<double>(cap);
}

std::vector<Packet> FragmentedQueue::drain() {
    std::vector<Packet> out(control_.begin(), control_.end());
    control_.clear();
    for (auto& q : lanes_) {
        out.insert(out.end(), q.begin(), q.end());
        q.clear();
    }
    return out;
}

std::vector<Packet> FragmentedQueue::drain_toward(NodeId neighbor) {
    auto& q = lanes_[lane_for(neighbor)];
    std::vector<Packet> out;
    std::deque<Packet> keep;
    for (const Packet& p : q) {
        if (p.next_hop == neighbor && !p.is_control()) {
            out.push_back(p);
        } else {
            keep.push_back(p);
        }
    }
    q.swap(keep);
    return out;
}

void FragmentedQueue::pause(NodeId neighbor) {
    lane_for(neighbor);
    const auto it = std::lower_bound(neighbors_.begin(), neighbors_.end(), neighbor);
    paused_[static_cast<std::size_t>(it - neighbors_.begin())] = true;
}

void FragmentedQueue::resume(NodeId neighbor) {
    lane_for(neighbor);
    const auto it = std::lower_bound(neighbors_.begin(), neighbors_.end(), neighbor);
    paused_[static_cast<std::size_t>(it - neighbors_.begin())] = false;
}

bool FragmentedQueue::paused(NodeId neighbor) const {
    const auto it = std::lower_bound(neighbors_.begin(), neighbors_.end(), neighbor);
    if (it == neighbors_.end() || *it != neighbor) return false;
    return paused_[static_cast<std::size_t>(it - neighbors_.begin())];
}

}  // namespace maddr
