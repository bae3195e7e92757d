#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <vector>

#include "maddr/model.hpp"

namespace maddr {

enum class QueueDiscipline {
    fragmented,  // one sub-queue per neighbor, round-robin, priority drops, control reserve
    fifo,        // one drop-tail queue shared by everything
};

struct EnqueueResult {
    bool accepted{true};
    std::optional<Packet> dropped;  // the victim when something had to go
};

/// Per-node buffer split into one data sub-queue per neighbor plus a reserved
/// control queue.
///
/// Each data sub-queue holds at most `subqueue_capacity` packets and only
/// packets whose next hop is that neighbor. Control packets never compete with
/// data for space. Dispatch serves control first, then walks the data
/// sub-queues round-robin; the cursor survives between calls.
class FragmentedQueue {
public:
    FragmentedQueue() = default;
    FragmentedQueue(NodeId owner, std::vector<NodeId> neighbors, std::size_t subqueue_capacity,
                    QueueDiscipline discipline = QueueDiscipline::fragmented);

    /// Capacity per sub-queue from the node buffer: floor(M_i / (N_i * S)).
    static std::size_t capacity_for(double queue_bits, int neighbor_count, double packet_bits);

    EnqueueResult enqueue(const Packet& packet);
    std::optional<Packet> dispatch_next();

    /// Next packet for one neighbor only (control first); used when every
    /// outgoing link has its own transmitter.
    std::optional<Packet> dispatch_toward(NodeId neighbor);

    /// Puts a packet back at the head of its sub-queue without capacity checks.
    void push_front(const Packet& packet);

    NodeId owner() const { return owner_; }
    QueueDiscipline discipline() const { return discipline_; }
    const std::vector<NodeId>& neighbors() const { return neighbors_; }
    std::size_t subqueue_capacity() const { return capacity_; }

    std::size_t data_size() const;
    std::size_t data_capacity() const;
    std::size_t control_size() const { return control_.size(); }
    std::size_t size_toward(NodeId neighbor) const;
    bool has_room_toward(NodeId neighbor) const;
    bool empty() const { return control_.empty() && data_size() == 0; }

    /// Fraction of data capacity in use.
    double occupancy() const;

    /// Removes and returns every queued packet (control first).
    std::vector<Packet> drain();

    /// Removes and returns the data packets waiting for `neighbor`.
    std::vector<Packet> drain_toward(NodeId neighbor);

    void pause(NodeId neighbor);
    void resume(NodeId neighbor);
    bool paused(NodeId neighbor) const;

private:
    std::size_t lane_for(NodeId next_hop) const;

    NodeId owner_;
    QueueDiscipline discipline_{QueueDiscipline::fragmented};
    std::vector<NodeId> neighbors_;
    std::size_t capacity_{0};
    std::vector<std::deque<Packet>> lanes_;
    std::vector<bool> paused_;
    std::deque<Packet> control_;
    std::size_t cursor_{0};
};

}  // namespace maddr
