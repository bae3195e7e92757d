#pragma once

#include <map>
#include <vector>

#include "maddr/model.hpp"

namespace maddr {

enum class EnergyCategory { transmit, receive, control, sensing, idle };

inline constexpr int kEnergyCategories = 5;

enum class EnergyMode {
    per_bit,     // (e_t + e_d d^k) T_1b S and e_r T_2b S
    per_packet,  // e_t and e_r read as radio power, times the packet's air time
};

enum class SensingMode {
    per_interval,  // K_r joules per node per run
    per_second,    // K_r watts times the run duration
};

/// Residual energy of every node plus a record of every debit.
///
/// A debit never takes a node below zero; the shortfall is reported so the
/// caller can mark the node dead. Debited totals always equal the sum of
/// (initial - residual).
class EnergyLedger {
public:
    EnergyLedger() = default;
    explicit EnergyLedger(const std::vector<Node>& nodes);

    struct Debit {
        double applied{0.0};
        bool depleted{false};
    };

    Debit debit(NodeId node, double joules, EnergyCategory category, NodeId attributed_source = {});

    double residual(NodeId node) const;
    double initial(NodeId node) const;
    double spent(NodeId node) const;
    std::map<NodeId, double> residuals() const;
    const std::map<NodeId, double>& spent_by_node() const { return spent_; }

    double total_debited() const;
    double category_total(EnergyCategory category) const;
    /// Communication energy (data and control) attributed to a source.
    double source_total(NodeId source) const;
    const std::map<NodeId, double>& source_totals() const { return by_source_; }

    /// Relative mismatch between the per-category log and the per-node totals.
    double imbalance() const;

private:
    std::map<NodeId, double> initial_;
    std::map<NodeId, double> spent_;  // kept apart from residual to avoid cancellation
    double by_category_[kEnergyCategories]{};
    std::map<NodeId, double> by_source_;
};

/// Energy for one transmission attempt of `bits` over a link of length
/// `distance` and rate `bit_rate`.
double transmit_energy(const NetworkParams& params, EnergyMode mode, double bits, double distance,
                       double bit_rate);

double receive_energy(const NetworkParams& params, EnergyMode mode, double bits, double bit_rate);

}  // namespace maddr
