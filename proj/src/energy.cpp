#include "maddr/energy.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "maddr/metrics.hpp"

namespace maddr {

EnergyLedger::EnergyLedger(const std::vector<Node>& nodes) {
    for (const Node& n : nodes) {
        initial_[n.id] = n.residual_energy;
        spent_[n.id] = 0.0;
    }
}

EnergyLedger::Debit EnergyLedger::debit(NodeId node, double joules, EnergyCategory category,
                                        NodeId attributed_source) {
    if (!(joules >= 0.0)) throw DomainError("energy debit must be non-negative");
    auto it = spent_.find(node);
    if (it == spent_.end()) {
        throw SimulationError(fmt::format("energy debit for unknown node {}", node.value));
    }
    Debit d;
    d.applied = joules;
    const double left = initial_.at(node) - it->second;
    if (joules >= left && joules > 0.0) {
        d.applied = std::max(0.0, left);
        d.depleted = true;
    }
    it->second += d.applied;
    by_category_[static_cast<int>(category)] += d.applied;
    if (attributed_source.valid()) by_source_[attributed_source] += d.applied;
    return d;
}

double EnergyLedger::residual(NodeId node) const { return initial_.at(node) - spent_.at(node); }

double EnergyLedger::spent(NodeId node) const { return spent_.at(node); }

std::map<NodeId, double> EnergyLedger::residuals() const {
    std::map<NodeId, double> out;
    for (const auto& [id, used] : spent_) out[id] = initial_.at(id) - used;
    return out;
}

double EnergyLedger::initial(NodeId node) const { return initial_.at(node); }

double EnergyLedger::total_debited() const {
    double sum = 0.0;
    for (double v : by_category_) sum += v;
    return sum;
}

double EnergyLedger::category_total(EnergyCategory category) const {
    return by_category_[static_cast<int>(category)];
}

double EnergyLedger::source_total(NodeId source) const {
    const auto it = by_source_.find(source);
    return it == by_source_.end() ? 0.0 : it->second;
}

double EnergyLedger::imbalance() const {
    double spent = 0.0;
    for (const auto& [id, used] : spent_) spent += used;
    const double logged = total_debited();
    const double scale = std::max({1e-300, std::abs(spent), std::abs(logged)});
    return std::abs(spent - logged) / scale;
}

double transmit_energy(const NetworkParams& params, EnergyMode mode, double bits, double distance,
                       double bit_rate) {
    if (mode == EnergyMode::per_packet) return params.tx_electronics * bits / bit_rate;
    // Replacement nodes inherit links by serial number, so a hop may exceed the
    // radio range geometrically; the amplifier term still uses the real distance.
    const double amp = params.tx_amplifier * std::pow(distance, params.path_loss_exponent);
    return (params.tx_electronics + amp) * params.bit_tx_time * bits;
}

double receive_energy(const NetworkParams& params, EnergyMode mode, double bits, double bit_rate) {
    if (mode == EnergyMode::per_packet) return params.rx_electronics * bits / bit_rate;
    return metrics::receive_energy_per_bit(params) * bits;
}

}  // namespace maddr
