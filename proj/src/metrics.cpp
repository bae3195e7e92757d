#include "maddr/metrics.hpp"

#include <cmath>

#include <fmt/format.h>

namespace maddr::metrics {

namespace {

void require_nonnegative(double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
        throw DomainError(fmt::format("{} must be finite and non-negative", name));
    }
}

// Transmit cost per bit without the range check; the analytic model uses the
// source-sink distance over the hop count which is a mean, not a real link.
double transmit_cost(const NetworkParams& p, double d) {
    return (p.tx_electronics + p.tx_amplifier * std::pow(d, p.path_loss_exponent)) * p.bit_tx_time;
}

}  // namespace

double per_hop_latency(double packet_bits, double bit_rate, double link_delay, double queue_delay) {
    if (!(bit_rate > 0.0)) throw DomainError("bit rate must be positive");
    require_nonnegative(packet_bits, "packet size");
    require_nonnegative(link_delay, "link delay");
    require_nonnegative(queue_delay, "queue delay");
    return packet_bits / bit_rate + link_delay + queue_delay;
}

double path_delay(double packets, double tau, double hops) {
    require_nonnegative(packets, "packet count");
    require_nonnegative(tau, "tau");
    require_nonnegative(hops, "hop count");
    return packets * tau * hops;
}

double transmit_energy_per_bit(const NetworkParams& params, double distance) {
    require_nonnegative(distance, "distance");
    if (distance > params.radio_range) {
        throw RangeExceededError(fmt::format("distance {} exceeds radio range {}", distance,
                                             params.radio_range));
    }
    return transmit_cost(params, distance);
}

double receive_energy_per_bit(const NetworkParams& params) {
    return params.rx_electronics * params.bit_rx_time;
}

double energy_per_packet(const NetworkParams& params, double hops, double source_sink_distance) {
    if (!(hops >= 1.0)) throw DomainError("hop count must be at least 1");
    if (!(source_sink_distance > 0.0)) throw DomainError("source-sink distance must be positive");
    const double per_bit =
        transmit_cost(params, source_sink_distance / hops) + receive_energy_per_bit(params);
    return per_bit * params.packet_bits * (hops + 1.0);
}

double path_energy(const NetworkParams& params, double packets, double hops,
                   double source_sink_distance) {
    require_nonnegative(packets, "packet count");
    return energy_per_packet(params, hops, source_sink_distance) * packets +
           params.sensing_power * (hops + 1.0);
}

double path_edp(const NetworkParams& params, double packets, double hops, double tau,
                double source_sink_distance) {
    return path_energy(params, packets, hops, source_sink_distance) *
           path_delay(packets, tau, hops);
}

PathCost path_cost(const NetworkParams& params, double packets, double hops, double tau,
                   double source_sink_distance) {
    PathCost c;
    c.delay = path_delay(packets, tau, hops);
    c.energy = path_energy(params, packets, hops, source_sink_distance);
    c.edp = c.energy * c.delay;
    return c;
}

double edp_avg(const NetworkParams& params, double total_packets, int path_count,
               double mean_hops, double mean_tau, double source_sink_distance) {
    if (path_count < 1) throw DomainError("path count must be at least 1");
    const double share = total_packets / static_cast<double>(path_count);
    return path_edp(params, share, mean_hops, mean_tau, source_sink_distance);
}

}  // namespace maddr::metrics
