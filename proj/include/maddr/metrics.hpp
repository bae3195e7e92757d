#pragma once

#include "maddr/model.hpp"

// Closed-form per-path delay, energy and energy-delay product.
namespace maddr::metrics {

struct PathCost {
    double delay{0.0};   // s
    double energy{0.0};  // J
    double edp{0.0};     // J*s, delay * energy
};

/// Time for one packet to cross one hop: S/b + l + q.
double per_hop_latency(double packet_bits, double bit_rate, double link_delay, double queue_delay);

/// Store-and-forward delay of `packets` over `hops` hops: packets * tau * hops.
double path_delay(double packets, double tau, double hops);

/// (e_t + e_d d^k) T_1b. Throws RangeExceededError past the radio range.
double transmit_energy_per_bit(const NetworkParams& params, double distance);

/// e_r T_2b.
double receive_energy_per_bit(const NetworkParams& params);

/// Energy of every node on a path carrying `packets` packets, with the hop
/// distance approximated as source_sink_distance / hops. K_r is charged once
/// per node on the path.
double path_energy(const NetworkParams& params, double packets, double hops,
                   double source_sink_distance);

double path_edp(const NetworkParams& params, double packets, double hops, double tau,
                double source_sink_distance);

PathCost path_cost(const NetworkParams& params, double packets, double hops, double tau,
                   double source_sink_distance);

/// EDP of an equal split of `total_packets` over `path_count` paths, using the
/// mean hop count and mean tau of the source's paths.
double edp_avg(const NetworkParams& params, double total_packets, int path_count,
               double mean_hops, double mean_tau, double source_sink_distance);

/// Per-packet energy coefficient [(e_t + e_d d^k) T_1b + e_r T_2b] * S * (H+1)
/// with d = distance / hops, i.e. the slope of path_energy in the packet count.
double energy_per_packet(const NetworkParams& params, double hops, double source_sink_distance);

}  // namespace maddr::metrics
