#include "maddr/allocator.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "maddr/metrics.hpp"

namespace maddr {

namespace {

void validate_input(const AllocationInput& in) {
    if (in.packets < 0) throw DomainError("packet count must be non-negative");
    if (in.paths.empty()) throw DomainError("allocation needs at least one path");
    for (const PathParams& p : in.paths) {
        if (p.hops < 1) throw DomainError("hop count must be at least 1");
        if (!(p.tau > 0.0) || !std::isfinite(p.tau)) throw DomainError("tau must be positive");
        if (p.contention < 0 || p.contention > p.hops + 1) {
            throw DomainError(fmt::format("contention count {} outside [0, {}]", p.contention,
                                          p.hops + 1));
        }
    }
}

double edp_budget(const AllocationInput& in) {
    double hop_sum = 0.0;
    double tau_sum = 0.0;
    for (const PathParams& p : in.paths) {
        hop_sum += p.hops;
        tau_sum += p.tau;
    }
    const auto n = static_cast<double>(in.paths.size());
    return metrics::edp_avg(in.params, static_cast<double>(in.packets),
                            static_cast<int>(in.paths.size()), hop_sum / n, tau_sum / n,
                            in.source_sink_distance);
}

// Shared by the single- and multi-source splits so a zero contention vector
// goes through exactly the same arithmetic in both.
Allocation bounded_split(const AllocationInput& in, bool discount) {
    validate_input(in);
    Allocation out;
    out.rhs = edp_budget(in);
    std::vector<double> weights;
    for (const PathParams& p : in.paths) {
        const double raw =
            solve_quota_bound(in.params, p.hops, p.tau, in.source_sink_distance, out.rhs);
        out.raw_quotas.push_back(raw);
        const double factor =
            discount ? 1.0 - static_cast<double>(p.contention) / static_cast<double>(p.hops + 1)
                     : 1.0;
        weights.push_back(raw * factor);
    }
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (in.packets > 0 && !(sum > 0.0)) {
        throw DegenerateAllocationError("every path has zero weight; no packets can be placed");
    }
    out.quotas = in.packets == 0 ? std::vector<std::int64_t>(in.paths.size(), 0)
                                 : apportion(weights, in.packets);
    for (std::size_t j = 0; j < in.paths.size(); ++j) {
        out.exceeds_bound.push_back(static_cast<double>(out.quotas[j]) > out.raw_quotas[j]);
    }
    return out;
}

}  // namespace

AllocationInput AllocationInput::from_source(const NetworkParams& params, const SourceSpec& source) {
    AllocationInput in;
    in.params = params;
    in.packets = source.packets;
    in.source_sink_distance = source.source_sink_distance;
    for (const PathInfo& p : source.paths) in.paths.push_back({p.hops, p.tau, p.contention});
    return in;
}

std::int64_t Allocation::total() const {
    return std::accumulate(quotas.begin(), quotas.end(), std::int64_t{0});
}

Scheme scheme_from_int(int value) {
    switch (value) {
        case 1: return Scheme::single_path;
        case 2: return Scheme::equal_split;
        case 3: return Scheme::strategic;
        default: throw DomainError(fmt::format("unknown scheme {}", value));
    }
}

double solve_quota_bound(const NetworkParams& params, int hops, double tau,
                         double source_sink_distance, double rhs) {
    if (!(rhs >= 0.0) || !std::isfinite(rhs)) throw DomainError("EDP budget must be non-negative");
    if (hops < 1) throw DomainError("hop count must be at least 1");
    if (!(tau > 0.0)) throw DomainError("tau must be positive");
    const double h = hops;
    const double delay_per_packet = tau * h;
    const double a = metrics::energy_per_packet(params, h, source_sink_distance) * delay_per_packet;
    const double b = params.sensing_power * (h + 1.0) * delay_per_packet;
    if (rhs == 0.0) return 0.0;
    if (!(a > 0.0) && !(b > 0.0)) throw DomainError("path EDP is identically zero");
    const double disc = b * b + 4.0 * a * rhs;
    assert(disc >= 0.0);
    // 2C / (B + sqrt(B^2 + 4AC)) is the positive root without cancellation.
    return 2.0 * rhs / (b + std::sqrt(disc));
}

std::vector<std::int64_t> apportion(std::span<const double> weights, std::int64_t total) {
    if (weights.empty()) throw DomainError("cannot apportion over zero paths");
    if (total < 0) throw DomainError("total must be non-negative");
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (total > 0 && !(sum > 0.0)) throw DegenerateAllocationError("weights sum to zero");
    std::vector<std::int64_t> out(weights.size(), 0);
    if (total == 0) return out;
    std::vector<double> frac(weights.size());
    std::int64_t assigned = 0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        if (weights[j] < 0.0) throw DomainError("weights must be non-negative");
        const double share = weights[j] / sum * static_cast<double>(total);
        const double whole = std::floor(share);
        out[j] = static_cast<std::int64_t>(whole);
        frac[j] = share - whole;
        assigned += out[j];
    }
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    // Floating point can leave the floors one unit off in either direction.
    std::int64_t remainder = total - assigned;
    for (std::size_t i = 0; remainder > 0; i = (i + 1) % order.size()) {
        ++out[order[i]];
        --remainder;
    }
    for (auto it = order.rbegin(); remainder < 0 && it != order.rend(); ++it) {
        if (out[*it] > 0) {
            --out[*it];
            ++remainder;
        }
    }
    return out;
}

Allocation allocate_single_source(const AllocationInput& input) {
    return bounded_split(input, false);
}

Allocation allocate_multi_source(const AllocationInput& input) {
    return bounded_split(input, true);
}

Allocation scheme_allocation(Scheme scheme, const AllocationInput& input, bool contention_aware) {
    validate_input(input);
    if (scheme == Scheme::strategic) {
        return contention_aware ? allocate_multi_source(input) : allocate_single_source(input);
    }
    Allocation out;
    const std::size_t n = input.paths.size();
    out.quotas.assign(n, 0);
    if (scheme == Scheme::single_path) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < n; ++j) {
            if (input.paths[j].hops < input.paths[best].hops) best = j;
        }
        out.quotas[best] = input.packets;
    } else {
        const auto count = static_cast<std::int64_t>(n);
        for (std::size_t j = 0; j < n; ++j) {
            out.quotas[j] = input.packets / count +
                            (static_cast<std::int64_t>(j) < input.packets % count ? 1 : 0);
        }
    }
    for (std::int64_t q : out.quotas) out.raw_quotas.push_back(static_cast<double>(q));
    out.exceeds_bound.assign(n, false);
    return out;
}

}  // namespace maddr
