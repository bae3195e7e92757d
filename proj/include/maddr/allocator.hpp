#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "maddr/model.hpp"

namespace maddr {

struct PathParams {
    int hops{1};
    double tau{0.0};
    int contention{0};
};

struct AllocationInput {
    NetworkParams params;
    std::int64_t packets{0};
    std::vector<PathParams> paths;
    double source_sink_distance{0.0};

    static AllocationInput from_source(const NetworkParams& params, const SourceSpec& source);
};

struct Allocation {
    std::vector<std::int64_t> quotas;
    std::vector<double> raw_quotas;      // per-path EDP bound before normalization
    std::vector<bool> exceeds_bound;     // normalized quota above the raw bound
    double rhs{0.0};                     // EDP budget every path was solved against

    std::int64_t total() const;
};

enum class Scheme { single_path = 1, equal_split = 2, strategic = 3 };

Scheme scheme_from_int(int value);

/// Largest packet count whose path EDP equals `rhs`: the non-negative root of
/// A x^2 + B x = rhs.
double solve_quota_bound(const NetworkParams& params, int hops, double tau,
                         double source_sink_distance, double rhs);

/// Splits `total` into integers proportional to `weights`: floor of every share,
/// then one extra unit each to the largest fractional parts, lower index first
/// on ties.
std::vector<std::int64_t> apportion(std::span<const double> weights, std::int64_t total);

/// EDP-bounded split for one source; contention counts are ignored.
Allocation allocate_single_source(const AllocationInput& input);

/// EDP-bounded split discounted by (1 - C_j / (H_j + 1)) on every path.
Allocation allocate_multi_source(const AllocationInput& input);

/// Scheme 1 puts everything on the fewest-hop path, scheme 2 splits equally,
/// scheme 3 is the strategic split (contention-aware when requested).
Allocation scheme_allocation(Scheme scheme, const AllocationInput& input,
                             bool contention_aware = false);

}  // namespace maddr
