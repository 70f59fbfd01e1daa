#pragma once

#include <optional>
#include <span>
#include <vector>

#include "spreadgrad/gradient_field.hpp"

namespace spreadgrad {

struct RayleighStatistic {
    double R = 0.0;        // 2 n rbar^2
    double p_value = 1.0;  // P(chi2_2 > R) = exp(-R / 2)
};

/// Rayleigh test of circular uniformity. Inputs are normalised before use; needs n >= 2.
RayleighStatistic rayleigh_test(std::span<const Eigen::Vector2d> directions);

struct RayleighResult {
    Location center;
    std::size_t n_neighbors = 0;
    double R = 0.0;
    double p_value = 1.0;
    bool tested = false;           // false when too few significant neighbours
    bool fails_to_reject = false;  // raw test outcome: directions look uniform
    double neighbor_mean_speed = 0.0;
    bool flagged = false;          // fails to reject and neighbour speed exceeds the floor
};

struct RayleighScanConfig {
    double radius_km = 100.0;
    double alpha = 0.05;
    std::size_t min_neighbors = 5;
    // Flags need the neighbours' mean speed above this; unset uses the
    // 25th percentile of significant speeds across the field.
    std::optional<double> speed_floor;
};

/// Scans every field location, using mean directions of significant neighbours within the radius.
std::vector<RayleighResult> rayleigh_scan(const std::vector<SpreadSummary>& field, const RayleighScanConfig& config);

/// Same test centred on arbitrary points.
std::vector<RayleighResult> rayleigh_scan_at(const std::vector<Location>& centers,
                                             const std::vector<SpreadSummary>& field,
                                             const RayleighScanConfig& config);

}  // namespace spreadgrad
