#include "spreadgrad/rayleigh.hpp"

#include <algorithm>
#include <cmath>

#include "spreadgrad/errors.hpp"
#include "spreadgrad/stats.hpp"

namespace spreadgrad {

RayleighStatistic rayleigh_test(std::span<const Eigen::Vector2d> directions) {
    const std::size_t n = directions.size();
    if (n < 2) throw InputError("Rayleigh test needs at least two directions");
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    for (const auto& d : directions) {
        const double norm = d.norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) throw InputError("Rayleigh test: zero or non-finite direction");
        sum += d / norm;
    }
    const double r = sum.norm() / static_cast<double>(n);
    RayleighStatistic s;
    s.R = 2.0 * static_cast<double>(n) * r * r;
    s.p_value = std::exp(-0.5 * s.R);
    return s;
}

namespace {

double default_speed_floor(const std::vector<SpreadSummary>& field) {
    std::vector<double> speeds;
    for (const auto& s : field)
        if (s.significant && s.speed) speeds.push_back(s.speed->median);
    if (speeds.empty()) return 0.0;
    std::sort(speeds.begin(), speeds.end());
    return quantile_sorted(speeds, 0.25);
}

}  // namespace

std::vector<RayleighResult> rayleigh_scan_at(const std::vector<Location>& centers,
                                             const std::vector<SpreadSummary>& field,
                                             const RayleighScanConfig& config) {
    if (field.empty()) throw InputError("Rayleigh scan needs a non-empty spread field");
    const double floor = config.speed_floor.value_or(default_speed_floor(field));
    const std::size_t min_n = std::max<std::size_t>(2, config.min_neighbors);
    std::vector<RayleighResult> out;
    out.reserve(centers.size());
    for (const auto& c : centers) {
        RayleighResult r;
        r.center = c;
        std::vector<Eigen::Vector2d> dirs;
        double speed_sum = 0.0;
        for (const auto& s : field) {
            if (!s.significant || !s.speed) continue;
            if (distance(s.point, c) > config.radius_km) continue;
            dirs.push_back(s.direction_mean);
            speed_sum += s.speed->median;
        }
        r.n_neighbors = dirs.size();
        if (dirs.size() >= min_n) {
            const auto stat = rayleigh_test(dirs);
            r.tested = true;
            r.R = stat.R;
            r.p_value = stat.p_value;
            r.fails_to_reject = stat.p_value > config.alpha;
            r.neighbor_mean_speed = speed_sum / static_cast<double>(dirs.size());
            r.flagged = r.fails_to_reject && r.neighbor_mean_speed > floor;
        }
        out.push_back(r);
    }
    return out;
}

std::vector<RayleighResult> rayleigh_scan(const std::vector<SpreadSummary>& field, const RayleighScanConfig& config) {
    std::vector<Location> centers;
    centers.reserve(field.size());
    for (const auto& s : field) centers.push_back(s.point);
    return rayleigh_scan_at(centers, field, config);
}

}  // namespace spreadgrad
