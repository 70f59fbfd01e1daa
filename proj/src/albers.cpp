#include "spreadgrad/albers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spreadgrad/errors.hpp"

namespace spreadgrad {

namespace {
constexpr double kDeg = std::numbers::pi / 180.0;
}

AlbersProjection::AlbersProjection(AlbersConfig cfg) : cfg_(cfg) {
    const double p1 = cfg_.standard_parallel1_deg * kDeg;
    const double p2 = cfg_.standard_parallel2_deg * kDeg;
    n_ = 0.5 * (std::sin(p1) + std::sin(p2));
    if (std::abs(n_) < 1e-12) throw InputError("Albers: standard parallels symmetric about the equator");
    c_ = std::cos(p1) * std::cos(p1) + 2.0 * n_ * std::sin(p1);
    rho0_ = rho(cfg_.origin_latitude_deg * kDeg);
}

double AlbersProjection::rho(double lat_rad) const {
    return cfg_.earth_radius_km * std::sqrt(c_ - 2.0 * n_ * std::sin(lat_rad)) / n_;
}

Location AlbersProjection::project(double lon_deg, double lat_deg) const {
    if (!(lon_deg >= -180.0 && lon_deg <= 180.0)) throw InputError("longitude out of range [-180, 180]");
    if (!(lat_deg > -90.0 && lat_deg < 90.0)) throw InputError("latitude out of range (-90, 90)");
    const double r = rho(lat_deg * kDeg);
    const double theta = n_ * (lon_deg - cfg_.central_meridian_deg) * kDeg;
    return {r * std::sin(theta), rho0_ - r * std::cos(theta)};
}

GeoPoint AlbersProjection::inverse(const Location& loc) const {
    const double dy = rho0_ - loc.y;
    double r = std::hypot(loc.x, dy);
    double theta = std::atan2(loc.x, dy);
    if (n_ < 0.0) {
        r = -r;
        theta = std::atan2(-loc.x, -dy);
    }
    const double rn = r * n_ / cfg_.earth_radius_km;
    const double s = std::clamp((c_ - rn * rn) / (2.0 * n_), -1.0, 1.0);
    return {cfg_.central_meridian_deg + theta / n_ / kDeg, std::asin(s) / kDeg};
}

double AlbersProjection::parallel_scale(double lat_deg) const {
    const double phi = lat_deg * kDeg;
    return rho(phi) * n_ / (cfg_.earth_radius_km * std::cos(phi));
}

Location project_albers(double lon_deg, double lat_deg) {
    static const AlbersProjection proj{};
    return proj.project(lon_deg, lat_deg);
}

}  // namespace spreadgrad
