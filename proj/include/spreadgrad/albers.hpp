#pragma once

#include "spreadgrad/types.hpp"

namespace spreadgrad {

struct AlbersConfig {
    double central_meridian_deg = -96.0;
    double origin_latitude_deg = 23.0;
    double standard_parallel1_deg = 29.5;
    double standard_parallel2_deg = 45.5;
    double earth_radius_km = 6371.0088;
};

struct GeoPoint {
    double lon = 0.0;  // degrees
    double lat = 0.0;  // degrees
};

/// Albers equal-area conic projection on a sphere, output in kilometres.
class AlbersProjection {
public:
    explicit AlbersProjection(AlbersConfig cfg = {});

    /// Throws InputError for lon outside [-180, 180] or lat outside (-90, 90).
    [[nodiscard]] Location project(double lon_deg, double lat_deg) const;
    [[nodiscard]] Location project(GeoPoint p) const { return project(p.lon, p.lat); }
    [[nodiscard]] GeoPoint inverse(const Location& loc) const;

    /// Scale factor along the parallel at the given latitude (1 on the standard parallels).
    [[nodiscard]] double parallel_scale(double lat_deg) const;

    [[nodiscard]] const AlbersConfig& config() const { return cfg_; }

private:
    double rho(double lat_rad) const;

    AlbersConfig cfg_;
    double n_;
    double c_;
    double rho0_;
};

/// Projection with the default continental-US parameters.
Location project_albers(double lon_deg, double lat_deg);

}  // namespace spreadgrad
