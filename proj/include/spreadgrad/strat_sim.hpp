#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "spreadgrad/albers.hpp"
#include "spreadgrad/types.hpp"

namespace spreadgrad {

/// Colony expansion speed as a function of location: either uniform or split at
/// a meridian (speeds west and east of it).
class SpeedMap {
public:
    static SpeedMap uniform(double c);
    static SpeedMap meridian_split(double lon_deg, double west, double east, AlbersConfig proj = {});

    [[nodiscard]] double at(const Location& s) const;
    [[nodiscard]] bool is_split() const { return split_.has_value(); }
    [[nodiscard]] double min_speed() const;
    [[nodiscard]] double max_speed() const;
    /// true when s lies west of the split meridian (always false when uniform)
    [[nodiscard]] bool west_of_split(const Location& s) const;

private:
    struct Split {
        double lon;
        double west;
        double east;
        AlbersProjection proj;
    };
    double uniform_ = 1.0;
    std::optional<Split> split_;
};

struct Colony {
    Location center;
    double birth_year = 0.0;
    double speed = 0.0;  // km/year, fixed by the region of the centre
    [[nodiscard]] double radius(double t) const { return t > birth_year ? speed * (t - birth_year) : 0.0; }
};

struct SeededJump {
    Location loc;
    double year = 0.0;
};

struct SimConfig {
    Location origin;
    double start_year = 1900.0;
    SpeedMap speed = SpeedMap::uniform(10.0);
    double colony_rate_coeff = 0.1;  // offspring per km of radius per year
    double jump_distance_km = 10.0;
    double horizon_years = 107.0;
    double timestep_years = 1.0;
    std::vector<SeededJump> seeded_jumps;
    std::uint64_t seed = 1;
    // Offspring further than this outside the bounding box of query points,
    // origin and seeded jumps are discarded.
    double domain_margin_km = 300.0;
    double raster_cell_km = 2.0;
    // When false, offspring landing on invaded ground are not founded.
    bool keep_covered_offspring = true;

    /// Throws InputError naming the offending field.
    void validate() const;
};

struct BirthEvent {
    std::size_t colony = 0;
    long parent = -1;  // -1 for the initial introduction and seeded jumps
    double year = 0.0;
    Location loc;
    bool seeded = false;
    bool on_invaded_ground = false;
};

struct SimResult {
    std::vector<std::optional<double>> arrival;  // per query point; empty when never reached
    std::vector<BirthEvent> births;
    std::size_t discarded_outside = 0;
    std::size_t discarded_covered = 0;
    std::vector<std::size_t> invaded_cells;  // raster cells covered after each step
};

/// Annual-step stratified diffusion. Colony radii grow at the speed of their
/// centre's region; each colony founds Poisson(coeff * r * dt) offspring per step
/// at uniform angles, a distance radius + L from its centre. A point's arrival is
/// the first step time at which any colony disk covers it. Colonies whose whole
/// founding ring lies on invaded ground stop founding.
SimResult simulate(const SimConfig& config, const std::vector<Location>& query);

/// Massachusetts introduction in 1900, c = 10 km/yr east of -78 and 20 west of it,
/// coeff 0.1, L = 10 km, a seeded Michigan colony in 1950, 107 years.
SimConfig reference_config(std::uint64_t seed = 1);
SimResult reference_scenario(const std::vector<Location>& query, std::uint64_t seed = 1);

inline constexpr GeoPoint kReferenceOrigin{-71.80, 42.27};
inline constexpr GeoPoint kReferenceMichigan{-84.55, 42.73};
inline constexpr double kReferenceSplitLon = -78.0;

/// Hexagonal lattice with the given spacing, keeping points whose geographic
/// coordinates fall in [lon_lo, lon_hi] x [lat_lo, lat_hi].
std::vector<Location> centroid_grid(double lon_lo, double lon_hi, double lat_lo, double lat_hi, double spacing_km,
                                    AlbersConfig proj = {});

/// Lattice over the north-eastern US study extent with spacing tuned so that the
/// point count is as close as possible to `target`.
std::vector<Location> study_area_grid(std::size_t target = 400);

/// Waiting-time dataset of reached points with lon and lat covariates; ids are the
/// query indices.
WaitingTimeDataset to_dataset(const SimResult& result, const std::vector<Location>& query, AlbersConfig proj = {});

/// One JSON object per line: colony, parent, year, x, y, seeded, on_invaded_ground.
void write_event_log(const std::filesystem::path& path, const SimResult& result);

}  // namespace spreadgrad
