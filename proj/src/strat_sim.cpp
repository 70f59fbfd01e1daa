#include "spreadgrad/strat_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <string>

#include "spreadgrad/csv.hpp"
#include "spreadgrad/errors.hpp"

namespace spreadgrad {

SpeedMap SpeedMap::uniform(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw InputError("speed must be positive");
    SpeedMap m;
    m.uniform_ = c;
    return m;
}

SpeedMap SpeedMap::meridian_split(double lon_deg, double west, double east, AlbersConfig proj) {
    if (!(west > 0.0) || !(east > 0.0) || !std::isfinite(west) || !std::isfinite(east))
        throw InputError("speeds must be positive");
    if (!(lon_deg >= -180.0 && lon_deg <= 180.0)) throw InputError("split meridian must lie in [-180, 180]");
    SpeedMap m;
    m.split_ = Split{lon_deg, west, east, AlbersProjection(proj)};
    return m;
}

bool SpeedMap::west_of_split(const Location& s) const {
    return split_ && split_->proj.inverse(s).lon < split_->lon;
}

double SpeedMap::at(const Location& s) const {
    if (!split_) return uniform_;
    return west_of_split(s) ? split_->west : split_->east;
}

double SpeedMap::min_speed() const { return split_ ? std::min(split_->west, split_->east) : uniform_; }
double SpeedMap::max_speed() const { return split_ ? std::max(split_->west, split_->east) : uniform_; }

void SimConfig::validate() const {
    auto bad = [](const std::string& what) { throw InputError("invalid simulation config: " + what); };
    if (!origin.finite()) bad("origin must be finite");
    if (!std::isfinite(start_year)) bad("start_year must be finite");
    if (!(colony_rate_coeff >= 0.0) || !std::isfinite(colony_rate_coeff)) bad("colony_rate_coeff must be >= 0");
    if (!(jump_distance_km >= 0.0) || !std::isfinite(jump_distance_km)) bad("jump_distance_km must be >= 0");
    if (!(timestep_years > 0.0) || !std::isfinite(timestep_years)) bad("timestep_years must be > 0");
    if (!(horizon_years >= 0.0) || !std::isfinite(horizon_years)) bad("horizon_years must be >= 0");
    if (!(domain_margin_km >= 0.0)) bad("domain_margin_km must be >= 0");
    if (!(raster_cell_km > 0.0)) bad("raster_cell_km must be > 0");
    if (!(speed.min_speed() > 0.0)) bad("speeds must be > 0");
    for (const auto& j : seeded_jumps) {
        if (!j.loc.finite()) bad("seeded jump location must be finite");
        if (!(j.year >= start_year && j.year <= start_year + horizon_years))
            bad("seeded jump year must lie within the simulated period");
    }
}

namespace {

// Invaded ground on a square grid; a cell counts as invaded once its centre is covered.
class Raster {
public:
    Raster(double x0, double y0, double x1, double y1, double cell)
        : x0_(x0), y0_(y0), cell_(cell),
          nx_(static_cast<long>(std::ceil((x1 - x0) / cell))),
          ny_(static_cast<long>(std::ceil((y1 - y0) / cell))),
          cells_(static_cast<std::size_t>(nx_ * ny_), 0) {}

    bool inside(const Location& p) const {
        return p.x >= x0_ && p.y >= y0_ && p.x < x0_ + nx_ * cell_ && p.y < y0_ + ny_ * cell_;
    }
    bool covered(const Location& p) const {
        if (!inside(p)) return false;
        const auto i = static_cast<long>((p.x - x0_) / cell_);
        const auto j = static_cast<long>((p.y - y0_) / cell_);
        return cells_[static_cast<std::size_t>(j * nx_ + i)] != 0;
    }
    std::size_t count() const { return count_; }

    // Marks cells whose centres lie within distance r1 of c and not within r0.
    void paint_annulus(const Location& c, double r0, double r1) {
        if (!(r1 > 0.0)) return;
        const long jlo = std::max(0L, static_cast<long>(std::floor((c.y - r1 - y0_) / cell_ - 0.5)));
        const long jhi = std::min(ny_ - 1, static_cast<long>(std::ceil((c.y + r1 - y0_) / cell_ - 0.5)));
        for (long j = jlo; j <= jhi; ++j) {
            const double dy = y0_ + (static_cast<double>(j) + 0.5) * cell_ - c.y;
            if (std::abs(dy) > r1) continue;
            const double wo = std::sqrt(r1 * r1 - dy * dy);
            const double wi = std::abs(dy) < r0 ? std::sqrt(r0 * r0 - dy * dy) : -1.0;
            if (wi < 0.0) {
                paint_row(j, c.x - wo, c.x + wo);
            } else {
                paint_row(j, c.x - wo, c.x - wi);
                paint_row(j, c.x + wi, c.x + wo);
            }
        }
    }

private:
    void paint_row(long j, double xa, double xb) {
        const long ilo = std::max(0L, static_cast<long>(std::ceil((xa - x0_) / cell_ - 0.5)));
        const long ihi = std::min(nx_ - 1, static_cast<long>(std::floor((xb - x0_) / cell_ - 0.5)));
        for (long i = ilo; i <= ihi; ++i) {
            auto& v = cells_[static_cast<std::size_t>(j * nx_ + i)];
            if (!v) {
                v = 1;
                ++count_;
            }
        }
    }

    double x0_, y0_, cell_;
    long nx_, ny_;
    std::vector<std::uint8_t> cells_;
    std::size_t count_ = 0;
};

}  // namespace

SimResult simulate(const SimConfig& cfg, const std::vector<Location>& query) {
    cfg.validate();
    const double dt = cfg.timestep_years;
    const auto n_steps = static_cast<long>(std::floor(cfg.horizon_years / dt + 1e-9));
    const double end_year = cfg.start_year + static_cast<double>(n_steps) * dt;

    double xlo = cfg.origin.x, xhi = xlo, ylo = cfg.origin.y, yhi = ylo;
    auto extend = [&](const Location& p) {
        xlo = std::min(xlo, p.x);
        xhi = std::max(xhi, p.x);
        ylo = std::min(ylo, p.y);
        yhi = std::max(yhi, p.y);
    };
    for (const auto& q : query) {
        if (!q.finite()) throw InputError("query points must be finite");
        extend(q);
    }
    for (const auto& j : cfg.seeded_jumps) extend(j.loc);
    const double m = cfg.domain_margin_km;
    Raster raster(xlo - m, ylo - m, xhi + m + cfg.raster_cell_km, yhi + m + cfg.raster_cell_km, cfg.raster_cell_km);

    SimResult res;
    res.arrival.assign(query.size(), std::nullopt);
    std::vector<Colony> colonies;
    std::vector<std::size_t> active;

    auto found = [&](const Location& loc, double year, long parent, bool seeded, bool on_invaded) {
        const std::size_t id = colonies.size();
        const Colony c{loc, year, cfg.speed.at(loc)};
        colonies.push_back(c);
        res.births.push_back({id, parent, year, loc, seeded, on_invaded});
        // Disk of c first covers q at year + d / speed; report the next step time.
        for (std::size_t i = 0; i < query.size(); ++i) {
            auto& a = res.arrival[i];
            if (a && *a <= year) continue;
            const double t = year + distance(loc, query[i]) / c.speed;
            const double k = std::max(0.0, std::ceil((t - cfg.start_year) / dt - 1e-9));
            const double step_time = cfg.start_year + k * dt;
            if (step_time > end_year + 1e-9) continue;
            if (!a || step_time < *a) a = step_time;
        }
        return id;
    };

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::vector<SeededJump> pending = cfg.seeded_jumps;
    std::stable_sort(pending.begin(), pending.end(),
                     [](const SeededJump& a, const SeededJump& b) { return a.year < b.year; });
    std::size_t next_jump = 0;

    active.push_back(found(cfg.origin, cfg.start_year, -1, false, false));
    res.invaded_cells.reserve(static_cast<std::size_t>(n_steps));

    std::vector<std::size_t> still_active;
    for (long k = 0; k < n_steps; ++k) {
        const double t0 = cfg.start_year + static_cast<double>(k) * dt;
        const double t1 = t0 + dt;
        while (next_jump < pending.size() && pending[next_jump].year < t1 - 1e-9) {
            const auto& j = pending[next_jump++];
            active.push_back(found(j.loc, j.year, -1, true, raster.covered(j.loc)));
        }
        for (std::size_t id : active) {
            const Colony& c = colonies[id];
            raster.paint_annulus(c.center, c.radius(t0), c.radius(t1));
        }

        still_active.clear();
        const std::size_t n_active = active.size();
        for (std::size_t a = 0; a < n_active; ++a) {
            const std::size_t id = active[a];
            const Colony c = colonies[id];
            const double r1 = c.radius(t1);
            const double ring = r1 + cfg.jump_distance_km;
            // Dormant once every point of the founding ring is on invaded ground or outside the domain.
            const auto n_ring = std::max<std::size_t>(
                16, static_cast<std::size_t>(std::ceil(2.0 * std::numbers::pi * ring / cfg.raster_cell_km)));
            bool all_covered = true;
            for (std::size_t q = 0; q < n_ring && all_covered; ++q) {
                const double th = 2.0 * std::numbers::pi * static_cast<double>(q) / static_cast<double>(n_ring);
                const Location p{c.center.x + ring * std::cos(th), c.center.y + ring * std::sin(th)};
                all_covered = !raster.inside(p) || raster.covered(p);
            }
            if (all_covered) continue;
            still_active.push_back(id);

            const double mean = cfg.colony_rate_coeff * 0.5 * (c.radius(t0) + r1) * dt;
            if (!(mean > 0.0)) continue;
            std::poisson_distribution<long> pois(mean);
            const long n_off = pois(rng);
            for (long o = 0; o < n_off; ++o) {
                const double th = angle(rng);
                const Location p{c.center.x + ring * std::cos(th), c.center.y + ring * std::sin(th)};
                if (!raster.inside(p)) {
                    ++res.discarded_outside;
                    continue;
                }
                const bool on_invaded = raster.covered(p);
                if (on_invaded && !cfg.keep_covered_offspring) {
                    ++res.discarded_covered;
                    continue;
                }
                still_active.push_back(found(p, t1, static_cast<long>(id), false, on_invaded));
            }
        }
        active.swap(still_active);
        res.invaded_cells.push_back(raster.count());
    }
    while (next_jump < pending.size()) {
        const auto& j = pending[next_jump++];
        found(j.loc, j.year, -1, true, raster.covered(j.loc));
    }
    return res;
}

SimConfig reference_config(std::uint64_t seed) {
    const AlbersProjection proj;
    SimConfig c;
    c.origin = proj.project(kReferenceOrigin);
    c.start_year = 1900.0;
    c.speed = SpeedMap::meridian_split(kReferenceSplitLon, 20.0, 10.0);
    c.colony_rate_coeff = 0.1;
    c.jump_distance_km = 10.0;
    c.horizon_years = 107.0;
    c.timestep_years = 1.0;
    c.seeded_jumps = {{proj.project(kReferenceMichigan), 1950.0}};
    c.seed = seed;
    return c;
}

SimResult reference_scenario(const std::vector<Location>& query, std::uint64_t seed) {
    return simulate(reference_config(seed), query);
}

std::vector<Location> centroid_grid(double lon_lo, double lon_hi, double lat_lo, double lat_hi, double spacing,
                                    AlbersConfig cfg) {
    if (!(spacing > 0.0)) throw InputError("grid spacing must be positive");
    if (!(lon_lo < lon_hi && lat_lo < lat_hi)) throw InputError("grid extent is empty");
    const AlbersProjection proj(cfg);
    double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
    for (int i = 0; i <= 32; ++i) {
        const double lon = lon_lo + (lon_hi - lon_lo) * i / 32.0;
        const double lat = lat_lo + (lat_hi - lat_lo) * i / 32.0;
        for (const Location p : {proj.project(lon, lat_lo), proj.project(lon, lat_hi), proj.project(lon_lo, lat),
                                 proj.project(lon_hi, lat)}) {
            xlo = std::min(xlo, p.x);
            xhi = std::max(xhi, p.x);
            ylo = std::min(ylo, p.y);
            yhi = std::max(yhi, p.y);
        }
    }
    std::vector<Location> out;
    const double row = spacing * std::sqrt(3.0) / 2.0;
    for (long j = 0; ylo + j * row <= yhi; ++j) {
        const double off = (j % 2) ? 0.5 * spacing : 0.0;
        for (long i = 0; xlo + off + i * spacing <= xhi; ++i) {
            const Location p{xlo + off + i * spacing, ylo + j * row};
            const GeoPoint g = proj.inverse(p);
            if (g.lon >= lon_lo && g.lon <= lon_hi && g.lat >= lat_lo && g.lat <= lat_hi) out.push_back(p);
        }
    }
    return out;
}

std::vector<Location> study_area_grid(std::size_t target) {
    constexpr double lon_lo = -92.0, lon_hi = -67.5, lat_lo = 37.0, lat_hi = 47.5;
    if (target == 0) throw InputError("grid target must be positive");
    double lo = 5.0, hi = 1000.0;
    std::vector<Location> best;
    for (int it = 0; it < 40; ++it) {
        const double s = std::sqrt(lo * hi);
        auto g = centroid_grid(lon_lo, lon_hi, lat_lo, lat_hi, s);
        const auto diff = [&](std::size_t n) { return n > target ? n - target : target - n; };
        if (best.empty() || diff(g.size()) < diff(best.size())) best = g;
        if (g.size() == target) break;
        (g.size() > target ? lo : hi) = s;
    }
    return best;
}

WaitingTimeDataset to_dataset(const SimResult& result, const std::vector<Location>& query, AlbersConfig cfg) {
    if (result.arrival.size() != query.size()) throw InputError("arrival and query point counts differ");
    const AlbersProjection proj(cfg);
    std::vector<WaitingTimeObservation> obs;
    for (std::size_t i = 0; i < query.size(); ++i) {
        if (!result.arrival[i]) continue;
        const GeoPoint g = proj.inverse(query[i]);
        obs.push_back({std::to_string(i), query[i], *result.arrival[i], {{"lon", g.lon}, {"lat", g.lat}}});
    }
    return WaitingTimeDataset(std::move(obs), {"lon", "lat"});
}

void write_event_log(const std::filesystem::path& path, const SimResult& result) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    for (const auto& b : result.births) {
        out << "{\"colony\":" << b.colony << ",\"parent\":" << b.parent << ",\"year\":" << csv::format(b.year)
            << ",\"x\":" << csv::format(b.loc.x) << ",\"y\":" << csv::format(b.loc.y)
            << ",\"seeded\":" << (b.seeded ? "true" : "false")
            << ",\"on_invaded_ground\":" << (b.on_invaded_ground ? "true" : "false") << "}\n";
    }
}

}  // namespace spreadgrad
