#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "spreadgrad/gradient_field.hpp"

namespace spreadgrad {

/// Straight line segment with a unit normal designating its "outward" side.
class CurveSegment {
public:
    /// Throws InputError for a zero-length segment or a normal that is not a unit
    /// vector orthogonal to end - start.
    CurveSegment(Location start, Location end, Eigen::Vector2d outward_normal);

    [[nodiscard]] const Location& start() const { return start_; }
    [[nodiscard]] const Location& end() const { return end_; }
    [[nodiscard]] const Eigen::Vector2d& normal() const { return normal_; }
    [[nodiscard]] double length() const { return distance(start_, end_); }
    [[nodiscard]] Location at(double t) const { return start_ + t * (end_ - start_); }
    /// Same segment traversed backwards with the opposite normal.
    [[nodiscard]] CurveSegment reversed() const { return {end_, start_, -normal_}; }

private:
    Location start_;
    Location end_;
    Eigen::Vector2d normal_;
};

enum class SideClass { Out, In, Inconclusive };

const char* to_string(SideClass c);

struct CurveGradientResult {
    CurveSegment segment;
    std::vector<double> avg_normal_gradient_draws;  // years/km, one per parameter draw
    double lo = 0.0;
    double hi = 0.0;
    SideClass classification = SideClass::Inconclusive;
};

/// Conditional law of the total normal gradient Gamma over the segment for one
/// parameter draw: mean mu_Gamma + gamma^T alpha, variance K_Gamma - gamma^T Sigma^{-1} gamma.
/// Each entry of gamma is a line integral evaluated with `nodes` Gauss-Legendre points
/// on either side of the site's foot point.
struct CurveConditional {
    double mean = 0.0;
    double var = 0.0;
};

CurveConditional curve_conditional(const CurveSegment& segment, const std::vector<Location>& sites,
                                   const ConditioningFactor& factor, std::size_t nodes);

/// Prior variance K_Gamma of the total normal gradient over a straight segment (closed form).
double curve_prior_variance(const CurveSegment& segment, const MaternParams& p);

/// Average gradient normal to the segment (total divided by arc length), one draw per
/// parameter draw, classified by a `level` equal-tailed interval: above 0 is Out, below 0 is In.
CurveGradientResult avg_normal_gradient(const CurveSegment& segment, const WaitingTimeDataset& data,
                                        const PosteriorDraws& draws, std::size_t nodes, std::uint64_t seed,
                                        double level = 0.95);

/// Batched form sharing the per-draw factorisation across segments.
std::vector<CurveGradientResult> avg_normal_gradients(const std::vector<CurveSegment>& segments,
                                                      const WaitingTimeDataset& data, const PosteriorDraws& draws,
                                                      std::size_t nodes, std::uint64_t seed, double level = 0.95,
                                                      unsigned threads = 1);

/// Standard normal deviate shared by every segment for a given parameter draw.
double curve_deviate(std::uint64_t seed, std::size_t draw);

struct BoxTestResult {
    Location center;
    double side = 0.0;
    // North, east, south, west.
    std::array<SideClass, 4> sides{SideClass::Inconclusive, SideClass::Inconclusive, SideClass::Inconclusive,
                                   SideClass::Inconclusive};
    std::array<double, 4> side_means{};
    bool flagged = false;  // out of at least two sides and into none
};

struct BoxScanConfig {
    double grid_spacing_km = 50.0;
    double box_side_km = 100.0;
    std::size_t nodes = 16;
    double level = 0.95;
    std::size_t max_draws = 200;  // evenly thinned; 0 keeps every draw
    unsigned threads = 1;
};

/// Four boxes sides with outward normals, ordered north, east, south, west.
std::array<CurveSegment, 4> box_sides(const Location& center, double side);

/// Regular grid over the data bounding box, keeping centres inside the convex hull of the sites.
std::vector<Location> hull_grid(const std::vector<Location>& sites, double spacing);

std::vector<BoxTestResult> box_jump_scan(const WaitingTimeDataset& data, const PosteriorDraws& draws,
                                         const BoxScanConfig& config, std::uint64_t seed);
std::vector<BoxTestResult> box_jump_scan(const WaitingTimeDataset& data, const PosteriorDraws& draws,
                                         const std::vector<Location>& centers, const BoxScanConfig& config,
                                         std::uint64_t seed);

}  // namespace spreadgrad
