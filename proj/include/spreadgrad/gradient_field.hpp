#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spreadgrad/gp_fit.hpp"
#include "spreadgrad/linalg.hpp"

namespace spreadgrad {

/// Posterior gradient draws at one point, one per retained parameter draw.
struct GradientSample {
    Location point;
    std::vector<Eigen::Vector2d> grads;  // years/km
};

struct SpeedStats {
    double median = 0.0;  // km/year
    double lo = 0.0;
    double hi = 0.0;
    double mean = 0.0;
};

struct SpreadSummary {
    Location point;
    Eigen::Vector2d grad_mean = Eigen::Vector2d::Zero();
    std::optional<SpeedStats> speed;  // missing when every gradient draw is zero
    Eigen::Vector2d direction_mean = Eigen::Vector2d::UnitX();
    double direction_ci_halfwidth = 0.0;  // radians
    bool significant = false;
};

/// Per-parameter-draw quantities shared by every gradient or curve functional:
/// the Cholesky factor of K(D) + tau2 I and alpha = (K(D) + tau2 I)^{-1} (Y - mu).
struct ConditioningFactor {
    GpParams params;
    Cholesky chol;
    Eigen::VectorXd alpha;
};

ConditioningFactor make_conditioning_factor(const WaitingTimeDataset& data, const Eigen::MatrixXd& dist,
                                            const GpParams& params);

/// Mean and covariance of grad Y(s0) given the data and one parameter draw:
///   mean = grad mu + G^T alpha,  cov = sigma2 phi^2 I - G^T (K + tau2 I)^{-1} G,
/// where G_j = grad K(s0 - s_j).
struct GradientConditional {
    Eigen::Vector2d mean;
    Eigen::Matrix2d cov;
};

GradientConditional gradient_conditional(const Location& point, const std::vector<Location>& sites,
                                         const ConditioningFactor& factor);

/// Draws mean + cov^{1/2} z; negative eigenvalues from rounding are clamped to zero.
Eigen::Vector2d sample_conditional(const GradientConditional& c, const Eigen::Vector2d& z);

/// Standard normal pair used for parameter draw `draw`; shared by every point so
/// that results are reproducible independent of point order or thread count.
Eigen::Vector2d draw_deviates(std::uint64_t seed, std::size_t draw);

GradientSample gradient_posterior(const Location& point, const WaitingTimeDataset& data,
                                  const PosteriorDraws& draws, std::uint64_t seed);

/// Speeds are 1/|g| per draw; `level` is the credible mass (0.95 by default).
SpreadSummary summarize_spread(const GradientSample& sample, double level = 0.95);

/// Gradient samples at many points; the per-draw factorisation is reused across points.
std::vector<GradientSample> gradient_field(const WaitingTimeDataset& data, const PosteriorDraws& draws,
                                           const std::vector<Location>& points, std::uint64_t seed,
                                           unsigned threads = 1);

std::vector<SpreadSummary> spread_field(const WaitingTimeDataset& data, const PosteriorDraws& draws,
                                        const std::vector<Location>& points, std::uint64_t seed,
                                        double level = 0.95, unsigned threads = 1);

/// Evenly spaced subset of at most `max_draws` draws (all of them when max_draws is 0).
PosteriorDraws subsample_draws(const PosteriorDraws& draws, std::size_t max_draws);

struct SpreadRow {
    std::string id;
    SpreadSummary summary;
};

/// Columns: id, x, y, grad_x_mean, grad_y_mean, speed_median, speed_lo, speed_hi, direction_deg, significant.
/// direction_deg is counter-clockwise from the +x axis.
void write_spread_csv(const std::filesystem::path& path, const std::vector<SpreadRow>& rows);
std::vector<SpreadRow> read_spread_csv(const std::filesystem::path& path);

}  // namespace spreadgrad
