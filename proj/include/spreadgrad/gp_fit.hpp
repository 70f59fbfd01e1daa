#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "spreadgrad/matern.hpp"
#include "spreadgrad/semivariogram.hpp"
#include "spreadgrad/spatial_sampler.hpp"
#include "spreadgrad/types.hpp"

namespace spreadgrad {

/// Linear trend beta0 + beta1 x + beta2 y of the waiting-time surface.
struct MeanParams {
    double beta0 = 0.0;  // years
    double beta1 = 0.0;  // years/km
    double beta2 = 0.0;  // years/km

    [[nodiscard]] Eigen::Vector2d gradient() const { return {beta1, beta2}; }
    [[nodiscard]] double at(const Location& s) const { return beta0 + beta1 * s.x + beta2 * s.y; }
};

struct GpParams {
    MeanParams mean;
    MaternParams cov;
};

/// Prior hyperparameters. Unset values are derived from the data: inverse-gamma
/// scales from a Matérn-3/2 fit to the empirical semivariogram, the decay support
/// from [3 / max distance, 3 / min nonzero distance].
struct PriorSpec {
    double ig_shape = 2.0;
    std::optional<double> sigma2_scale;
    std::optional<double> tau2_scale;
    std::optional<double> phi_lo;
    std::optional<double> phi_hi;
    std::size_t variogram_bins = 15;
    double variogram_max_fraction = 0.5;  // of the maximum pairwise distance
};

struct ResolvedPriors {
    CovariancePriors priors;
    std::optional<VariogramFit> variogram;
};

ResolvedPriors resolve_priors(const WaitingTimeDataset& data, const PriorSpec& spec);

/// Default decay support [3 / d_max, 3 / d_min_nonzero].
UniformPrior default_phi_support(const Eigen::MatrixXd& dist);

struct PosteriorDraws {
    std::vector<GpParams> draws;
    SamplerDiagnostics diagnostics;
    CovariancePriors priors;
};

/// Multivariate normal log density of the years under mean (1, x, y) beta and
/// covariance K(D) + tau2 I.
double log_likelihood(const WaitingTimeDataset& data, const GpParams& params);

/// Design matrix with columns (1, x, y).
Eigen::MatrixXd trend_design(const WaitingTimeDataset& data);

PosteriorDraws fit_mcmc(const WaitingTimeDataset& data, const ChainConfig& config, const PriorSpec& spec,
                        std::uint64_t seed, const FixedCovariance& fixed = {});

/// One row per draw: beta0, beta1, beta2, sigma2, phi, tau2.
void save_draws(const std::filesystem::path& path, const PosteriorDraws& draws);
PosteriorDraws load_draws(const std::filesystem::path& path);

}  // namespace spreadgrad
