#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "spreadgrad/gradient_field.hpp"
#include "spreadgrad/spatial_sampler.hpp"

namespace spreadgrad {

enum class SpeedResponse { Median, Mean };

/// log speed regressed on named covariates; column 0 is always the intercept.
struct RegressionDesign {
    std::vector<std::string> ids;
    std::vector<Location> locations;
    Eigen::VectorXd response;  // log km/year
    Eigen::MatrixXd X;
    std::vector<std::string> column_names;
    std::size_t excluded_insignificant = 0;
    std::size_t excluded_missing = 0;
};

/// Covariates named "x" or "y" refer to projected coordinates unless the dataset
/// has a covariate of that name. Interaction columns are products of centred
/// covariates, named "a:b". Rows are joined to the dataset by id.
RegressionDesign build_design(const std::vector<SpreadRow>& field, const WaitingTimeDataset& data,
                              const std::vector<std::string>& covariates,
                              const std::vector<std::pair<std::string, std::string>>& interactions = {},
                              SpeedResponse response = SpeedResponse::Median);

struct RegressionConfig {
    ChainConfig chain;
    double ig_shape = 2.0;
    double level = 0.95;
};

struct CoefficientSummary {
    std::string name;
    double posterior_mean = 0.0;
    double hpd_lo = 0.0;
    double hpd_hi = 0.0;
};

struct RegressionPosterior {
    std::vector<std::string> names;
    Eigen::MatrixXd beta;  // one row per draw, original covariate scales
    std::vector<CovarianceDraw> cov;
    std::vector<CoefficientSummary> summary;
    SamplerDiagnostics diagnostics;
    CovariancePriors priors;
};

/// Matérn spatial regression with smoothness sampled on its bounded support.
/// Non-intercept columns are standardised for sampling; draws are reported on
/// the original scales. Requires rows >= columns + 5.
RegressionPosterior fit_spatial_regression(const RegressionDesign& design, const RegressionConfig& config,
                                           std::uint64_t seed);

/// Shortest interval holding ceil(level * m) of the sorted draws. Needs >= 100 draws.
std::pair<double, double> hpd_interval(std::vector<double> draws, double level = 0.95);

/// Columns: covariate, posterior_mean, hpd_lo, hpd_hi.
void write_coefficients_csv(const std::filesystem::path& path, const std::vector<CoefficientSummary>& rows);

}  // namespace spreadgrad
