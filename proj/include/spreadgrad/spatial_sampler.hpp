#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace spreadgrad {

/// Inverse-gamma prior; IG(shape, scale) has mean scale / (shape - 1).
struct InverseGammaPrior {
    double shape = 2.0;
    double scale = 1.0;

    [[nodiscard]] double mean() const { return scale / (shape - 1.0); }
    [[nodiscard]] double log_density(double x) const;  // unnormalised
};

struct UniformPrior {
    double lo = 0.0;
    double hi = 1.0;
};

struct CovariancePriors {
    InverseGammaPrior sigma2;
    InverseGammaPrior tau2;
    UniformPrior phi;
    UniformPrior nu{0.5, 2.5};
};

/// Covariance parameters held fixed instead of sampled.
struct FixedCovariance {
    std::optional<double> sigma2;
    std::optional<double> phi;
    std::optional<double> tau2;
    std::optional<double> nu;
};

struct ChainProgress {
    int chain = 0;
    int iteration = 0;
    double acceptance = 0.0;
};

struct ChainConfig {
    int iterations = 25000;
    int burn_in = 5000;
    int thin = 10;
    double target_acceptance = 0.35;
    int n_chains = 1;
    int progress_interval = 0;  // 0 disables progress callbacks
    std::function<void(const ChainProgress&)> progress;
};

enum class CovarianceFamily {
    Matern32,  // smoothness fixed at 3/2
    Matern,    // smoothness nu sampled from its uniform prior
};

/// y ~ N(X beta, sigma2 R(phi, nu) + tau2 I) with a flat prior on beta.
struct SpatialLinearModel {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    Eigen::MatrixXd dist;
    CovarianceFamily family = CovarianceFamily::Matern32;
};

struct CovarianceDraw {
    double sigma2 = 0.0;
    double phi = 0.0;
    double tau2 = 0.0;
    double nu = 1.5;
};

struct SamplerDiagnostics {
    std::vector<double> acceptance_rate;  // per chain, post burn-in
    std::vector<std::string> parameter_names;
    std::vector<double> ess;  // per parameter, summed over chains
    std::vector<std::string> warnings;
};

struct SamplerOutput {
    Eigen::MatrixXd beta;  // one row per retained draw
    std::vector<CovarianceDraw> cov;
    SamplerDiagnostics diagnostics;
};

/// Metropolis-within-Gibbs. Covariance parameters move jointly by an adaptive
/// random walk on (log sigma2, logit phi, log tau2, logit nu) with beta
/// integrated out; beta is then drawn from its Gaussian full conditional.
/// Adaptation runs during burn-in only. Chains are merged by concatenation.
SamplerOutput run_spatial_sampler(const SpatialLinearModel& model, const CovariancePriors& priors,
                                  const FixedCovariance& fixed, const CovarianceDraw& initial,
                                  const ChainConfig& config, std::uint64_t seed);

/// Correlation matrix R(phi, nu) for the model family (unit sill, no nugget).
Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& dist, CovarianceFamily family, double phi, double nu);

/// Effective sample size by Geyer's initial monotone sequence estimator.
double effective_sample_size(const std::vector<double>& x);

}  // namespace spreadgrad
