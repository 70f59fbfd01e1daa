#pragma once

#include <cstddef>
#include <vector>

#include "spreadgrad/types.hpp"

namespace spreadgrad {

struct EmpiricalSemivariogram {
    std::vector<double> centers;      // km, strictly increasing
    std::vector<double> semivariance; // years^2
    std::vector<std::size_t> counts;  // pairs per bin
};

/// Matheron estimator on residuals of an ordinary least-squares linear trend in (x, y).
/// Bins split (0, max_dist] evenly; empty bins are dropped. Requires n >= 10.
EmpiricalSemivariogram empirical_semivariogram(const WaitingTimeDataset& data, std::size_t n_bins, double max_dist);

/// Same estimator on arbitrary values (no detrending).
EmpiricalSemivariogram empirical_semivariogram(const std::vector<Location>& locs, const Eigen::VectorXd& values,
                                               std::size_t n_bins, double max_dist);

/// Pair-count weighted least-squares fit of nugget + Matérn-3/2 partial sill,
/// profiled over a log-spaced grid of decay values in [phi_lo, phi_hi].
struct VariogramFit {
    double nugget = 0.0;        // intercept
    double partial_sill = 0.0;  // sill - intercept
    double phi = 0.0;
};

VariogramFit fit_matern32_variogram(const EmpiricalSemivariogram& sv, double phi_lo, double phi_hi,
                                    std::size_t grid = 80);

/// Residuals of y on (1, x, y) by ordinary least squares.
Eigen::VectorXd linear_trend_residuals(const Eigen::MatrixX2d& coords, const Eigen::VectorXd& y);

}  // namespace spreadgrad
