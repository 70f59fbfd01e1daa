#pragma once

#include <vector>

#include <Eigen/Dense>

#include "spreadgrad/types.hpp"

namespace spreadgrad {

/// Matérn covariance parameters. The nugget is kept separate from the smooth
/// component: it enters only the observed-data diagonal.
struct MaternParams {
    double sigma2 = 1.0;  // partial sill, years^2
    double phi = 1.0;     // decay, 1/km
    double tau2 = 0.0;    // nugget, years^2

    [[nodiscard]] bool valid() const { return sigma2 > 0.0 && phi > 0.0 && tau2 >= 0.0; }
};

/// sigma2 (1 + phi r) exp(-phi r). No nugget.
double matern32(double r, const MaternParams& p);

/// Gradient of K(|delta|) with respect to the components of delta.
Eigen::Vector2d matern32_grad(const Eigen::Vector2d& delta, const MaternParams& p);

/// Hessian of K(|delta|); equals -sigma2 phi^2 I at the origin.
Eigen::Matrix2d matern32_hess(const Eigen::Vector2d& delta, const MaternParams& p);

/// Covariance blocks of the joint law of the field at the sites and its gradient at the sites.
///
/// Gradient components are ordered (d/dx at s_1..s_n, d/dy at s_1..s_n).
///   K     = K(D) + tau2 I                        Cov(Y, Y)
///   gradK = [dK/dx(s_i - s_j), dK/dy(s_i - s_j)]  so that Cov(Y, grad Y) = -gradK
///   hessK = -H_K(s_i - s_j)                      Cov(grad Y, grad Y)
/// The assembled matrix is [[K, -gradK], [-gradK^T, hessK]].
struct JointCovarianceBlocks {
    Eigen::MatrixXd K;
    Eigen::MatrixXd gradK;
    Eigen::MatrixXd hessK;

    [[nodiscard]] Eigen::MatrixXd assembled() const;
};

JointCovarianceBlocks assemble_joint_cov(const std::vector<Location>& locs, const MaternParams& p);

/// K(D) + tau2 I for the given sites.
Eigen::MatrixXd matern32_cov(const Eigen::MatrixXd& dist, const MaternParams& p);

/// Matérn correlation with general smoothness nu (nu = 1.5 reproduces matern32 / sigma2).
double matern_correlation(double r, double phi, double nu);

}  // namespace spreadgrad
