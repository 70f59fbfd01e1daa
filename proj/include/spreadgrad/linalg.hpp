#pragma once

#include <Eigen/Dense>

namespace spreadgrad {

/// Cholesky factor of a covariance matrix with escalating diagonal jitter.
///
/// Jitter starts at 1e-10 * scale and grows by 10x up to 1e-6 * scale; if the
/// factorisation still fails a NumericalError is thrown. `scale` is normally
/// the partial sill.
struct Cholesky {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;

    [[nodiscard]] double log_det() const;
    [[nodiscard]] Eigen::MatrixXd lower() const { return llt.matrixL(); }
    [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return llt.solve(b); }
    /// L^{-1} B.
    [[nodiscard]] Eigen::MatrixXd half_solve(const Eigen::MatrixXd& b) const;
};

Cholesky jittered_cholesky(Eigen::MatrixXd a, double scale);

}  // namespace spreadgrad
