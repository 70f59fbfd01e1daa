#include "spreadgrad/linalg.hpp"

#include <cmath>

#include "spreadgrad/errors.hpp"

namespace spreadgrad {

double Cholesky::log_det() const {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

Eigen::MatrixXd Cholesky::half_solve(const Eigen::MatrixXd& b) const {
    return llt.matrixL().solve(b);
}

Cholesky jittered_cholesky(Eigen::MatrixXd a, double scale) {
    if (!a.allFinite()) throw NumericalError("covariance matrix has non-finite entries");
    const double base = scale > 0.0 && std::isfinite(scale) ? scale : 1.0;
    const Eigen::VectorXd diag = a.diagonal();
    Cholesky out;
    for (double rel = 1e-10; rel <= 1e-6 * 1.0000001; rel *= 10.0) {
        a.diagonal() = diag.array() + rel * base;
        out.llt.compute(a);
        if (out.llt.info() == Eigen::Success && out.llt.matrixLLT().diagonal().minCoeff() > 0.0) {
            out.jitter = rel * base;
            return out;
        }
    }
    throw NumericalError("covariance matrix is not positive definite after maximum jitter");
}

}  // namespace spreadgrad
