#include "spreadgrad/quadrature.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "spreadgrad/errors.hpp"

namespace spreadgrad {

QuadratureRule gauss_legendre_unit(std::size_t n) {
    if (n == 0) throw InputError("quadrature needs at least one node");
    const auto m = static_cast<Eigen::Index>(n);
    // Jacobi matrix of the Legendre recurrence: off-diagonal k / sqrt(4k^2 - 1).
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd sub(std::max<Eigen::Index>(m - 1, 0));
    for (Eigen::Index k = 1; k < m; ++k) {
        const double kk = static_cast<double>(k);
        sub(k - 1) = kk / std::sqrt(4.0 * kk * kk - 1.0);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (Eigen::Index k = 0; k < m; ++k) {
        const double v0 = es.eigenvectors()(0, k);
        // Interval [-1, 1] has weight total 2; halve it for [0, 1].
        rule.nodes[static_cast<std::size_t>(k)] = 0.5 * (es.eigenvalues()(k) + 1.0);
        rule.weights[static_cast<std::size_t>(k)] = v0 * v0;
    }
    return rule;
}

}  // namespace spreadgrad
