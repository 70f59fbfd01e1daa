#include "spreadgrad/matern.hpp"

#include <cmath>

namespace spreadgrad {

double matern32(double r, const MaternParams& p) {
    const double pr = p.phi * r;
    return p.sigma2 * (1.0 + pr) * std::exp(-pr);
}

Eigen::Vector2d matern32_grad(const Eigen::Vector2d& delta, const MaternParams& p) {
    // dK/dr = -sigma2 phi^2 r e^{-phi r}, and dr/d delta = delta / r.
    const double r = delta.norm();
    return -p.sigma2 * p.phi * p.phi * std::exp(-p.phi * r) * delta;
}

Eigen::Matrix2d matern32_hess(const Eigen::Vector2d& delta, const MaternParams& p) {
    const double r = delta.norm();
    const double s = -p.sigma2 * p.phi * p.phi * std::exp(-p.phi * r);
    Eigen::Matrix2d h = s * Eigen::Matrix2d::Identity();
    if (r > 0.0) {
        const double c = s * p.phi / r;
        const double off = -c * delta.x() * delta.y();
        h(0, 0) -= c * delta.x() * delta.x();
        h(1, 1) -= c * delta.y() * delta.y();
        h(0, 1) = off;
        h(1, 0) = off;
    }
    return h;
}

Eigen::MatrixXd matern32_cov(const Eigen::MatrixXd& dist, const MaternParams& p) {
    Eigen::MatrixXd k = dist.unaryExpr([&](double r) { return matern32(r, p); });
    k.diagonal().array() += p.tau2;
    return k;
}

Eigen::MatrixXd JointCovarianceBlocks::assembled() const {
    const Eigen::Index n = K.rows();
    Eigen::MatrixXd m(3 * n, 3 * n);
    m.topLeftCorner(n, n) = K;
    m.topRightCorner(n, 2 * n) = -gradK;
    m.bottomLeftCorner(2 * n, n) = -gradK.transpose();
    m.bottomRightCorner(2 * n, 2 * n) = hessK;
    return m;
}

JointCovarianceBlocks assemble_joint_cov(const std::vector<Location>& locs, const MaternParams& p) {
    const auto n = static_cast<Eigen::Index>(locs.size());
    JointCovarianceBlocks b;
    b.K.resize(n, n);
    b.gradK.resize(n, 2 * n);
    b.hessK.resize(2 * n, 2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const Eigen::Vector2d d = locs[i] - locs[j];
            b.K(i, j) = matern32(d.norm(), p);
            const Eigen::Vector2d g = matern32_grad(d, p);
            b.gradK(i, j) = g.x();
            b.gradK(i, n + j) = g.y();
            const Eigen::Matrix2d h = matern32_hess(d, p);
            b.hessK(i, j) = -h(0, 0);
            b.hessK(i, n + j) = -h(0, 1);
            b.hessK(n + i, j) = -h(1, 0);
            b.hessK(n + i, n + j) = -h(1, 1);
        }
        b.K(i, i) += p.tau2;
    }
    return b;
}

double matern_correlation(double r, double phi, double nu) {
    if (r <= 0.0) return 1.0;
    const double u = phi * r;
    if (u > 700.0) return 0.0;
    const double v = std::pow(u, nu) * std::cyl_bessel_k(nu, u) / (std::pow(2.0, nu - 1.0) * std::tgamma(nu));
    return std::isfinite(v) ? v : 0.0;
}

}  // namespace spreadgrad
