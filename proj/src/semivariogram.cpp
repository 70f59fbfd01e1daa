#include "spreadgrad/semivariogram.hpp"

#include <cmath>
#include <limits>

#include "spreadgrad/errors.hpp"
#include "spreadgrad/matern.hpp"

namespace spreadgrad {

Eigen::VectorXd linear_trend_residuals(const Eigen::MatrixX2d& coords, const Eigen::VectorXd& y) {
    Eigen::MatrixXd x(coords.rows(), 3);
    x.col(0).setOnes();
    x.rightCols(2) = coords;
    const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(y);
    return y - x * beta;
}

EmpiricalSemivariogram empirical_semivariogram(const std::vector<Location>& locs, const Eigen::VectorXd& values,
                                               std::size_t n_bins, double max_dist) {
    if (n_bins == 0) throw InputError("semivariogram needs at least one bin");
    if (!(max_dist > 0.0)) throw InputError("semivariogram max distance must be positive");
    const double width = max_dist / static_cast<double>(n_bins);
    std::vector<double> sum(n_bins, 0.0);
    std::vector<std::size_t> cnt(n_bins, 0);
    const std::size_t n = locs.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = distance(locs[i], locs[j]);
            if (d <= 0.0 || d > max_dist) continue;
            auto b = static_cast<std::size_t>(std::ceil(d / width)) - 1;
            if (b >= n_bins) b = n_bins - 1;
            const double diff = values(static_cast<Eigen::Index>(i)) - values(static_cast<Eigen::Index>(j));
            sum[b] += diff * diff;
            ++cnt[b];
        }
    }
    EmpiricalSemivariogram sv;
    for (std::size_t b = 0; b < n_bins; ++b) {
        if (cnt[b] == 0) continue;
        sv.centers.push_back((static_cast<double>(b) + 0.5) * width);
        sv.semivariance.push_back(sum[b] / (2.0 * static_cast<double>(cnt[b])));
        sv.counts.push_back(cnt[b]);
    }
    return sv;
}

EmpiricalSemivariogram empirical_semivariogram(const WaitingTimeDataset& data, std::size_t n_bins, double max_dist) {
    data.require_fit_ready(10);
    const Eigen::VectorXd resid = linear_trend_residuals(data.coordinates(), data.years());
    return empirical_semivariogram(data.locations(), resid, n_bins, max_dist);
}

VariogramFit fit_matern32_variogram(const EmpiricalSemivariogram& sv, double phi_lo, double phi_hi, std::size_t grid) {
    if (sv.centers.empty()) throw InputError("cannot fit an empty semivariogram");
    if (!(phi_lo > 0.0) || !(phi_hi >= phi_lo)) throw InputError("invalid decay range for variogram fit");
    const auto m = static_cast<Eigen::Index>(sv.centers.size());
    Eigen::VectorXd w(m), g(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        w(k) = static_cast<double>(sv.counts[static_cast<std::size_t>(k)]);
        g(k) = sv.semivariance[static_cast<std::size_t>(k)];
    }
    VariogramFit best;
    double best_sse = std::numeric_limits<double>::infinity();
    const std::size_t steps = std::max<std::size_t>(grid, 2);
    for (std::size_t s = 0; s < steps; ++s) {
        const double t = static_cast<double>(s) / static_cast<double>(steps - 1);
        const double phi = phi_lo * std::pow(phi_hi / phi_lo, t);
        Eigen::VectorXd shape(m);
        for (Eigen::Index k = 0; k < m; ++k)
            shape(k) = 1.0 - matern32(sv.centers[static_cast<std::size_t>(k)], {1.0, phi, 0.0});
        // Weighted non-negative least squares in (nugget, partial sill).
        const double sw = w.sum(), sws = w.dot(shape), swss = w.dot(shape.cwiseProduct(shape));
        const double swg = w.dot(g), swsg = w.dot(shape.cwiseProduct(g));
        const double det = sw * swss - sws * sws;
        double nug = 0.0, ps = 0.0;
        if (det > 1e-300) {
            nug = (swss * swg - sws * swsg) / det;
            ps = (sw * swsg - sws * swg) / det;
        }
        if (det <= 1e-300 || nug < 0.0 || ps < 0.0) {
            const double ps_only = swss > 0.0 ? std::max(0.0, swsg / swss) : 0.0;
            const double nug_only = std::max(0.0, swg / sw);
            const double sse_ps = w.dot((g - ps_only * shape).cwiseAbs2());
            const double sse_nug = w.dot((g.array() - nug_only).matrix().cwiseAbs2());
            if (sse_ps <= sse_nug) {
                nug = 0.0;
                ps = ps_only;
            } else {
                nug = nug_only;
                ps = 0.0;
            }
        }
        const double sse = w.dot((g - (nug + ps * shape.array()).matrix()).cwiseAbs2());
        if (sse < best_sse) {
            best_sse = sse;
            best = {nug, ps, phi};
        }
    }
    return best;
}

}  // namespace spreadgrad
