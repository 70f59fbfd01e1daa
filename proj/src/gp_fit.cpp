#include "spreadgrad/gp_fit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "spreadgrad/csv.hpp"
#include "spreadgrad/errors.hpp"
#include "spreadgrad/linalg.hpp"

namespace spreadgrad {

Eigen::MatrixXd trend_design(const WaitingTimeDataset& data) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(data.size()), 3);
    x.col(0).setOnes();
    x.rightCols(2) = data.coordinates();
    return x;
}

UniformPrior default_phi_support(const Eigen::MatrixXd& dist) {
    double dmax = 0.0;
    double dmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < dist.cols(); ++j)
        for (Eigen::Index i = j + 1; i < dist.rows(); ++i) {
            const double d = dist(i, j);
            dmax = std::max(dmax, d);
            if (d > 0.0) dmin = std::min(dmin, d);
        }
    if (!(dmax > 0.0) || !std::isfinite(dmin)) throw InputError("need at least two distinct locations");
    if (dmin >= dmax) dmin = 0.5 * dmax;
    return {3.0 / dmax, 3.0 / dmin};
}

ResolvedPriors resolve_priors(const WaitingTimeDataset& data, const PriorSpec& spec) {
    data.require_fit_ready();
    ResolvedPriors out;
    const Eigen::MatrixXd dist = pairwise_distances(data);
    const UniformPrior support = default_phi_support(dist);
    out.priors.phi.lo = spec.phi_lo.value_or(support.lo);
    out.priors.phi.hi = spec.phi_hi.value_or(support.hi);
    if (!(out.priors.phi.lo > 0.0 && out.priors.phi.hi > out.priors.phi.lo))
        throw InputError("decay prior support must satisfy 0 < lo < hi");
    out.priors.sigma2.shape = out.priors.tau2.shape = spec.ig_shape;

    if (!spec.sigma2_scale || !spec.tau2_scale) {
        const Eigen::VectorXd y = data.years();
        const double var_y = (y.array() - y.mean()).square().sum() / std::max<double>(1.0, y.size() - 1.0);
        const double floor = std::max(1e-6 * var_y, 1e-10);
        double nugget = floor, psill = floor;
        if (data.size() >= 10) {
            const double dmax = dist.maxCoeff();
            const auto sv = empirical_semivariogram(data, spec.variogram_bins, spec.variogram_max_fraction * dmax);
            if (!sv.centers.empty()) {
                const auto fit = fit_matern32_variogram(sv, out.priors.phi.lo, out.priors.phi.hi);
                out.variogram = fit;
                // The variogram rarely pins down the split between nugget and sill (a short
                // range mimics a nugget), so neither prior mean drops below a tenth of the total.
                const double total = fit.nugget + fit.partial_sill;
                nugget = std::max(fit.nugget, 0.1 * total);
                psill = std::max(fit.partial_sill, 0.1 * total);
            }
        } else {
            const Eigen::VectorXd r = linear_trend_residuals(data.coordinates(), y);
            psill = r.squaredNorm() / static_cast<double>(r.size());
            nugget = 0.1 * psill;
        }
        // IG(shape, s) has mean s / (shape - 1); with shape 2 the scale is the prior mean.
        const double m = spec.ig_shape - 1.0;
        out.priors.sigma2.scale = spec.sigma2_scale.value_or(m * std::max(psill, floor));
        out.priors.tau2.scale = spec.tau2_scale.value_or(m * std::max(nugget, floor));
    } else {
        out.priors.sigma2.scale = *spec.sigma2_scale;
        out.priors.tau2.scale = *spec.tau2_scale;
    }
    if (!(out.priors.sigma2.scale > 0.0) || !(out.priors.tau2.scale > 0.0))
        throw InputError("inverse-gamma scales must be positive");
    return out;
}

double log_likelihood(const WaitingTimeDataset& data, const GpParams& params) {
    if (!params.cov.valid()) throw InputError("invalid covariance parameters");
    const Eigen::MatrixXd dist = pairwise_distances(data);
    const Eigen::VectorXd resid = data.years() - trend_design(data) * Eigen::Vector3d(params.mean.beta0,
                                                                                      params.mean.beta1,
                                                                                      params.mean.beta2);
    const Cholesky chol = jittered_cholesky(matern32_cov(dist, params.cov), params.cov.sigma2);
    const Eigen::VectorXd z = chol.half_solve(resid);
    const double n = static_cast<double>(data.size());
    return -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * chol.log_det() - 0.5 * z.squaredNorm();
}

PosteriorDraws fit_mcmc(const WaitingTimeDataset& data, const ChainConfig& config, const PriorSpec& spec,
                        std::uint64_t seed, const FixedCovariance& fixed) {
    data.require_fit_ready();
    const ResolvedPriors resolved = resolve_priors(data, spec);
    SpatialLinearModel model{trend_design(data), data.years(), pairwise_distances(data), CovarianceFamily::Matern32};

    CovarianceDraw init;
    init.sigma2 = fixed.sigma2.value_or(resolved.priors.sigma2.mean());
    init.tau2 = fixed.tau2.value_or(resolved.priors.tau2.mean());
    // Start from the variogram decay when there is one; the support midpoint otherwise.
    double phi0 = 0.5 * (resolved.priors.phi.lo + resolved.priors.phi.hi);
    if (resolved.variogram) phi0 = std::clamp(resolved.variogram->phi, resolved.priors.phi.lo, resolved.priors.phi.hi);
    init.phi = fixed.phi.value_or(phi0);
    const SamplerOutput raw = run_spatial_sampler(model, resolved.priors, fixed, init, config, seed);

    PosteriorDraws out;
    out.priors = resolved.priors;
    out.diagnostics = raw.diagnostics;
    out.diagnostics.parameter_names = {"beta0", "beta1", "beta2", "sigma2", "phi", "tau2"};
    out.draws.reserve(raw.cov.size());
    for (std::size_t i = 0; i < raw.cov.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        GpParams g;
        g.mean = {raw.beta(r, 0), raw.beta(r, 1), raw.beta(r, 2)};
        g.cov = {raw.cov[i].sigma2, raw.cov[i].phi, raw.cov[i].tau2};
        out.draws.push_back(g);
    }
    return out;
}

void save_draws(const std::filesystem::path& path, const PosteriorDraws& draws) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    csv::write_row(out, {"beta0", "beta1", "beta2", "sigma2", "phi", "tau2"});
    for (const auto& d : draws.draws)
        csv::write_row(out, {csv::format(d.mean.beta0), csv::format(d.mean.beta1), csv::format(d.mean.beta2),
                             csv::format(d.cov.sigma2), csv::format(d.cov.phi), csv::format(d.cov.tau2)});
}

PosteriorDraws load_draws(const std::filesystem::path& path) {
    const csv::Table t = csv::read(path);
    const char* names[] = {"beta0", "beta1", "beta2", "sigma2", "phi", "tau2"};
    std::size_t cols[6];
    for (int k = 0; k < 6; ++k) cols[k] = t.require_column(names[k]);
    PosteriorDraws out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        double v[6];
        for (int k = 0; k < 6; ++k) v[k] = csv::to_double(t.rows[r][cols[k]], r + 1, names[k], t.source);
        GpParams g{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
        if (!g.cov.valid()) throw InputError(t.source + ": row " + std::to_string(r + 1) + ": invalid covariance draw");
        out.draws.push_back(g);
    }
    if (out.draws.empty()) throw InputError(t.source + ": no posterior draws");
    out.diagnostics.parameter_names = {"beta0", "beta1", "beta2", "sigma2", "phi", "tau2"};
    return out;
}

}  // namespace spreadgrad
