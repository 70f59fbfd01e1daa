#include "spreadgrad/spread_regression.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include "spreadgrad/csv.hpp"
#include "spreadgrad/errors.hpp"
#include "spreadgrad/gp_fit.hpp"
#include "spreadgrad/semivariogram.hpp"

namespace spreadgrad {

namespace {

double covariate_value(const WaitingTimeObservation& o, const std::string& name, bool has_named) {
    if (!has_named) {
        if (name == "x") return o.loc.x;
        if (name == "y") return o.loc.y;
    }
    const auto it = o.covariates.find(name);
    return it == o.covariates.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
}

}  // namespace

RegressionDesign build_design(const std::vector<SpreadRow>& field, const WaitingTimeDataset& data,
                              const std::vector<std::string>& covariates,
                              const std::vector<std::pair<std::string, std::string>>& interactions,
                              SpeedResponse response) {
    const auto& known = data.covariate_names();
    auto has = [&](const std::string& n) { return std::find(known.begin(), known.end(), n) != known.end(); };
    std::set<std::string> seen{"intercept"};
    for (const auto& c : covariates) {
        if (!has(c) && c != "x" && c != "y") throw InputError("covariate '" + c + "' not found in dataset");
        if (!seen.insert(c).second) throw InputError("covariate '" + c + "' listed twice");
    }
    for (const auto& [a, b] : interactions) {
        for (const auto* n : {&a, &b})
            if (std::find(covariates.begin(), covariates.end(), *n) == covariates.end())
                throw InputError("interaction term '" + *n + "' must also be a main-effect covariate");
        if (!seen.insert(a + ":" + b).second) throw InputError("interaction '" + a + ":" + b + "' listed twice");
    }

    std::unordered_map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < data.size(); ++i) by_id.emplace(data[i].id, i);

    RegressionDesign d;
    std::vector<double> y;
    std::vector<std::vector<double>> cols(covariates.size());
    for (const auto& row : field) {
        const auto& s = row.summary;
        if (!s.significant || !s.speed) {
            ++d.excluded_insignificant;
            continue;
        }
        const double v = response == SpeedResponse::Median ? s.speed->median : s.speed->mean;
        if (!(v > 0.0) || !std::isfinite(v)) {
            ++d.excluded_insignificant;
            continue;
        }
        const auto it = by_id.find(row.id);
        if (it == by_id.end()) throw InputError("spread row '" + row.id + "' has no matching dataset id");
        const auto& obs = data[it->second];
        std::vector<double> vals;
        bool missing = false;
        for (const auto& c : covariates) {
            vals.push_back(covariate_value(obs, c, has(c)));
            missing = missing || !std::isfinite(vals.back());
        }
        if (missing) {
            ++d.excluded_missing;
            continue;
        }
        for (std::size_t k = 0; k < vals.size(); ++k) cols[k].push_back(vals[k]);
        y.push_back(std::log(v));
        d.ids.push_back(row.id);
        d.locations.push_back(s.point);
    }
    if (y.empty()) throw InputError("no locations with significant spread to regress on");

    const auto n = static_cast<Eigen::Index>(y.size());
    const auto p = static_cast<Eigen::Index>(1 + covariates.size() + interactions.size());
    d.response = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
    d.X.resize(n, p);
    d.X.col(0).setOnes();
    d.column_names.push_back("intercept");
    for (std::size_t k = 0; k < covariates.size(); ++k) {
        d.X.col(static_cast<Eigen::Index>(k + 1)) = Eigen::Map<const Eigen::VectorXd>(cols[k].data(), n);
        d.column_names.push_back(covariates[k]);
    }
    for (std::size_t k = 0; k < interactions.size(); ++k) {
        const auto& [a, b] = interactions[k];
        const auto ia = std::find(covariates.begin(), covariates.end(), a) - covariates.begin() + 1;
        const auto ib = std::find(covariates.begin(), covariates.end(), b) - covariates.begin() + 1;
        const Eigen::ArrayXd ca = d.X.col(ia).array() - d.X.col(ia).mean();
        const Eigen::ArrayXd cb = d.X.col(ib).array() - d.X.col(ib).mean();
        d.X.col(static_cast<Eigen::Index>(1 + covariates.size() + k)) = (ca * cb).matrix();
        d.column_names.push_back(a + ":" + b);
    }
    return d;
}

std::pair<double, double> hpd_interval(std::vector<double> draws, double level) {
    if (draws.size() < 100) throw InputError("HPD interval needs at least 100 draws");
    if (!(level > 0.0 && level < 1.0)) throw InputError("HPD level must lie in (0, 1)");
    std::sort(draws.begin(), draws.end());
    const std::size_t m = draws.size();
    const auto w = std::min(m, static_cast<std::size_t>(std::ceil(level * static_cast<double>(m))));
    std::size_t best = 0;
    for (std::size_t i = 1; i + w <= m; ++i)
        if (draws[i + w - 1] - draws[i] < draws[best + w - 1] - draws[best]) best = i;
    return {draws[best], draws[best + w - 1]};
}

RegressionPosterior fit_spatial_regression(const RegressionDesign& design, const RegressionConfig& config,
                                           std::uint64_t seed) {
    const Eigen::Index n = design.X.rows(), p = design.X.cols();
    if (n != design.response.size() || static_cast<std::size_t>(n) != design.locations.size())
        throw InputError("design rows, response and locations differ in length");
    if (n < p + 5)
        throw InputError("spatial regression needs at least " + std::to_string(p + 5) + " rows, got " +
                         std::to_string(n));

    // Standardise non-intercept columns.
    Eigen::VectorXd center = Eigen::VectorXd::Zero(p), scale = Eigen::VectorXd::Ones(p);
    Eigen::MatrixXd z = design.X;
    for (Eigen::Index j = 1; j < p; ++j) {
        center(j) = z.col(j).mean();
        const double sd = std::sqrt((z.col(j).array() - center(j)).square().sum() / static_cast<double>(n - 1));
        if (!(sd > 0.0)) throw InputError("covariate '" + design.column_names[static_cast<std::size_t>(j)] +
                                          "' is constant over the regression rows");
        scale(j) = sd;
        z.col(j) = (z.col(j).array() - center(j)) / sd;
    }

    Eigen::MatrixXd dist(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            dist(i, j) = distance(design.locations[static_cast<std::size_t>(i)],
                                  design.locations[static_cast<std::size_t>(j)]);

    // Priors as for the waiting-time model, from a variogram of OLS residuals.
    CovariancePriors priors;
    priors.phi = default_phi_support(dist);
    priors.sigma2.shape = priors.tau2.shape = config.ig_shape;
    const Eigen::VectorXd beta_ols = z.colPivHouseholderQr().solve(design.response);
    const Eigen::VectorXd resid = design.response - z * beta_ols;
    const double var_r = resid.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(1, n - p));
    const double floor = std::max(1e-6 * var_r, 1e-10);
    double psill = var_r, nugget = 0.1 * var_r;
    if (n >= 10) {
        const auto sv = empirical_semivariogram(design.locations, resid, 15, 0.5 * dist.maxCoeff());
        if (!sv.centers.empty()) {
            const auto fit = fit_matern32_variogram(sv, priors.phi.lo, priors.phi.hi);
            psill = fit.partial_sill;
            nugget = fit.nugget;
        }
    }
    priors.sigma2.scale = (config.ig_shape - 1.0) * std::max(psill, floor);
    priors.tau2.scale = (config.ig_shape - 1.0) * std::max(nugget, floor);

    SpatialLinearModel model{z, design.response, dist, CovarianceFamily::Matern};
    CovarianceDraw init{priors.sigma2.mean(), 0.5 * (priors.phi.lo + priors.phi.hi), priors.tau2.mean(), 1.5};
    const SamplerOutput raw = run_spatial_sampler(model, priors, {}, init, config.chain, seed);

    RegressionPosterior out;
    out.names = design.column_names;
    out.cov = raw.cov;
    out.priors = priors;
    out.diagnostics = raw.diagnostics;
    out.beta = raw.beta;
    for (Eigen::Index j = 1; j < p; ++j) {
        out.beta.col(j) = raw.beta.col(j) / scale(j);
        out.beta.col(0) -= raw.beta.col(j) * (center(j) / scale(j));
    }
    for (Eigen::Index j = 0; j < p; ++j) {
        std::vector<double> col(out.beta.col(j).data(), out.beta.col(j).data() + out.beta.rows());
        CoefficientSummary s;
        s.name = out.names[static_cast<std::size_t>(j)];
        s.posterior_mean = out.beta.col(j).mean();
        std::tie(s.hpd_lo, s.hpd_hi) = hpd_interval(std::move(col), config.level);
        out.summary.push_back(s);
    }
    return out;
}

void write_coefficients_csv(const std::filesystem::path& path, const std::vector<CoefficientSummary>& rows) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    csv::write_row(out, {"covariate", "posterior_mean", "hpd_lo", "hpd_hi"});
    for (const auto& r : rows)
        csv::write_row(out, {r.name, csv::format(r.posterior_mean), csv::format(r.hpd_lo), csv::format(r.hpd_hi)});
}

}  // namespace spreadgrad
