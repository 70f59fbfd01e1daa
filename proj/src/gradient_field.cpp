#include "spreadgrad/gradient_field.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>

#include "spreadgrad/csv.hpp"
#include "spreadgrad/errors.hpp"
#include "spreadgrad/parallel.hpp"
#include "spreadgrad/rng.hpp"
#include "spreadgrad/stats.hpp"

namespace spreadgrad {

ConditioningFactor make_conditioning_factor(const WaitingTimeDataset& data, const Eigen::MatrixXd& dist,
                                            const GpParams& params) {
    if (!params.cov.valid()) throw InputError("invalid covariance parameters in posterior draw");
    ConditioningFactor f{params, jittered_cholesky(matern32_cov(dist, params.cov), params.cov.sigma2), {}};
    Eigen::VectorXd resid = data.years();
    for (std::size_t i = 0; i < data.size(); ++i) resid(static_cast<Eigen::Index>(i)) -= params.mean.at(data[i].loc);
    f.alpha = f.chol.solve(resid);
    return f;
}

namespace {

Eigen::MatrixXd cross_gradients(const std::vector<Location>& points, const std::vector<Location>& sites,
                                const MaternParams& p) {
    Eigen::MatrixXd g(static_cast<Eigen::Index>(sites.size()), 2 * static_cast<Eigen::Index>(points.size()));
    for (std::size_t k = 0; k < points.size(); ++k)
        for (std::size_t j = 0; j < sites.size(); ++j) {
            const Eigen::Vector2d v = matern32_grad(points[k] - sites[j], p);
            g(static_cast<Eigen::Index>(j), 2 * static_cast<Eigen::Index>(k)) = v.x();
            g(static_cast<Eigen::Index>(j), 2 * static_cast<Eigen::Index>(k) + 1) = v.y();
        }
    return g;
}

std::vector<GradientConditional> conditionals(const std::vector<Location>& points, const std::vector<Location>& sites,
                                              const ConditioningFactor& f) {
    const MaternParams& p = f.params.cov;
    const Eigen::MatrixXd g = cross_gradients(points, sites, p);
    const Eigen::MatrixXd v = f.chol.half_solve(g);
    const Eigen::VectorXd m = g.transpose() * f.alpha;
    const double prior_var = p.sigma2 * p.phi * p.phi;
    std::vector<GradientConditional> out(points.size());
    for (std::size_t k = 0; k < points.size(); ++k) {
        const auto c = 2 * static_cast<Eigen::Index>(k);
        out[k].mean = f.params.mean.gradient() + m.segment<2>(c);
        const auto vk = v.middleCols(c, 2);
        out[k].cov = prior_var * Eigen::Matrix2d::Identity() - vk.transpose() * vk;
        out[k].cov = 0.5 * (out[k].cov + out[k].cov.transpose()).eval();
    }
    return out;
}

}  // namespace

GradientConditional gradient_conditional(const Location& point, const std::vector<Location>& sites,
                                         const ConditioningFactor& factor) {
    return conditionals({point}, sites, factor).front();
}

Eigen::Vector2d sample_conditional(const GradientConditional& c, const Eigen::Vector2d& z) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es;
    es.computeDirect(c.cov);
    const Eigen::Vector2d sd = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return c.mean + es.eigenvectors() * sd.cwiseProduct(z);
}

Eigen::Vector2d draw_deviates(std::uint64_t seed, std::size_t draw) {
    SplitMix64 g(derive_seed(seed, draw, 0x6E));
    std::normal_distribution<double> normal;
    const double a = normal(g);
    const double b = normal(g);
    return {a, b};
}

std::vector<GradientSample> gradient_field(const WaitingTimeDataset& data, const PosteriorDraws& draws,
                                           const std::vector<Location>& points, std::uint64_t seed,
                                           unsigned threads) {
    if (draws.draws.empty()) throw InputError("no posterior draws");
    for (const auto& p : points)
        if (!p.finite()) throw InputError("evaluation point has non-finite coordinates");
    std::vector<GradientSample> out(points.size());
    for (std::size_t k = 0; k < points.size(); ++k) {
        out[k].point = points[k];
        out[k].grads.resize(draws.draws.size());
    }
    if (points.empty()) return out;
    const Eigen::MatrixXd dist = pairwise_distances(data);
    const std::vector<Location> sites = data.locations();
    parallel_for(draws.draws.size(), threads, [&](std::size_t d) {
        const ConditioningFactor f = make_conditioning_factor(data, dist, draws.draws[d]);
        const auto conds = conditionals(points, sites, f);
        const Eigen::Vector2d z = draw_deviates(seed, d);
        for (std::size_t k = 0; k < points.size(); ++k) out[k].grads[d] = sample_conditional(conds[k], z);
    });
    return out;
}

GradientSample gradient_posterior(const Location& point, const WaitingTimeDataset& data, const PosteriorDraws& draws,
                                  std::uint64_t seed) {
    return gradient_field(data, draws, {point}, seed).front();
}

SpreadSummary summarize_spread(const GradientSample& sample, double level) {
    const std::size_t m = sample.grads.size();
    if (m < 100) throw InputError("spread summary needs at least 100 gradient draws");
    if (!(level > 0.0 && level < 1.0)) throw InputError("credible level must lie in (0, 1)");
    SpreadSummary s;
    s.point = sample.point;
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& g : sample.grads) mean += g;
    mean /= static_cast<double>(m);
    s.grad_mean = mean;

    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    Eigen::Vector2d unit_sum = Eigen::Vector2d::Zero();
    std::vector<double> speeds;
    speeds.reserve(m);
    std::size_t nonzero = 0;
    for (const auto& g : sample.grads) {
        const Eigen::Vector2d c = g - mean;
        cov += c * c.transpose();
        const double norm = g.norm();
        if (norm > 0.0) {
            unit_sum += g / norm;
            ++nonzero;
            speeds.push_back(1.0 / norm);
        } else {
            speeds.push_back(std::numeric_limits<double>::infinity());
        }
    }
    cov /= static_cast<double>(m - 1);
    if (nonzero == 0) {
        s.significant = false;
        s.direction_ci_halfwidth = std::numbers::pi;
        return s;
    }

    std::sort(speeds.begin(), speeds.end());
    const double tail = 0.5 * (1.0 - level);
    SpeedStats st;
    st.median = quantile_sorted(speeds, 0.5);
    st.lo = quantile_sorted(speeds, tail);
    st.hi = quantile_sorted(speeds, 1.0 - tail);
    double total = 0.0;
    for (double v : speeds) total += v;
    st.mean = total / static_cast<double>(m);
    s.speed = st;

    const double rbar = unit_sum.norm() / static_cast<double>(m);
    s.direction_mean = unit_sum.norm() > 0.0 ? Eigen::Vector2d(unit_sum / unit_sum.norm()) : Eigen::Vector2d::UnitX();
    const double circ_sd = rbar > 0.0 ? std::sqrt(-2.0 * std::log(std::min(rbar, 1.0))) : INFINITY;
    s.direction_ci_halfwidth = std::min(std::numbers::pi, normal_quantile(0.5 + 0.5 * level) * circ_sd);

    // Origin outside the elliptical credible region: Mahalanobis distance of 0
    // against the chi-square(2) quantile -2 log(1 - level).
    const double ridge = 1e-12 * cov.trace() + std::numeric_limits<double>::min();
    const Eigen::Matrix2d reg = cov + ridge * Eigen::Matrix2d::Identity();
    const double d2 = mean.dot(reg.ldlt().solve(mean));
    s.significant = d2 > -2.0 * std::log(1.0 - level);
    return s;
}

std::vector<SpreadSummary> spread_field(const WaitingTimeDataset& data, const PosteriorDraws& draws,
                                        const std::vector<Location>& points, std::uint64_t seed, double level,
                                        unsigned threads) {
    const auto samples = gradient_field(data, draws, points, seed, threads);
    std::vector<SpreadSummary> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(summarize_spread(s, level));
    return out;
}

PosteriorDraws subsample_draws(const PosteriorDraws& draws, std::size_t max_draws) {
    if (max_draws == 0 || draws.draws.size() <= max_draws) return draws;
    PosteriorDraws out;
    out.diagnostics = draws.diagnostics;
    out.priors = draws.priors;
    const double step = static_cast<double>(draws.draws.size()) / static_cast<double>(max_draws);
    for (std::size_t k = 0; k < max_draws; ++k)
        out.draws.push_back(draws.draws[static_cast<std::size_t>(std::floor(static_cast<double>(k) * step))]);
    return out;
}

void write_spread_csv(const std::filesystem::path& path, const std::vector<SpreadRow>& rows) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    csv::write_row(out, {"id", "x", "y", "grad_x_mean", "grad_y_mean", "speed_median", "speed_lo", "speed_hi",
                         "direction_deg", "significant"});
    for (const auto& r : rows) {
        const auto& s = r.summary;
        const double deg = std::atan2(s.direction_mean.y(), s.direction_mean.x()) * 180.0 / std::numbers::pi;
        auto opt = [&](double SpeedStats::*field) { return s.speed ? csv::format((*s.speed).*field) : std::string{}; };
        csv::write_row(out, {r.id, csv::format(s.point.x), csv::format(s.point.y), csv::format(s.grad_mean.x()),
                             csv::format(s.grad_mean.y()), opt(&SpeedStats::median), opt(&SpeedStats::lo),
                             opt(&SpeedStats::hi), csv::format(deg), s.significant ? "1" : "0"});
    }
}

std::vector<SpreadRow> read_spread_csv(const std::filesystem::path& path) {
    const csv::Table t = csv::read(path);
    const char* names[] = {"id",       "x",        "y",        "grad_x_mean",   "grad_y_mean",
                           "speed_median", "speed_lo", "speed_hi", "direction_deg", "significant"};
    std::size_t c[10];
    for (int k = 0; k < 10; ++k) c[k] = t.require_column(names[k]);
    std::vector<SpreadRow> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        auto num = [&](int k) { return csv::to_double(row[c[k]], r + 1, names[k], t.source); };
        SpreadRow sr;
        sr.id = row[c[0]];
        auto& s = sr.summary;
        s.point = {num(1), num(2)};
        s.grad_mean = {num(3), num(4)};
        if (!row[c[5]].empty()) s.speed = SpeedStats{num(5), num(6), num(7), num(5)};
        const double rad = num(8) * std::numbers::pi / 180.0;
        s.direction_mean = {std::cos(rad), std::sin(rad)};
        s.significant = num(9) != 0.0;
        out.push_back(std::move(sr));
    }
    return out;
}

}  // namespace spreadgrad
