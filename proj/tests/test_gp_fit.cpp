#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <boost/math/distributions/inverse_gamma.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "spreadgrad/errors.hpp"
#include "spreadgrad/gp_fit.hpp"
#include "spreadgrad/semivariogram.hpp"
#include "spreadgrad/stats.hpp"
#include "support.hpp"

using namespace spreadgrad;

namespace {

double sample_quantile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    return quantile_sorted(v, p);
}

}  // namespace

TEST_CASE("semivariogram of a constant field is zero") {
    std::mt19937_64 rng(1);
    const auto s = testing::uniform_sites(60, 100.0, rng);
    const auto d = testing::dataset_from(s, [](const Location&) { return 1950.0; });
    const auto sv = empirical_semivariogram(d, 10, 50.0);
    REQUIRE_FALSE(sv.centers.empty());
    for (double g : sv.semivariance) CHECK(std::abs(g) < 1e-12);
    for (std::size_t i = 1; i < sv.centers.size(); ++i) CHECK(sv.centers[i] > sv.centers[i - 1]);
}

TEST_CASE("semivariogram of iid noise is flat at the variance") {
    std::mt19937_64 rng(2);
    const auto s = testing::uniform_sites(400, 100.0, rng);
    std::normal_distribution<double> z;
    const auto d = testing::dataset_from(s, [&](const Location&) { return 1950.0 + z(rng); });
    const auto sv = empirical_semivariogram(d, 8, 60.0);
    for (std::size_t b = 0; b < sv.centers.size(); ++b)
        if (sv.counts[b] > 500) CHECK(sv.semivariance[b] == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("semivariogram of a Matérn field plateaus at the sill") {
    std::mt19937_64 rng(3);
    const auto s = testing::uniform_sites(500, 1000.0, rng);
    const GpParams p{{0.0, 0.0, 0.0}, {4.0, 0.05, 0.0}};
    const Eigen::VectorXd y = testing::simulate_gp(s, p, rng);
    const auto sv = empirical_semivariogram(s, y, 20, 500.0);
    double sum = 0.0;
    int k = 0;
    for (std::size_t b = 0; b < sv.centers.size(); ++b)
        if (sv.centers[b] > 200.0) {
            sum += sv.semivariance[b];
            ++k;
        }
    REQUIRE(k > 0);
    CHECK(sum / k == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("semivariogram needs ten sites") {
    const auto d = testing::dataset_from(testing::square_grid(3, 1.0), [](const Location& l) { return l.x; });
    CHECK_THROWS_AS(empirical_semivariogram(d, 5, 2.0), InputError);
}

TEST_CASE("variogram fit recovers exact model semivariances") {
    EmpiricalSemivariogram sv;
    const double nug = 0.5, ps = 3.0, phi = 0.04;
    for (int b = 1; b <= 20; ++b) {
        const double h = 10.0 * b;
        sv.centers.push_back(h);
        sv.semivariance.push_back(nug + ps * (1.0 - (1.0 + phi * h) * std::exp(-phi * h)));
        sv.counts.push_back(100);
    }
    const auto fit = fit_matern32_variogram(sv, 0.001, 1.0, 400);
    CHECK(fit.phi == doctest::Approx(phi).epsilon(0.02));
    CHECK(fit.nugget == doctest::Approx(nug).epsilon(0.03));
    CHECK(fit.partial_sill == doctest::Approx(ps).epsilon(0.03));
}

TEST_CASE("log likelihood closed forms") {
    const WaitingTimeDataset one({{"a", {5.0, 5.0}, 1910.0, {}}});
    const GpParams p1{{1900.0, 1.0, 1.0}, {0.75, 0.1, 0.25}};  // mean at site is 1910
    CHECK(log_likelihood(one, p1) == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-9));

    const WaitingTimeDataset two({{"a", {0.0, 0.0}, 1901.3, {}}, {"b", {3.0, 4.0}, 1899.2, {}}});
    const GpParams p{{1900.0, 0.1, -0.2}, {2.0, 0.3, 0.5}};
    const double m0 = 1900.0, m1 = 1900.0 + 0.3 - 0.8;
    const double c = 2.0 * (1.0 + 1.5) * std::exp(-1.5), v = 2.5;
    const double det = v * v - c * c;
    const double r0 = 1901.3 - m0, r1 = 1899.2 - m1;
    const double quad = (v * r0 * r0 - 2 * c * r0 * r1 + v * r1 * r1) / det;
    const double expect = -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det) - 0.5 * quad;
    CHECK(log_likelihood(two, p) == doctest::Approx(expect).epsilon(1e-9));

    // Shift invariance and row-order invariance.
    const WaitingTimeDataset shifted({{"a", {0.0, 0.0}, 1911.3, {}}, {"b", {3.0, 4.0}, 1909.2, {}}});
    GpParams ps = p;
    ps.mean.beta0 += 10.0;
    CHECK(log_likelihood(shifted, ps) == doctest::Approx(log_likelihood(two, p)).epsilon(1e-12));
    const WaitingTimeDataset swapped({{"b", {3.0, 4.0}, 1899.2, {}}, {"a", {0.0, 0.0}, 1901.3, {}}});
    CHECK(log_likelihood(swapped, p) == doctest::Approx(log_likelihood(two, p)).epsilon(1e-12));

    CHECK_THROWS_AS(log_likelihood(two, GpParams{{}, {-1.0, 0.1, 0.0}}), InputError);
}

TEST_CASE("priors from data") {
    std::mt19937_64 rng(4);
    const auto s = testing::uniform_sites(80, 300.0, rng);
    const GpParams truth{{1900.0, 0.05, 0.0}, {25.0, 0.02, 1.0}};
    const Eigen::VectorXd y = testing::simulate_gp(s, truth, rng);
    std::vector<WaitingTimeObservation> obs;
    for (std::size_t i = 0; i < s.size(); ++i) obs.push_back({std::to_string(i), s[i], y(static_cast<Eigen::Index>(i)), {}});
    const WaitingTimeDataset d(obs);
    const auto r = resolve_priors(d, {});
    const Eigen::MatrixXd dist = pairwise_distances(d);
    double dmin = 1e300;
    for (Eigen::Index i = 0; i < dist.rows(); ++i)
        for (Eigen::Index j = 0; j < i; ++j) dmin = std::min(dmin, dist(i, j));
    CHECK(r.priors.phi.lo == doctest::Approx(3.0 / dist.maxCoeff()));
    CHECK(r.priors.phi.hi == doctest::Approx(3.0 / dmin));
    CHECK(r.priors.sigma2.shape == 2.0);
    CHECK(r.priors.sigma2.scale > 0.0);
    CHECK(r.priors.tau2.scale > 0.0);
    REQUIRE(r.variogram);
    // With shape 2, IG scale equals the prior mean, which is the variogram estimate
    // kept above a tenth of the total sill.
    const double total = r.variogram->partial_sill + r.variogram->nugget;
    CHECK(r.priors.sigma2.scale == doctest::Approx(std::max(r.variogram->partial_sill, 0.1 * total)));
    CHECK(r.priors.tau2.scale == doctest::Approx(std::max(r.variogram->nugget, 0.1 * total)));

    PriorSpec fixed;
    fixed.sigma2_scale = 7.0;
    fixed.tau2_scale = 0.3;
    fixed.phi_lo = 0.001;
    fixed.phi_hi = 0.1;
    const auto f = resolve_priors(d, fixed);
    CHECK(f.priors.sigma2.scale == 7.0);
    CHECK(f.priors.tau2.scale == 0.3);
    CHECK(f.priors.phi.lo == 0.001);
    fixed.phi_hi = 0.0005;
    CHECK_THROWS_AS(resolve_priors(d, fixed), InputError);
}

TEST_CASE("restricted model recovers the normal-inverse-gamma posterior") {
    // Intercept only, decay fixed, no nugget: sigma2 | y ~ IG(a + (n-1)/2, b + S/2)
    // and beta0 | y is Student t.
    std::mt19937_64 rng(5);
    const auto s = testing::uniform_sites(30, 100.0, rng);
    const double phi = 0.05;
    const GpParams truth{{10.0, 0.0, 0.0}, {2.0, phi, 0.0}};
    const Eigen::VectorXd y = testing::simulate_gp(s, truth, rng);
    const auto n = static_cast<Eigen::Index>(s.size());

    SpatialLinearModel model{Eigen::MatrixXd::Ones(n, 1), y, pairwise_distances(s), CovarianceFamily::Matern32};
    CovariancePriors pri;
    pri.sigma2 = {2.0, 1.5};
    pri.tau2 = {2.0, 1.0};
    pri.phi = {0.01, 0.1};
    FixedCovariance fix;
    fix.phi = phi;
    fix.tau2 = 0.0;
    ChainConfig cfg;
    cfg.iterations = 40000;
    cfg.burn_in = 4000;
    cfg.thin = 3;
    const SamplerOutput out = run_spatial_sampler(model, pri, fix, {1.0, phi, 0.0, 1.5}, cfg, 99);

    const Eigen::MatrixXd R = correlation_matrix(model.dist, CovarianceFamily::Matern32, phi, 1.5);
    const Eigen::LLT<Eigen::MatrixXd> llt(R);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(n);
    const double info = one.dot(llt.solve(one));
    const double bhat = one.dot(llt.solve(y)) / info;
    const Eigen::VectorXd res = y - bhat * one;
    const double S = res.dot(llt.solve(res));
    const double a_post = pri.sigma2.shape + 0.5 * static_cast<double>(n - 1);
    const double b_post = pri.sigma2.scale + 0.5 * S;
    const boost::math::inverse_gamma_distribution<double> ig(a_post, b_post);
    const boost::math::students_t_distribution<double> t(2.0 * a_post);
    const double tscale = std::sqrt(b_post / a_post / info);

    std::vector<double> s2, b0;
    for (const auto& c : out.cov) s2.push_back(c.sigma2);
    for (Eigen::Index i = 0; i < out.beta.rows(); ++i) b0.push_back(out.beta(i, 0));
    for (double q : {0.05, 0.25, 0.5, 0.75, 0.95}) {
        CHECK(sample_quantile(s2, q) == doctest::Approx(boost::math::quantile(ig, q)).epsilon(0.06));
        CHECK(sample_quantile(b0, q) ==
              doctest::Approx(bhat + tscale * boost::math::quantile(t, q)).scale(tscale).epsilon(0.08));
    }
    for (const auto& c : out.cov) {
        CHECK(c.phi == phi);
        CHECK(c.tau2 == 0.0);
    }
}

TEST_CASE("beta draws follow the GLS conditional when covariance is fixed") {
    std::mt19937_64 rng(6);
    const auto s = testing::uniform_sites(40, 200.0, rng);
    const GpParams truth{{1900.0, 0.05, -0.02}, {4.0, 0.03, 0.0}};
    const Eigen::VectorXd y = testing::simulate_gp(s, truth, rng);
    const auto n = static_cast<Eigen::Index>(s.size());
    Eigen::MatrixXd X(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) X.row(i) << 1.0, s[i].x, s[i].y;
    SpatialLinearModel model{X, y, pairwise_distances(s), CovarianceFamily::Matern32};
    CovariancePriors pri;
    pri.phi = {0.001, 1.0};
    FixedCovariance fix{4.0, 0.03, 0.0, std::nullopt};
    ChainConfig cfg;
    cfg.iterations = 21000;
    cfg.burn_in = 1000;
    cfg.thin = 1;
    const SamplerOutput out = run_spatial_sampler(model, pri, fix, {4.0, 0.03, 0.0, 1.5}, cfg, 8);

    const Eigen::MatrixXd K = matern32_cov(model.dist, {4.0, 0.03, 0.0});
    const Eigen::LLT<Eigen::MatrixXd> llt(K);
    const Eigen::MatrixXd A = X.transpose() * llt.solve(X);
    const Eigen::VectorXd gls = A.ldlt().solve(X.transpose() * llt.solve(y));
    const Eigen::MatrixXd V = A.inverse();
    const Eigen::RowVectorXd mean = out.beta.colwise().mean();
    const Eigen::MatrixXd centered = out.beta.rowwise() - mean;
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(out.beta.rows() - 1);
    for (int k = 0; k < 3; ++k) {
        const double se = std::sqrt(V(k, k) / static_cast<double>(out.beta.rows()));
        CHECK(std::abs(mean(k) - gls(k)) < 4.0 * se);
        CHECK(cov(k, k) == doctest::Approx(V(k, k)).epsilon(0.05));
    }
}

TEST_CASE("fit_mcmc is reproducible and respects supports") {
    std::mt19937_64 rng(7);
    const auto s = testing::uniform_sites(40, 300.0, rng);
    const GpParams truth{{1900.0, 0.05, 0.0}, {25.0, 0.02, 1.0}};
    const Eigen::VectorXd y = testing::simulate_gp(s, truth, rng);
    std::vector<WaitingTimeObservation> obs;
    for (std::size_t i = 0; i < s.size(); ++i) obs.push_back({std::to_string(i), s[i], y(static_cast<Eigen::Index>(i)), {}});
    const WaitingTimeDataset d(obs);
    ChainConfig cfg;
    cfg.iterations = 3000;
    cfg.burn_in = 1000;
    cfg.thin = 10;
    const auto a = fit_mcmc(d, cfg, {}, 42);
    const auto b = fit_mcmc(d, cfg, {}, 42);
    const auto c = fit_mcmc(d, cfg, {}, 43);
    REQUIRE(a.draws.size() == 200);
    bool differs = false;
    for (std::size_t i = 0; i < a.draws.size(); ++i) {
        CHECK(a.draws[i].mean.beta1 == b.draws[i].mean.beta1);
        CHECK(a.draws[i].cov.phi == b.draws[i].cov.phi);
        differs = differs || a.draws[i].cov.sigma2 != c.draws[i].cov.sigma2;
        CHECK(a.draws[i].cov.sigma2 > 0.0);
        CHECK(a.draws[i].cov.tau2 >= 0.0);
        CHECK(a.draws[i].cov.phi >= a.priors.phi.lo);
        CHECK(a.draws[i].cov.phi <= a.priors.phi.hi);
    }
    CHECK(differs);
    CHECK(a.diagnostics.ess.size() == 6);
    CHECK(a.diagnostics.acceptance_rate.size() == 1);

    cfg.n_chains = 2;
    const auto two = fit_mcmc(d, cfg, {}, 42);
    CHECK(two.draws.size() == 400);
}

TEST_CASE("draws round trip through CSV") {
    const auto dir = testing::scratch_dir("gp_draws");
    PosteriorDraws d;
    d.draws.push_back({{1900.1, 0.05, -1e-3}, {25.3, 0.0123, 1.0 / 3.0}});
    d.draws.push_back({{1899.9, 0.04, 2e-3}, {24.1, 0.0200, 0.9}});
    save_draws(dir / "d.csv", d);
    const auto r = load_draws(dir / "d.csv");
    REQUIRE(r.draws.size() == 2);
    CHECK(r.draws[0].cov.tau2 == 1.0 / 3.0);
    CHECK(r.draws[1].mean.beta2 == 2e-3);
    {
        std::ofstream f(dir / "bad.csv");
        f << "beta0,beta1,beta2,sigma2,phi,tau2\n1900,0,0,-1,0.1,0\n";
    }
    CHECK_THROWS_AS(load_draws(dir / "bad.csv"), InputError);
}

TEST_CASE("effective sample size") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> z;
    std::vector<double> iid(10000), ar(10000);
    double prev = 0.0;
    for (std::size_t i = 0; i < iid.size(); ++i) {
        iid[i] = z(rng);
        prev = 0.9 * prev + std::sqrt(1 - 0.81) * z(rng);
        ar[i] = prev;
    }
    CHECK(effective_sample_size(iid) == doctest::Approx(10000.0).epsilon(0.15));
    CHECK(effective_sample_size(ar) == doctest::Approx(10000.0 * 0.1 / 1.9).epsilon(0.3));
}

TEST_CASE("sampler input validation") {
    SpatialLinearModel m{Eigen::MatrixXd::Ones(3, 1), Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Zero(3, 3),
                         CovarianceFamily::Matern32};
    CHECK_THROWS_AS(run_spatial_sampler(m, {}, {}, {}, {}, 1), InputError);
}
