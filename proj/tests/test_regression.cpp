#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "spreadgrad/errors.hpp"
#include "spreadgrad/spread_regression.hpp"
#include "spreadgrad/stats.hpp"
#include "support.hpp"

using namespace spreadgrad;

namespace {

SpreadRow row(const std::string& id, Location at, double speed, bool significant = true) {
    SpreadRow r;
    r.id = id;
    r.summary.point = at;
    r.summary.speed = SpeedStats{speed, 0.5 * speed, 2.0 * speed, 1.1 * speed};
    r.summary.significant = significant;
    return r;
}

RegressionDesign simulated_design(std::size_t n, std::mt19937_64& rng, Eigen::Vector3d beta) {
    const auto sites = testing::uniform_sites(n, 300.0, rng);
    const GpParams noise{{0.0, 0.0, 0.0}, {0.25, 0.02, 0.0}};
    const Eigen::VectorXd w = testing::simulate_gp(sites, noise, rng);
    std::normal_distribution<double> z;
    RegressionDesign d;
    d.X.resize(static_cast<Eigen::Index>(n), 3);
    d.response.resize(static_cast<Eigen::Index>(n));
    d.column_names = {"intercept", "a", "b"};
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        d.ids.push_back(std::to_string(i));
        d.locations.push_back(sites[i]);
        d.X.row(k) << 1.0, z(rng), 3.0 + 2.0 * z(rng);
        d.response(k) = d.X.row(k).dot(beta) + w(k) + 0.1 * z(rng);
    }
    return d;
}

RegressionConfig short_chain() {
    RegressionConfig c;
    c.chain.iterations = 700;
    c.chain.burn_in = 200;
    c.chain.thin = 5;
    return c;
}

}  // namespace

TEST_CASE("HPD of a standard normal") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> z;
    std::vector<double> d(200000);
    for (double& v : d) v = z(rng);
    const auto [lo, hi] = hpd_interval(d, 0.95);
    CHECK(lo == doctest::Approx(-1.96).epsilon(0.015));
    CHECK(hi == doctest::Approx(1.96).epsilon(0.015));
}

TEST_CASE("HPD of an exponential starts at zero") {
    std::mt19937_64 rng(2);
    std::exponential_distribution<double> e(1.0);
    std::vector<double> d(200000);
    for (double& v : d) v = e(rng);
    const auto [lo, hi] = hpd_interval(d, 0.95);
    CHECK(lo < 0.005);
    CHECK(hi == doctest::Approx(-std::log(0.05)).epsilon(0.02));

    std::sort(d.begin(), d.end());
    const double et = quantile_sorted(d, 0.975) - quantile_sorted(d, 0.025);
    CHECK(hi - lo <= et);
}

TEST_CASE("HPD window holds the requested mass") {
    std::vector<double> d;
    for (int i = 0; i < 100; ++i) d.push_back(i);
    const auto [lo, hi] = hpd_interval(d, 0.9);
    CHECK(hi - lo == 89.0);
    CHECK_THROWS_AS(hpd_interval(std::vector<double>(99, 0.0)), InputError);
    CHECK_THROWS_AS(hpd_interval(d, 1.0), InputError);
}

TEST_CASE("design joins by id and drops unusable rows") {
    std::vector<WaitingTimeObservation> obs{{"a", {0, 0}, 1900, {{"elev", 1.0}, {"temp", 5.0}}},
                                            {"b", {10, 0}, 1901, {{"elev", 2.0}, {"temp", 7.0}}},
                                            {"c", {0, 10}, 1902, {{"elev", NAN}, {"temp", 6.0}}},
                                            {"d", {10, 10}, 1903, {{"elev", 4.0}, {"temp", 9.0}}},
                                            {"e", {5, 5}, 1904, {{"elev", 3.0}, {"temp", 8.0}}}};
    const WaitingTimeDataset data(obs, {"elev", "temp"});
    const std::vector<SpreadRow> field{row("d", {10, 10}, 8.0), row("a", {0, 0}, 10.0), row("b", {10, 0}, 20.0, false),
                                       row("c", {0, 10}, 5.0), row("e", {5, 5}, 4.0)};
    const auto d = build_design(field, data, {"elev", "temp", "x"}, {{"elev", "temp"}});
    CHECK(d.column_names == std::vector<std::string>{"intercept", "elev", "temp", "x", "elev:temp"});
    CHECK(d.excluded_insignificant == 1);
    CHECK(d.excluded_missing == 1);
    REQUIRE(d.ids == std::vector<std::string>{"d", "a", "e"});
    CHECK(d.response(0) == doctest::Approx(std::log(8.0)));
    CHECK(d.X(1, 1) == 1.0);
    CHECK(d.X(0, 3) == 10.0);
    // centred over the retained rows: elev mean 8/3, temp mean 22/3
    CHECK(d.X(0, 4) == doctest::Approx((4.0 - 8.0 / 3.0) * (9.0 - 22.0 / 3.0)));
    CHECK(d.X.col(0).isOnes());

    const auto mean = build_design(field, data, {"elev"}, {}, SpeedResponse::Mean);
    CHECK(mean.response(0) == doctest::Approx(std::log(8.8)));

    CHECK_THROWS_AS(build_design(field, data, {"rain"}), InputError);
    std::vector<SpreadRow> stranger{row("zz", {0, 0}, 1.0)};
    CHECK_THROWS_AS(build_design(stranger, data, {"elev"}), InputError);
}

TEST_CASE("shifting the response moves only the intercept") {
    std::mt19937_64 rng(3);
    RegressionDesign d = simulated_design(40, rng, {2.0, -1.0, 0.5});
    const auto a = fit_spatial_regression(d, short_chain(), 17);
    d.response.array() += 5.0;
    const auto b = fit_spatial_regression(d, short_chain(), 17);
    REQUIRE(a.beta.rows() == 100);
    CHECK((b.beta.col(0).array() - a.beta.col(0).array() - 5.0).abs().maxCoeff() < 1e-8);
    CHECK((b.beta.rightCols(2) - a.beta.rightCols(2)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(b.summary[0].posterior_mean == doctest::Approx(a.summary[0].posterior_mean + 5.0));
}

TEST_CASE("rescaling a covariate rescales its coefficient") {
    std::mt19937_64 rng(4);
    RegressionDesign d = simulated_design(40, rng, {2.0, -1.0, 0.5});
    const auto a = fit_spatial_regression(d, short_chain(), 18);
    d.X.col(2) *= 4.0;
    const auto b = fit_spatial_regression(d, short_chain(), 18);
    CHECK((4.0 * b.beta.col(2) - a.beta.col(2)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((b.beta.col(1) - a.beta.col(1)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(b.summary[2].hpd_lo == doctest::Approx(a.summary[2].hpd_lo / 4.0));
}

TEST_CASE("regression recovers known coefficients") {
    std::mt19937_64 rng(5);
    const Eigen::Vector3d beta{2.0, -1.0, 0.5};
    const RegressionDesign d = simulated_design(80, rng, beta);
    RegressionConfig cfg;
    cfg.chain.iterations = 2000;
    cfg.chain.burn_in = 500;
    cfg.chain.thin = 5;
    const auto post = fit_spatial_regression(d, cfg, 21);
    REQUIRE(post.summary.size() == 3);
    CHECK(post.names == d.column_names);
    for (int j = 1; j < 3; ++j) {
        CHECK(post.summary[j].hpd_lo < beta(j));
        CHECK(post.summary[j].hpd_hi > beta(j));
        CHECK(post.summary[j].posterior_mean == doctest::Approx(beta(j)).epsilon(0.1));
    }
    for (const auto& c : post.cov) {
        CHECK(c.nu >= 0.5);
        CHECK(c.nu <= 2.5);
        CHECK(c.sigma2 > 0.0);
    }
}

TEST_CASE("regression input checks") {
    std::mt19937_64 rng(6);
    RegressionDesign d = simulated_design(7, rng, {1.0, 1.0, 1.0});
    CHECK_THROWS_AS(fit_spatial_regression(d, short_chain(), 1), InputError);
    d = simulated_design(20, rng, {1.0, 1.0, 1.0});
    d.X.col(1).setConstant(3.0);
    CHECK_THROWS_AS(fit_spatial_regression(d, short_chain(), 1), InputError);
}

TEST_CASE("coefficient table") {
    const auto dir = testing::scratch_dir("coef");
    write_coefficients_csv(dir / "c.csv", {{"intercept", 1.5, 1.0, 2.0}, {"lon", -0.03, -0.04, -0.02}});
    std::ifstream f(dir / "c.csv");
    std::string header, first;
    std::getline(f, header);
    std::getline(f, first);
    CHECK(header == "covariate,posterior_mean,hpd_lo,hpd_hi");
    CHECK(first.rfind("intercept,1.5,", 0) == 0);
}
