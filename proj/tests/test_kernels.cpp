#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "spreadgrad/errors.hpp"
#include "spreadgrad/linalg.hpp"
#include "spreadgrad/matern.hpp"
#include "spreadgrad/quadrature.hpp"
#include "support.hpp"

using namespace spreadgrad;

namespace {

double k_at(const Eigen::Vector2d& d, const MaternParams& p) { return matern32(d.norm(), p); }

MaternParams random_params(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ls(-1.0, 1.0), lp(-2.5, 0.0);
    return {std::pow(10.0, ls(rng)), std::pow(10.0, lp(rng)), 0.0};
}

Eigen::Vector2d random_delta(const MaternParams& p, std::mt19937_64& rng) {
    // Offsets between 0.05 and 4 ranges, random direction.
    std::uniform_real_distribution<double> r(0.05, 4.0), a(0.0, 2.0 * M_PI);
    const double len = r(rng) / p.phi, th = a(rng);
    return {len * std::cos(th), len * std::sin(th)};
}

}  // namespace

TEST_CASE("matern32 closed form values") {
    CHECK(matern32(0.0, {2.0, 0.3, 0.0}) == 2.0);
    CHECK(matern32(1.0, {1.0, 1.0, 0.0}) == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-15));
    CHECK(matern32(1.0, {1.0, 1.0, 0.0}) == doctest::Approx(0.735759).epsilon(1e-6));
    double prev = matern32(0.0, {1.0, 0.1, 0.0});
    for (double r = 0.5; r < 200.0; r += 0.5) {
        const double v = matern32(r, {1.0, 0.1, 0.0});
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("matern32 gradient closed form") {
    CHECK(matern32_grad({0.0, 0.0}, {1.0, 1.0, 0.0}).isZero());
    const Eigen::Vector2d g = matern32_grad({1.0, 0.0}, {1.0, 1.0, 0.0});
    CHECK(g.x() == doctest::Approx(-std::exp(-1.0)).epsilon(1e-15));
    CHECK(g.y() == 0.0);
}

TEST_CASE("matern32 hessian at zero is -sigma2 phi^2 I") {
    const Eigen::Matrix2d h = matern32_hess({0.0, 0.0}, {1.0, 2.0, 0.0});
    CHECK(h(0, 0) == doctest::Approx(-4.0));
    CHECK(h(1, 1) == doctest::Approx(-4.0));
    CHECK(h(0, 1) == 0.0);
    CHECK(h(1, 0) == 0.0);
    // Second difference along x at the origin agrees.
    const MaternParams p{1.0, 2.0, 0.0};
    const double e = 1e-4;
    const double fd = (matern32(e, p) - 2.0 * matern32(0.0, p) + matern32(e, p)) / (e * e);
    CHECK(fd == doctest::Approx(-4.0).epsilon(1e-3));
}

TEST_CASE("gradient and hessian match central differences") {
    std::mt19937_64 rng(2024);
    for (int t = 0; t < 1000; ++t) {
        const MaternParams p = random_params(rng);
        const Eigen::Vector2d d = random_delta(p, rng);
        const double h = 1e-4 / p.phi;
        Eigen::Vector2d fd;
        Eigen::Matrix2d fh;
        for (int a = 0; a < 2; ++a) {
            Eigen::Vector2d e = Eigen::Vector2d::Zero();
            e(a) = h;
            fd(a) = (k_at(d + e, p) - k_at(d - e, p)) / (2 * h);
            fh.col(a) = (matern32_grad(d + e, p) - matern32_grad(d - e, p)) / (2 * h);
        }
        const Eigen::Vector2d g = matern32_grad(d, p);
        const Eigen::Matrix2d H = matern32_hess(d, p);
        CHECK((g - fd).norm() <= 1e-6 * g.norm() + 1e-14 * p.sigma2 * p.phi);
        CHECK((H - fh).norm() <= 1e-5 * H.norm());
        CHECK(H(0, 1) == H(1, 0));
    }
}

TEST_CASE("single-site joint covariance") {
    const MaternParams p{3.0, 0.5, 0.2};
    const auto b = assemble_joint_cov({{1.0, 2.0}}, p);
    CHECK(b.K(0, 0) == doctest::Approx(3.2));
    CHECK(b.gradK.isZero());
    CHECK(b.hessK.isApprox(3.0 * 0.25 * Eigen::Matrix2d::Identity()));
}

TEST_CASE("assembled joint covariance is positive semidefinite") {
    std::mt19937_64 rng(5);
    for (std::size_t n : {5u, 20u, 50u}) {
        const auto s = testing::uniform_sites(n, 200.0, rng);
        const MaternParams p{4.0, 0.05, 0.0};
        const Eigen::MatrixXd m = assemble_joint_cov(s, p).assembled();
        CHECK((m - m.transpose()).norm() < 1e-12 * m.norm());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
        CHECK(es.eigenvalues().minCoeff() > -1e-8 * p.sigma2);
    }
}

TEST_CASE("cross covariance orientation agrees with finite differences of K") {
    // Cov(Y(s_i), dY/dx_a(s_j)) = lim [K(s_i - s_j - h e_a) - K(s_i - s_j)] / h.
    std::mt19937_64 rng(9);
    const auto s = testing::uniform_sites(6, 50.0, rng);
    const MaternParams p{2.0, 0.08, 0.0};
    const auto b = assemble_joint_cov(s, p);
    const Eigen::MatrixXd m = b.assembled();
    const auto n = static_cast<Eigen::Index>(s.size());
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            for (int a = 0; a < 2; ++a) {
                Eigen::Vector2d e = Eigen::Vector2d::Zero();
                e(a) = h;
                const Eigen::Vector2d d = s[i] - s[j];
                const double fd = (k_at(d - e, p) - k_at(d + e, p)) / (2 * h);
                CHECK(m(i, n + a * n + j) == doctest::Approx(fd).epsilon(1e-6).scale(p.sigma2 * p.phi));
                CHECK(m(n + a * n + j, i) == doctest::Approx(fd).epsilon(1e-6).scale(p.sigma2 * p.phi));
            }
}

TEST_CASE("Monte Carlo finite-difference gradients reproduce the joint blocks") {
    // Simulate (Y(s), Y(s + h e1), Y(s + h e2)) at three sites and compare the
    // empirical covariance of (Y, finite-difference gradient) with the blocks.
    const std::vector<Location> s{{0.0, 0.0}, {0.7, 0.3}, {-0.4, 0.9}};
    const MaternParams p{2.0, 1.0, 0.0};
    const double h = 1e-3;
    std::vector<Location> pts;
    for (const auto& x : s) pts.push_back(x);
    for (const auto& x : s) pts.push_back({x.x + h, x.y});
    for (const auto& x : s) pts.push_back({x.x, x.y + h});
    const Eigen::MatrixXd c = matern32_cov(pairwise_distances(pts), p);
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    REQUIRE(llt.info() == Eigen::Success);
    const Eigen::MatrixXd L = llt.matrixL();

    const int draws = 100000;
    std::mt19937_64 rng(77);
    std::normal_distribution<double> z;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(9, 9);
    Eigen::VectorXd e(9), v(9);
    for (int t = 0; t < draws; ++t) {
        for (int k = 0; k < 9; ++k) e(k) = z(rng);
        const Eigen::VectorXd y = L * e;
        for (int k = 0; k < 3; ++k) {
            v(k) = y(k);
            v(3 + k) = (y(3 + k) - y(k)) / h;
            v(6 + k) = (y(6 + k) - y(k)) / h;
        }
        acc += v * v.transpose();
    }
    acc /= draws;
    const Eigen::MatrixXd m = assemble_joint_cov(s, p).assembled();
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) {
            const double se = std::sqrt((m(i, i) * m(j, j) + m(i, j) * m(i, j)) / draws);
            CHECK(std::abs(acc(i, j) - m(i, j)) < 5.0 * se + 1e-3);
        }
    // Gradient variances within 2%.
    for (int k = 3; k < 9; ++k) CHECK(acc(k, k) == doctest::Approx(m(k, k)).epsilon(0.02));
}

TEST_CASE("general Matérn correlation special cases") {
    for (double r : {0.0, 0.3, 1.0, 5.0, 20.0}) {
        CHECK(matern_correlation(r, 0.7, 1.5) == doctest::Approx(matern32(r, {1.0, 0.7, 0.0})).epsilon(1e-10));
        CHECK(matern_correlation(r, 0.7, 0.5) == doctest::Approx(std::exp(-0.7 * r)).epsilon(1e-10));
        const double u = 0.7 * r;
        CHECK(matern_correlation(r, 0.7, 2.5) == doctest::Approx((1 + u + u * u / 3) * std::exp(-u)).epsilon(1e-10));
    }
    CHECK(matern_correlation(1e6, 1.0, 1.5) == 0.0);
}

TEST_CASE("matern32_cov adds the nugget on the diagonal only") {
    const auto d = pairwise_distances(std::vector<Location>{{0, 0}, {1, 0}});
    const auto c = matern32_cov(d, {1.0, 1.0, 0.5});
    CHECK(c(0, 0) == 1.5);
    CHECK(c(0, 1) == doctest::Approx(2.0 * std::exp(-1.0)));
}

TEST_CASE("jittered cholesky") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Ones(3, 3);  // rank one
    const Cholesky c = jittered_cholesky(a, 1.0);
    CHECK(c.jitter > 0.0);
    CHECK(c.jitter <= 1e-6);
    const Eigen::MatrixXd spd = (Eigen::MatrixXd(2, 2) << 4, 2, 2, 3).finished();
    const Cholesky d = jittered_cholesky(spd, 1.0);
    CHECK(d.jitter <= 1e-10);
    CHECK(d.log_det() == doctest::Approx(std::log(8.0)).epsilon(1e-9));
    const Eigen::MatrixXd b = (Eigen::MatrixXd(2, 1) << 1, 2).finished();
    CHECK((d.lower() * d.half_solve(b) - b).norm() < 1e-14);
    Eigen::MatrixXd neg = -Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(jittered_cholesky(neg, 1.0), NumericalError);
}

TEST_CASE("gauss-legendre rule") {
    for (std::size_t n : {1u, 4u, 8u, 16u, 32u}) {
        const auto q = gauss_legendre_unit(n);
        REQUIRE(q.nodes.size() == n);
        double w = 0.0;
        for (double x : q.weights) w += x;
        CHECK(w == doctest::Approx(1.0).epsilon(1e-14));
        for (std::size_t k = 0; k < 2 * n; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += q.weights[i] * std::pow(q.nodes[i], static_cast<double>(k));
            CHECK(s == doctest::Approx(1.0 / static_cast<double>(k + 1)).epsilon(1e-12));
        }
        for (std::size_t i = 1; i < n; ++i) CHECK(q.nodes[i] > q.nodes[i - 1]);
    }
}
