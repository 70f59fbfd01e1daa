#include "spreadgrad/spatial_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "spreadgrad/errors.hpp"
#include "spreadgrad/linalg.hpp"
#include "spreadgrad/matern.hpp"
#include "spreadgrad/rng.hpp"

namespace spreadgrad {

double InverseGammaPrior::log_density(double x) const {
    if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
    return -(shape + 1.0) * std::log(x) - scale / x;
}

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& dist, CovarianceFamily family, double phi, double nu) {
    const Eigen::Index n = dist.rows();
    Eigen::MatrixXd r(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        r(j, j) = 1.0;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const double d = dist(i, j);
            const double v = family == CovarianceFamily::Matern32 ? matern32(d, {1.0, phi, 0.0})
                                                                  : matern_correlation(d, phi, nu);
            r(i, j) = r(j, i) = v;
        }
    }
    return r;
}

double effective_sample_size(const std::vector<double>& x) {
    const std::size_t m = x.size();
    if (m < 4) return static_cast<double>(m);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(m);
    auto autocov = [&](std::size_t lag) {
        double s = 0.0;
        for (std::size_t i = 0; i + lag < m; ++i) s += (x[i] - mean) * (x[i + lag] - mean);
        return s / static_cast<double>(m);
    };
    const double c0 = autocov(0);
    if (!(c0 > 0.0)) return static_cast<double>(m);
    // Geyer: sum pairs Gamma_k = rho_{2k} + rho_{2k+1} while positive, enforcing monotonicity.
    double sum = 0.0;
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; 2 * k + 1 < m; ++k) {
        double g = (autocov(2 * k) + autocov(2 * k + 1)) / c0;
        if (g <= 0.0) break;
        g = std::min(g, prev);
        prev = g;
        sum += g;
    }
    const double tau = std::max(1.0, 2.0 * sum - 1.0);
    return static_cast<double>(m) / tau;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

enum class Param { Sigma2, Phi, Tau2, Nu };

double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

struct Evaluation {
    double log_post = kNegInf;
    Eigen::VectorXd beta_hat;
    Eigen::MatrixXd a_lower;  // Cholesky factor of X^T Sigma^-1 X
};

class Chain {
public:
    Chain(const SpatialLinearModel& model, const CovariancePriors& priors, const FixedCovariance& fixed,
          const ChainConfig& config, int index, std::uint64_t seed)
        : model_(model), priors_(priors), fixed_(fixed), config_(config), index_(index), rng_(seed) {
        if (!fixed_.sigma2) free_.push_back(Param::Sigma2);
        if (!fixed_.phi) free_.push_back(Param::Phi);
        if (!fixed_.tau2) free_.push_back(Param::Tau2);
        if (model_.family == CovarianceFamily::Matern && !fixed_.nu) free_.push_back(Param::Nu);
    }

    struct Result {
        Eigen::MatrixXd beta;
        std::vector<CovarianceDraw> cov;
        double acceptance = 0.0;
    };

    Result run(const CovarianceDraw& initial) {
        const auto d = static_cast<Eigen::Index>(free_.size());
        Eigen::VectorXd u = to_unconstrained(initial);
        CovarianceDraw cur = from_unconstrained(u);
        Evaluation ev = evaluate(cur);
        if (!std::isfinite(ev.log_post))
            throw NumericalError("non-finite posterior density at initial covariance parameters");

        Eigen::MatrixXd prop_chol = 0.1 * Eigen::MatrixXd::Identity(d, d);
        double log_lambda = 0.0;
        std::vector<Eigen::VectorXd> history;
        int batch_accepts = 0, batch_len = 0, batch_index = 0;
        double last_batch_rate = 0.0;
        long post_accepts = 0, post_total = 0;
        const int keep = config_.iterations > config_.burn_in
                             ? (config_.iterations - config_.burn_in + config_.thin - 1) / config_.thin
                             : 0;
        Result res;
        res.beta.resize(keep, model_.X.cols());
        res.cov.reserve(static_cast<std::size_t>(keep));
        std::normal_distribution<double> normal;
        std::uniform_real_distribution<double> unif;
        int stored = 0;

        for (int it = 0; it < config_.iterations; ++it) {
            const bool burning = it < config_.burn_in;
            if (d > 0) {
                Eigen::VectorXd z(d);
                for (Eigen::Index k = 0; k < d; ++k) z(k) = normal(rng_);
                const Eigen::VectorXd u_new = u + std::exp(log_lambda) * (prop_chol * z);
                const CovarianceDraw cand = from_unconstrained(u_new);
                Evaluation ev_new = evaluate(cand);
                const bool accept =
                    std::isfinite(ev_new.log_post) && std::log(unif(rng_)) < ev_new.log_post - ev.log_post;
                if (accept) {
                    u = u_new;
                    cur = cand;
                    ev = std::move(ev_new);
                }
                if (burning) {
                    batch_accepts += accept;
                    ++batch_len;
                    history.push_back(u);
                    if (batch_len == 50) {
                        ++batch_index;
                        const double rate = static_cast<double>(batch_accepts) / batch_len;
                        last_batch_rate = rate;
                        // A nearly frozen batch means the step is far too large: shrink hard.
                        if (rate < 0.05)
                            log_lambda -= 1.0;
                        else
                            log_lambda += std::min(1.0, 3.0 / std::sqrt(static_cast<double>(batch_index))) *
                                          (rate - config_.target_acceptance);
                        batch_accepts = batch_len = 0;
                        if (history.size() >= 200) update_proposal(history, prop_chol, log_lambda);
                    }
                } else {
                    post_accepts += accept;
                    ++post_total;
                }
            }
            // Gibbs step for the mean coefficients.
            Eigen::VectorXd zb(model_.X.cols());
            for (Eigen::Index k = 0; k < zb.size(); ++k) zb(k) = normal(rng_);
            if (!burning && (it - config_.burn_in) % config_.thin == 0 && stored < keep) {
                const Eigen::VectorXd beta =
                    ev.beta_hat + ev.a_lower.transpose().triangularView<Eigen::Upper>().solve(zb);
                res.beta.row(stored) = beta.transpose();
                res.cov.push_back(cur);
                ++stored;
            }
            if (config_.progress && config_.progress_interval > 0 && (it + 1) % config_.progress_interval == 0) {
                const double acc = post_total > 0 ? static_cast<double>(post_accepts) / static_cast<double>(post_total)
                                                  : last_batch_rate;
                config_.progress({index_, it + 1, acc});
            }
        }
        res.beta.conservativeResize(stored, Eigen::NoChange);
        res.acceptance = post_total > 0 ? static_cast<double>(post_accepts) / static_cast<double>(post_total)
                                        : std::numeric_limits<double>::quiet_NaN();
        return res;
    }

private:
    void update_proposal(const std::vector<Eigen::VectorXd>& history, Eigen::MatrixXd& prop_chol,
                         double& log_lambda) {
        const auto d = static_cast<Eigen::Index>(free_.size());
        // Use the latter half of the burn-in history so early transients do not dominate.
        const std::size_t start = history.size() / 2;
        const auto m = static_cast<double>(history.size() - start);
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
        for (std::size_t i = start; i < history.size(); ++i) mean += history[i];
        mean /= m;
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
        for (std::size_t i = start; i < history.size(); ++i) {
            const Eigen::VectorXd c = history[i] - mean;
            cov += c * c.transpose();
        }
        cov /= std::max(1.0, m - 1.0);
        cov *= 2.38 * 2.38 / static_cast<double>(d);
        cov.diagonal().array() += 1e-8;
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) return;
        if (cov.diagonal().maxCoeff() < 1e-12) return;
        // Hand the overall step size over to the empirical covariance once.
        if (!adapted_) {
            log_lambda = 0.0;
            adapted_ = true;
        }
        prop_chol = llt.matrixL();
    }

    Eigen::VectorXd to_unconstrained(const CovarianceDraw& c) const {
        Eigen::VectorXd u(static_cast<Eigen::Index>(free_.size()));
        for (std::size_t k = 0; k < free_.size(); ++k) {
            double v = 0.0;
            switch (free_[k]) {
                case Param::Sigma2: v = std::log(c.sigma2); break;
                case Param::Tau2: v = std::log(c.tau2); break;
                case Param::Phi: v = logit(unit(c.phi, priors_.phi)); break;
                case Param::Nu: v = logit(unit(c.nu, priors_.nu)); break;
            }
            u(static_cast<Eigen::Index>(k)) = v;
        }
        return u;
    }

    static double unit(double v, const UniformPrior& p) {
        const double t = (v - p.lo) / (p.hi - p.lo);
        return std::clamp(t, 1e-9, 1.0 - 1e-9);
    }

    CovarianceDraw from_unconstrained(const Eigen::VectorXd& u) const {
        CovarianceDraw c;
        c.sigma2 = fixed_.sigma2.value_or(0.0);
        c.phi = fixed_.phi.value_or(0.0);
        c.tau2 = fixed_.tau2.value_or(0.0);
        c.nu = model_.family == CovarianceFamily::Matern32 ? 1.5 : fixed_.nu.value_or(1.5);
        for (std::size_t k = 0; k < free_.size(); ++k) {
            const double v = u(static_cast<Eigen::Index>(k));
            switch (free_[k]) {
                case Param::Sigma2: c.sigma2 = std::exp(v); break;
                case Param::Tau2: c.tau2 = std::exp(v); break;
                case Param::Phi: c.phi = priors_.phi.lo + (priors_.phi.hi - priors_.phi.lo) * sigmoid(v); break;
                case Param::Nu: c.nu = priors_.nu.lo + (priors_.nu.hi - priors_.nu.lo) * sigmoid(v); break;
            }
        }
        return c;
    }

    double log_prior_and_jacobian(const CovarianceDraw& c) const {
        double lp = 0.0;
        for (Param p : free_) {
            switch (p) {
                case Param::Sigma2: lp += priors_.sigma2.log_density(c.sigma2) + std::log(c.sigma2); break;
                case Param::Tau2: lp += priors_.tau2.log_density(c.tau2) + std::log(c.tau2); break;
                case Param::Phi: {
                    const double s = (c.phi - priors_.phi.lo) / (priors_.phi.hi - priors_.phi.lo);
                    lp += std::log(s * (1.0 - s));
                    break;
                }
                case Param::Nu: {
                    const double s = (c.nu - priors_.nu.lo) / (priors_.nu.hi - priors_.nu.lo);
                    lp += std::log(s * (1.0 - s));
                    break;
                }
            }
        }
        return lp;
    }

    Evaluation evaluate(const CovarianceDraw& c) const {
        Evaluation ev;
        if (!(c.sigma2 > 0.0) || !(c.phi > 0.0) || !(c.tau2 >= 0.0) || !std::isfinite(c.sigma2) ||
            !std::isfinite(c.tau2))
            return ev;
        const double lp = log_prior_and_jacobian(c);
        if (!std::isfinite(lp)) return ev;
        Eigen::MatrixXd sigma = c.sigma2 * correlation_matrix(model_.dist, model_.family, c.phi, c.nu);
        sigma.diagonal().array() += c.tau2;
        Cholesky chol;
        try {
            chol = jittered_cholesky(std::move(sigma), c.sigma2);
        } catch (const NumericalError&) {
            return ev;
        }
        const Eigen::MatrixXd xt = chol.half_solve(model_.X);
        const Eigen::VectorXd yt = chol.half_solve(model_.y);
        const Eigen::MatrixXd a = xt.transpose() * xt;
        Eigen::LLT<Eigen::MatrixXd> a_llt(a);
        if (a_llt.info() != Eigen::Success) return ev;
        ev.beta_hat = a_llt.solve(xt.transpose() * yt);
        const double s = (yt - xt * ev.beta_hat).squaredNorm();
        const double logdet_a = 2.0 * a_llt.matrixLLT().diagonal().array().log().sum();
        ev.a_lower = a_llt.matrixL();
        ev.log_post = -0.5 * chol.log_det() - 0.5 * logdet_a - 0.5 * s + lp;
        if (!std::isfinite(ev.log_post)) ev.log_post = kNegInf;
        return ev;
    }

    const SpatialLinearModel& model_;
    const CovariancePriors& priors_;
    const FixedCovariance& fixed_;
    const ChainConfig& config_;
    int index_;
    std::mt19937_64 rng_;
    std::vector<Param> free_;
    bool adapted_ = false;
};

std::vector<std::string> parameter_names(const SpatialLinearModel& model) {
    std::vector<std::string> names;
    for (Eigen::Index k = 0; k < model.X.cols(); ++k) names.push_back("beta" + std::to_string(k));
    names.insert(names.end(), {"sigma2", "phi", "tau2"});
    if (model.family == CovarianceFamily::Matern) names.push_back("nu");
    return names;
}

}  // namespace

SamplerOutput run_spatial_sampler(const SpatialLinearModel& model, const CovariancePriors& priors,
                                  const FixedCovariance& fixed, const CovarianceDraw& initial,
                                  const ChainConfig& config, std::uint64_t seed) {
    const Eigen::Index n = model.y.size();
    if (model.X.rows() != n || model.dist.rows() != n || model.dist.cols() != n)
        throw InputError("spatial model: inconsistent dimensions");
    if (n < 2) throw InputError("spatial model: at least two observations required");
    if (config.iterations <= 0 || config.burn_in < 0 || config.thin <= 0 || config.n_chains <= 0)
        throw InputError("chain settings must be positive");
    if (config.burn_in >= config.iterations) throw InputError("burn-in must be shorter than the chain");
    if (!fixed.phi && !(priors.phi.lo > 0.0 && priors.phi.hi > priors.phi.lo))
        throw InputError("decay prior support must satisfy 0 < lo < hi");
    if (model.family == CovarianceFamily::Matern && !fixed.nu && !(priors.nu.lo > 0.0 && priors.nu.hi > priors.nu.lo))
        throw InputError("smoothness prior support must satisfy 0 < lo < hi");

    const int chains = config.n_chains;
    std::vector<Chain::Result> results(static_cast<std::size_t>(chains));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chains));
    auto work = [&](int c) {
        try {
            Chain chain(model, priors, fixed, config, c, derive_seed(seed, static_cast<std::uint64_t>(c), 0x5A));
            results[static_cast<std::size_t>(c)] = chain.run(initial);
        } catch (...) {
            errors[static_cast<std::size_t>(c)] = std::current_exception();
        }
    };
    if (chains == 1) {
        work(0);
    } else {
        std::vector<std::thread> threads;
        for (int c = 0; c < chains; ++c) threads.emplace_back(work, c);
        for (auto& t : threads) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    SamplerOutput out;
    Eigen::Index total = 0;
    for (const auto& r : results) total += r.beta.rows();
    out.beta.resize(total, model.X.cols());
    Eigen::Index row = 0;
    for (const auto& r : results) {
        out.beta.middleRows(row, r.beta.rows()) = r.beta;
        row += r.beta.rows();
        out.cov.insert(out.cov.end(), r.cov.begin(), r.cov.end());
        out.diagnostics.acceptance_rate.push_back(r.acceptance);
        if (std::isfinite(r.acceptance) && (r.acceptance < 0.05 || r.acceptance > 0.8))
            out.diagnostics.warnings.push_back("chain " + std::to_string(&r - results.data()) +
                                               ": acceptance rate " + std::to_string(r.acceptance) +
                                               " outside [0.05, 0.8]");
    }

    out.diagnostics.parameter_names = parameter_names(model);
    const std::size_t nparams = out.diagnostics.parameter_names.size();
    out.diagnostics.ess.assign(nparams, 0.0);
    for (const auto& r : results) {
        const auto m = static_cast<std::size_t>(r.beta.rows());
        for (std::size_t p = 0; p < nparams; ++p) {
            std::vector<double> series(m);
            for (std::size_t i = 0; i < m; ++i) {
                const auto k = static_cast<Eigen::Index>(p);
                if (k < model.X.cols()) {
                    series[i] = r.beta(static_cast<Eigen::Index>(i), k);
                } else {
                    const auto& c = r.cov[i];
                    const auto q = k - model.X.cols();
                    series[i] = q == 0 ? c.sigma2 : q == 1 ? c.phi : q == 2 ? c.tau2 : c.nu;
                }
            }
            out.diagnostics.ess[p] += effective_sample_size(series);
        }
    }
    return out;
}

}  // namespace spreadgrad
