#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spreadgrad/gp_fit.hpp"
#include "spreadgrad/matern.hpp"
#include "spreadgrad/types.hpp"

namespace testing {

using namespace spreadgrad;

inline std::vector<Location> uniform_sites(std::size_t n, double side, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, side);
    std::vector<Location> s;
    for (std::size_t i = 0; i < n; ++i) s.push_back({u(rng), u(rng)});
    return s;
}

inline std::vector<Location> square_grid(std::size_t per_side, double spacing, Location origin = {0.0, 0.0}) {
    std::vector<Location> s;
    for (std::size_t j = 0; j < per_side; ++j)
        for (std::size_t i = 0; i < per_side; ++i)
            s.push_back({origin.x + static_cast<double>(i) * spacing, origin.y + static_cast<double>(j) * spacing});
    return s;
}

template <class F>
WaitingTimeDataset dataset_from(const std::vector<Location>& sites, F&& year_of) {
    std::vector<WaitingTimeObservation> obs;
    for (std::size_t i = 0; i < sites.size(); ++i) obs.push_back({std::to_string(i), sites[i], year_of(sites[i]), {}});
    return WaitingTimeDataset(std::move(obs));
}

/// One draw of Y = mu + w + eps with Matérn-3/2 w and iid N(0, tau2) eps.
inline Eigen::VectorXd simulate_gp(const std::vector<Location>& sites, const GpParams& p, std::mt19937_64& rng) {
    const Eigen::MatrixXd d = pairwise_distances(sites);
    Eigen::MatrixXd k = matern32_cov(d, {p.cov.sigma2, p.cov.phi, 0.0});
    k.diagonal().array() += 1e-10 * p.cov.sigma2;
    const Eigen::MatrixXd l = k.llt().matrixL();
    std::normal_distribution<double> z;
    Eigen::VectorXd e(static_cast<Eigen::Index>(sites.size())), eps(e.size());
    for (Eigen::Index i = 0; i < e.size(); ++i) {
        e(i) = z(rng);
        eps(i) = z(rng);
    }
    Eigen::VectorXd y = l * e + std::sqrt(p.cov.tau2) * eps;
    for (std::size_t i = 0; i < sites.size(); ++i) y(static_cast<Eigen::Index>(i)) += p.mean.at(sites[i]);
    return y;
}

inline PosteriorDraws repeated_draw(const GpParams& p, std::size_t m) {
    PosteriorDraws d;
    d.draws.assign(m, p);
    return d;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto d = std::filesystem::temp_directory_path() / ("spreadgrad_test_" + name);
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

inline std::size_t count(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto i = text.find(needle); i != std::string::npos; i = text.find(needle, i + 1)) ++n;
    return n;
}

// Small well-formedness check: every element closes in order and attributes are quoted.
inline bool well_formed(const std::string& xml) {
    std::vector<std::string> stack;
    std::size_t i = 0;
    while ((i = xml.find('<', i)) != std::string::npos) {
        const auto j = xml.find('>', i);
        if (j == std::string::npos) return false;
        std::string tag = xml.substr(i + 1, j - i - 1);
        i = j + 1;
        if (tag.empty()) return false;
        if (tag[0] == '?' || tag[0] == '!') continue;
        if (count(tag, "\"") % 2 != 0) return false;
        if (tag[0] == '/') {
            if (stack.empty() || stack.back() != tag.substr(1)) return false;
            stack.pop_back();
            continue;
        }
        const bool self_closing = tag.back() == '/';
        if (!self_closing) stack.push_back(tag.substr(0, tag.find_first_of(" /")));
    }
    return stack.empty();
}

}  // namespace testing
