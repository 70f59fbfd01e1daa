#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace spreadgrad {

/// Projected planar position in kilometres.
struct Location {
    double x = 0.0;
    double y = 0.0;

    [[nodiscard]] Eigen::Vector2d vec() const { return {x, y}; }
    [[nodiscard]] bool finite() const { return std::isfinite(x) && std::isfinite(y); }

    friend bool operator==(const Location&, const Location&) = default;
};

inline Location operator+(Location a, const Eigen::Vector2d& d) { return {a.x + d.x(), a.y + d.y()}; }
inline Eigen::Vector2d operator-(const Location& a, const Location& b) { return {a.x - b.x, a.y - b.y}; }

inline double distance(const Location& a, const Location& b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Year of first appearance recorded at one site.
struct WaitingTimeObservation {
    std::string id;
    Location loc;
    double year = 0.0;
    // Missing covariate cells are stored as NaN.
    std::map<std::string, double> covariates;
};

/// Ordered collection of observations sharing one covariate schema.
class WaitingTimeDataset {
public:
    WaitingTimeDataset() = default;
    explicit WaitingTimeDataset(std::vector<WaitingTimeObservation> obs,
                                std::vector<std::string> covariate_names = {});

    [[nodiscard]] std::size_t size() const { return obs_.size(); }
    [[nodiscard]] bool empty() const { return obs_.empty(); }
    [[nodiscard]] const WaitingTimeObservation& operator[](std::size_t i) const { return obs_[i]; }
    [[nodiscard]] const std::vector<WaitingTimeObservation>& observations() const { return obs_; }
    [[nodiscard]] const std::vector<std::string>& covariate_names() const { return covariate_names_; }

    [[nodiscard]] std::vector<Location> locations() const;
    [[nodiscard]] Eigen::VectorXd years() const;
    [[nodiscard]] Eigen::MatrixX2d coordinates() const;

    /// Throws InputError when the dataset is too small for a model fit.
    void require_fit_ready(std::size_t min_n = 3) const;

private:
    std::vector<WaitingTimeObservation> obs_;
    std::vector<std::string> covariate_names_;
};

/// Symmetric n x n matrix of Euclidean distances.
Eigen::MatrixXd pairwise_distances(const std::vector<Location>& locs);
Eigen::MatrixXd pairwise_distances(const WaitingTimeDataset& data);

}  // namespace spreadgrad
