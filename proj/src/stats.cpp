#include "spreadgrad/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "spreadgrad/errors.hpp"

namespace spreadgrad {

double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw InputError("quantile of an empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double a = sorted[lo], b = sorted[hi];
    const double frac = h - static_cast<double>(lo);
    if (a == b || frac == 0.0) return a;
    return a + frac * (b - a);
}

std::pair<double, double> equal_tailed_interval(std::vector<double> draws, double level) {
    std::sort(draws.begin(), draws.end());
    const double tail = 0.5 * (1.0 - level);
    return {quantile_sorted(draws, tail), quantile_sorted(draws, 1.0 - tail)};
}

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal_distribution<>(), p); }

}  // namespace spreadgrad
