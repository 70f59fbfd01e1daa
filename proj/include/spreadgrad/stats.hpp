#pragma once

#include <utility>
#include <vector>

namespace spreadgrad {

/// Linear-interpolation quantile (R type 7) of an ascending sample.
double quantile_sorted(const std::vector<double>& sorted, double p);

/// Equal-tailed interval holding `level` of the sample.
std::pair<double, double> equal_tailed_interval(std::vector<double> draws, double level);

/// Standard normal quantile.
double normal_quantile(double p);

}  // namespace spreadgrad
