#pragma once

#include <cstddef>
#include <vector>

namespace spreadgrad {

/// Gauss-Legendre nodes and weights mapped to [0, 1] (weights sum to 1).
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Golub-Welsch construction; exact for polynomials of degree 2n - 1.
QuadratureRule gauss_legendre_unit(std::size_t n);

}  // namespace spreadgrad
