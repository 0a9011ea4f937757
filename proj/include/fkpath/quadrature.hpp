#pragma once

#include <vector>

namespace fkpath {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss-Hermite rule for the weight exp(-x^2) on the real line.
QuadratureRule gauss_hermite(int order);

/// Process-wide immutable copy of gauss_hermite(order); safe to share across workers.
const QuadratureRule& gauss_hermite_cached(int order);

/// Gauss-Legendre rule on [a, b].
QuadratureRule gauss_legendre(int order, double a, double b);

}  // namespace fkpath
