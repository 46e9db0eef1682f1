#pragma once

#include <vector>

namespace snep {

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Newton iteration on P_n from Chebyshev guesses; accurate to machine precision for n <= 100.
GaussRule gauss_legendre(int n);

}  // namespace snep
