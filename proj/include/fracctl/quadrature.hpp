#pragma once

#include <vector>

namespace fracctl {

/// Gauss-Legendre rule on the unit interval [0,1].
struct GaussRule {
    std::vector<double> points;
    std::vector<double> weights;

    int size() const { return static_cast<int>(points.size()); }
    /// Highest polynomial degree integrated exactly.
    int exact_degree() const { return 2 * size() - 1; }
};

GaussRule gauss_legendre(int npoints);

/// Smallest Gauss-Legendre rule exact for polynomials of the given degree.
GaussRule gauss_for_degree(int degree);

}  // namespace fracctl
