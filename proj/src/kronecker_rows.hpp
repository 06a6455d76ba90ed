#pragma once

// Row-wise evaluation of the Kronecker-structured stiffness, shared by the
// serial and OpenMP assembly kernels.

#include <algorithm>

#include "fracctl/kernels.hpp"

namespace fracctl::kernels::detail {

inline int row_length(const KroneckerFactors& f, int row) {
    const int m = f.per_side(), nb = f.base_size(), L = f.layers();
    const int layer = row / nb, b = row % nb;
    auto span1 = [](int i, int n) { return std::min(i + 1, n - 1) - std::max(i - 1, 0) + 1; };
    int len = span1(layer, L) * span1(b % m, m);
    if (f.dim == 2) len *= span1(b / m, m);
    return len;
}

/// Writes the row's sorted columns and values; returns the count.
inline int fill_row(const KroneckerFactors& f, int row, int* cols, double* vals) {
    const int m = f.per_side(), nb = f.base_size(), L = f.layers();
    const int layer = row / nb, b = row % nb;
    const int i1 = b % m, i2 = f.dim == 2 ? b / m : 0;
    const auto& kx = f.base_stiffness;
    const auto& mx = f.base_mass;
    int count = 0;
    for (int l = std::max(layer - 1, 0); l <= std::min(layer + 1, L - 1); ++l) {
        const double my = f.y_mass(layer, l), ky = f.y_stiffness(layer, l);
        const int j2_lo = f.dim == 2 ? std::max(i2 - 1, 0) : 0;
        const int j2_hi = f.dim == 2 ? std::min(i2 + 1, m - 1) : 0;
        for (int j2 = j2_lo; j2 <= j2_hi; ++j2) {
            for (int j1 = std::max(i1 - 1, 0); j1 <= std::min(i1 + 1, m - 1); ++j1) {
                double a_base, m_base;
                if (f.dim == 1) {
                    a_base = f.diffusion[0] * kx(i1, j1) + f.reaction * mx(i1, j1);
                    m_base = mx(i1, j1);
                } else {
                    const double m1 = mx(i1, j1), m2 = mx(i2, j2);
                    a_base = f.diffusion[0] * kx(i1, j1) * m2 + f.diffusion[1] * m1 * kx(i2, j2) +
                             f.reaction * m1 * m2;
                    m_base = m1 * m2;
                }
                cols[count] = l * nb + j2 * m + j1;
                vals[count] = f.scale * (a_base * my + m_base * ky);
                ++count;
            }
        }
    }
    return count;
}

}  // namespace fracctl::kernels::detail
