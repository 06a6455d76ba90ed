#pragma once

// Independent reference computations used only by the tests.

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "fracctl/mesh.hpp"
#include "fracctl/sparse.hpp"

namespace oracle {

// K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt by the trapezoid rule; the
// integrand is even and decays doubly exponentially, so the rule converges
// geometrically.
inline double bessel_k_integral(double nu, double x, double h = 1e-3) {
    double sum = 0.5 * std::exp(-x);
    for (int k = 1;; ++k) {
        const double t = k * h;
        const double term = std::exp(-x * std::cosh(t)) * std::cosh(nu * t);
        sum += term;
        if (x * std::cosh(t) > 745.0 + nu * t) break;
    }
    return h * sum;
}

// Decaying solution of psi'' + (alpha/y) psi' - lambda psi = 0 normalized to psi(0) = 1,
// integrated with RK4 in t = log y from large y back towards 0:
//   psi_tt - 2 s psi_t - lambda e^{2t} psi = 0.
// Near y = 0, psi = A + B y^{2s} + O(y^2), so A = psi - psi_t / (2s).
struct PsiShoot {
    double s, lambda;
    std::vector<double> ts, psi;

    PsiShoot(double s_, double lambda_, double z_far = 40.0, double y_near = 1e-9, int steps = 200000)
        : s(s_), lambda(lambda_) {
        const double t_far = std::log(z_far / std::sqrt(lambda));
        const double t_near = std::log(y_near);
        const double dt = (t_near - t_far) / steps;
        // leading asymptotics z^s K_s(z) ~ z^{s-1/2} e^{-z}: d/dt log = (s - 1/2) - z
        const double z0 = z_far;
        double p = 1.0, q = (s - 0.5) - z0;
        auto rhs = [&](double t, double pv, double qv) {
            return std::array<double, 2>{qv, 2.0 * s * qv + lambda * std::exp(2.0 * t) * pv};
        };
        double t = t_far;
        ts.push_back(t);
        psi.push_back(p);
        for (int i = 0; i < steps; ++i) {
            const auto k1 = rhs(t, p, q);
            const auto k2 = rhs(t + 0.5 * dt, p + 0.5 * dt * k1[0], q + 0.5 * dt * k1[1]);
            const auto k3 = rhs(t + 0.5 * dt, p + 0.5 * dt * k2[0], q + 0.5 * dt * k2[1]);
            const auto k4 = rhs(t + dt, p + dt * k3[0], q + dt * k3[1]);
            p += dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
            q += dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
            t += dt;
            ts.push_back(t);
            psi.push_back(p);
        }
        const double a = p - q / (2.0 * s);
        for (double& v : psi) v /= a;
    }

    // value at y by locating the nearest stored step (steps are fine enough for
    // linear interpolation in t to stay below 1e-9 relative)
    double operator()(double y) const {
        const double t = std::log(y);
        const double dt = ts[1] - ts[0];
        const double f = (t - ts[0]) / dt;
        const int i = static_cast<int>(std::floor(f));
        const double w = f - i;
        return (1.0 - w) * psi[i] + w * psi[i + 1];
    }
};

// tanh-sinh quadrature on [a,b]; robust for integrable endpoint singularities.
inline double tanh_sinh(const std::function<double(double)>& f, double a, double b, double h = 1.0 / 64) {
    const double half = 0.5 * (b - a);
    double sum = 0.0;
    // wide range: for y^{-0.9} the omitted end mass decays only like x_min^{0.1}
    for (int k = -int(6.0 / h); k <= int(6.0 / h); ++k) {
        const double t = k * h;
        const double u = 0.5 * std::numbers::pi * std::sinh(t);
        const double c = std::cosh(u);
        const double w = half * 0.5 * std::numbers::pi * std::cosh(t) / (c * c);
        // distances to the endpoints without cancellation
        const double e = std::exp(-2.0 * std::abs(u));
        const double near = 2.0 * e / (1.0 + e);  // 1 - tanh|u|
        const double x = u < 0 ? a + half * near : b - half * near;
        if (x <= a || x >= b) continue;
        sum += w * f(x);
    }
    return h * sum;
}

// Unweighted Q1 stiffness on the cylinder over the free nodes of a tensor mesh,
// built from full-dimensional element matrices evaluated by 2-point Gauss in every
// direction on explicit shape-function gradients.
inline fracctl::CsrMatrix unweighted_q1_stiffness(const fracctl::mesh::TensorMesh& m) {
    const auto& base = m.base();
    const int n = base.dim();
    const int d = n + 1;
    const int corners = 1 << d;
    const double g[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
    const auto& yn = m.extended().nodes();
    const int nb = base.node_count();
    std::vector<fracctl::Triplet> trip;
    for (int layer = 0; layer < m.layers(); ++layer)
        for (int cell = 0; cell < base.cell_count(); ++cell) {
            const auto bc = base.cell_nodes(cell);
            std::array<double, 3> hs{base.h(), base.h(), base.h()};
            hs[n] = yn[layer + 1] - yn[layer];
            std::vector<int> glob(corners);
            std::vector<std::array<int, 3>> bits(corners);
            for (int c = 0; c < corners; ++c) {
                std::array<int, 3> b{};
                for (int k = 0; k < d; ++k) b[k] = (c >> k) & 1;
                bits[c] = b;
                int bn = n == 1 ? bc[b[0]] : bc[b[0] + 2 * b[1]];
                glob[c] = m.free_index((layer + b[n]) * nb + bn);
            }
            std::vector<double> ke(corners * corners, 0.0);
            for (int q = 0; q < corners; ++q) {
                std::array<double, 3> t{};
                for (int k = 0; k < d; ++k) t[k] = g[(q >> k) & 1];
                double w = 1.0;
                for (int k = 0; k < d; ++k) w *= 0.5 * hs[k];
                std::vector<std::array<double, 3>> grad(corners);
                for (int c = 0; c < corners; ++c)
                    for (int k = 0; k < d; ++k) {
                        double v = 1.0;
                        for (int j = 0; j < d; ++j) {
                            const double phi = bits[c][j] ? t[j] : 1.0 - t[j];
                            const double dphi = (bits[c][j] ? 1.0 : -1.0) / hs[j];
                            v *= j == k ? dphi : phi;
                        }
                        grad[c][k] = v;
                    }
                for (int a = 0; a < corners; ++a)
                    for (int b = 0; b < corners; ++b) {
                        double dotg = 0.0;
                        for (int k = 0; k < d; ++k) dotg += grad[a][k] * grad[b][k];
                        ke[a * corners + b] += w * dotg;
                    }
            }
            for (int a = 0; a < corners; ++a)
                for (int b = 0; b < corners; ++b)
                    if (glob[a] >= 0 && glob[b] >= 0) trip.push_back({glob[a], glob[b], ke[a * corners + b]});
        }
    return fracctl::csr_from_triplets(m.free_count(), std::move(trip));
}

}  // namespace oracle
