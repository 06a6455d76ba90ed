#pragma once

// Exact reference machinery on the unit interval / unit square: Dirichlet
// eigenpairs, fractional powers acting on finite eigen-expansions, and the
// alpha-harmonic extension profiles built from modified Bessel functions.

#include <array>
#include <compare>
#include <functional>
#include <map>

namespace fracctl {

/// A point of the base domain. For n = 1 only the first component is read.
using BasePoint = std::array<double, 2>;
using BaseFunction = std::function<double(const BasePoint&)>;

namespace spectral {

/// Multi-index (k) or (k,l) of a Dirichlet eigenpair; all components >= 1.
class EigenIndex {
public:
    explicit EigenIndex(int k);
    EigenIndex(int k, int l);

    int dim() const { return dim_; }
    int operator[](int i) const { return modes_[i]; }

    auto operator<=>(const EigenIndex&) const = default;

private:
    std::array<int, 2> modes_{1, 0};
    int dim_ = 1;
};

/// Eigenvalue pi^2 (k^2 + l^2) of the Dirichlet Laplacian on (0,1)^n.
double eigenvalue(const EigenIndex& idx);

/// L2-orthonormal eigenfunction 2^{n/2} prod sin(k pi x_i).
double eigenfunction(const EigenIndex& idx, const BasePoint& x);

struct Eigenpair {
    double lambda;
    BaseFunction phi;
};

/// Throws ConfigurationError unless n in {1,2} matches the index.
Eigenpair eigenpair(const EigenIndex& idx, int n);

/// Finite expansion sum_k w_k phi_k in the orthonormal Dirichlet basis of
/// L = -Laplace + c, c >= 0 constant (eigenvalues shifted by c).
class SpectralFunction {
public:
    explicit SpectralFunction(int dim, double shift = 0.0);

    int dim() const { return dim_; }
    double shift() const { return shift_; }

    void set(const EigenIndex& idx, double amplitude);
    double amplitude(const EigenIndex& idx) const;
    const std::map<EigenIndex, double>& coefficients() const { return coeffs_; }

    /// Eigenvalue of L for a mode, lambda_k + c.
    double lambda(const EigenIndex& idx) const;

    double operator()(const BasePoint& x) const;

private:
    int dim_;
    double shift_;
    std::map<EigenIndex, double> coeffs_;
};

/// L^s w: amplitudes scaled by lambda^s. Accepts s in (0,1].
SpectralFunction fractional_apply(const SpectralFunction& w, double s);

/// Solves L^s u = f mode by mode.
SpectralFunction fractional_solve(const SpectralFunction& f, double s);

/// (sum lambda^s w_k^2)^{1/2}; s = 0 is the L2 norm.
double hs_norm(const SpectralFunction& w, double s);

struct FractionalConstants {
    double s;
    double alpha;  ///< 1 - 2s
    double d_s;    ///< 2^alpha Gamma(1-s)/Gamma(s)
    double c_s;    ///< 2^{1-s}/Gamma(s)

    static FractionalConstants of(double s);
};

/// Modified Bessel function of the second kind K_nu(x), x > 0.
double bessel_k(double nu, double x);

/// psi(y) = c_s (sqrt(lambda) y)^s K_s(sqrt(lambda) y), psi(0) = 1.
double extension_profile(double s, double lambda, double y);

/// Exact extension U(x', y) = sum u_k phi_k(x') psi_k(y) of the trace data.
double spectral_extension(const SpectralFunction& trace, double s, const BasePoint& x, double y);

}  // namespace spectral
}  // namespace fracctl
