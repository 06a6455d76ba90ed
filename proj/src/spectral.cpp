#include "fracctl/spectral.hpp"

#include <cmath>
#include <numbers>

#include "fracctl/errors.hpp"

namespace fracctl::spectral {

namespace {

void check_mode(int k) {
    if (k < 1) throw ConfigurationError("EigenIndex: mode numbers must be >= 1");
}

void check_power(double s, bool allow_one) {
    if (!(s > 0.0) || s > 1.0 || (!allow_one && s == 1.0))
        throw ConfigurationError("fractional power s out of range: " + std::to_string(s));
}

}  // namespace

EigenIndex::EigenIndex(int k) : modes_{k, 0}, dim_(1) { check_mode(k); }

EigenIndex::EigenIndex(int k, int l) : modes_{k, l}, dim_(2) {
    check_mode(k);
    check_mode(l);
}

double eigenvalue(const EigenIndex& idx) {
    constexpr double pi2 = std::numbers::pi * std::numbers::pi;
    double sum = 0.0;
    for (int i = 0; i < idx.dim(); ++i) sum += double(idx[i]) * idx[i];
    return pi2 * sum;
}

double eigenfunction(const EigenIndex& idx, const BasePoint& x) {
    double v = 1.0;
    for (int i = 0; i < idx.dim(); ++i)
        v *= std::numbers::sqrt2 * std::sin(idx[i] * std::numbers::pi * x[i]);
    return v;
}

Eigenpair eigenpair(const EigenIndex& idx, int n) {
    if (n != 1 && n != 2) throw ConfigurationError("eigenpair: only the unit interval or square is supported");
    if (idx.dim() != n) throw ConfigurationError("eigenpair: index dimension does not match n");
    return {eigenvalue(idx), [idx](const BasePoint& x) { return eigenfunction(idx, x); }};
}

SpectralFunction::SpectralFunction(int dim, double shift) : dim_(dim), shift_(shift) {
    if (dim != 1 && dim != 2) throw ConfigurationError("SpectralFunction: dimension must be 1 or 2");
    if (shift < 0.0) throw ConfigurationError("SpectralFunction: reaction coefficient must be >= 0");
}

void SpectralFunction::set(const EigenIndex& idx, double amplitude) {
    if (idx.dim() != dim_) throw ConfigurationError("SpectralFunction: index dimension mismatch");
    coeffs_[idx] = amplitude;
}

double SpectralFunction::amplitude(const EigenIndex& idx) const {
    auto it = coeffs_.find(idx);
    return it == coeffs_.end() ? 0.0 : it->second;
}

double SpectralFunction::lambda(const EigenIndex& idx) const { return eigenvalue(idx) + shift_; }

double SpectralFunction::operator()(const BasePoint& x) const {
    double v = 0.0;
    for (const auto& [idx, w] : coeffs_) v += w * eigenfunction(idx, x);
    return v;
}

SpectralFunction fractional_apply(const SpectralFunction& w, double s) {
    check_power(s, true);
    SpectralFunction out(w.dim(), w.shift());
    for (const auto& [idx, a] : w.coefficients()) out.set(idx, a * std::pow(w.lambda(idx), s));
    return out;
}

SpectralFunction fractional_solve(const SpectralFunction& f, double s) {
    check_power(s, true);
    SpectralFunction out(f.dim(), f.shift());
    for (const auto& [idx, a] : f.coefficients()) out.set(idx, a / std::pow(f.lambda(idx), s));
    return out;
}

double hs_norm(const SpectralFunction& w, double s) {
    if (s < 0.0 || s > 1.0) throw ConfigurationError("hs_norm: s must lie in [0,1]");
    double sum = 0.0;
    for (const auto& [idx, a] : w.coefficients()) sum += std::pow(w.lambda(idx), s) * a * a;
    return std::sqrt(sum);
}

FractionalConstants FractionalConstants::of(double s) {
    if (!(s > 0.0 && s < 1.0)) throw ConfigurationError("fractional power s must lie in (0,1)");
    const double alpha = 1.0 - 2.0 * s;
    return {s, alpha, std::pow(2.0, alpha) * std::tgamma(1.0 - s) / std::tgamma(s),
            std::pow(2.0, 1.0 - s) / std::tgamma(s)};
}

double bessel_k(double nu, double x) {
    if (!(x > 0.0)) throw DomainError("bessel_k: argument must be positive");
    // K_nu = K_{-nu}; the standard library requires nu >= 0.
    return std::cyl_bessel_k(std::abs(nu), x);
}

double extension_profile(double s, double lambda, double y) {
    check_power(s, false);
    if (!(lambda > 0.0)) throw ConfigurationError("extension_profile: lambda must be positive");
    if (y < 0.0) throw ConfigurationError("extension_profile: y must be nonnegative");
    if (y == 0.0) return 1.0;
    const double z = std::sqrt(lambda) * y;
    if (s == 0.5) return std::exp(-z);
    // K_s(z) underflows well past this point; the profile is below 1e-300 there.
    if (z > 700.0) return 0.0;
    const double cs = std::pow(2.0, 1.0 - s) / std::tgamma(s);
    return cs * std::pow(z, s) * bessel_k(s, z);
}

double spectral_extension(const SpectralFunction& trace, double s, const BasePoint& x, double y) {
    double v = 0.0;
    for (const auto& [idx, w] : trace.coefficients())
        v += w * eigenfunction(idx, x) * extension_profile(s, trace.lambda(idx), y);
    return v;
}

}  // namespace fracctl::spectral
