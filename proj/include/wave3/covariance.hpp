#pragma once

// Noise correlation f = phi * k_beta, its spectral density, and the increment
// operators used by the integral bounds.
//
// Fourier convention: (F g)(xi) = int g(x) exp(-i xi.x) dx. The spectral
// density rho is normalised so that f(x) = int rho(xi) exp(i xi.x) dxi, i.e.
// rho = (2 pi)^{-3} F f. For phi = 1 this gives rho(xi) = c(beta) |xi|^{beta-3}
// with c(beta) = gamma(3 - beta) / (2 pi)^3 and gamma(a) the Riesz constant
// below (F |x|^{a-3} = gamma(a) |xi|^{-a}).

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "wave3/common.hpp"

namespace wave3::covariance {

struct ConstantOne {};

/// phi(x) = exp(-sigma^2 |x|^2 / 2)
struct GaussianEnvelope {
    double sigma = 1.0;
};

/// phi sampled at increasing radii, linearly interpolated, held constant
/// past the last sample.
struct Tabulated {
    std::vector<double> radii;
    std::vector<double> values;
};

using Envelope = std::variant<ConstantOne, GaussianEnvelope, Tabulated>;

class CovarianceSpec {
public:
    CovarianceSpec(double beta, double delta, Envelope phi = ConstantOne{});

    double beta() const { return beta_; }
    double delta() const { return delta_; }
    const Envelope& phi() const { return phi_; }
    bool is_riesz() const { return std::holds_alternative<ConstantOne>(phi_); }

    /// phi at radius r >= 0.
    double envelope(double r) const;
    /// "constant_one", "gaussian(sigma=...)" or "tabulated(n=...)".
    std::string describe() const;

private:
    double beta_;
    double delta_;
    Envelope phi_;
};

/// Base point and offset for the increment operators.
struct Increment1 {
    Vec3 u;
    Vec3 x;
};

using KernelFn = std::function<double(const Vec3&)>;

/// |x|^{-beta}; throws DomainError for |x| < kSingularityGuard.
double riesz_kernel(double beta, const Vec3& x);

/// phi(x) |x|^{-beta}.
double covariance_f(const CovarianceSpec& spec, const Vec3& x);
double covariance_radial(const CovarianceSpec& spec, double r);

/// gamma(a) = pi^{3/2} 2^a Gamma(a/2) / Gamma((3-a)/2), 0 < a < 3.
double riesz_gamma(double a);

/// c(beta) = gamma(3 - beta) / (2 pi)^3.
double riesz_density_constant(double beta);

double spectral_density(const CovarianceSpec& spec, const Vec3& xi);
/// Radial profile of the spectral density, k = |xi| > 0.
double spectral_density_radial(const CovarianceSpec& spec, double k);

double increment_D(const KernelFn& f, const Vec3& u, const Vec3& x);
double increment_D2(const KernelFn& f, const Vec3& u, const Vec3& x);
double increment_D2bar(const KernelFn& f, const Vec3& u, const Vec3& x, const Vec3& y);
inline double increment_D(const KernelFn& f, const Increment1& p) { return increment_D(f, p.u, p.x); }
inline double increment_D2(const KernelFn& f, const Increment1& p) { return increment_D2(f, p.u, p.x); }

/// C(a, b) with int |x-z|^{a-3} |z-y|^{b-3} dz = C(a, b) |x-y|^{a+b-3};
/// requires a, b > 0 and a + b < 3.
double riesz_semigroup_constant(double a, double b);

}  // namespace wave3::covariance
