#include "wave3/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wave3/quadrature_engine.hpp"

namespace wave3::covariance {

namespace {

void check_beta(double beta) {
    if (!(beta > 0.0 && beta < 2.0)) throw DomainError("beta must lie in (0, 2)");
}

double tabulated_value(const Tabulated& t, double r) {
    if (r <= t.radii.front()) return t.values.front();
    if (r >= t.radii.back()) return t.values.back();
    const auto it = std::upper_bound(t.radii.begin(), t.radii.end(), r);
    const auto i = static_cast<std::size_t>(it - t.radii.begin());
    const double w = (r - t.radii[i - 1]) / (t.radii[i] - t.radii[i - 1]);
    return (1.0 - w) * t.values[i - 1] + w * t.values[i];
}

// rho for phi = exp(-sigma^2 |x|^2 / 2): (2 pi)^{-6} (F phi * F k_beta)(k),
// reduced to one radial integral over eta = |eta|.
double gaussian_envelope_density(double beta, double sigma, double k) {
    const double s2 = sigma * sigma;
    const double pref = std::pow(2.0 * kPi, -6.0) * riesz_gamma(3.0 - beta) * std::pow(2.0 * kPi / s2, 1.5) * 2.0 *
                        kPi * s2 / k;
    auto integrand = [&](double eta) {
        const double g = std::exp(-(k - eta) * (k - eta) / (2.0 * s2)) * -std::expm1(-2.0 * k * eta / s2);
        return std::pow(eta, beta - 2.0) * g;
    };
    quadrature::QuadratureOptions opt;
    opt.rel_tol = 1e-11;
    std::vector<double> cuts{0.0};
    for (double c : {k - 10.0 * sigma, k, k + 10.0 * sigma, k + 40.0 * sigma}) {
        if (c > cuts.back()) cuts.push_back(c);
    }
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        total += quadrature::integrate_tanh_sinh(integrand, cuts[i], cuts[i + 1], opt).value;
    }
    return pref * total;
}

}  // namespace

CovarianceSpec::CovarianceSpec(double beta, double delta, Envelope phi) : beta_(beta), delta_(delta), phi_(std::move(phi)) {
    check_beta(beta);
    if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("delta must lie in (0, 1]");
    if (const auto* g = std::get_if<GaussianEnvelope>(&phi_)) {
        if (!(g->sigma > 0.0)) throw DomainError("GaussianEnvelope sigma must be positive");
    }
    if (const auto* t = std::get_if<Tabulated>(&phi_)) {
        if (t->radii.size() < 2 || t->radii.size() != t->values.size())
            throw DomainError("Tabulated envelope needs at least two (radius, value) samples");
        if (!std::is_sorted(t->radii.begin(), t->radii.end()) || t->radii.front() < 0.0)
            throw DomainError("Tabulated radii must be nonnegative and increasing");
        for (double v : t->values) {
            if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("Tabulated envelope must be positive and bounded");
        }
    }
}

double CovarianceSpec::envelope(double r) const {
    return std::visit(
        [r](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ConstantOne>) {
                return 1.0;
            } else if constexpr (std::is_same_v<T, GaussianEnvelope>) {
                return std::exp(-0.5 * p.sigma * p.sigma * r * r);
            } else {
                return tabulated_value(p, r);
            }
        },
        phi_);
}

std::string CovarianceSpec::describe() const {
    std::ostringstream os;
    std::visit(
        [&os](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ConstantOne>) {
                os << "constant_one";
            } else if constexpr (std::is_same_v<T, GaussianEnvelope>) {
                os << "gaussian(sigma=" << p.sigma << ")";
            } else {
                os << "tabulated(n=" << p.radii.size() << ")";
            }
        },
        phi_);
    return os.str();
}

double riesz_kernel(double beta, const Vec3& x) {
    check_beta(beta);
    const double r = x.norm();
    if (!(r >= kSingularityGuard)) throw DomainError("riesz_kernel evaluated at the singularity");
    return std::pow(r, -beta);
}

double covariance_radial(const CovarianceSpec& spec, double r) {
    if (!(r >= kSingularityGuard)) throw DomainError("covariance evaluated at the singularity");
    return spec.envelope(r) * std::pow(r, -spec.beta());
}

double covariance_f(const CovarianceSpec& spec, const Vec3& x) { return covariance_radial(spec, x.norm()); }

double riesz_gamma(double a) {
    if (!(a > 0.0 && a < 3.0)) throw DomainError("riesz_gamma requires 0 < a < 3");
    return std::pow(kPi, 1.5) * std::exp2(a) * std::tgamma(0.5 * a) / std::tgamma(0.5 * (3.0 - a));
}

double riesz_density_constant(double beta) {
    check_beta(beta);
    return riesz_gamma(3.0 - beta) / std::pow(2.0 * kPi, 3.0);
}

double spectral_density_radial(const CovarianceSpec& spec, double k) {
    if (!(k >= kSingularityGuard)) throw DomainError("spectral density evaluated at xi = 0");
    return std::visit(
        [&](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ConstantOne>) {
                return riesz_density_constant(spec.beta()) * std::pow(k, spec.beta() - 3.0);
            } else if constexpr (std::is_same_v<T, GaussianEnvelope>) {
                return gaussian_envelope_density(spec.beta(), p.sigma, k);
            } else {
                throw UnsupportedError("spectral density is not available for a tabulated envelope");
            }
        },
        spec.phi());
}

double spectral_density(const CovarianceSpec& spec, const Vec3& xi) { return spectral_density_radial(spec, xi.norm()); }

double increment_D(const KernelFn& f, const Vec3& u, const Vec3& x) { return f(u + x) - f(u); }

double increment_D2(const KernelFn& f, const Vec3& u, const Vec3& x) { return f(u - x) - 2.0 * f(u) + f(u + x); }

double increment_D2bar(const KernelFn& f, const Vec3& u, const Vec3& x, const Vec3& y) {
    return f(u + x + y) - f(u + x) - f(u + y) + f(u);
}

double riesz_semigroup_constant(double a, double b) {
    if (!(a > 0.0 && b > 0.0 && a + b < 3.0)) throw DomainError("semigroup constant needs a, b > 0 and a + b < 3");
    return riesz_gamma(a) * riesz_gamma(b) / riesz_gamma(a + b);
}

}  // namespace wave3::covariance
