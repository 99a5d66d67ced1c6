#include "wave3/wave_kernel.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include "wave3/quadrature_engine.hpp"

namespace wave3::kernel {

namespace {

constexpr double kTableMax = 256.0;
constexpr int kTablePerUnit = 32;

double sinc(double z) { return quadrature::spherical_mean_plane_wave(z); }

}  // namespace

double fourier_G(double t, double k) {
    k = std::abs(k);
    if (t * k < 1e-4) return t - t * t * t * k * k / 6.0;
    return std::sin(t * k) / k;
}

double fourier_G(double t, const Vec3& xi) { return fourier_G(t, xi.norm()); }

double sphere_average(double t, const Vec3& x, const ScalarField& v, const SphereRule& rule) {
    if (!(t > 0.0)) throw DomainError("sphere_average needs t > 0");
    return t * rule.mean([&](const Vec3& w) { return v(x + t * w); });
}

void InitialData::validate() const {
    if (!(gamma1 > 0.0 && gamma1 <= 1.0) || !(gamma2 > 0.0 && gamma2 <= 1.0))
        throw DomainError("Hoelder orders gamma1, gamma2 must lie in (0, 1]");
}

InitialData InitialData::zero() {
    return {{constant_field(0.0), constant_field(0.0)}, constant_field(0.0), 1.0, 1.0};
}

SmoothField gaussian_bump(double amplitude, double width, const Vec3& center) {
    const double s2 = width * width;
    SmoothField f;
    f.value = [=](const Vec3& x) {
        const Vec3 d = x - center;
        return amplitude * std::exp(-d.dot(d) / (2.0 * s2));
    };
    f.laplacian = [=](const Vec3& x) {
        const Vec3 d = x - center;
        const double r2 = d.dot(d);
        return amplitude * std::exp(-r2 / (2.0 * s2)) * (r2 / (s2 * s2) - 3.0 / s2);
    };
    return f;
}

ScalarField constant_field(double c) {
    return [c](const Vec3&) { return c; };
}

double unit_ball_integral(const ScalarField& g, const SphereRule& rule) {
    auto shell = [&](double rho) { return rho * rho * rule.mean([&](const Vec3& w) { return g(rho * w); }); };
    return 4.0 * kPi * boost::math::quadrature::gauss<double, 30>::integrate(shell, 0.0, 1.0);
}

double dGdt_convolve(double t, const Vec3& x, const InitialData& data, const SphereRule& rule) {
    if (!(t > 0.0)) throw DomainError("dGdt_convolve needs t > 0");
    const double mean = sphere_average(t, x, data.v0.value, rule) / t;
    const double ball = unit_ball_integral([&](const Vec3& y) { return data.v0.laplacian(x + t * y); }, rule);
    return mean + t * t / (4.0 * kPi) * ball;
}

double homogeneous_solution(double t, const Vec3& x, const InitialData& data, const SphereRule& rule) {
    if (t < 0.0) throw DomainError("homogeneous_solution needs t >= 0");
    if (t == 0.0) return data.v0.value(x);
    return dGdt_convolve(t, x, data, rule) + sphere_average(t, x, data.v0_tilde, rule);
}

Mollifier::Mollifier() {
    quadrature::QuadratureOptions opt;
    opt.rel_tol = 1e-13;
    mass_ = quadrature::integrate_tanh_sinh([this](double r) { return 4.0 * kPi * r * r * (*this)(r); }, 0.0, 1.0, opt)
                .value;
    if (std::abs(mass_ - 1.0) > 1e-10) throw NumericalError("mollifier mass differs from 1");
    step_ = 1.0 / kTablePerUnit;
    const auto n = static_cast<std::size_t>(kTableMax * kTablePerUnit) + 1;
    table_.resize(n);
    for (std::size_t i = 0; i < n; ++i) table_[i] = fourier_direct(step_ * static_cast<double>(i));
}

const Mollifier& Mollifier::standard() {
    static const Mollifier m;
    return m;
}

double Mollifier::operator()(double r) const {
    r = std::abs(r);
    if (r >= 1.0) return 0.0;
    return kNormalization * std::exp(-1.0 / (1.0 - r * r));
}

double Mollifier::fourier_direct(double k) const {
    quadrature::QuadratureOptions opt;
    opt.rel_tol = 1e-12;
    // Pieces span at most half a period; for large k the result is a tiny
    // difference, so a relative tolerance alone would never be met.
    opt.max_depth = 5;
    auto f = [&](double r) { return 4.0 * kPi * r * r * (*this)(r) * sinc(k * r); };
    const double pieces = std::max(1.0, std::ceil(k / kPi));
    double total = 0.0;
    for (double i = 0; i < pieces; ++i) total += quadrature::integrate_gk(f, i / pieces, (i + 1) / pieces, opt).value;
    return total;
}

double Mollifier::fourier(double k) const {
    k = std::abs(k);
    if (k >= kTableMax) return fourier_direct(k);
    // Cubic Lagrange interpolation on the uniform table.
    const double s = k / step_;
    auto i = static_cast<std::ptrdiff_t>(s);
    i = std::clamp<std::ptrdiff_t>(i - 1, 0, static_cast<std::ptrdiff_t>(table_.size()) - 4);
    const double u = s - static_cast<double>(i);
    const double* y = table_.data() + i;
    const double l0 = -(u - 1) * (u - 2) * (u - 3) / 6.0;
    const double l1 = u * (u - 2) * (u - 3) / 2.0;
    const double l2 = -u * (u - 1) * (u - 3) / 2.0;
    const double l3 = u * (u - 1) * (u - 2) / 6.0;
    return l0 * y[0] + l1 * y[1] + l2 * y[2] + l3 * y[3];
}

double psi_n(int n, double t, double r) {
    const double s = n / t;
    return s * s * s * Mollifier::standard()(s * r);
}

double mollified_G_radial(int n, double t, double rho) {
    if (n < 1) throw DomainError("mollification index must be >= 1");
    if (!(t > 0.0)) throw DomainError("mollified_G needs t > 0");
    rho = std::abs(rho);
    const double eps = t / n;
    if (rho >= t + eps) return 0.0;
    if (rho < 1e-9 * t) return t * psi_n(n, t, t);
    const double lo = std::abs(rho - t);
    const double hi = std::min(rho + t, eps);
    if (lo >= hi) return 0.0;
    quadrature::QuadratureOptions opt;
    opt.rel_tol = 1e-12;
    auto f = [&](double q) { return psi_n(n, t, q) * q; };
    return quadrature::integrate_tanh_sinh(f, lo, hi, opt).value / (2.0 * rho);
}

double mollified_G(int n, double t, const Vec3& x) { return mollified_G_radial(n, t, x.norm()); }

double fourier_Gn(int n, double t, double k) {
    if (n < 1) throw DomainError("mollification index must be >= 1");
    return Mollifier::standard().fourier(t * k / n) * fourier_G(t, k);
}

KernelEvaluator::KernelEvaluator(double horizon, std::optional<int> n) : horizon_(horizon), n_(n) {
    if (!(horizon > 0.0)) throw DomainError("kernel horizon must be positive");
    if (n_ && *n_ < 1) throw DomainError("mollification index must be >= 1");
    if (n_) (void)Mollifier::standard();
}

void KernelEvaluator::check_time(double t) const {
    if (!(t > 0.0 && t <= horizon_ * (1.0 + 1e-12))) throw DomainError("time outside (0, T]");
}

double KernelEvaluator::fourier(double t, double k) const {
    if (t < 0.0 || t > horizon_ * (1.0 + 1e-12)) throw DomainError("time outside [0, T]");
    return n_ ? fourier_Gn(*n_, t, k) : fourier_G(t, k);
}

double KernelEvaluator::pointwise(double t, const Vec3& x) const {
    check_time(t);
    if (!n_) throw UnsupportedError("G(t) is a surface measure; use sphere_average");
    return mollified_G(*n_, t, x);
}

double KernelEvaluator::support_radius(double t) const { return n_ ? t * (1.0 + 1.0 / *n_) : t; }

}  // namespace wave3::kernel
