#pragma once

// The 3-D wave propagator G(t) = sigma_t / (4 pi t), its Fourier transform
// sin(t|xi|)/|xi|, the mollified kernels G_n and the operators acting on the
// initial data.

#include <optional>
#include <vector>

#include "wave3/common.hpp"
#include "wave3/sphere_rules.hpp"

namespace wave3::kernel {

/// sin(t k)/k with the Taylor form t - t^3 k^2 / 6 for t k < 1e-4.
double fourier_G(double t, double k);
double fourier_G(double t, const Vec3& xi);

/// (G(t) * v)(x) = t * (mean of v over the sphere of radius t about x).
double sphere_average(double t, const Vec3& x, const ScalarField& v,
                      const SphereRule& rule = SphereRule::default_rule());

/// Twice-differentiable field with its Laplacian.
struct SmoothField {
    ScalarField value;
    ScalarField laplacian;
};

struct InitialData {
    SmoothField v0;
    ScalarField v0_tilde;
    double gamma1 = 1.0;
    double gamma2 = 1.0;

    /// Throws DomainError when a Hoelder order is outside (0, 1].
    void validate() const;
    static InitialData zero();
};

/// amplitude * exp(-|x - center|^2 / (2 width^2))
SmoothField gaussian_bump(double amplitude, double width, const Vec3& center = {});
ScalarField constant_field(double c);

/// Integral of g over the unit ball, radial Gauss-Legendre times the sphere rule.
double unit_ball_integral(const ScalarField& g, const SphereRule& rule = SphereRule::default_rule());

/// d/dt (G(t) * v0)(x) = M_t v0(x) + (t^2 / 4 pi) int_{|y|<1} Lap v0(x + t y) dy
/// where M_t is the sphere mean. The t^2 factor comes from the divergence
/// theorem on the ball of radius t.
double dGdt_convolve(double t, const Vec3& x, const InitialData& data,
                     const SphereRule& rule = SphereRule::default_rule());

/// d/dt(G(t) * v0) + G(t) * v0_tilde; equals v0(x) at t = 0.
double homogeneous_solution(double t, const Vec3& x, const InitialData& data,
                            const SphereRule& rule = SphereRule::default_rule());

/// psi(x) = c exp(-1/(1 - |x|^2)) on the unit ball with unit integral.
class Mollifier {
public:
    static const Mollifier& standard();

    /// c, fixed by unit mass.
    static constexpr double kNormalization = 2.26711673960832645842;

    double operator()(double r) const;
    /// Quadrature of the mass, used as a construction check.
    double mass() const { return mass_; }
    /// (F psi)(k), spline table on [0, 256], direct quadrature beyond.
    double fourier(double k) const;
    /// Direct quadrature of (F psi)(k).
    double fourier_direct(double k) const;

private:
    Mollifier();
    double mass_ = 0.0;
    double step_ = 0.0;
    std::vector<double> table_;
};

/// psi_n(t, r) = (n/t)^3 psi(n r / t)
double psi_n(int n, double t, double r);

/// G_n(t, x) = (psi_n(t, .) * G(t))(x) via the exact radial reduction
/// (1 / (2|x|)) int_{||x|-t|}^{|x|+t} psi_n(t, q) q dq.
double mollified_G(int n, double t, const Vec3& x);
double mollified_G_radial(int n, double t, double rho);

/// (F G_n(t))(k) = (F psi)(t k / n) sin(t k) / k
double fourier_Gn(int n, double t, double k);

class KernelEvaluator {
public:
    /// n empty means the unmollified kernel G. Checks the mollifier mass.
    KernelEvaluator(double horizon, std::optional<int> n = std::nullopt);

    double horizon() const { return horizon_; }
    std::optional<int> n() const { return n_; }

    double fourier(double t, double k) const;
    /// Pointwise kernel; only defined for the mollified case.
    double pointwise(double t, const Vec3& x) const;
    /// t (1 + 1/n), or t for G.
    double support_radius(double t) const;

private:
    void check_time(double t) const;
    double horizon_;
    std::optional<int> n_;
};

}  // namespace wave3::kernel
