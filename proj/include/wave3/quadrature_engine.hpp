#pragma once

// Low-dimensional quadrature building blocks shared by every oracle: adaptive
// Gauss-Kronrod for smooth panels, tanh-sinh for algebraic endpoint
// singularities, sign-split integration of |f|, and half-period summation with
// series acceleration for infinite oscillatory tails.

#include <cstddef>
#include <array>
#include <functional>
#include <span>
#include <vector>

namespace wave3::quadrature {

struct QuadratureResult {
    double value = 0.0;
    double abs_error_estimate = 0.0;
    std::size_t evaluations = 0;

    QuadratureResult& operator+=(const QuadratureResult& o) {
        value += o.value;
        abs_error_estimate += o.abs_error_estimate;
        evaluations += o.evaluations;
        return *this;
    }
    friend QuadratureResult operator+(QuadratureResult a, const QuadratureResult& b) { return a += b; }
    /// Scales value and error; evaluation count is unchanged.
    QuadratureResult scaled(double c) const;
    double relative_error() const;
};

struct QuadratureOptions {
    double rel_tol = 1e-10;
    /// Bisection depth for adaptive Gauss-Kronrod.
    unsigned max_depth = 15;
};

using Integrand = std::function<double(double)>;

/// Adaptive 15-point Gauss-Kronrod on a finite interval.
QuadratureResult integrate_gk(const Integrand& f, double a, double b, const QuadratureOptions& opt = {});

/// Tanh-sinh on a finite interval. The integrand is never evaluated at the
/// endpoints, so integrable algebraic singularities there are fine.
QuadratureResult integrate_tanh_sinh(const Integrand& f, double a, double b, const QuadratureOptions& opt = {});

/// Integral of an algebraically decaying integrand over [a, inf), a > 0,
/// through the map r = a / u.
QuadratureResult integrate_power_tail(const Integrand& f, double a, const QuadratureOptions& opt = {});

/// Integral of |f| over [a, b]. Sign changes are located on a sample grid,
/// refined by bracketing, and each signed piece goes to tanh-sinh.
QuadratureResult integrate_abs(const Integrand& f, double a, double b, const QuadratureOptions& opt = {},
                               int samples = 48);

/// amplitude(r) * sin(omega * r + phase); amplitude eventually monotone -> 0.
struct OscillatoryTerm {
    Integrand amplitude;
    double omega = 1.0;
    double phase = 0.0;
};

/// Integral over [a, inf) of an oscillatory term, summed over half periods
/// with alternating-series acceleration.
QuadratureResult oscillatory_tail(const OscillatoryTerm& term, double a, const QuadratureOptions& opt = {});

struct SeriesLimit {
    double value = 0.0;
    double error = 0.0;
};

/// Limit of an alternating series from its partial sums by repeated averaging
/// of neighbouring partial sums (Euler / van Wijngaarden).
SeriesLimit accelerate_alternating(std::span<const double> partial_sums);

/// Radial integral over [lower, inf). On [lower, split] the full integrand is
/// used; beyond split the integrand must equal smooth_tail + sum of
/// oscillatory terms.
struct RadialIntegral {
    Integrand full;
    Integrand smooth_tail;  // may be empty
    std::vector<OscillatoryTerm> oscillatory;
    double max_frequency = 1.0;  // fastest oscillation of `full`; sets panel width
    double split = 50.0;
    double lower = 0.0;  // > 0 means no endpoint singularity to resolve
};

QuadratureResult integrate_radial(const RadialIntegral& spec, const QuadratureOptions& opt = {});

/// Tail split point: at least 50 and at least ten periods of the slowest term.
double radial_split(double slowest_frequency);

/// Average of exp(i xi.x) over directions of xi: sin(z)/z with z = |xi||x|.
/// Uses the Taylor form below 1e-4.
double spherical_mean_plane_wave(double z);

/// Nested-integral error bookkeeping: records the relative errors of inner
/// integrals evaluated while an outer integrand runs. Inner values many
/// orders of magnitude below the largest one cannot move the outer result,
/// so the reported worst case only looks at the top kRelevantDecades.
class InnerErrorTracker {
public:
    static constexpr int kRelevantDecades = 8;

    void record(const QuadratureResult& r);
    double worst_relative() const;
    std::size_t evaluations() const { return evals_; }

private:
    static constexpr int kBuckets = 640;  // decades -320 .. 319
    std::array<double, kBuckets> worst_{};
    int top_ = -1;
    std::size_t evals_ = 0;
};

/// Combine an outer result with the worst inner relative error.
QuadratureResult combine_nested(const QuadratureResult& outer, const InnerErrorTracker& inner);

}  // namespace wave3::quadrature
