#pragma once

// Exact second-order structure of the Gaussian solution
//   u(t, x) = int_0^t int G(t - s, x - y) W(ds, dy),   f = |x|^{-beta},
// with zero initial data. Continuum quantities are 1-D radial integrals of
// the spectral density c(beta) |xi|^{beta-3}; lattice quantities are finite
// mode sums with the same density, used as oracles for the samplers.

#include <cstdint>
#include <span>
#include <vector>

#include "wave3/lattice.hpp"
#include "wave3/power_fit.hpp"
#include "wave3/quadrature_engine.hpp"

namespace wave3::gaussian {

using quadrature::QuadratureOptions;
using quadrature::QuadratureResult;

struct GaussianCaseParams {
    double beta = 1.0;
    /// Observation time for spatial increments.
    double t = 1.0;
    /// Lower time bound for time increments.
    double t0 = 0.5;
    /// Horizon T; every time used must lie in (0, T].
    double horizon = 1.0;

    void validate() const;
};

/// int_0^t sin^2(s k) / k^2 ds = t / (2k^2) - sin(2tk) / (4k^3), with a
/// series below k t = 1e-3.
double mode_variance(double k, double t);

/// int_0^{min(t1,t2)} sin((t1 - s) k) sin((t2 - s) k) / k^2 ds.
double mode_time_covariance(double k, double t1, double t2);

/// E|u(t, x) - u(t, 0)|^2 at |x| = x_abs and t = params.t.
QuadratureResult spatial_increment_variance(const GaussianCaseParams& params, double x_abs,
                                            const QuadratureOptions& opt = {});

struct TimeIncrementParts {
    /// New noise on (t, t_bar]; equals c(beta) * weighted_energy(beta, t_bar - t).
    QuadratureResult t1;
    /// Change of the response to the noise on [0, t].
    QuadratureResult t2;
    QuadratureResult total;
};

/// E|u(t_bar, x) - u(t, x)|^2 split into its two independent parts.
TimeIncrementParts time_increment_parts(const GaussianCaseParams& params, double t, double t_bar,
                                        const QuadratureOptions& opt = {});
QuadratureResult time_increment_variance(const GaussianCaseParams& params, double t, double t_bar,
                                         const QuadratureOptions& opt = {});

/// Spatial increment variance split by frequency band:
/// r1 over |xi| <= 1, r3 over 1 <= |xi| <= 1/|x|, r2 over |xi| >= 1/|x|.
/// Requires 0 < x_abs < 1.
struct FrequencySplit {
    QuadratureResult r1;
    QuadratureResult r2;
    QuadratureResult r3;
    QuadratureResult full;
};
FrequencySplit spatial_frequency_split(const GaussianCaseParams& params, double x_abs,
                                       const QuadratureOptions& opt = {});

/// Local log-log slopes of the time increment variance between consecutive
/// gaps, and the largest gap below which every local slope stays within
/// `tolerance` of 2 - beta (0 when none does).
struct OnsetReport {
    std::vector<double> gaps;
    std::vector<double> values;
    std::vector<double> local_slopes;
    double onset_gap = 0.0;
};
OnsetReport time_exponent_onset(const GaussianCaseParams& params, std::span<const double> gaps, double tolerance,
                                const QuadratureOptions& opt = {});

/// Fitted log-log slope of a curve over the given abscissae.
struct CurveFit {
    std::vector<double> abscissa;
    std::vector<QuadratureResult> values;
    PowerFit fit;
};
CurveFit spatial_curve(const GaussianCaseParams& params, std::span<const double> x_abs,
                       const QuadratureOptions& opt = {}, unsigned threads = 1);
CurveFit time_curve(const GaussianCaseParams& params, std::span<const double> gaps, bool t1_only = false,
                    const QuadratureOptions& opt = {}, unsigned threads = 1);

// Lattice-truncated counterparts. Sums run over the retained band without
// the zero mode, with weights q_k = c(beta) |k|^{beta-3} (2 pi / L)^3.

/// Var u(t, x) on the lattice (independent of x).
double lattice_point_variance(const GaussianCaseParams& params, const simulator::SpectralLattice& lattice, double t);
/// E|u(t, x + lag) - u(t, x)|^2 on the lattice.
double lattice_spatial_variance(const GaussianCaseParams& params, const simulator::SpectralLattice& lattice, double t,
                                const Vec3& lag);
/// E|u(t_bar, x) - u(t, x)|^2 on the lattice.
double lattice_time_variance(const GaussianCaseParams& params, const simulator::SpectralLattice& lattice, double t,
                             double t_bar);

/// Samples of the lattice Gaussian solution at the requested times, exact in
/// distribution: each mode's covariance over the time list is factorised
/// (Cholesky, cached per |k|^2) and applied to counter-based normals keyed by
/// (seed, replica, mode, time slot).
struct GaussianSamples {
    std::vector<double> times;
    std::vector<simulator::RealGrid> fields;
    std::uint64_t seed = 0;
    std::uint32_t replica = 0;
    /// Largest diagonal jitter added to a per-mode covariance (0 if none).
    double max_jitter = 0.0;
};

/// Keeps a reference to the lattice, which must outlive the sampler.
class GaussianSampler {
public:
    GaussianSampler(const GaussianCaseParams& params, const simulator::SpectralLattice& lattice,
                    std::vector<double> times);

    GaussianSamples sample(std::uint64_t seed, std::uint32_t replica) const;
    /// Mode coefficients only (for tests and spectral post-processing).
    std::vector<simulator::ModeArray> sample_modes(std::uint64_t seed, std::uint32_t replica) const;

    const std::vector<double>& times() const { return times_; }
    double max_jitter() const { return max_jitter_; }

private:
    GaussianCaseParams params_;
    const simulator::SpectralLattice& lattice_;
    std::vector<double> times_;
    // Lower-triangular factors (row-major, m x m) per shell index, and the
    // shell of each mode (-1 when the mode carries no noise).
    std::vector<std::vector<double>> factors_;
    std::vector<int> shell_of_mode_;
    std::vector<double> weights_;
    double max_jitter_ = 0.0;
};

GaussianSamples sample_gaussian_solution(const GaussianCaseParams& params, const simulator::SpectralLattice& lattice,
                                         std::vector<double> times, std::uint64_t seed, std::uint32_t replica = 0);

}  // namespace wave3::gaussian
