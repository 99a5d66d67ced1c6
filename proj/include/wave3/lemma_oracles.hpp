#pragma once

// Quadrature oracles for the spectral energy identities and the increment
// integral bounds. Every 3-D or 6-D integral is reduced with the isotropy of
// the sphere measures and of f to one or two radial integrals.
//
// The sphere measures G(t) enter through these reductions:
//  - u, v independent on the sphere of radius s: |v - u| has density
//    rho / (2 s^2) on [0, 2s];
//  - for |w| = rho and a unit e, |w + h e| has density q / (2 rho h) on
//    [|rho - h|, rho + h].
// The mollified kernels G_n are replaced by G, as in the proofs, through
// |F G_n| <= |F G|.

#include <iosfwd>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wave3/covariance.hpp"
#include "wave3/power_fit.hpp"
#include "wave3/quadrature_engine.hpp"

namespace wave3::quadrature {

struct OracleOptions {
    double rel_tol = 1e-8;
    /// Times s at which the separation integrals are evaluated; the report
    /// uses the maximum over this grid.
    std::vector<double> s_grid{0.25, 0.5, 1.0};
    /// Lower time t for the gap oracles, t_bar = t + gap.
    double base_time = 0.5;
    unsigned threads = 1;
    /// A point is converged when its relative error estimate is below this.
    double convergence_threshold = 1e-5;
};

struct LemmaReport {
    std::string lemma;
    std::vector<std::pair<std::string, double>> params;
    /// Separations |x - y| or gaps t_bar - t; empty for single-value lemmas.
    std::vector<double> abscissa;
    std::vector<QuadratureResult> values;
    /// Headline value: the maximum over the evaluated points.
    double value = 0.0;
    double error = 0.0;
    std::string bound_form;
    std::optional<double> claimed_alpha;
    std::optional<PowerFit> fit;
    bool converged = true;
    bool satisfied = false;
    std::string note;
};

/// Columns: lemma, params, abscissa, value, error, slope, stderr, r2, satisfied.
void write_lemma_csv(std::ostream& os, std::span<const LemmaReport> reports);

/// int_0^t ds int |F G(s)(xi)|^2 |xi|^{beta-3} dxi
///   = 4 pi int_0^inf r^{beta-3} (t/2 - sin(2 t r) / (4 r)) dr.
QuadratureResult weighted_energy(double beta, double t, const QuadratureOptions& opt = {});

/// K(beta) = 4 pi int_0^inf r^{beta-3} sin^2 r dr = |xi|-integral of |F G(1)|^2 |xi|^{beta-3}.
QuadratureResult sine_square_energy(double beta, const QuadratureOptions& opt = {});

/// int_0^t s^{-b} ds int |F G(s)|^2 |xi|^{beta-3} dxi = t^{3-beta-b} K(beta) / (3 - beta - b).
QuadratureResult weighted_energy_with_time_weight(double beta, double b, double t, const QuadratureOptions& opt = {});

/// int |x - z|^{a-3} |z - y|^{b-3} dz with the angular integral done in
/// closed form and the radial one by quadrature.
QuadratureResult riesz_convolution(double a, double b, const Vec3& x, const Vec3& y, const QuadratureOptions& opt = {});

/// int int G(s, du) G(s, dv) |D f(v - u, h e)| for one s and h = |x - y|.
QuadratureResult lemma_B2_integral(const covariance::CovarianceSpec& spec, double s, double h,
                                   const QuadratureOptions& opt = {});
/// Same with the second increment D^2 f.
QuadratureResult lemma_B3_integral(const covariance::CovarianceSpec& spec, double s, double h,
                                   const QuadratureOptions& opt = {});
/// sup(phi) * int |F G(t - s)(xi)| |F G(t_bar - s)(xi)| |xi|^{beta-3} dxi
QuadratureResult lemma_B4_integral(const covariance::CovarianceSpec& spec, double s, double t, double t_bar,
                                   const QuadratureOptions& opt = {});
/// nu_2 with G in place of G_n.
QuadratureResult lemma_B5_integral(const covariance::CovarianceSpec& spec, double t, double t_bar,
                                   const QuadratureOptions& opt = {});
/// nu_3 with G in place of G_n.
QuadratureResult lemma_B6_integral(const covariance::CovarianceSpec& spec, double t, double t_bar,
                                   const QuadratureOptions& opt = {});

LemmaReport lemma_B2_oracle(const covariance::CovarianceSpec& spec, double alpha, std::span<const double> separations,
                            const OracleOptions& opt = {});
LemmaReport lemma_B3_oracle(const covariance::CovarianceSpec& spec, double alpha, std::span<const double> separations,
                            const OracleOptions& opt = {});

struct TimeTriple {
    double s = 0.0;
    double t = 0.0;
    double t_bar = 0.0;
};

/// Corners of [0, T]^3 with s <= t <= t_bar plus interior points.
std::vector<TimeTriple> default_B4_grid(double horizon = 1.0, int per_axis = 5);

LemmaReport lemma_B4_oracle(const covariance::CovarianceSpec& spec, std::span<const TimeTriple> grid,
                            const OracleOptions& opt = {});
LemmaReport lemma_B5_oracle(const covariance::CovarianceSpec& spec, double alpha, std::span<const double> gaps,
                            const OracleOptions& opt = {});
LemmaReport lemma_B6_oracle(const covariance::CovarianceSpec& spec, double alpha, std::span<const double> gaps,
                            const OracleOptions& opt = {});

enum class IncrementOrder { First, Second };

/// int |D k_{3-b}(w, e)| dw (First, 0 < b < 1) or int |D^2 k_{3-b}(w, e)| dw
/// (Second, 0 < b < 2), split at |w| = 2. Beyond |w| = 1e4 the leading
/// Taylor term of the increment is integrated in closed form.
QuadratureResult lemma_B1_finiteness(double b, IncrementOrder order, const QuadratureOptions& opt = {});

/// The same integral for an arbitrary unit vector e by importance-sampled
/// Monte Carlo in Cartesian coordinates, with no use of the symmetry about e.
/// abs_error_estimate is the standard error. Used to measure the direction
/// dependence of the constant and as an independent check of the reduction.
QuadratureResult lemma_B1_directional(double b, IncrementOrder order, const Vec3& e, std::size_t samples = 400000,
                                      std::uint64_t seed = 1);

/// Radial value plus one Monte Carlo value per direction; the anisotropy
/// (largest relative and standardized deviation) goes into params.
LemmaReport lemma_B1_report(double b, IncrementOrder order, std::span<const Vec3> directions,
                            std::size_t samples = 400000, std::uint64_t seed = 1);

/// Builds the fit, `converged` and `satisfied` fields of an exponent report.
void finish_exponent_report(LemmaReport& report, double convergence_threshold);

}  // namespace wave3::quadrature
