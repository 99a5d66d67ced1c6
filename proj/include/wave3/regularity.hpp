#pragma once

// Hoelder exponents and fractional Sobolev norms estimated from sampled
// fields, and the comparison with the theoretical exponent window.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wave3/lattice.hpp"
#include "wave3/power_fit.hpp"

namespace wave3::regularity {

using simulator::RealGrid;

/// Replicated fields on an n^3 grid with spacing dx, at one or more times.
struct FieldSamples {
    int n = 0;
    double dx = 1.0;
    std::vector<double> times;
    /// fields[replica][time slot]
    std::vector<std::vector<RealGrid>> fields;

    void validate() const;
};

enum class Axis { Space, Time };

struct StructureOptions {
    /// Space axis: which time slot to use.
    std::size_t time_slot = 0;
    /// Space axis: grid directions averaged over (x, y, z).
    std::array<bool, 3> directions{true, true, true};
    /// Time axis: pairs whose earlier time is below this are skipped.
    double t_min = 0.25;
    std::size_t min_lags = 8;
    double min_decades = 1.5;
};

struct ExponentFit {
    double q = 2.0;
    std::vector<double> lags;
    /// Replica mean of the spatially averaged |increment|^q.
    std::vector<double> moments;
    /// Standard error of the replica mean (0 with one replica).
    std::vector<double> mc_errors;
    PowerFit fit;
    /// fit.slope / q and its standard error.
    double exponent = 0.0;
    double exponent_stderr = 0.0;
    /// Every moment vanished; no fit was attempted.
    bool degenerate = false;
    /// Largest relative MC error is below 10% and there are >= 2 replicas.
    bool mc_adequate = false;
    std::size_t replicas = 0;
};

/// Least-squares log-log fit of E|increment|^q against the lag; the Hoelder
/// estimate is slope / q. Spatial lags are distances in the units of dx and
/// must be whole numbers of cells; increments are taken inside the grid
/// without wrapping. Time lags are differences between the sample times.
/// Throws ConfigError with guidance when fewer than min_lags distinct lags
/// or less than min_decades of span are available.
ExponentFit structure_function(const FieldSamples& samples, Axis axis, double q, std::span<const double> lags,
                               const StructureOptions& opt = {});

/// Box of grid cells [lo, lo + size) on each axis.
struct SubBox {
    std::array<int, 3> lo{0, 0, 0};
    std::array<int, 3> size{0, 0, 0};

    std::string describe() const;
};

struct SobolevNormEstimate {
    double gamma = 0.0;
    double q = 2.0;
    std::string domain;
    /// ||g||_{L^q} + seminorm
    double value = 0.0;
    double lq_norm = 0.0;
    double seminorm = 0.0;
    /// Seminorm with the exclusion radius one cell larger, as a sensitivity gauge.
    double seminorm_wider_cut = 0.0;
    int min_separation_cells = 2;
    std::size_t pairs = 0;
};

/// Double-sum discretisation of the Gagliardo seminorm
///   (sum_x sum_y |g(x) - g(y)|^q / |x - y|^{3 + gamma q} dx^6)^{1/q}
/// over grid pairs in the box at least min_separation_cells apart, plus the
/// L^q norm over the box. q = 2 uses zero-padded FFT correlations, other q
/// a direct sum over offsets.
SobolevNormEstimate sobolev_norm(const RealGrid& field, int n, double dx, double gamma, double q, const SubBox& box,
                                 int min_separation_cells = 2);

/// Upper endpoint gamma1 ^ gamma2 ^ (2 - beta)/2 ^ (1 + delta)/2 of the
/// exponent window (0, alpha_high). Throws DomainError out of range.
double exponent_window(double beta, double delta, double gamma1, double gamma2);

enum class Verdict {
    /// Within tolerance of the endpoint; an endpoint is never "inside".
    Boundary,
    /// Clearly above the endpoint.
    Smoother,
    /// Clearly below the endpoint.
    Rougher,
    /// Exponent indistinguishable from 0.
    NoRegularity,
    Degenerate,
};

struct VerdictReport {
    Verdict verdict = Verdict::Degenerate;
    double alpha_high = 0.0;
    double estimate = 0.0;
    std::string text;
};

/// `tolerance` is the half width around the endpoint (and around 0).
VerdictReport classify(const ExponentFit& fit, double alpha_high, double tolerance);
std::string to_string(Verdict v);

// Calibration fields with known exponents.

/// n^3 field whose lines along x are independent fractional Brownian paths
/// with Hurst index H (exact circulant embedding of fractional Gaussian
/// noise), started at 0 and scaled so that E|B(x + h) - B(x)|^2 = h^{2H}.
/// Only the x direction carries the exponent.
RealGrid fractional_lines(int n, double dx, double hurst, std::uint64_t seed);

/// Independent standard normals on the grid (no spatial regularity).
RealGrid white_noise_field(int n, std::uint64_t seed);

}  // namespace wave3::regularity
