#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace wave3 {

/// Least-squares line through (log x, log y).
struct PowerFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
    double r2 = 0.0;
    std::size_t points = 0;
};

/// Requires at least three strictly positive pairs.
PowerFit fit_loglog(std::span<const double> x, std::span<const double> y);

/// n points from lo to hi, evenly spaced in log.
std::vector<double> geometric_grid(double lo, double hi, std::size_t n);

/// log10(max / min) of positive abscissae.
double decades_spanned(std::span<const double> x);

}  // namespace wave3
