#include "wave3/power_fit.hpp"

#include <algorithm>
#include <cmath>

#include "wave3/common.hpp"

namespace wave3 {

PowerFit fit_loglog(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DomainError("fit_loglog: size mismatch");
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("fit_loglog: nonpositive value");
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    const std::size_t n = lx.size();
    if (n < 3) throw DomainError("fit_loglog: need at least three points");
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (sxx <= 0.0) throw DomainError("fit_loglog: abscissae are all equal");
    PowerFit f;
    f.points = n;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - (f.intercept + f.slope * lx[i]);
        rss += r * r;
    }
    f.stderr_slope = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
    f.r2 = syy > 0.0 ? std::clamp(1.0 - rss / syy, 0.0, 1.0) : 1.0;
    return f;
}

std::vector<double> geometric_grid(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0 && hi > lo) || n < 2) throw DomainError("geometric_grid: need 0 < lo < hi and n >= 2");
    std::vector<double> g(n);
    const double r = std::log(hi / lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) g[i] = lo * std::exp(r * static_cast<double>(i));
    g.back() = hi;
    return g;
}

double decades_spanned(std::span<const double> x) {
    if (x.empty()) return 0.0;
    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    if (!(*mn > 0.0)) return 0.0;
    return std::log10(*mx / *mn);
}

}  // namespace wave3
