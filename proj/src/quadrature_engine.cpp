#include "wave3/quadrature_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>

#include "wave3/common.hpp"

namespace wave3::quadrature {

namespace {

// tanh_sinh extends its abscissa tables lazily, so each thread keeps its own.
boost::math::quadrature::tanh_sinh<double>& tanh_sinh_rule() {
    thread_local boost::math::quadrature::tanh_sinh<double> rule(15);
    return rule;
}

// Non-finite samples, and samples so large that summing them could overflow,
// only occur next to an integrable endpoint singularity where the node
// weight makes their contribution negligible.
double safe_eval(const Integrand& f, double x, std::size_t& count) {
    ++count;
    const double y = f(x);
    return std::abs(y) < 1e250 ? y : 0.0;
}

}  // namespace

QuadratureResult QuadratureResult::scaled(double c) const {
    return {value * c, abs_error_estimate * std::abs(c), evaluations};
}

double QuadratureResult::relative_error() const {
    if (value == 0.0) return abs_error_estimate == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return abs_error_estimate / std::abs(value);
}

QuadratureResult integrate_gk(const Integrand& f, double a, double b, const QuadratureOptions& opt) {
    if (a == b) return {};
    std::size_t count = 0;
    double error = 0.0;
    double l1 = 0.0;
    auto g = [&](double x) {
        ++count;
        return f(x);
    };
    const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        g, a, b, opt.max_depth, opt.rel_tol, &error, &l1);
    // Kronrod error estimates are conservative but can underflow to zero on
    // polynomial integrands; keep a rounding floor.
    error = std::max(error, 4.0 * std::numeric_limits<double>::epsilon() * l1);
    return {value, error, count};
}

QuadratureResult integrate_tanh_sinh(const Integrand& f, double a, double b, const QuadratureOptions& opt) {
    if (a == b) return {};
    if (b < a) {
        QuadratureResult r = integrate_tanh_sinh(f, b, a, opt);
        r.value = -r.value;
        return r;
    }
    std::size_t count = 0;
    double error = 0.0;
    double l1 = 0.0;
    std::size_t levels = 0;
    // Integrate over [-1, 1] and scale: on narrow intervals the rule's own
    // error estimate is otherwise dominated by the offset of a and b.
    // Two-argument form: xc is the signed distance to the nearest endpoint,
    // which keeps full precision for singularities at a or b.
    const double hw = 0.5 * (b - a);
    auto g = [&](double t, double tc) {
        const double pos = t < 0.0 ? a + hw * std::abs(tc) : b - hw * std::abs(tc);
        return safe_eval(f, pos, count);
    };
    double value = 0.0;
    try {
        value = hw * tanh_sinh_rule().integrate(g, -1.0, 1.0, opt.rel_tol, &error, &l1, &levels);
    } catch (const std::exception& e) {
        throw NumericalError(std::string("tanh-sinh failed: ") + e.what());
    }
    error = hw * std::max(error, 4.0 * std::numeric_limits<double>::epsilon() * l1);
    return {value, error, count};
}

QuadratureResult integrate_power_tail(const Integrand& f, double a, const QuadratureOptions& opt) {
    if (!(a > 0.0)) throw DomainError("integrate_power_tail: lower limit must be positive");
    auto mapped = [&](double u) {
        const double r = a / u;
        if (!std::isfinite(r)) return 0.0;
        return f(r) * a / (u * u);
    };
    return integrate_tanh_sinh(mapped, 0.0, 1.0, opt);
}

QuadratureResult integrate_abs(const Integrand& f, double a, double b, const QuadratureOptions& opt, int samples) {
    if (a == b) return {};
    if (b < a) return integrate_abs(f, b, a, opt, samples);
    std::size_t count = 0;
    std::vector<double> xs;
    std::vector<double> ys;
    xs.reserve(samples);
    ys.reserve(samples);
    for (int i = 1; i < samples; ++i) {
        const double c = 0.5 * (1.0 - std::cos(kPi * i / samples));
        const double x = a + (b - a) * c;
        xs.push_back(x);
        ys.push_back(safe_eval(f, x, count));
    }
    std::vector<double> cuts{a};
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        if ((ys[i] < 0.0 && ys[i + 1] > 0.0) || (ys[i] > 0.0 && ys[i + 1] < 0.0)) {
            std::uintmax_t iters = 80;
            auto tol = boost::math::tools::eps_tolerance<double>(50);
            auto fr = [&](double x) { return safe_eval(f, x, count); };
            try {
                auto [lo, hi] = boost::math::tools::toms748_solve(fr, xs[i], xs[i + 1], ys[i], ys[i + 1], tol, iters);
                cuts.push_back(0.5 * (lo + hi));
            } catch (const std::exception&) {
                cuts.push_back(0.5 * (xs[i] + xs[i + 1]));
            }
        }
    }
    cuts.push_back(b);
    QuadratureResult total{0.0, 0.0, count};
    auto absf = [&](double x) { return std::abs(f(x)); };
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (cuts[i + 1] > cuts[i]) total += integrate_tanh_sinh(absf, cuts[i], cuts[i + 1], opt);
    }
    return total;
}

SeriesLimit accelerate_alternating(std::span<const double> partial_sums) {
    if (partial_sums.empty()) return {};
    if (partial_sums.size() == 1) return {partial_sums[0], std::abs(partial_sums[0])};
    std::vector<double> level(partial_sums.begin(), partial_sums.end());
    double previous_spread = 0.0;
    while (level.size() > 1) {
        previous_spread = 0.5 * std::abs(level[1] - level[0]);
        for (std::size_t i = 0; i + 1 < level.size(); ++i) level[i] = 0.5 * (level[i] + level[i + 1]);
        level.pop_back();
    }
    return {level[0], previous_spread};
}

QuadratureResult oscillatory_tail(const OscillatoryTerm& term, double a, const QuadratureOptions& opt) {
    double omega = term.omega;
    double phase = term.phase;
    double sign = 1.0;
    if (omega < 0.0) {
        // sin(-w r + p) = -sin(w r - p)
        omega = -omega;
        phase = -phase;
        sign = -1.0;
    }
    if (omega < 1e-14) {
        const double s = std::sin(phase);
        if (s == 0.0) return {};
        return integrate_power_tail(term.amplitude, a, opt).scaled(sign * s);
    }
    auto g = [&](double r) { return term.amplitude(r) * std::sin(omega * r + phase); };
    auto zero = [&](double k) { return (k * kPi - phase) / omega; };
    double k = std::ceil((omega * a + phase) / kPi);
    while (zero(k) < a) k += 1.0;

    QuadratureOptions panel = opt;
    panel.rel_tol = std::max(opt.rel_tol * 0.1, 1e-15);
    QuadratureResult first = integrate_gk(g, a, zero(k), panel);
    std::vector<double> partial{first.value};
    double err = first.abs_error_estimate;
    std::size_t evals = first.evaluations;

    constexpr std::size_t kWindow = 16;
    constexpr std::size_t kMaxTerms = 4000;
    SeriesLimit limit{first.value, std::numeric_limits<double>::infinity()};
    for (std::size_t j = 0; j < kMaxTerms; ++j) {
        const QuadratureResult t = integrate_gk(g, zero(k + j), zero(k + j + 1), panel);
        err += t.abs_error_estimate;
        evals += t.evaluations;
        partial.push_back(partial.back() + t.value);
        const double scale = std::max(std::abs(partial.back()), 1e-300);
        if (std::abs(t.value) <= 0.01 * opt.rel_tol * scale && j > 2) {
            limit = {partial.back(), std::abs(t.value)};
            break;
        }
        if (partial.size() > kWindow + 4 && (partial.size() % 8 == 0)) {
            const std::span<const double> window(partial.data() + partial.size() - kWindow, kWindow);
            const SeriesLimit candidate = accelerate_alternating(window);
            if (candidate.error < limit.error) limit = candidate;
            if (limit.error <= opt.rel_tol * std::max(std::abs(limit.value), 1e-300)) break;
        }
    }
    return {sign * limit.value, err + limit.error, evals};
}

double radial_split(double slowest_frequency) {
    if (!(slowest_frequency > 0.0)) return 50.0;
    return std::clamp(20.0 * kPi / slowest_frequency, 50.0, 2.0e6);
}

QuadratureResult integrate_radial(const RadialIntegral& spec, const QuadratureOptions& opt) {
    const double split = std::max(spec.split, spec.lower);
    double panel = kPi / std::max(spec.max_frequency, 1e-12);
    QuadratureResult total;
    double singular_end = spec.lower;
    if (spec.lower <= 0.0) {
        singular_end = std::min({1.0, split, panel});
        total = integrate_tanh_sinh(spec.full, 0.0, singular_end, opt);
    }

    constexpr double kMaxPanels = 4.0e5;
    const double span = split - singular_end;
    if (span > 0.0) {
        double n = std::ceil(span / panel);
        if (n > kMaxPanels) {
            n = kMaxPanels;
        }
        const auto count = static_cast<std::size_t>(n);
        const double width = span / static_cast<double>(count);
        QuadratureOptions panel_opt = opt;
        panel_opt.rel_tol = std::max(opt.rel_tol * 0.1, 1e-15);
        panel_opt.max_depth = std::min(opt.max_depth, 12u);
        for (std::size_t i = 0; i < count; ++i) {
            const double lo = singular_end + width * static_cast<double>(i);
            const double hi = (i + 1 == count) ? split : lo + width;
            total += integrate_gk(spec.full, lo, hi, panel_opt);
        }
    }
    if (spec.smooth_tail) total += integrate_power_tail(spec.smooth_tail, split, opt);
    for (const auto& term : spec.oscillatory) total += oscillatory_tail(term, split, opt);
    return total;
}

double spherical_mean_plane_wave(double z) {
    const double az = std::abs(z);
    if (az < 1e-4) {
        const double z2 = z * z;
        return 1.0 - z2 / 6.0 + z2 * z2 / 120.0;
    }
    return std::sin(z) / z;
}

void InnerErrorTracker::record(const QuadratureResult& r) {
    evals_ += r.evaluations;
    if (r.value == 0.0 || !std::isfinite(r.value)) return;
    const int bucket = std::clamp(static_cast<int>(std::floor(std::log10(std::abs(r.value)))) + 320, 0, kBuckets - 1);
    worst_[bucket] = std::max(worst_[bucket], r.abs_error_estimate / std::abs(r.value));
    top_ = std::max(top_, bucket);
}

double InnerErrorTracker::worst_relative() const {
    double w = 0.0;
    for (int b = std::max(0, top_ - kRelevantDecades); b <= top_; ++b) w = std::max(w, worst_[b]);
    return w;
}

QuadratureResult combine_nested(const QuadratureResult& outer, const InnerErrorTracker& inner) {
    return {outer.value, outer.abs_error_estimate + inner.worst_relative() * std::abs(outer.value),
            outer.evaluations + inner.evaluations()};
}

}  // namespace wave3::quadrature
