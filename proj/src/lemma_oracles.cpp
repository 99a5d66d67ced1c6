#include "wave3/lemma_oracles.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <random>
#include <ostream>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "wave3/parallel.hpp"
#include "wave3/sphere_rules.hpp"

namespace wave3::quadrature {

namespace {

using covariance::CovarianceSpec;

void check_beta(double beta) {
    if (!(beta > 0.0 && beta < 2.0)) throw DomainError("beta must lie in (0, 2)");
}

// z - sin z without cancellation.
double z_minus_sin(double z) {
    if (std::abs(z) < 0.2) {
        const double z2 = z * z;
        return z * z2 / 6.0 * (1.0 - z2 / 20.0 * (1.0 - z2 / 42.0 * (1.0 - z2 / 72.0 * (1.0 - z2 / 110.0))));
    }
    return z - std::sin(z);
}

// Radial profile of f without the singularity guard: quadrature nodes may
// come arbitrarily close to 0 but never reach it.
struct Profile {
    const CovarianceSpec* spec;
    double operator()(double r) const { return spec->envelope(r) * std::pow(r, -spec->beta()); }
};

double sup_envelope(const CovarianceSpec& spec) {
    if (const auto* t = std::get_if<covariance::Tabulated>(&spec.phi()))
        return *std::max_element(t->values.begin(), t->values.end());
    return 1.0;  // ConstantOne, and the Gaussian envelope peaks at 1
}

QuadratureOptions inner_options(const QuadratureOptions& opt) {
    QuadratureOptions o = opt;
    o.rel_tol = std::max(opt.rel_tol * 0.1, 1e-13);
    return o;
}

constexpr double kNarrowShell = 1e-10;

// Integral of a nearly constant |g| over an interval of the given width.
QuadratureResult narrow_shell(double abs_g, double width, double rel_variation) {
    const double v = width * abs_g;
    return {v, 4.0 * rel_variation * v, 1};
}

// Tanh-sinh over consecutive breakpoints.
QuadratureResult integrate_segments(const Integrand& f, std::vector<double> cuts, const QuadratureOptions& opt) {
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    QuadratureResult total;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += integrate_tanh_sinh(f, cuts[i], cuts[i + 1], opt);
    return total;
}

// |g| over [lo, hi] with a known sign change at m when m lies inside.
QuadratureResult split_at(const Integrand& g, double lo, double m, double hi, const QuadratureOptions& opt) {
    if (m <= lo || m >= hi) return integrate_abs(g, lo, hi, opt, 12);
    return integrate_abs(g, lo, m, opt, 12) + integrate_abs(g, m, hi, opt, 12);
}

std::string format_params(const std::vector<std::pair<std::string, double>>& params) {
    std::ostringstream os;
    os << std::setprecision(10);
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (i) os << ';';
        os << params[i].first << '=' << params[i].second;
    }
    return os.str();
}

std::vector<std::pair<std::string, double>> spec_params(const CovarianceSpec& spec) {
    std::vector<std::pair<std::string, double>> p{{"beta", spec.beta()}, {"delta", spec.delta()}};
    if (const auto* g = std::get_if<covariance::GaussianEnvelope>(&spec.phi())) p.emplace_back("sigma", g->sigma);
    return p;
}

void check_fit_window(std::span<const double> xs, const char* what) {
    std::vector<double> pos;
    for (double x : xs) {
        if (x < 0.0) throw DomainError(std::string(what) + " must be nonnegative");
        if (x > 0.0) pos.push_back(x);
    }
    if (pos.size() < 8 || decades_spanned(pos) < 1.5 - 1e-9)
        throw DomainError(std::string(what) + " must contain at least 8 positive values spanning 1.5 decades");
}

// Max over the s grid of a separation integral, one row per separation.
template <class Integral>
LemmaReport separation_report(const char* id, const CovarianceSpec& spec, double alpha, std::span<const double> seps,
                              const OracleOptions& opt, Integral integral) {
    check_fit_window(seps, "separations");
    if (opt.s_grid.empty()) throw DomainError("s grid is empty");
    LemmaReport rep;
    rep.lemma = id;
    rep.params = spec_params(spec);
    rep.params.emplace_back("alpha", alpha);
    rep.params.emplace_back("s_max", *std::max_element(opt.s_grid.begin(), opt.s_grid.end()));
    rep.claimed_alpha = alpha;
    rep.abscissa.assign(seps.begin(), seps.end());
    const std::size_t ns = opt.s_grid.size();
    std::vector<QuadratureResult> cells(seps.size() * ns);
    QuadratureOptions qo;
    qo.rel_tol = opt.rel_tol;
    parallel_for(cells.size(), opt.threads, [&](std::size_t k) {
        const double h = seps[k / ns];
        cells[k] = h == 0.0 ? QuadratureResult{0.0, 0.0, 1} : integral(spec, opt.s_grid[k % ns], h, qo);
    });
    for (std::size_t i = 0; i < seps.size(); ++i) {
        QuadratureResult best = cells[i * ns];
        for (std::size_t j = 1; j < ns; ++j) {
            if (cells[i * ns + j].value > best.value) best = cells[i * ns + j];
        }
        rep.values.push_back(best);
    }
    finish_exponent_report(rep, opt.convergence_threshold);
    return rep;
}

template <class Integral>
LemmaReport gap_report(const char* id, const CovarianceSpec& spec, double alpha, std::span<const double> gaps,
                       const OracleOptions& opt, Integral integral) {
    check_fit_window(gaps, "gaps");
    LemmaReport rep;
    rep.lemma = id;
    rep.params = spec_params(spec);
    rep.params.emplace_back("alpha", alpha);
    rep.params.emplace_back("t", opt.base_time);
    rep.claimed_alpha = alpha;
    rep.abscissa.assign(gaps.begin(), gaps.end());
    rep.values.resize(gaps.size());
    QuadratureOptions qo;
    qo.rel_tol = opt.rel_tol;
    parallel_for(gaps.size(), opt.threads, [&](std::size_t i) {
        rep.values[i] = integral(spec, opt.base_time, opt.base_time + gaps[i], qo);
    });
    finish_exponent_report(rep, opt.convergence_threshold);
    return rep;
}

}  // namespace

void finish_exponent_report(LemmaReport& rep, double convergence_threshold) {
    std::vector<double> xs;
    std::vector<double> ys;
    rep.converged = true;
    rep.value = 0.0;
    rep.error = 0.0;
    for (std::size_t i = 0; i < rep.values.size(); ++i) {
        const auto& v = rep.values[i];
        if (!std::isfinite(v.value) || v.abs_error_estimate > convergence_threshold * std::abs(v.value)) {
            rep.converged = false;
        }
        if (v.value >= rep.value) {
            rep.value = v.value;
            rep.error = v.abs_error_estimate;
        }
        if (i < rep.abscissa.size() && rep.abscissa[i] > 0.0 && v.value > 0.0) {
            xs.push_back(rep.abscissa[i]);
            ys.push_back(v.value);
        }
    }
    if (!rep.converged) rep.note = "quadrature nonconvergence";
    rep.satisfied = false;
    if (rep.claimed_alpha && xs.size() >= 3) {
        rep.fit = fit_loglog(xs, ys);
        rep.bound_form = "C*|gap|^alpha";
        rep.satisfied = rep.converged && rep.fit->slope - 2.0 * rep.fit->stderr_slope >= *rep.claimed_alpha;
        if (rep.converged && !rep.satisfied) {
            std::ostringstream os;
            os << "fitted slope " << rep.fit->slope << " - 2*" << rep.fit->stderr_slope << " below alpha "
               << *rep.claimed_alpha;
            rep.note = os.str();
        }
    }
}

void write_lemma_csv(std::ostream& os, std::span<const LemmaReport> reports) {
    os << "lemma,params,abscissa,value,error,slope,stderr,r2,satisfied\n";
    os << std::setprecision(12);
    for (const auto& r : reports) {
        const std::string params = format_params(r.params);
        auto row = [&](const std::string& x, double v, double e) {
            os << r.lemma << ',' << '"' << params << '"' << ',' << x << ',' << v << ',' << e << ',';
            if (r.fit) {
                os << r.fit->slope << ',' << r.fit->stderr_slope << ',' << r.fit->r2;
            } else {
                os << ",,";
            }
            os << ',' << (r.satisfied ? "true" : "false") << '\n';
        };
        if (r.values.empty()) {
            row("", r.value, r.error);
            continue;
        }
        for (std::size_t i = 0; i < r.values.size(); ++i) {
            std::ostringstream x;
            x << std::setprecision(12);
            if (i < r.abscissa.size()) x << r.abscissa[i];
            row(x.str(), r.values[i].value, r.values[i].abs_error_estimate);
        }
    }
}

QuadratureResult weighted_energy(double beta, double t, const QuadratureOptions& opt) {
    check_beta(beta);
    if (!(t > 0.0)) throw DomainError("weighted_energy needs t > 0");
    RadialIntegral ri;
    ri.full = [=](double r) { return kPi * std::pow(r, beta - 4.0) * z_minus_sin(2.0 * t * r); };
    ri.smooth_tail = [=](double r) { return 2.0 * kPi * t * std::pow(r, beta - 3.0); };
    ri.oscillatory.push_back({[=](double r) { return -kPi * std::pow(r, beta - 4.0); }, 2.0 * t, 0.0});
    ri.max_frequency = 2.0 * t;
    ri.split = radial_split(2.0 * t);
    return integrate_radial(ri, opt);
}

QuadratureResult sine_square_energy(double beta, const QuadratureOptions& opt) {
    check_beta(beta);
    RadialIntegral ri;
    ri.full = [=](double r) {
        const double s = std::sin(r);
        return 4.0 * kPi * std::pow(r, beta - 3.0) * s * s;
    };
    ri.smooth_tail = [=](double r) { return 2.0 * kPi * std::pow(r, beta - 3.0); };
    ri.oscillatory.push_back({[=](double r) { return -2.0 * kPi * std::pow(r, beta - 3.0); }, 2.0, kPi / 2.0});
    ri.max_frequency = 2.0;
    ri.split = radial_split(2.0);
    return integrate_radial(ri, opt);
}

QuadratureResult weighted_energy_with_time_weight(double beta, double b, double t, const QuadratureOptions& opt) {
    check_beta(beta);
    if (!(b > 0.0)) throw DomainError("time weight exponent b must be positive");
    if (!(beta + b < 3.0)) throw DomainError("beta + b >= 3: the time-weighted energy diverges");
    if (!(t > 0.0)) throw DomainError("weighted energy needs t > 0");
    const double p = 3.0 - beta - b;
    return sine_square_energy(beta, opt).scaled(std::pow(t, p) / p);
}

QuadratureResult riesz_convolution(double a, double b, const Vec3& x, const Vec3& y, const QuadratureOptions& opt) {
    if (!(a > 0.0 && b > 0.0 && a + b < 3.0)) throw DomainError("Riesz convolution needs a, b > 0 and a + b < 3");
    const double d = (x - y).norm();
    if (!(d >= kSingularityGuard)) throw DomainError("Riesz convolution needs x != y");
    // (1/(r d)) int_{|r-d|}^{r+d} q^{b-2} dq, written through log1p for r >> d.
    auto shell = [=](double r) {
        const double u = d / r;
        double bracket;
        if (u < 0.5) {
            const double lp = std::log1p(u);
            const double lm = std::log1p(-u);
            bracket = b == 1.0 ? lp - lm
                               : std::pow(r, b - 1.0) * (std::expm1((b - 1.0) * lp) - std::expm1((b - 1.0) * lm)) / (b - 1.0);
        } else {
            auto Q = [b](double q) { return b == 1.0 ? std::log(q) : std::pow(q, b - 1.0) / (b - 1.0); };
            bracket = Q(r + d) - Q(std::abs(r - d));
        }
        return 2.0 * kPi * std::pow(r, a - 2.0) * bracket / d;
    };
    QuadratureResult res = integrate_segments(shell, {0.0, d, 2.0 * d}, opt);
    res += integrate_power_tail(shell, 2.0 * d, opt);
    return res;
}

QuadratureResult lemma_B2_integral(const CovarianceSpec& spec, double s, double h, const QuadratureOptions& opt) {
    if (!(s > 0.0)) throw DomainError("lemma B2 needs s > 0");
    if (h < 0.0) throw DomainError("separation must be nonnegative");
    if (h == 0.0) return {0.0, 0.0, 1};
    const Profile F{&spec};
    const QuadratureOptions in = inner_options(opt);
    InnerErrorTracker tracker;
    auto outer = [&](double rho) {
        const double Fr = F(rho);
        auto g = [&](double q) { return (F(q) - Fr) * q; };
        // Below this the q interval is too narrow to sample against the
        // cancellation in F(q) - F(rho); g is constant on it to relative O(rho/h).
        QuadratureResult r = rho < kNarrowShell * h
                                 ? narrow_shell(std::abs(g(h)), 2.0 * rho, rho / h)
                                 : split_at(g, std::abs(rho - h), rho, rho + h, in);
        tracker.record(r);
        return r.value / (4.0 * h);
    };
    std::vector<double> cuts{0.0, 2.0 * s};
    for (double c : {0.5 * h, h}) {
        if (c < 2.0 * s) cuts.push_back(c);
    }
    return combine_nested(integrate_segments(outer, cuts, opt), tracker);
}

QuadratureResult lemma_B3_integral(const CovarianceSpec& spec, double s, double h, const QuadratureOptions& opt) {
    if (!(s > 0.0)) throw DomainError("lemma B3 needs s > 0");
    if (h < 0.0) throw DomainError("separation must be nonnegative");
    if (h == 0.0) return {0.0, 0.0, 1};
    const Profile F{&spec};
    const QuadratureOptions in = inner_options(opt);
    InnerErrorTracker tracker;
    auto outer = [&](double rho) {
        const double Fr = F(rho);
        const double m2 = 2.0 * rho * rho + 2.0 * h * h;
        auto g = [&](double q) { return (F(q) - 2.0 * Fr + F(std::sqrt(std::max(m2 - q * q, 0.0)))) * q; };
        QuadratureResult r = rho < kNarrowShell * h
                                 ? narrow_shell(std::abs(g(h)), rho + 0.5 * rho * rho / h, rho / h)
                                 : integrate_abs(g, std::abs(rho - h), std::sqrt(rho * rho + h * h), in, 24);
        tracker.record(r);
        return r.value / (2.0 * h);
    };
    std::vector<double> cuts{0.0, 2.0 * s};
    for (double c : {0.5 * h, h}) {
        if (c < 2.0 * s) cuts.push_back(c);
    }
    return combine_nested(integrate_segments(outer, cuts, opt), tracker);
}

QuadratureResult lemma_B4_integral(const CovarianceSpec& spec, double s, double t, double t_bar,
                                   const QuadratureOptions& opt) {
    if (!(0.0 <= s && s <= t && t <= t_bar)) throw DomainError("lemma B4 needs 0 <= s <= t <= t_bar");
    const double beta = spec.beta();
    const double a = t - s;
    const double b = t_bar - s;
    const double sup_phi = sup_envelope(spec);
    if (a == 0.0 || b == 0.0) return {0.0, 0.0, 1};
    if (a == b) {
        RadialIntegral ri;
        ri.full = [=](double r) {
            const double v = std::sin(a * r);
            return 4.0 * kPi * std::pow(r, beta - 3.0) * v * v;
        };
        ri.smooth_tail = [=](double r) { return 2.0 * kPi * std::pow(r, beta - 3.0); };
        ri.oscillatory.push_back({[=](double r) { return -2.0 * kPi * std::pow(r, beta - 3.0); }, 2.0 * a, kPi / 2.0});
        ri.max_frequency = 2.0 * a;
        ri.split = radial_split(2.0 * a);
        return integrate_radial(ri, opt).scaled(sup_phi);
    }
    auto g = [=](double r) { return 4.0 * kPi * std::pow(r, beta - 3.0) * std::abs(std::sin(a * r) * std::sin(b * r)); };
    const double lo_f = std::min(a, b);
    const double hi_f = std::max(a, b);
    constexpr double kMaxPanels = 2.0e5;
    double R = 400.0 * kPi / lo_f;
    R = std::min(R, kMaxPanels * kPi / (a + b));
    const double head = std::min(kPi / hi_f, R);
    QuadratureResult total = integrate_tanh_sinh(g, 0.0, head, opt);
    std::vector<double> zeros;
    for (double k = 1.0; k * kPi / a < R; k += 1.0) zeros.push_back(k * kPi / a);
    for (double k = 1.0; k * kPi / b < R; k += 1.0) zeros.push_back(k * kPi / b);
    zeros.push_back(head);
    zeros.push_back(R);
    std::sort(zeros.begin(), zeros.end());
    QuadratureResult upper_half;
    QuadratureOptions panel = opt;
    panel.max_depth = std::min(opt.max_depth, 10u);
    for (std::size_t i = 0; i + 1 < zeros.size(); ++i) {
        if (zeros[i] < head || zeros[i + 1] <= zeros[i]) continue;
        const QuadratureResult p = integrate_gk(g, zeros[i], zeros[i + 1], panel);
        total += p;
        if (zeros[i] >= 0.5 * R) upper_half += p;
    }
    // Tail: the mean of |sin sin| over the last half window times the power tail.
    const double weight_half = 4.0 * kPi * (std::pow(R, beta - 2.0) - std::pow(0.5 * R, beta - 2.0)) / (beta - 2.0);
    const double mean_abs = weight_half > 0.0 ? upper_half.value / weight_half : 4.0 / (kPi * kPi);
    const double tail = mean_abs * 4.0 * kPi * std::pow(R, beta - 2.0) / (2.0 - beta);
    total.value += tail;
    total.abs_error_estimate += 0.05 * tail;
    return total.scaled(sup_phi);
}

namespace {

// nu_2 (second = false) or nu_3 (second = true).
QuadratureResult time_scaled_increment(const CovarianceSpec& spec, double t, double t_bar, bool second,
                                       const QuadratureOptions& opt) {
    if (!(0.0 < t && t <= t_bar)) throw DomainError("time-scaled increments need 0 < t <= t_bar");
    if (t_bar == t) return {0.0, 0.0, 1};
    const double gap = t_bar - t;
    const Profile F{&spec};
    const QuadratureOptions in = inner_options(opt);
    InnerErrorTracker tracker;
    auto outer = [&](double s) {
        const double a = t - s;
        const double lam = (t_bar - s) / a;
        auto g = [&](double x) {
            const double d = a * x;
            const double e = a * std::sqrt((lam - 1.0) * (lam - 1.0) + lam * x * x);
            double v = lam * lam * F(lam * d) - (second ? 2.0 : 1.0) * lam * F(e);
            if (second) v += F(d);
            return v * x;
        };
        QuadratureResult r = integrate_abs(g, 0.0, 2.0, in, 24);
        tracker.record(r);
        return 0.5 * a * a * r.value;
    };
    std::vector<double> cuts{0.0, t};
    for (double c : {t - 10.0 * gap, t - gap, t - 0.1 * gap}) {
        if (c > 0.0) cuts.push_back(c);
    }
    return combine_nested(integrate_segments(outer, cuts, opt), tracker);
}

}  // namespace

QuadratureResult lemma_B5_integral(const CovarianceSpec& spec, double t, double t_bar, const QuadratureOptions& opt) {
    return time_scaled_increment(spec, t, t_bar, false, opt);
}

QuadratureResult lemma_B6_integral(const CovarianceSpec& spec, double t, double t_bar, const QuadratureOptions& opt) {
    return time_scaled_increment(spec, t, t_bar, true, opt);
}

LemmaReport lemma_B2_oracle(const CovarianceSpec& spec, double alpha, std::span<const double> separations,
                            const OracleOptions& opt) {
    const double upper = std::min(2.0 - spec.beta(), 1.0);
    if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
    LemmaReport r = separation_report("B2", spec, alpha, separations, opt, lemma_B2_integral);
    if (alpha >= upper) r.note += (r.note.empty() ? "" : "; ") + std::string("alpha outside the proven range");
    return r;
}

LemmaReport lemma_B3_oracle(const CovarianceSpec& spec, double alpha, std::span<const double> separations,
                            const OracleOptions& opt) {
    const double upper = std::min(2.0 - spec.beta(), 1.0 + spec.delta());
    if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
    LemmaReport r = separation_report("B3", spec, alpha, separations, opt, lemma_B3_integral);
    if (alpha >= upper) r.note += (r.note.empty() ? "" : "; ") + std::string("alpha outside the proven range");
    return r;
}

std::vector<TimeTriple> default_B4_grid(double horizon, int per_axis) {
    std::vector<TimeTriple> grid;
    for (int i = 0; i < per_axis; ++i) {
        for (int j = i; j < per_axis; ++j) {
            for (int k = j; k < per_axis; ++k) {
                const double h = horizon / (per_axis - 1);
                grid.push_back({i * h, j * h, k * h});
            }
        }
    }
    return grid;
}

LemmaReport lemma_B4_oracle(const CovarianceSpec& spec, std::span<const TimeTriple> grid, const OracleOptions& opt) {
    LemmaReport rep;
    rep.lemma = "B4";
    rep.params = spec_params(spec);
    rep.params.emplace_back("grid_points", static_cast<double>(grid.size()));
    rep.bound_form = "sup over grid < infinity";
    rep.values.resize(grid.size());
    QuadratureOptions qo;
    qo.rel_tol = opt.rel_tol;
    parallel_for(grid.size(), opt.threads, [&](std::size_t i) {
        rep.values[i] = lemma_B4_integral(spec, grid[i].s, grid[i].t, grid[i].t_bar, qo);
    });
    rep.converged = true;
    for (const auto& v : rep.values) {
        if (!std::isfinite(v.value)) rep.converged = false;
        // The tail model carries a 5% allowance, so convergence is judged loosely here.
        if (v.abs_error_estimate > 0.1 * std::abs(v.value)) rep.converged = false;
        if (v.value >= rep.value) {
            rep.value = v.value;
            rep.error = v.abs_error_estimate;
        }
    }
    rep.satisfied = rep.converged && std::isfinite(rep.value);
    if (!rep.converged) rep.note = "quadrature nonconvergence";
    return rep;
}

LemmaReport lemma_B5_oracle(const CovarianceSpec& spec, double alpha, std::span<const double> gaps,
                            const OracleOptions& opt) {
    if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
    LemmaReport r = gap_report("B5", spec, alpha, gaps, opt, lemma_B5_integral);
    if (!(alpha < 1.0 && alpha + spec.beta() < 2.0))
        r.note += (r.note.empty() ? "" : "; ") + std::string("alpha outside the proven range");
    return r;
}

LemmaReport lemma_B6_oracle(const CovarianceSpec& spec, double alpha, std::span<const double> gaps,
                            const OracleOptions& opt) {
    if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
    LemmaReport r = gap_report("B6", spec, alpha, gaps, opt, lemma_B6_integral);
    if (!(alpha < std::min(2.0 - spec.beta(), 1.0 + spec.delta())))
        r.note += (r.note.empty() ? "" : "; ") + std::string("alpha outside the proven range");
    return r;
}

namespace {

constexpr double kB1Far = 1.0e4;

void check_b1(double b, IncrementOrder order) {
    const double hi = order == IncrementOrder::First ? 1.0 : 2.0;
    if (!(b > 0.0 && b < hi)) throw DomainError("b outside the range where the increment integral is finite");
}

// Closed-form contribution of |w| > R using the leading Taylor term of the
// increment of |w|^p, p = b - 3.
double b1_far_tail(double b, IncrementOrder order, double R) {
    const double p = b - 3.0;
    if (order == IncrementOrder::First) {
        // |D| ~ |p| rho^{p-1} |cos|, angular mean of |cos| is 1/2
        return 4.0 * kPi * std::abs(p) * 0.5 * std::pow(R, p + 2.0) / -(p + 2.0);
    }
    // |D^2| ~ |p| rho^{p-2} |1 + (p-2) c^2|
    const double k = 2.0 - p;
    const double c0 = 1.0 / std::sqrt(k);
    const double angular = 2.0 * (4.0 * c0 / 3.0 + k / 3.0 - 1.0);
    return 2.0 * kPi * std::abs(p) * angular * std::pow(R, p + 1.0) / -(p + 1.0);
}

}  // namespace

QuadratureResult lemma_B1_finiteness(double b, IncrementOrder order, const QuadratureOptions& opt) {
    check_b1(b, order);
    const double p = b - 3.0;
    const QuadratureOptions in = inner_options(opt);
    InnerErrorTracker tracker;
    // Shell of radius rho around the origin; `lower` = |rho - 1| is passed
    // separately so that it keeps full precision when rho is next to 1, where
    // the inner integrand q^{p+1} is not integrable at q = 0.
    auto shell = [&](double rho, double lower) {
        QuadratureResult r;
        const double Fr = std::pow(rho, p);
        const double m2 = 2.0 * rho * rho + 2.0;
        // q^{p+1} in one power so that tiny q does not overflow q^p.
        auto g = [&](double q) {
            if (order == IncrementOrder::First) return std::pow(q, p + 1.0) - Fr * q;
            return std::pow(q, p + 1.0) + (std::pow(std::max(m2 - q * q, 0.0), 0.5 * p) - 2.0 * Fr) * q;
        };
        if (rho < 1e-6) {
            // The q interval has width O(rho), too narrow to sample; the
            // integrand is constant on it to relative O(rho).
            const double width = order == IncrementOrder::First ? 2.0 * rho : rho + 0.5 * rho * rho;
            r = {width * std::abs(g(1.0)), width * std::abs(g(1.0)) * 4.0 * rho, 1};
            if (order == IncrementOrder::Second) r = r.scaled(2.0);
            tracker.record(r);
            return 2.0 * kPi * rho * r.value;
        }
        // Next to the singular point the integrand varies on the scale of
        // `lower` itself; a logarithmic variable resolves that layer.
        constexpr double kLayer = 0.25;
        double start = lower;
        if (lower < kLayer) {
            auto gl = [&](double y) {
                const double q = std::exp(y);
                if (order == IncrementOrder::First) return std::exp((p + 2.0) * y) - Fr * q * q;
                return std::exp((p + 2.0) * y) + (std::pow(std::max(m2 - q * q, 0.0), 0.5 * p) - 2.0 * Fr) * q * q;
            };
            r += integrate_abs(gl, std::log(lower), std::log(kLayer), in, 12);
            start = kLayer;
        }
        if (order == IncrementOrder::First) {
            r += split_at(g, start, rho, rho + 1.0, in);
        } else {
            r += integrate_abs(g, start, std::sqrt(rho * rho + 1.0), in, 24);
            r = r.scaled(2.0);
        }
        tracker.record(r);
        return 2.0 * kPi * rho * r.value;
    };
    auto plain = [&](double rho) { return shell(rho, std::abs(rho - 1.0)); };
    QuadratureResult total = integrate_tanh_sinh(plain, 0.0, 0.5, opt);
    // rho = 1 -+ d for d in (0, 1/2]
    total += integrate_tanh_sinh([&](double d) { return shell(1.0 - d, d) + shell(1.0 + d, d); }, 0.0, 0.5, opt);
    total += integrate_tanh_sinh(plain, 1.5, 2.0, opt);
    auto log_shell = [&](double y) {
        const double rho = std::exp(y);
        return rho * plain(rho);
    };
    QuadratureOptions far_opt = opt;
    far_opt.max_depth = std::min(opt.max_depth, 15u);
    total += integrate_gk(log_shell, std::log(2.0), std::log(kB1Far), far_opt);
    const double tail = b1_far_tail(b, order, kB1Far);
    total.value += tail;
    // The next Taylor order has the opposite parity in the angle, so its
    // first-order effect on the angular mean of |.| cancels: O(1/R^2).
    total.abs_error_estimate += std::abs(tail) * 10.0 / (kB1Far * kB1Far);
    return combine_nested(total, tracker);
}

QuadratureResult lemma_B1_directional(double b, IncrementOrder order, const Vec3& e_in, std::size_t samples,
                                      std::uint64_t seed) {
    check_b1(b, order);
    const double en = e_in.norm();
    if (!(en > 0.0)) throw DomainError("direction must be nonzero");
    if (samples < 2) throw DomainError("need at least two samples");
    const Vec3 e = e_in * (1.0 / en);
    const double p = b - 3.0;
    auto k = [p](const Vec3& w) { return std::pow(w.norm(), p); };
    auto increment = [&](const Vec3& x) {
        const double r2 = x.dot(x);
        if (r2 < 1e4) return order == IncrementOrder::First ? k(x + e) - k(x) : k(x - e) - 2.0 * k(x) + k(x + e);
        // Far away the differences cancel to many digits. With
        // |x +- e|^p = |x|^p exp(a_+-), a_+- = (p/2) log1p((1 +- 2 x.e) / |x|^2):
        const double xe = x.dot(e);
        const double ap = 0.5 * p * std::log1p((1.0 + 2.0 * xe) / r2);
        const double base = std::pow(r2, 0.5 * p);
        if (order == IncrementOrder::First) return base * std::expm1(ap);
        const double am = 0.5 * p * std::log1p((1.0 - 2.0 * xe) / r2);
        // a_+ + a_- without cancellation; odd powers of a_+- nearly cancel,
        // the series error is O(|x|^{-4}) relative.
        const double sum = 0.5 * p * std::log1p((2.0 + (1.0 - 4.0 * xe * xe) / r2) / r2);
        const double sq = ap * ap + am * am;
        const double cube = sum * (sq - ap * am);
        return base * (sum + 0.5 * sq + cube / 6.0 + (ap * ap * ap * ap + am * am * am * am) / 24.0);
    };
    // Mixture of isotropic densities around each singular point. The radius
    // about a centre is beta-prime(a, s): r^{a-1} (1 + r)^{-a-s} / B(a, s).
    // a = b keeps |increment|^2 / density integrable at the centres and s
    // below the decay margin keeps it integrable at infinity.
    std::vector<Vec3> centres{{0.0, 0.0, 0.0}, -e};
    if (order == IncrementOrder::Second) centres.push_back(e);
    const double a = b;
    const double s = order == IncrementOrder::First ? std::min(1.0, 1.0 - b) : std::min(1.0, 2.0 - b);
    const double log_beta = std::lgamma(a) + std::lgamma(s) - std::lgamma(a + s);
    auto radial_density = [&](double r) {
        return std::exp((a - 1.0) * std::log(r) - (a + s) * std::log1p(r) - log_beta) / (4.0 * kPi * r * r);
    };
    std::mt19937_64 gen(seed);
    std::gamma_distribution<double> ga(a, 1.0);
    std::gamma_distribution<double> gs(s, 1.0);
    std::normal_distribution<double> normal;
    std::uniform_int_distribution<std::size_t> pick(0, centres.size() - 1);
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        Vec3 dir{normal(gen), normal(gen), normal(gen)};
        dir = dir * (1.0 / dir.norm());
        const double r = ga(gen) / gs(gen);
        const Vec3 w = centres[pick(gen)] + r * dir;
        double q = 0.0;
        for (const auto& c : centres) q += radial_density((w - c).norm());
        q /= static_cast<double>(centres.size());
        const double v = std::abs(increment(w)) / q;
        const double d = v - mean;
        mean += d / static_cast<double>(i + 1);
        m2 += d * (v - mean);
    }
    const double se = std::sqrt(m2 / static_cast<double>(samples - 1) / static_cast<double>(samples));
    return {mean, se, samples};
}

LemmaReport lemma_B1_report(double b, IncrementOrder order, std::span<const Vec3> directions, std::size_t samples,
                            std::uint64_t seed) {
    LemmaReport rep;
    rep.lemma = order == IncrementOrder::First ? "B1_first" : "B1_second";
    rep.params = {{"b", b}};
    rep.bound_form = "finite";
    const QuadratureResult radial = lemma_B1_finiteness(b, order);
    rep.values.push_back(radial);
    rep.value = radial.value;
    rep.error = radial.abs_error_estimate;
    double worst_rel = 0.0;
    double worst_z = 0.0;
    for (std::size_t i = 0; i < directions.size(); ++i) {
        const QuadratureResult mc = lemma_B1_directional(b, order, directions[i], samples, seed + i);
        rep.values.push_back(mc);
        worst_rel = std::max(worst_rel, std::abs(mc.value - radial.value) / radial.value);
        worst_z = std::max(worst_z, std::abs(mc.value - radial.value) / std::hypot(mc.abs_error_estimate, radial.abs_error_estimate));
    }
    rep.params.emplace_back("anisotropy", worst_rel);
    rep.params.emplace_back("anisotropy_z", worst_z);
    rep.converged = radial.relative_error() < 1e-5;
    rep.satisfied = rep.converged && std::isfinite(rep.value);
    std::ostringstream os;
    os << "max relative spread over " << directions.size() << " directions: " << worst_rel << " (" << worst_z
       << " standard errors)";
    rep.note = os.str();
    return rep;
}

}  // namespace wave3::quadrature
