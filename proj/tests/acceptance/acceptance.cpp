// Acceptance checks. `wave3_acceptance N` runs criterion N, prints one
// "PASS criterion N: ..." or "FAIL criterion N: ..." line after its details
// and exits 0 on pass, 1 on failure.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "wave3/config.hpp"
#include "wave3/field_simulator.hpp"
#include "wave3/gaussian_exact.hpp"
#include "wave3/lemma_oracles.hpp"
#include "wave3/power_fit.hpp"
#include "wave3/regularity.hpp"

using namespace wave3;

namespace {

struct Outcome {
    bool pass = false;
    std::string summary;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

unsigned threads() { return config::resolve_threads(0); }

bool full_run() {
    const char* v = std::getenv("WAVE3_FULL_ACCEPTANCE");
    return v && std::string(v) == "1";
}

// Sharp spatial exponent.
Outcome criterion1() {
    const auto xs = geometric_grid(1e-3, 1e-1, 9);
    bool ok = true;
    std::string s;
    for (double beta : {0.5, 1.0, 1.5}) {
        gaussian::GaussianCaseParams p;
        p.beta = beta;
        const auto c = gaussian::spatial_curve(p, xs, {}, threads());
        const double dev = std::abs(c.fit.slope - (2.0 - beta));
        std::printf("  beta %.2f slope %.5f (expected %.2f, stderr %.1e, r2 %.6f)\n", beta, c.fit.slope, 2.0 - beta,
                    c.fit.stderr_slope, c.fit.r2);
        ok = ok && dev <= 0.03;
        s += fmt(" beta=%.1f:%.4f", beta, c.fit.slope);
    }
    return {ok, "spatial slopes within 0.03 of 2-beta:" + s};
}

// Sharp time exponent, total and new-noise part.
Outcome criterion2() {
    const auto gaps = geometric_grid(1e-3, 1e-1, 9);
    bool ok = true;
    std::string s;
    for (double beta : {0.5, 1.0, 1.5}) {
        gaussian::GaussianCaseParams p;
        p.beta = beta;
        p.t0 = 0.5;
        const auto total = gaussian::time_curve(p, gaps, false, {}, threads());
        const auto t1 = gaussian::time_curve(p, gaps, true, {}, threads());
        std::printf("  beta %.2f total slope %.5f (expected %.2f), new-noise slope %.5f (expected %.2f)\n", beta,
                    total.fit.slope, 2.0 - beta, t1.fit.slope, 3.0 - beta);
        ok = ok && std::abs(total.fit.slope - (2.0 - beta)) <= 0.05 && std::abs(t1.fit.slope - (3.0 - beta)) <= 0.05;
        s += fmt(" beta=%.1f:%.4f/%.4f", beta, total.fit.slope, t1.fit.slope);
    }
    return {ok, "time slopes within 0.05 of 2-beta and new-noise part within 0.05 of 3-beta:" + s};
}

// Exact t^{3-beta} scaling of the weighted energy.
Outcome criterion3() {
    bool ok = true;
    double worst_spread = 0.0, pi2_dev = 0.0;
    for (double beta : {0.5, 1.0, 1.5}) {
        double lo = INFINITY, hi = -INFINITY;
        for (double t : {0.25, 0.5, 1.0, 2.0}) {
            const auto w = quadrature::weighted_energy(beta, t);
            const double r = w.value / std::pow(t, 3.0 - beta);
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        const double spread = (hi - lo) / hi;
        worst_spread = std::max(worst_spread, spread);
        std::printf("  beta %.2f constant %.12g relative spread %.2e\n", beta, hi, spread);
        ok = ok && spread <= 1e-6;
        if (beta == 1.0) {
            pi2_dev = std::abs(hi - M_PI * M_PI) / (M_PI * M_PI);
            std::printf("  beta 1 constant vs pi^2: relative deviation %.2e\n", pi2_dev);
            ok = ok && pi2_dev <= 1e-6;
        }
    }
    return {ok, fmt("W(t)/t^(3-beta) spread %.2e (<= 1e-6), beta=1 constant vs pi^2 %.2e (<= 1e-6)", worst_spread,
                    pi2_dev)};
}

// Riesz semigroup constant on random pairs.
Outcome criterion4() {
    std::mt19937_64 gen(20240611);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    std::vector<std::pair<Vec3, Vec3>> pts;
    while (pts.size() < 5) {
        Vec3 x{coord(gen), coord(gen), coord(gen)}, y{coord(gen), coord(gen), coord(gen)};
        if ((x - y).norm() > 0.05) pts.emplace_back(x, y);
    }
    quadrature::QuadratureOptions qo;
    qo.rel_tol = 1e-7;
    bool ok = true;
    double worst = 0.0;
    for (auto [a, b] : std::vector<std::pair<double, double>>{{1.0, 1.0}, {0.5, 0.9}, {1.2, 0.6}}) {
        const double c = covariance::riesz_semigroup_constant(a, b);
        double dev_ab = 0.0;
        for (const auto& [x, y] : pts) {
            const double d = (x - y).norm();
            const auto v = quadrature::riesz_convolution(a, b, x, y, qo);
            dev_ab = std::max(dev_ab, std::abs(v.value * std::pow(d, 3.0 - a - b) - c) / c);
        }
        std::printf("  (a, b) = (%.1f, %.1f) constant %.10g worst relative deviation %.2e\n", a, b, c, dev_ab);
        worst = std::max(worst, dev_ab);
    }
    ok = worst <= 1e-3;
    const double c11 = covariance::riesz_semigroup_constant(1.0, 1.0);
    const double pi3_dev = std::abs(c11 - M_PI * M_PI * M_PI) / (M_PI * M_PI * M_PI);
    std::printf("  C(1,1) vs pi^3: relative deviation %.2e\n", pi3_dev);
    ok = ok && pi3_dev <= 1e-3;
    return {ok, fmt("convolution / |x-y|^(a+b-3) vs constant worst %.2e (<= 1e-3), C(1,1) vs pi^3 %.2e", worst,
                    pi3_dev)};
}

// Linear fit y = a + b x, returning r^2.
double linear_r2(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / n, my += y[i] / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy * sxy / (sxx * syy);
}

// Lemma exponent suite and exact zeros at degenerate inputs.
Outcome criterion5() {
    using covariance::CovarianceSpec;
    quadrature::OracleOptions oo;
    oo.threads = threads();
    const auto seps = geometric_grid(1e-3, 1e-1, 9);
    // 10^-2 .. 10^-1 is one decade; the estimators need 1.5.
    const auto seps_b3 = geometric_grid(std::pow(10.0, -2.5), 1e-1, 9);
    const auto gaps = geometric_grid(1e-3, 1e-1, 9);
    const CovarianceSpec riesz05(0.5, 1.0), riesz1(1.0, 1.0), riesz15(1.5, 1.0);
    const CovarianceSpec gauss1(1.0, 1.0, covariance::GaussianEnvelope{1.0});

    std::vector<quadrature::LemmaReport> reps;
    reps.push_back(quadrature::lemma_B2_oracle(riesz1, 0.95, seps, oo));
    reps.push_back(quadrature::lemma_B2_oracle(riesz15, 0.45, seps, oo));
    reps.push_back(quadrature::lemma_B3_oracle(riesz05, 1.0, seps_b3, oo));
    reps.push_back(quadrature::lemma_B3_oracle(gauss1, 0.95, seps, oo));
    reps.push_back(quadrature::lemma_B5_oracle(riesz1, 0.85, gaps, oo));
    reps.push_back(quadrature::lemma_B5_oracle(riesz05, 0.95, gaps, oo));
    reps.push_back(quadrature::lemma_B6_oracle(riesz1, 0.95, gaps, oo));
    reps.push_back(quadrature::lemma_B6_oracle(riesz15, 0.45, gaps, oo));

    const char* labels[] = {"beta 1", "beta 1.5", "beta 0.5", "gaussian envelope beta 1",
                            "beta 1", "beta 0.5", "beta 1",   "beta 1.5"};
    bool ok = true;
    std::string failed;
    for (const auto& r : reps) {
        std::printf("  %s %s: slope %.4f stderr %.4f slope-2se %.4f claimed %.2f converged %d -> %s\n",
                    r.lemma.c_str(), labels[&r - reps.data()], r.fit->slope, r.fit->stderr_slope,
                    r.fit->slope - 2.0 * r.fit->stderr_slope, *r.claimed_alpha, static_cast<int>(r.converged),
                    r.satisfied ? "satisfied" : "NOT satisfied");
        if (!r.satisfied || !r.converged) {
            ok = false;
            failed += fmt(" %s %s (alpha=%.2f, slope-2se=%.4f)", r.lemma.c_str(), labels[&r - reps.data()], *r.claimed_alpha,
                          r.fit->slope - 2.0 * r.fit->stderr_slope);
        }
    }

    // Shape of the B2 integral for beta = 1: I(h)/h against log(1/h).
    {
        const auto& r = reps.front();
        std::vector<double> lx, ratio;
        for (std::size_t i = 0; i < r.abscissa.size(); ++i) {
            lx.push_back(std::log(1.0 / r.abscissa[i]));
            ratio.push_back(r.values[i].value / r.abscissa[i]);
        }
        std::printf("  B2 beta 1: r2 of I(h)/h linear in log(1/h) = %.6f (h log(1/h) behaviour)\n",
                    linear_r2(lx, ratio));
    }

    // Finite constants without an exponent claim.
    const auto b4 = quadrature::lemma_B4_oracle(riesz1, quadrature::default_B4_grid(1.0), oo);
    std::printf("  B4 beta 1: max %.6g finite %d converged %d\n", b4.value, static_cast<int>(std::isfinite(b4.value)),
                static_cast<int>(b4.converged));
    ok = ok && std::isfinite(b4.value) && b4.converged;
    for (auto [b, order] : std::vector<std::pair<double, quadrature::IncrementOrder>>{
             {0.5, quadrature::IncrementOrder::First},
             {0.99, quadrature::IncrementOrder::First},
             {1.5, quadrature::IncrementOrder::Second}}) {
        const auto v = quadrature::lemma_B1_finiteness(b, order);
        const bool fin = std::isfinite(v.value) && v.abs_error_estimate <= 1e-5 * std::abs(v.value);
        std::printf("  B1 %s b %.2f: %.8g +- %.1e\n", order == quadrature::IncrementOrder::First ? "first" : "second",
                    b, v.value, v.abs_error_estimate);
        ok = ok && fin;
    }

    // Degenerate inputs.
    bool zeros = true;
    for (double s : {0.25, 0.5, 1.0}) {
        zeros = zeros && quadrature::lemma_B2_integral(riesz1, s, 0.0).value == 0.0;
        zeros = zeros && quadrature::lemma_B3_integral(riesz1, s, 0.0).value == 0.0;
        zeros = zeros && quadrature::lemma_B3_integral(gauss1, s, 0.0).value == 0.0;
        zeros = zeros && quadrature::lemma_B5_integral(riesz1, s, s).value == 0.0;
        zeros = zeros && quadrature::lemma_B6_integral(riesz15, s, s).value == 0.0;
    }
    std::printf("  degenerate x=y and t=t_bar inputs exactly 0: %d\n", static_cast<int>(zeros));
    ok = ok && zeros;
    if (ok) return {true, "every fitted exponent minus 2 stderr >= claimed alpha, B1/B4 finite, degenerate inputs 0"};
    return {false, "bound not met by" + (failed.empty() ? std::string(" finiteness or zero checks") : failed)};
}

// Discrete isometry: sigma = 1 probe variance vs the lattice sum.
Outcome criterion6() {
    simulator::SpectralLattice lat(4.0, 64, simulator::Cutoff::Dealias23, 1.0, 1.0);
    simulator::ModelSpec model;
    simulator::RunOptions ro;
    ro.dt = 0.05;
    ro.replicas = 200;
    ro.seed = 6;
    ro.threads = threads();
    ro.probes = {{32, 32, 32}};
    const auto res = simulator::run(model, lat, ro);
    double s2 = 0.0, s4 = 0.0;
    const double n = static_cast<double>(res.values.size());
    for (const auto& rep : res.values) {
        const double v = rep.back()[0];
        s2 += v * v;
        s4 += v * v * v * v;
    }
    // The mean is exactly zero, so E u^2 is the variance.
    const double var = s2 / n;
    const double se = std::sqrt((s4 / n - var * var) / (n - 1.0));
    gaussian::GaussianCaseParams p;
    const double exact = gaussian::lattice_point_variance(p, lat, 1.0);
    const double z = (var - exact) / se;
    std::printf("  t=%.2f sample variance %.6g lattice sum %.6g standard error %.3g z %.3f\n", res.times.back(), var,
                exact, se, z);
    return {std::abs(z) <= 3.0, fmt("probe variance %.5g vs lattice %.5g, %.2f standard errors (<= 3)", var, exact,
                                    std::abs(z))};
}

// Linear solver: per-mode energy and the closed-form solution.
Outcome criterion7() {
    simulator::SpectralLattice lat(6.0, 64, simulator::Cutoff::Dealias23, 1.0, 1.0);
    simulator::ModelSpec model;
    model.sigma = simulator::Nonlinearity::constant_value(0.0);
    kernel::InitialData d;
    d.v0 = kernel::gaussian_bump(1.0, 0.5);
    d.v0_tilde = kernel::gaussian_bump(0.7, 0.5).value;
    model.initial = d;

    simulator::DuhamelStepper st(model, lat, 0.001);
    auto s = st.initial_state();
    const auto s0 = s;
    const auto& k = lat.k_norm();
    auto mode_e = [&](const simulator::FieldState& f, std::size_t i) {
        return k[i] * k[i] * std::norm(f.u[i]) + std::norm(f.v[i]);
    };
    double e_max = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) e_max = std::max(e_max, mode_e(s0, i));
    for (int i = 0; i < 1000; ++i) st.step(s, 0, 0);
    double worst_mode = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
        const double e0 = mode_e(s0, i);
        // Modes below 1e-200 of the largest are underflow noise.
        if (e0 <= 1e-200 * e_max) continue;
        worst_mode = std::max(worst_mode, std::abs(mode_e(s, i) - e0) / e0);
    }
    const double total = std::abs(simulator::mode_energy(lat, s) - simulator::mode_energy(lat, s0)) /
                         simulator::mode_energy(lat, s0);
    std::printf("  1000 steps of dt 0.001: worst per-mode relative energy change %.2e, total %.2e\n", worst_mode, total);

    simulator::RunOptions ro;
    ro.t_end = 1.0;
    ro.dt = 0.05;
    ro.probes = {{32, 32, 32}, {35, 32, 32}, {32, 38, 30}, {40, 27, 33}};
    const auto res = simulator::run(model, lat, ro);
    double worst = 0.0;
    for (std::size_t t = 0; t < res.times.size(); ++t)
        for (std::size_t q = 0; q < res.probes.size(); ++q) {
            const double ref = kernel::homogeneous_solution(res.times[t], res.probes[q].position, d);
            worst = std::max(worst, std::abs(res.values[0][t][q] - ref));
        }
    std::printf("  probes vs closed form over %zu times: worst absolute difference %.2e\n", res.times.size(), worst);
    const bool ok = worst_mode <= 1e-12 && worst <= 1e-4;
    return {ok, fmt("per-mode energy drift %.2e (<= 1e-12), probe error %.2e (<= 1e-4)", worst_mode, worst)};
}

regularity::ExponentFit spatial_fit(const simulator::SpectralLattice& lat, const simulator::RunResult& r) {
    regularity::FieldSamples fs;
    fs.n = lat.n();
    fs.dx = lat.dx();
    fs.times = {r.times.back()};
    for (const auto& g : r.final_fields) fs.fields.push_back({g});
    std::vector<double> lags;
    // The CLI default lag list, extended geometrically up to n/2.
    for (int c : {1, 2, 3, 5, 7, 10, 15, 22, 32, 45, 64})
        if (c <= lat.n() / 2) lags.push_back(c * lat.dx());
    return regularity::structure_function(fs, regularity::Axis::Space, 2.0, lags);
}

// Nonlinear regularity window with a Gaussian control.
Outcome criterion8() {
    const bool full = full_run();
    const int n = full ? 128 : 64;
    const std::size_t replicas = full ? 100 : 20;
    const double dt = full ? 0.001 : 0.02;
    const double band = full ? 0.10 : 0.08;
    const double control_tol = full ? 0.03 : 0.08;
    const double endpoint = regularity::exponent_window(1.0, 1.0, 1.0, 1.0);

    simulator::SpectralLattice lat(4.0, n, simulator::Cutoff::Dealias23, 1.0, 1.0);
    simulator::RunOptions ro;
    ro.dt = dt;
    ro.replicas = replicas;
    ro.seed = 8;
    ro.threads = threads();
    ro.keep_final_fields = true;

    simulator::ModelSpec nonlinear;
    nonlinear.sigma = simulator::Nonlinearity::sine();
    nonlinear.b = simulator::Nonlinearity::cosine();
    kernel::InitialData d = kernel::InitialData::zero();
    d.v0 = kernel::gaussian_bump(1.0, 0.5);
    nonlinear.initial = d;
    const auto fit = spatial_fit(lat, simulator::run(nonlinear, lat, ro));

    simulator::ModelSpec control;
    const auto cfit = spatial_fit(lat, simulator::run(control, lat, ro));

    std::printf("  %s variant: %d^3, %zu replicas, dt %.3g\n", full ? "full" : "smoke", n, replicas, dt);
    std::printf("  window endpoint %.3f\n", endpoint);
    std::printf("  sigma=sin, b=cos: exponent %.4f stderr %.4f r2 %.5f\n", fit.exponent, fit.exponent_stderr,
                fit.fit.r2);
    std::printf("  sigma=1 control: exponent %.4f stderr %.4f r2 %.5f\n", cfit.exponent, cfit.exponent_stderr,
                cfit.fit.r2);
    const bool ok = std::abs(fit.exponent - endpoint) <= band && std::abs(cfit.exponent - endpoint) <= control_tol;
    return {ok, fmt("%s: nonlinear slope/2 %.4f in [%.2f, %.2f], control %.4f within %.2f of %.2f",
                    full ? "full" : "smoke", fit.exponent, endpoint - band, endpoint + band, cfit.exponent,
                    control_tol, endpoint)};
}

// Mollified solutions approach the unmollified one.
Outcome criterion9() {
    simulator::SpectralLattice lat(4.0, 32, simulator::Cutoff::Dealias23, 1.0, 1.0);
    simulator::ModelSpec model;
    model.sigma = simulator::Nonlinearity::sine();
    model.b = simulator::Nonlinearity::cosine();
    simulator::HistoryOptions h;
    h.dt = 0.025;
    h.seed = 9;
    const std::vector<int> ns{2, 4, 8, 16};
    const auto c = simulator::compare_mollified(model, lat, ns, h, 50, threads());
    std::vector<double> mean(ns.size(), 0.0);
    for (const auto& row : c.diff)
        for (std::size_t i = 0; i < row.size(); ++i) mean[i] += row[i] / c.diff.size();
    for (std::size_t i = 0; i < ns.size(); ++i) std::printf("  n %2d mean ||u_n - u|| %.5g\n", ns[i], mean[i]);
    std::printf("  strictly decreasing in %zu of %zu replicas\n", c.strictly_decreasing, c.diff.size());
    return {c.fraction_decreasing >= 0.95,
            fmt("strictly decreasing in %.1f%% of %zu replicas (>= 95%%)", 100.0 * c.fraction_decreasing,
                c.diff.size())};
}

// Estimator calibration on fields of known exponent.
Outcome criterion10() {
    bool ok = true;
    std::string s;
    const int n = 64;
    const double dx = 1.0 / n;
    for (double hurst : {0.25, 0.5, 0.75}) {
        regularity::FieldSamples fs;
        fs.n = n;
        fs.dx = dx;
        fs.times = {0.0};
        for (int r = 0; r < 4; ++r) fs.fields.push_back({regularity::fractional_lines(n, dx, hurst, 1000 + r)});
        std::vector<double> lags;
        for (int c : {1, 2, 3, 5, 7, 10, 15, 22, 32}) lags.push_back(c * dx);
        regularity::StructureOptions so;
        so.directions = {true, false, false};
        const auto f = regularity::structure_function(fs, regularity::Axis::Space, 2.0, lags, so);
        std::printf("  H %.2f estimate %.4f stderr %.4f\n", hurst, f.exponent, f.exponent_stderr);
        ok = ok && std::abs(f.exponent - hurst) <= 0.03;
        s += fmt(" %.2f->%.4f", hurst, f.exponent);
    }
    return {ok, "recovered exponents within 0.03:" + s};
}

}  // namespace

int main(int argc, char** argv) {
    const std::map<int, std::function<Outcome()>> criteria{
        {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
        {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10},
    };
    if (argc != 2 || !criteria.count(std::atoi(argv[1]))) {
        std::fprintf(stderr, "usage: wave3_acceptance <criterion 1-10>\n");
        return 64;
    }
    const int id = std::atoi(argv[1]);
    Outcome o;
    try {
        o = criteria.at(id)();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", id, o.summary.c_str());
    return o.pass ? 0 : 1;
}
