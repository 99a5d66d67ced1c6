#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "wave3/field_simulator.hpp"
#include "wave3/gaussian_exact.hpp"

using namespace wave3;
using namespace wave3::simulator;
using doctest::Approx;

namespace {

kernel::InitialData bump_data(double amplitude, double velocity, double width) {
    kernel::InitialData d;
    d.v0 = kernel::gaussian_bump(amplitude, width);
    d.v0_tilde = kernel::gaussian_bump(velocity, width).value;
    return d;
}

double max_abs_diff(const RealGrid& a, const RealGrid& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

RealGrid physical(const SpectralLattice& lat, const ModeArray& m) {
    auto g = lat.make_real();
    lat.backward(m, g);
    return g;
}

}  // namespace

TEST_CASE("nonlinearity parsing") {
    CHECK(Nonlinearity::parse("sin")(0.3) == Approx(std::sin(0.3)));
    CHECK(Nonlinearity::parse("cos").lipschitz == 1.0);
    CHECK(Nonlinearity::parse("affine(2,1)")(3.0) == Approx(7.0));
    CHECK(Nonlinearity::parse("const(2.5)").constant.value() == 2.5);
    CHECK(Nonlinearity::parse("0").constant.value() == 0.0);
    CHECK_THROWS_AS(Nonlinearity::parse("tanh"), ConfigError);
    CHECK_THROWS_AS(Nonlinearity::parse("affine(2)"), ConfigError);
}

TEST_CASE("noise window is a smooth step") {
    NoiseWindow w{{0, 0, 0}, 1.0, 0.25};
    CHECK(w({0.5, 0, 0}) == 1.0);
    CHECK(w({1.3, 0, 0}) == 0.0);
    double prev = 1.0;
    for (double r = 1.0; r <= 1.25; r += 0.01) {
        CHECK(w({r, 0, 0}) <= prev);
        prev = w({r, 0, 0});
    }
}

TEST_CASE("lattice construction and transforms") {
    CHECK_THROWS_AS(SpectralLattice(3.0, 16, Cutoff::Dealias23, 1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(SpectralLattice(4.0, 15), ConfigError);
    SpectralLattice lat(4.0, 16);
    auto g = sample_on_grid(lat, [](const Vec3& x) { return std::exp(-x.dot(x)) + 0.1 * x.x; });
    auto m = lat.make_modes();
    lat.forward(g, m);
    CHECK(lat.hermitian_defect(m) < 1e-14);
    CHECK(max_abs_diff(physical(lat, m), g) < 1e-13);
    const auto q = discrete_density(lat, covariance::CovarianceSpec(1.0, 1.0));
    CHECK(q[0] == 0.0);
    std::size_t leaked = 0;
    for (std::size_t i = 0; i < q.size(); ++i) leaked += !lat.band()[i] && q[i] != 0.0;
    CHECK(leaked == 0);
    CHECK(grid_l2_norm(lat, [&] {
              auto one = lat.make_modes();
              for (auto& z : one) z = 0;
              one[0] = 1.0;
              return one;
          }()) == Approx(8.0));
}

TEST_CASE("noise increments: covariance, mean, hermitian symmetry, dt scaling") {
    SpectralLattice lat(4.0, 16);
    const auto q = discrete_density(lat, covariance::CovarianceSpec(1.0, 1.0));
    const double dt = 0.01;
    double ratio = 0, mean_re = 0;
    std::size_t count = 0, nonzero_outside = 0;
    for (std::uint32_t step = 0; step < 40; ++step) {
        const auto w = synthesize_noise_increment(lat, q, dt, {5, 0, step, 0});
        CHECK(lat.hermitian_defect(w) < 1e-15);
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (q[i] == 0.0) {
                nonzero_outside += std::abs(w[i]) != 0.0;
                continue;
            }
            if (lat.partner()[i] != i || lat.multiplicity()[i] == 2) {
                ratio += std::norm(w[i]) / (dt * q[i]);
                mean_re += w[i].real() / std::sqrt(dt * q[i]);
                ++count;
            }
        }
    }
    CHECK(nonzero_outside == 0);
    CHECK(ratio / count == Approx(1.0).epsilon(0.03));
    CHECK(std::abs(mean_re / count) < 4.0 / std::sqrt(count));
    const auto a = synthesize_noise_increment(lat, q, dt, {5, 1, 3, 0});
    const auto b = synthesize_noise_increment(lat, q, 4 * dt, {5, 1, 3, 0});
    double worst = 0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(b[i] - 2.0 * a[i]));
    CHECK(worst <= 1e-15);
}

TEST_CASE("free propagation: two half steps equal one step and energy is conserved") {
    SpectralLattice lat(6.0, 24);
    ModelSpec model;
    model.sigma = Nonlinearity::constant_value(0.0);
    model.initial = bump_data(1.0, 0.5, 0.5);
    DuhamelStepper st(model, lat, 0.01);
    auto s = st.initial_state();
    auto h = s;
    propagate_free(lat, s, 0.3);
    propagate_free(lat, h, 0.15);
    propagate_free(lat, h, 0.15);
    CHECK(max_abs_diff(physical(lat, s.u), physical(lat, h.u)) < 1e-13);
    auto e = st.initial_state();
    const double e0 = mode_energy(lat, e);
    for (int i = 0; i < 1000; ++i) st.step(e, 0, 0);
    CHECK(std::abs(mode_energy(lat, e) - e0) <= 1e-12 * e0);
    CHECK(lat.hermitian_defect(e.u) < 1e-13);
}

TEST_CASE("linear solver matches the homogeneous solution") {
    SpectralLattice lat(6.0, 32, Cutoff::Dealias23, 1.0, 1.0);
    ModelSpec model;
    model.sigma = Nonlinearity::constant_value(0.0);
    model.initial = bump_data(1.0, 0.7, 0.5);
    RunOptions ro;
    ro.t_end = 1.0;
    ro.dt = 0.05;
    ro.probes = {{16, 16, 16}, {18, 16, 16}, {16, 19, 17}};
    const auto res = run(model, lat, ro);
    double worst = 0;
    for (std::size_t t = 0; t < res.times.size(); ++t)
        for (std::size_t p = 0; p < res.probes.size(); ++p) {
            const double ref = kernel::homogeneous_solution(res.times[t], res.probes[p].position, *model.initial);
            worst = std::max(worst, std::abs(res.values[0][t][p] - ref));
        }
    CHECK(worst < 1e-4);
}

TEST_CASE("refining dt with more noise substeps keeps the noise path") {
    SpectralLattice lat(4.0, 16);
    ModelSpec model;  // sigma = 1: the scheme is exact per mode
    RunOptions a;
    a.t_end = 0.4;
    a.dt = 0.1;
    a.noise_substeps = 2;
    a.keep_final_fields = true;
    RunOptions b = a;
    b.dt = 0.05;
    b.noise_substeps = 1;
    const auto ra = run(model, lat, a), rb = run(model, lat, b);
    CHECK(max_abs_diff(ra.final_fields[0], rb.final_fields[0]) < 1e-12);
}

TEST_CASE("replicas are independent of batching and threads") {
    SpectralLattice lat(4.0, 16);
    ModelSpec model;
    model.sigma = Nonlinearity::sine();
    model.b = Nonlinearity::cosine();
    RunOptions all;
    all.t_end = 0.2;
    all.dt = 0.05;
    all.replicas = 3;
    all.keep_final_fields = true;
    all.seed = 4;
    RunOptions one = all;
    one.replicas = 1;
    one.first_replica = 2;
    RunOptions threaded = all;
    threaded.threads = 3;
    const auto ra = run(model, lat, all), r1 = run(model, lat, one), rt = run(model, lat, threaded);
    CHECK(max_abs_diff(ra.final_fields[2], r1.final_fields[0]) == 0.0);
    for (int r = 0; r < 3; ++r) CHECK(max_abs_diff(ra.final_fields[r], rt.final_fields[r]) == 0.0);
    CHECK(max_abs_diff(ra.final_fields[0], ra.final_fields[1]) > 0.0);
}

TEST_CASE("sigma = 1 lattice variance matches the exact lattice sum") {
    SpectralLattice lat(4.0, 16);
    ModelSpec model;
    RunOptions ro;
    ro.t_end = 1.0;
    ro.dt = 0.1;
    ro.replicas = 300;
    ro.probes = {{8, 8, 8}};
    ro.probe_every = 10;
    const auto res = run(model, lat, ro);
    double m = 0, m2 = 0;
    for (const auto& rep : res.values) {
        m += rep.back()[0];
        m2 += rep.back()[0] * rep.back()[0];
    }
    const double n = static_cast<double>(ro.replicas);
    const double var = (m2 - m * m / n) / (n - 1);
    gaussian::GaussianCaseParams p;
    const double exact = gaussian::lattice_point_variance(p, lat, 1.0);
    CHECK(std::abs(var - exact) < 4.0 * exact * std::sqrt(2.0 / (n - 1)));
}

TEST_CASE("configuration errors") {
    SpectralLattice lat(4.0, 16);
    ModelSpec model;
    RunOptions ro;
    ro.t_end = 0.25;
    ro.dt = 0.1;
    CHECK_THROWS_AS(run(model, lat, ro), ConfigError);
    ro.t_end = 1.5;
    ro.dt = 0.5;
    CHECK_THROWS_AS(run(model, lat, ro), ConfigError);
    const std::vector<std::array<int, 3>> far{{0, 0, 0}};
    CHECK_THROWS_AS(check_probes(lat, far), ConfigError);
    ModelSpec moll;
    moll.mollify_n = 4;
    CHECK_THROWS_AS(DuhamelStepper(moll, lat, 0.1), UnsupportedError);
}

TEST_CASE("non-finite state raises StepError with the state") {
    SpectralLattice lat(4.0, 16);
    ModelSpec model;
    model.sigma = Nonlinearity::constant_value(0.0);
    model.b = Nonlinearity::affine(1e200, 0.0);
    model.initial = bump_data(1.0, 0.0, 0.5);
    DuhamelStepper st(model, lat, 0.1);
    auto s = st.initial_state();
    bool thrown = false;
    try {
        for (int i = 0; i < 10; ++i) st.step(s, 0, 0);
    } catch (const StepError& e) {
        thrown = true;
        CHECK(e.state().u.size() == lat.mode_size());
    }
    CHECK(thrown);
}

TEST_CASE("history solver: Picard sweeps reproduce the causal scheme") {
    SpectralLattice lat(4.0, 16);
    ModelSpec model;
    model.sigma = Nonlinearity::sine();
    model.b = Nonlinearity::cosine();
    model.initial = bump_data(0.5, 0.0, 0.5);
    HistoryOptions causal;
    causal.t_end = 0.5;
    causal.dt = 0.1;
    causal.seed = 2;
    HistoryOptions picard = causal;
    picard.picard_sweeps = 5;
    const auto a = history_solve(model, lat, causal, 0);
    const auto b = history_solve(model, lat, picard, 0);
    CHECK(max_abs_diff(physical(lat, a.u_final), physical(lat, b.u_final)) < 1e-12);
    CHECK(b.sweep_changes.size() == 5);
    CHECK(b.sweep_changes.back() < b.sweep_changes.front());
}

TEST_CASE("mollified solutions approach the unmollified one") {
    SpectralLattice lat(4.0, 16);
    ModelSpec model;
    HistoryOptions h;
    h.t_end = 0.5;
    h.dt = 0.05;
    const std::vector<int> ns{2, 8, 32};
    const auto cmp = compare_mollified(model, lat, ns, h, 3);
    for (const auto& d : cmp.diff) {
        CHECK(d[0] > d[1]);
        CHECK(d[1] > d[2]);
    }
    const std::vector<int> self{0};
    CHECK(compare_mollified(model, lat, self, h, 1).diff[0][0] == 0.0);
}
