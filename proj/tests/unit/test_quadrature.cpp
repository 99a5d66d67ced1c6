#include <doctest.h>

#include <cmath>
#include <vector>

#include "wave3/lemma_oracles.hpp"
#include "wave3/sphere_rules.hpp"

using namespace wave3;
using namespace wave3::quadrature;
using doctest::Approx;

namespace {
// int_0^inf r^{mu-1} sin^2 r dr = -Gamma(mu) cos(pi mu / 2) / 2^{mu+1}, -2 < mu < 0
double sin2_mellin(double mu) { return -std::tgamma(mu) * std::cos(kPi * mu / 2) / std::pow(2.0, mu + 1); }
}  // namespace

TEST_CASE("basic rules") {
    auto r = integrate_tanh_sinh([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0);
    CHECK(r.value == Approx(2.0).epsilon(1e-12));
    auto g = integrate_gk([](double x) { return std::exp(x); }, 0.0, 1.0);
    CHECK(g.value == Approx(std::exp(1.0) - 1.0).epsilon(1e-13));
    auto t = integrate_power_tail([](double x) { return 1.0 / (x * x); }, 2.0);
    CHECK(t.value == Approx(0.5).epsilon(1e-12));
    auto a = integrate_abs([](double x) { return std::sin(x); }, 0.0, 3.0 * kPi);
    CHECK(a.value == Approx(6.0).epsilon(1e-12));
}

TEST_CASE("narrow intervals keep a relative error estimate") {
    // width 2^-39 at offset 1; the estimate must scale with the width
    const double c = 1.0, h = std::ldexp(1.0, -40);
    auto r = integrate_tanh_sinh([&](double q) { return q * q; }, c - h, c + h);
    CHECK(r.value == Approx(2.0 * h + 2.0 * h * h * h / 3.0).epsilon(1e-12));
    CHECK(r.abs_error_estimate < 1e-10 * r.value);
}

TEST_CASE("oscillatory tail and series acceleration") {
    const double si1 = 0.946083070367183015;
    auto tail = oscillatory_tail({[](double x) { return 1.0 / x; }, 1.0, 0.0}, 1.0);
    CHECK(tail.value == Approx(kPi / 2 - si1).epsilon(1e-9));
    std::vector<double> partial;
    double s = 0;
    for (int k = 0; k < 20; ++k) {
        s += (k % 2 ? -1.0 : 1.0) / (k + 1);
        partial.push_back(s);
    }
    const auto lim = accelerate_alternating(partial);
    CHECK(std::abs(lim.value - std::log(2.0)) <= lim.error);
    CHECK(lim.value == Approx(std::log(2.0)).epsilon(1e-8));
}

TEST_CASE("radial integral of sin^2 r / r^2") {
    RadialIntegral ri;
    ri.full = [](double r) { return std::pow(std::sin(r) / r, 2); };
    ri.smooth_tail = [](double r) { return 0.5 / (r * r); };
    ri.oscillatory.push_back({[](double r) { return -0.5 / (r * r); }, 2.0, kPi / 2});
    ri.max_frequency = 2.0;
    ri.split = radial_split(2.0);
    CHECK(integrate_radial(ri).value == Approx(kPi / 2).epsilon(1e-9));
}

TEST_CASE("weighted energy against the Mellin transform of sin^2") {
    CHECK(weighted_energy(1.0, 1.0).value == Approx(kPi * kPi).epsilon(1e-9));
    for (double beta : {0.5, 1.5}) {
        const double K = 4 * kPi * sin2_mellin(beta - 2.0);
        CHECK(sine_square_energy(beta).value == Approx(K).epsilon(1e-9));
        for (double t : {0.25, 2.0})
            CHECK(weighted_energy(beta, t).value == Approx(K * std::pow(t, 3 - beta) / (3 - beta)).epsilon(1e-8));
    }
    CHECK_THROWS_AS(weighted_energy(1.0, 0.0), DomainError);
    CHECK_THROWS_AS(weighted_energy_with_time_weight(1.5, 1.5, 1.0), DomainError);
}

TEST_CASE("riesz convolution matches the semigroup constant") {
    const Vec3 x{0.2, -0.4, 0.1}, y{-0.3, 0.5, 0.2};
    const double d = (x - y).norm();
    for (auto [a, b] : {std::pair{1.0, 1.0}, std::pair{0.5, 0.9}, std::pair{1.2, 0.6}}) {
        const double v = riesz_convolution(a, b, x, y).value / std::pow(d, a + b - 3);
        CHECK(v == Approx(covariance::riesz_semigroup_constant(a, b)).epsilon(1e-8));
    }
    CHECK_THROWS_AS(riesz_convolution(1.0, 1.0, x, x), DomainError);
}

TEST_CASE("plane wave sphere mean") {
    for (double z : {1e-6, 1e-3, 0.5, 4.0}) CHECK(spherical_mean_plane_wave(z) == Approx(std::sin(z) / z).epsilon(1e-14));
}

TEST_CASE("lebedev rules integrate low-degree monomials") {
    for (int order : available_lebedev_orders()) {
        const auto rule = SphereRule::lebedev(order);
        CHECK(rule.mean([](const Vec3& e) { return e.x * e.x; }) == Approx(1.0 / 3).epsilon(1e-13));
        CHECK(rule.mean([](const Vec3& e) { return std::pow(e.z, 4); }) == Approx(1.0 / 5).epsilon(1e-13));
        CHECK(rule.mean([](const Vec3& e) { return e.x * e.x * e.y * e.y; }) == Approx(1.0 / 15).epsilon(1e-13));
    }
}

TEST_CASE("degenerate separations and gaps give exactly zero") {
    for (double beta : {0.5, 1.0, 1.5}) {
        covariance::CovarianceSpec s(beta, 1.0);
        CHECK(lemma_B2_integral(s, 0.5, 0.0).value == 0.0);
        CHECK(lemma_B3_integral(s, 0.5, 0.0).value == 0.0);
        CHECK(lemma_B5_integral(s, 0.5, 0.5).value == 0.0);
        CHECK(lemma_B6_integral(s, 0.5, 0.5).value == 0.0);
    }
}

TEST_CASE("separation oracle converges and fits its exponent") {
    covariance::CovarianceSpec s(1.5, 1.0);
    const auto seps = geometric_grid(1e-3, 1e-1, 9);
    auto ok = lemma_B2_oracle(s, 0.45, seps);
    CHECK(ok.converged);
    CHECK(ok.satisfied);
    auto bad = lemma_B2_oracle(s, 0.9, seps);
    CHECK(bad.converged);
    CHECK_FALSE(bad.satisfied);
    CHECK(bad.note.find("below alpha") != std::string::npos);
}

TEST_CASE("second-increment oracle on the riesz kernel") {
    covariance::CovarianceSpec s(0.5, 1.0);
    const auto seps = geometric_grid(std::pow(10.0, -2.5), 0.1, 9);
    auto r = lemma_B3_oracle(s, 1.0, seps);
    CHECK(r.converged);
    CHECK(r.satisfied);
}

TEST_CASE("time oracles") {
    covariance::CovarianceSpec s(1.0, 1.0);
    const auto gaps = geometric_grid(1e-3, 1e-1, 9);
    auto r5 = lemma_B5_oracle(s, 0.95, gaps);
    CHECK(r5.converged);
    CHECK(r5.satisfied);
    auto r6 = lemma_B6_oracle(s, 0.95, gaps);
    CHECK(r6.satisfied);
    auto r4 = lemma_B4_oracle(s, default_B4_grid());
    CHECK(r4.satisfied);
    CHECK(r4.value > 0.0);
}

TEST_CASE("finiteness integral: radial reduction against Monte Carlo") {
    for (auto [b, order] : {std::pair{0.5, IncrementOrder::First}, std::pair{1.5, IncrementOrder::Second}}) {
        const auto radial = lemma_B1_finiteness(b, order);
        CHECK(radial.relative_error() < 1e-6);
        const auto mc = lemma_B1_directional(b, order, Vec3{0.6, 0.0, 0.8}, 400000, 5);
        CHECK(std::abs(mc.value - radial.value) < 4.0 * mc.abs_error_estimate);
    }
    CHECK_THROWS_AS(lemma_B1_finiteness(1.0, IncrementOrder::First), DomainError);
}
