#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <vector>

#include "wave3/covariance.hpp"
#include "wave3/gaussian_exact.hpp"
#include "wave3/lemma_oracles.hpp"

using namespace wave3;
using namespace wave3::gaussian;
using doctest::Approx;
using GK = boost::math::quadrature::gauss_kronrod<double, 31>;

namespace {

double direct_mode_variance(double k, double t) {
    return GK::integrate([&](double s) { return std::pow(std::sin(s * k) / k, 2); }, 0.0, t, 15, 1e-14);
}

// 2 * 4 pi c int_0^K k^{beta-1} (1 - sin(k x)/(k x)) mv(k, t) dk in unit panels, plus the
// non-oscillating part of the tail beyond K.
double direct_spatial_variance(double beta, double t, double x) {
    const double c = covariance::riesz_density_constant(beta);
    auto f = [&](double k) {
        const double z = k * x;
        const double one_minus_sinc = z < 1e-3 ? z * z / 6.0 - z * z * z * z / 120.0 : 1.0 - std::sin(z) / z;
        return 8.0 * kPi * c * std::pow(k, beta - 1.0) * one_minus_sinc * mode_variance(k, t);
    };
    const double K = 20000.0;
    double sum = 0.0;
    for (double a = 0.0; a < K; a += 1.0) sum += GK::integrate(f, a, a + 1.0, 0, 1e-13);
    return sum + 8.0 * kPi * c * t / 2.0 * std::pow(K, beta - 2.0) / (2.0 - beta);
}

double mc_variance(const std::vector<double>& v, double& se) {
    double m = 0, m2 = 0;
    for (double x : v) m += x;
    m /= v.size();
    for (double x : v) m2 += (x - m) * (x - m);
    const double var = m2 / (v.size() - 1);
    // standard error of the sample variance for a Gaussian
    se = var * std::sqrt(2.0 / (v.size() - 1));
    return var;
}

}  // namespace

TEST_CASE("mode variance against direct time integration") {
    for (double k : {1e-5, 0.5, 3.0, 40.0})
        for (double t : {0.1, 1.0}) CHECK(mode_variance(k, t) == Approx(direct_mode_variance(k, t)).epsilon(1e-11));
    // both sides of the series switch
    const double t = 1.0;
    CHECK(mode_variance(0.999e-3, t) == Approx(direct_mode_variance(0.999e-3, t)).epsilon(1e-12));
    CHECK(mode_variance(1.001e-3, t) == Approx(direct_mode_variance(1.001e-3, t)).epsilon(1e-12));
    CHECK(mode_time_covariance(2.0, 0.7, 0.7) == Approx(mode_variance(2.0, 0.7)));
    CHECK(mode_time_covariance(2.0, 0.4, 0.9) == Approx(mode_time_covariance(2.0, 0.9, 0.4)));
}

TEST_CASE("spatial increment variance against a panel-sum oracle") {
    GaussianCaseParams p;
    p.beta = 1.0;
    for (double x : {1e-2, 1e-1}) {
        const auto r = spatial_increment_variance(p, x);
        CHECK(r.value == Approx(direct_spatial_variance(1.0, 1.0, x)).epsilon(1e-5));
    }
    p.beta = 1.5;
    CHECK(spatial_increment_variance(p, 0.05).value == Approx(direct_spatial_variance(1.5, 1.0, 0.05)).epsilon(1e-5));
}

TEST_CASE("time increment parts") {
    GaussianCaseParams p;
    p.beta = 1.0;
    const auto parts = time_increment_parts(p, 0.5, 0.6);
    CHECK(parts.total.value == Approx(parts.t1.value + parts.t2.value).epsilon(1e-12));
    const double c = covariance::riesz_density_constant(1.0);
    CHECK(parts.t1.value == Approx(c * quadrature::weighted_energy(1.0, 0.1).value).epsilon(1e-9));
    CHECK(time_increment_variance(p, 0.5, 0.5).value == 0.0);
    CHECK_THROWS_AS(time_increment_variance(p, 0.5, 1.5), DomainError);
}

TEST_CASE("frequency split adds up") {
    GaussianCaseParams p;
    const auto s = spatial_frequency_split(p, 0.01);
    CHECK(s.r1.value + s.r2.value + s.r3.value == Approx(s.full.value).epsilon(1e-8));
    CHECK_THROWS_AS(spatial_frequency_split(p, 1.5), DomainError);
}

TEST_CASE("curves recover 2 - beta") {
    for (double beta : {0.5, 1.0, 1.5}) {
        GaussianCaseParams p;
        p.beta = beta;
        const auto xs = geometric_grid(1e-3, 1e-1, 9);
        CHECK(spatial_curve(p, xs).fit.slope == Approx(2.0 - beta).epsilon(0.03 / (2.0 - beta)));
        const auto t1 = time_curve(p, xs, true);
        CHECK(t1.fit.slope == Approx(3.0 - beta).epsilon(1e-6));
    }
}

TEST_CASE("lattice sums against a naive full-grid loop") {
    const double L = 4.0;
    const int N = 12;
    simulator::SpectralLattice lat(L, N);
    GaussianCaseParams p;
    p.beta = 0.8;
    const double c = covariance::riesz_density_constant(p.beta);
    const double dk = 2 * kPi / L;
    const Vec3 lag{0.5, -0.25, 0.0};
    double point = 0, space = 0;
    for (int a = -N / 2; a < N / 2; ++a)
        for (int b = -N / 2; b < N / 2; ++b)
            for (int e = -N / 2; e < N / 2; ++e) {
                if (std::abs(a) > N / 3 || std::abs(b) > N / 3 || std::abs(e) > N / 3) continue;
                if (a == 0 && b == 0 && e == 0) continue;
                const Vec3 k{a * dk, b * dk, e * dk};
                const double w = c * std::pow(k.norm(), p.beta - 3) * dk * dk * dk * mode_variance(k.norm(), 1.0);
                point += w;
                space += w * 2.0 * (1.0 - std::cos(k.dot(lag)));
            }
    CHECK(lattice_point_variance(p, lat, 1.0) == Approx(point).epsilon(1e-12));
    CHECK(lattice_spatial_variance(p, lat, 1.0, lag) == Approx(space).epsilon(1e-12));
}

TEST_CASE("sampler reproduces the lattice second moments") {
    simulator::SpectralLattice lat(4.0, 16);
    GaussianCaseParams p;
    p.beta = 1.0;
    p.t0 = 0.5;
    const GaussianSampler sampler(p, lat, {0.5, 1.0});
    CHECK(sampler.max_jitter() < 1e-8);
    const std::size_t reps = 600;
    std::vector<double> at_point, space_inc, time_inc;
    const std::size_t i0 = lat.real_index(8, 8, 8), i1 = lat.real_index(10, 8, 8);
    for (std::size_t r = 0; r < reps; ++r) {
        const auto s = sampler.sample(3, static_cast<std::uint32_t>(r));
        at_point.push_back(s.fields[1][i0]);
        space_inc.push_back(s.fields[1][i1] - s.fields[1][i0]);
        time_inc.push_back(s.fields[1][i0] - s.fields[0][i0]);
    }
    double se = 0;
    const double v0 = mc_variance(at_point, se);
    CHECK(std::abs(v0 - lattice_point_variance(p, lat, 1.0)) < 4 * se);
    const double v1 = mc_variance(space_inc, se);
    CHECK(std::abs(v1 - lattice_spatial_variance(p, lat, 1.0, {2 * lat.dx(), 0, 0})) < 4 * se);
    const double v2 = mc_variance(time_inc, se);
    CHECK(std::abs(v2 - lattice_time_variance(p, lat, 0.5, 1.0)) < 4 * se);
}

TEST_CASE("sampler is a pure function of seed and replica") {
    simulator::SpectralLattice lat(4.0, 8);
    GaussianCaseParams p;
    const GaussianSampler sampler(p, lat, {1.0});
    const auto a = sampler.sample(9, 2), b = sampler.sample(9, 2), c = sampler.sample(9, 3);
    CHECK(std::equal(a.fields[0].begin(), a.fields[0].end(), b.fields[0].begin()));
    CHECK_FALSE(std::equal(a.fields[0].begin(), a.fields[0].end(), c.fields[0].begin()));
    CHECK_THROWS_AS(GaussianSampler(p, lat, {1.5}), DomainError);
}
