#include "wave3/gaussian_exact.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "wave3/covariance.hpp"
#include "wave3/lemma_oracles.hpp"
#include "wave3/parallel.hpp"
#include "wave3/rng.hpp"

namespace wave3::gaussian {

using quadrature::OscillatoryTerm;
using quadrature::RadialIntegral;
using simulator::cplx;

namespace {

// z - sin z, series for small z.
double z_minus_sin(double z) {
    if (std::abs(z) < 1e-2) {
        const double z2 = z * z;
        return z * z2 / 6.0 * (1.0 - z2 / 20.0 * (1.0 - z2 / 42.0 * (1.0 - z2 / 72.0)));
    }
    return z - std::sin(z);
}

// 1 - sin(z)/z
double one_minus_sinc(double z) {
    if (std::abs(z) < 1e-2) {
        const double z2 = z * z;
        return z2 / 6.0 * (1.0 - z2 / 20.0 * (1.0 - z2 / 42.0 * (1.0 - z2 / 72.0)));
    }
    return 1.0 - std::sin(z) / z;
}

// 2 sin^2(z / 2) = 1 - cos z
double one_minus_cos(double z) {
    const double s = std::sin(0.5 * z);
    return 2.0 * s * s;
}

void check_time(const GaussianCaseParams& p, double t, const char* what) {
    if (!(t > 0.0 && t <= p.horizon * (1.0 + 1e-12))) {
        std::ostringstream os;
        os << what << " = " << t << " must lie in (0, T] with T = " << p.horizon;
        throw DomainError(os.str());
    }
}

PowerFit fit_values(std::span<const double> xs, const std::vector<QuadratureResult>& values) {
    std::vector<double> ys;
    for (const auto& v : values) ys.push_back(v.value);
    return fit_loglog(xs, ys);
}

}  // namespace

void GaussianCaseParams::validate() const {
    if (!(beta > 0.0 && beta < 2.0)) throw DomainError("beta must lie in (0, 2)");
    if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
    if (!(t0 > 0.0 && t0 <= t && t <= horizon)) throw DomainError("need 0 < t0 <= t <= T");
}

double mode_variance(double k, double t) {
    if (k < 0.0) k = -k;
    if (k * t < 1e-3) {
        const double x2 = (k * t) * (k * t);
        return t * t * t * (1.0 / 3.0 - x2 / 15.0 + 2.0 * x2 * x2 / 315.0);
    }
    return z_minus_sin(2.0 * t * k) / (4.0 * k * k * k);
}

double mode_time_covariance(double k, double t1, double t2) {
    if (k < 0.0) k = -k;
    const double m = std::min(t1, t2);
    if (m <= 0.0) return 0.0;
    const double tmax = std::max(t1, t2);
    if (k * tmax < 1e-3) {
        // int_0^m a b (1 - k^2 (a^2 + b^2) / 6) ds with a = t1 - s, b = t2 - s,
        // exact by 3-point Gauss-Legendre on the degree-4 polynomial.
        static constexpr double kNodes[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
        static constexpr double kWeights[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
        double sum = 0.0;
        for (int i = 0; i < 3; ++i) {
            const double s = 0.5 * m * (1.0 + kNodes[i]);
            const double a = t1 - s;
            const double b = t2 - s;
            sum += kWeights[i] * a * b * (1.0 - k * k * (a * a + b * b) / 6.0);
        }
        return 0.5 * m * sum;
    }
    if (t1 == t2) return mode_variance(k, t1);
    const double bracket = m * std::cos((t1 - t2) * k) - (std::sin((t1 + t2) * k) - std::sin((t1 + t2 - 2.0 * m) * k)) / (2.0 * k);
    return 0.5 * bracket / (k * k);
}

QuadratureResult spatial_increment_variance(const GaussianCaseParams& params, double x_abs, const QuadratureOptions& opt) {
    params.validate();
    if (!(x_abs > 0.0)) throw DomainError("spatial increment needs |x| > 0");
    const double beta = params.beta;
    const double t = params.t;
    const double x = x_abs;
    const double c = covariance::riesz_density_constant(beta);
    const double pref = 8.0 * kPi * c;
    RadialIntegral ri;
    ri.full = [=](double k) {
        return pref * std::pow(k, beta - 3.0) * one_minus_sinc(k * x) * z_minus_sin(2.0 * t * k) / (4.0 * k);
    };
    ri.smooth_tail = [=](double k) { return pref * 0.5 * t * std::pow(k, beta - 3.0); };
    ri.oscillatory = {
        OscillatoryTerm{[=](double k) { return -pref * t / (2.0 * x) * std::pow(k, beta - 4.0); }, x, 0.0},
        OscillatoryTerm{[=](double k) { return -pref * 0.25 * std::pow(k, beta - 4.0); }, 2.0 * t, 0.0},
        OscillatoryTerm{[=](double k) { return pref / (8.0 * x) * std::pow(k, beta - 5.0); }, 2.0 * t - x, kPi / 2.0},
        OscillatoryTerm{[=](double k) { return -pref / (8.0 * x) * std::pow(k, beta - 5.0); }, 2.0 * t + x, kPi / 2.0},
    };
    ri.max_frequency = 2.0 * t + x;
    double slowest = std::min(x, 2.0 * t);
    if (std::abs(2.0 * t - x) > 1e-3) slowest = std::min(slowest, std::abs(2.0 * t - x));
    ri.split = quadrature::radial_split(slowest);
    return quadrature::integrate_radial(ri, opt);
}

TimeIncrementParts time_increment_parts(const GaussianCaseParams& params, double t, double t_bar,
                                        const QuadratureOptions& opt) {
    params.validate();
    check_time(params, t, "t");
    check_time(params, t_bar, "t_bar");
    if (t_bar < t) throw DomainError("time increment needs t <= t_bar");
    if (t < params.t0) throw DomainError("time increment needs t >= t0");
    TimeIncrementParts parts;
    if (t_bar == t) {
        parts.t1 = parts.t2 = parts.total = {0.0, 0.0, 1};
        return parts;
    }
    const double beta = params.beta;
    const double tau = t_bar - t;
    const double c = covariance::riesz_density_constant(beta);
    parts.t1 = quadrature::weighted_energy(beta, tau, opt).scaled(c);

    const double pref = 4.0 * kPi * c;
    RadialIntegral ri;
    ri.full = [=](double k) {
        return pref * std::pow(k, beta - 3.0) * one_minus_cos(tau * k) * (t + std::cos((t + tau) * k) * std::sin(t * k) / k);
    };
    ri.smooth_tail = [=](double k) { return pref * t * std::pow(k, beta - 3.0); };
    auto amp = [=](double scale, double power) {
        return [=](double k) { return pref * scale * std::pow(k, beta - power); };
    };
    ri.oscillatory = {
        // -t k^{beta-3} cos(tau k)
        OscillatoryTerm{amp(-t, 3.0), tau, kPi / 2.0},
        // (1/4) k^{beta-4} [-sin 2(t+tau)k + sin 2 tau k - sin 2tk]
        OscillatoryTerm{amp(-0.25, 4.0), 2.0 * (t + tau), 0.0},
        OscillatoryTerm{amp(0.25, 4.0), 2.0 * tau, 0.0},
        OscillatoryTerm{amp(-0.25, 4.0), 2.0 * t, 0.0},
        // (1/2) k^{beta-4} [sin (2t+tau)k - sin tau k]
        OscillatoryTerm{amp(0.5, 4.0), 2.0 * t + tau, 0.0},
        OscillatoryTerm{amp(-0.5, 4.0), tau, 0.0},
    };
    ri.max_frequency = 2.0 * (t + tau);
    ri.split = quadrature::radial_split(tau);
    parts.t2 = quadrature::integrate_radial(ri, opt);
    parts.total = parts.t1 + parts.t2;
    return parts;
}

QuadratureResult time_increment_variance(const GaussianCaseParams& params, double t, double t_bar,
                                         const QuadratureOptions& opt) {
    return time_increment_parts(params, t, t_bar, opt).total;
}

FrequencySplit spatial_frequency_split(const GaussianCaseParams& params, double x_abs, const QuadratureOptions& opt) {
    params.validate();
    if (!(x_abs > 0.0 && x_abs < 1.0)) throw DomainError("frequency split needs 0 < |x| < 1");
    const double beta = params.beta;
    const double t = params.t;
    const double x = x_abs;
    const double pref = 8.0 * kPi * covariance::riesz_density_constant(beta);
    auto integrand = [=](double k) {
        return pref * std::pow(k, beta - 3.0) * one_minus_sinc(k * x) * z_minus_sin(2.0 * t * k) / (4.0 * k);
    };
    FrequencySplit out;
    out.r1 = quadrature::integrate_tanh_sinh(integrand, 0.0, 1.0, opt);

    // Panels of a quarter period of the fastest oscillation.
    const double panel = 0.5 * kPi / (2.0 * t + x);
    const double hi = 1.0 / x;
    const auto n = static_cast<std::size_t>(std::ceil((hi - 1.0) / panel));
    QuadratureOptions panel_opt = opt;
    panel_opt.rel_tol = std::max(opt.rel_tol * 0.1, 1e-15);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = 1.0 + (hi - 1.0) * static_cast<double>(i) / static_cast<double>(n);
        const double b = i + 1 == n ? hi : 1.0 + (hi - 1.0) * static_cast<double>(i + 1) / static_cast<double>(n);
        out.r3 += quadrature::integrate_gk(integrand, a, b, panel_opt);
    }

    RadialIntegral ri;
    ri.full = integrand;
    ri.smooth_tail = [=](double k) { return pref * 0.5 * t * std::pow(k, beta - 3.0); };
    ri.oscillatory = {
        OscillatoryTerm{[=](double k) { return -pref * t / (2.0 * x) * std::pow(k, beta - 4.0); }, x, 0.0},
        OscillatoryTerm{[=](double k) { return -pref * 0.25 * std::pow(k, beta - 4.0); }, 2.0 * t, 0.0},
        OscillatoryTerm{[=](double k) { return pref / (8.0 * x) * std::pow(k, beta - 5.0); }, 2.0 * t - x, kPi / 2.0},
        OscillatoryTerm{[=](double k) { return -pref / (8.0 * x) * std::pow(k, beta - 5.0); }, 2.0 * t + x, kPi / 2.0},
    };
    ri.max_frequency = 2.0 * t + x;
    ri.lower = hi;
    ri.split = std::max(hi, quadrature::radial_split(std::min({x, 2.0 * t, 2.0 * t - x})));
    out.r2 = quadrature::integrate_radial(ri, opt);
    out.full = spatial_increment_variance(params, x_abs, opt);
    return out;
}

OnsetReport time_exponent_onset(const GaussianCaseParams& params, std::span<const double> gaps, double tolerance,
                                const QuadratureOptions& opt) {
    OnsetReport rep;
    rep.gaps.assign(gaps.begin(), gaps.end());
    std::sort(rep.gaps.begin(), rep.gaps.end());
    if (rep.gaps.size() < 2 || rep.gaps.front() <= 0.0) throw DomainError("onset scan needs at least two positive gaps");
    const double t = params.t0;
    for (double g : rep.gaps) rep.values.push_back(time_increment_variance(params, t, t + g, opt).value);
    const double target = 2.0 - params.beta;
    bool ok = true;
    for (std::size_t i = 0; i + 1 < rep.gaps.size(); ++i) {
        const double s = std::log(rep.values[i + 1] / rep.values[i]) / std::log(rep.gaps[i + 1] / rep.gaps[i]);
        rep.local_slopes.push_back(s);
        ok = ok && std::abs(s - target) <= tolerance;
        if (ok) rep.onset_gap = rep.gaps[i + 1];
    }
    return rep;
}

CurveFit spatial_curve(const GaussianCaseParams& params, std::span<const double> x_abs, const QuadratureOptions& opt,
                       unsigned threads) {
    CurveFit out;
    out.abscissa.assign(x_abs.begin(), x_abs.end());
    out.values.resize(x_abs.size());
    parallel_for(x_abs.size(), threads, [&](std::size_t i) { out.values[i] = spatial_increment_variance(params, x_abs[i], opt); });
    out.fit = fit_values(out.abscissa, out.values);
    return out;
}

CurveFit time_curve(const GaussianCaseParams& params, std::span<const double> gaps, bool t1_only,
                    const QuadratureOptions& opt, unsigned threads) {
    CurveFit out;
    out.abscissa.assign(gaps.begin(), gaps.end());
    out.values.resize(gaps.size());
    parallel_for(gaps.size(), threads, [&](std::size_t i) {
        const auto parts = time_increment_parts(params, params.t0, params.t0 + gaps[i], opt);
        out.values[i] = t1_only ? parts.t1 : parts.total;
    });
    out.fit = fit_values(out.abscissa, out.values);
    return out;
}

namespace {

template <class Term>
double lattice_sum(const GaussianCaseParams& params, const simulator::SpectralLattice& lattice, Term term) {
    params.validate();
    const auto q = simulator::discrete_density(lattice, covariance::CovarianceSpec(params.beta, 1.0));
    const auto& mult = lattice.multiplicity();
    double sum = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] == 0.0) continue;
        sum += mult[i] * q[i] * term(i);
    }
    return sum;
}

}  // namespace

double lattice_point_variance(const GaussianCaseParams& params, const simulator::SpectralLattice& lattice, double t) {
    check_time(params, t, "t");
    const auto& k = lattice.k_norm();
    return lattice_sum(params, lattice, [&](std::size_t i) { return mode_variance(k[i], t); });
}

double lattice_spatial_variance(const GaussianCaseParams& params, const simulator::SpectralLattice& lattice, double t,
                                const Vec3& lag) {
    check_time(params, t, "t");
    const auto& k = lattice.k_norm();
    const auto& kv = lattice.k_vec();
    return lattice_sum(params, lattice, [&](std::size_t i) { return mode_variance(k[i], t) * 2.0 * one_minus_cos(kv[i].dot(lag)); });
}

double lattice_time_variance(const GaussianCaseParams& params, const simulator::SpectralLattice& lattice, double t,
                             double t_bar) {
    check_time(params, t, "t");
    check_time(params, t_bar, "t_bar");
    const auto& k = lattice.k_norm();
    return lattice_sum(params, lattice, [&](std::size_t i) {
        return mode_variance(k[i], t) + mode_variance(k[i], t_bar) - 2.0 * mode_time_covariance(k[i], t, t_bar);
    });
}

GaussianSampler::GaussianSampler(const GaussianCaseParams& params, const simulator::SpectralLattice& lattice,
                                 std::vector<double> times)
    : params_(params), lattice_(lattice), times_(std::move(times)) {
    params_.validate();
    if (times_.empty()) throw DomainError("sampler needs at least one time");
    for (double t : times_) check_time(params_, t, "sample time");

    const auto q = simulator::discrete_density(lattice_, covariance::CovarianceSpec(params_.beta, 1.0));
    const auto& kv = lattice_.k_vec();
    const double dk = lattice_.dk();
    const std::size_t m = times_.size();
    shell_of_mode_.assign(q.size(), -1);
    std::map<long, int> shell_index;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] == 0.0) continue;
        const Vec3 n = kv[i] * (1.0 / dk);
        const long key = std::lround(n.dot(n));
        auto [it, fresh] = shell_index.try_emplace(key, static_cast<int>(factors_.size()));
        shell_of_mode_[i] = it->second;
        if (!fresh) continue;
        const double k = lattice_.k_norm()[i];
        Eigen::MatrixXd cov(m, m);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b <= a; ++b) cov(a, b) = cov(b, a) = mode_time_covariance(k, times_[a], times_[b]);
        const double scale = cov.diagonal().maxCoeff();
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        double jitter = 0.0;
        for (double rel = 1e-16; llt.info() != Eigen::Success; rel *= 10.0) {
            if (rel > 1e-12) throw NumericalError("per-mode time covariance is not positive definite");
            jitter = rel * scale;
            llt.compute(cov + jitter * Eigen::MatrixXd::Identity(m, m));
        }
        max_jitter_ = std::max(max_jitter_, jitter);
        const Eigen::MatrixXd L = llt.matrixL();
        std::vector<double> flat(m * m);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b) flat[a * m + b] = L(a, b);
        factors_.push_back(std::move(flat));
    }
    // Mode weights enter as sqrt(q) on top of the shared shell factor.
    weights_.resize(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) weights_[i] = std::sqrt(q[i]);
}

std::vector<simulator::ModeArray> GaussianSampler::sample_modes(std::uint64_t seed, std::uint32_t replica) const {
    const std::size_t m = times_.size();
    std::vector<simulator::ModeArray> modes;
    for (std::size_t j = 0; j < m; ++j) modes.push_back(lattice_.make_modes());
    const auto& partner = lattice_.partner();
    const auto& mult = lattice_.multiplicity();
    std::vector<cplx> z(m);
    for (std::size_t i = 0; i < shell_of_mode_.size(); ++i) {
        const int shell = shell_of_mode_[i];
        if (shell < 0) continue;
        const std::size_t p = partner[i];
        if (mult[i] == 1 && p < i) continue;  // filled from its canonical partner
        const bool real_mode = mult[i] == 1 && p == i;
        for (std::size_t j = 0; j < m; ++j) {
            const NormalQuad g = philox_normals(seed, {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), replica, 0x6A55u});
            z[j] = real_mode ? cplx(g.z[0], 0.0) : cplx(g.z[0], g.z[1]) * std::sqrt(0.5);
        }
        const auto& L = factors_[shell];
        for (std::size_t a = 0; a < m; ++a) {
            cplx acc = 0.0;
            for (std::size_t b = 0; b <= a; ++b) acc += L[a * m + b] * z[b];
            acc *= weights_[i];
            modes[a][i] = acc;
            if (p != i) modes[a][p] = std::conj(acc);
        }
    }
    return modes;
}

GaussianSamples GaussianSampler::sample(std::uint64_t seed, std::uint32_t replica) const {
    GaussianSamples out;
    out.times = times_;
    out.seed = seed;
    out.replica = replica;
    out.max_jitter = max_jitter_;
    for (const auto& m : sample_modes(seed, replica)) {
        simulator::RealGrid g = lattice_.make_real();
        lattice_.backward(m, g);
        out.fields.push_back(std::move(g));
    }
    return out;
}

GaussianSamples sample_gaussian_solution(const GaussianCaseParams& params, const simulator::SpectralLattice& lattice,
                                         std::vector<double> times, std::uint64_t seed, std::uint32_t replica) {
    return GaussianSampler(params, lattice, std::move(times)).sample(seed, replica);
}

}  // namespace wave3::gaussian
