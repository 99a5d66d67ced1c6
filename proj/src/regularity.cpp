#include "wave3/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numeric>
#include <sstream>

#include <fftw3.h>

#include "wave3/rng.hpp"

namespace wave3::regularity {

namespace {

using cplx = std::complex<double>;

double moment_of(double d, double q) { return q == 2.0 ? d * d : std::pow(std::abs(d), q); }

[[noreturn]] void refuse_lags(std::size_t have, double decades, const StructureOptions& opt, const std::string& hint) {
    std::ostringstream os;
    os << "structure function needs at least " << opt.min_lags << " distinct lags spanning " << opt.min_decades
       << " decades; got " << have << " spanning " << decades << " decades. " << hint;
    throw ConfigError(os.str());
}

// Distinct whole-cell spatial lags.
std::vector<int> cell_lags(std::span<const double> lags, double dx, int n) {
    std::vector<int> cells;
    for (double l : lags) {
        if (!(l > 0.0)) throw DomainError("lags must be positive");
        const long c = std::lround(l / dx);
        if (c < 1 || std::abs(static_cast<double>(c) * dx - l) > 1e-6 * l)
            throw ConfigError("spatial lag " + std::to_string(l) + " is not a whole number of cells");
        if (c >= n) throw ConfigError("spatial lag " + std::to_string(l) + " does not fit in the grid");
        cells.push_back(static_cast<int>(c));
    }
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    return cells;
}

// Mean of |g(x + c e_a) - g(x)|^q over the grid points whose neighbour lies
// inside the grid, averaged over the chosen directions.
double space_moment(const RealGrid& g, int n, int c, double q, const std::array<bool, 3>& dirs) {
    auto at = [&](int i, int j, int k) { return g[(static_cast<std::size_t>(i) * n + j) * n + k]; };
    double total = 0.0;
    int used = 0;
    for (int a = 0; a < 3; ++a) {
        if (!dirs[a]) continue;
        double sum = 0.0;
        const int lim = n - c;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    const int idx[3] = {i, j, k};
                    if (idx[a] >= lim) continue;
                    const double d = a == 0 ? at(i + c, j, k) - at(i, j, k)
                                   : a == 1 ? at(i, j + c, k) - at(i, j, k)
                                            : at(i, j, k + c) - at(i, j, k);
                    sum += moment_of(d, q);
                }
        total += sum / (static_cast<double>(lim) * n * n);
        ++used;
    }
    return total / used;
}

double grid_moment(const RealGrid& a, const RealGrid& b, double q) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += moment_of(b[i] - a[i], q);
    return sum / static_cast<double>(a.size());
}

// Per-replica moments -> mean, standard error, fit.
ExponentFit finish(std::vector<double> lags, const std::vector<std::vector<double>>& per_replica, double q) {
    ExponentFit out;
    out.q = q;
    out.lags = std::move(lags);
    out.replicas = per_replica.size();
    const std::size_t m = out.lags.size();
    const double r = static_cast<double>(per_replica.size());
    out.moments.assign(m, 0.0);
    out.mc_errors.assign(m, 0.0);
    for (std::size_t l = 0; l < m; ++l) {
        double s = 0.0;
        for (const auto& row : per_replica) s += row[l];
        const double mean = s / r;
        double ss = 0.0;
        for (const auto& row : per_replica) ss += (row[l] - mean) * (row[l] - mean);
        out.moments[l] = mean;
        out.mc_errors[l] = per_replica.size() > 1 ? std::sqrt(ss / (r - 1.0) / r) : 0.0;
    }
    out.degenerate = std::any_of(out.moments.begin(), out.moments.end(), [](double v) { return !(v > 0.0); });
    if (out.degenerate) return out;
    double worst = 0.0;
    for (std::size_t l = 0; l < m; ++l) worst = std::max(worst, out.mc_errors[l] / out.moments[l]);
    out.mc_adequate = per_replica.size() > 1 && worst < 0.1;
    out.fit = fit_loglog(out.lags, out.moments);
    out.exponent = out.fit.slope / q;
    out.exponent_stderr = out.fit.stderr_slope / q;
    return out;
}

}  // namespace

void FieldSamples::validate() const {
    if (n < 2) throw ConfigError("samples need n >= 2");
    if (!(dx > 0.0)) throw ConfigError("samples need dx > 0");
    if (fields.empty()) throw ConfigError("no replicas in the samples");
    const std::size_t npts = static_cast<std::size_t>(n) * n * n;
    for (const auto& rep : fields) {
        if (rep.size() != times.size()) throw ConfigError("every replica needs one field per time");
        for (const auto& g : rep)
            if (g.size() != npts) throw ConfigError("field size does not match n^3");
    }
}

ExponentFit structure_function(const FieldSamples& samples, Axis axis, double q, std::span<const double> lags,
                               const StructureOptions& opt) {
    samples.validate();
    if (!(q >= 2.0)) throw DomainError("moment order q must be >= 2");
    std::vector<std::vector<double>> per_replica;

    if (axis == Axis::Space) {
        if (opt.time_slot >= samples.times.size()) throw ConfigError("time slot out of range");
        if (std::none_of(opt.directions.begin(), opt.directions.end(), [](bool b) { return b; }))
            throw ConfigError("no direction selected");
        const auto cells = cell_lags(lags, samples.dx, samples.n);
        std::vector<double> phys;
        for (int c : cells) phys.push_back(c * samples.dx);
        const double dec = phys.empty() ? 0.0 : decades_spanned(phys);
        if (cells.size() < opt.min_lags || dec < opt.min_decades - 1e-9)
            refuse_lags(cells.size(), dec, opt,
                        "Use geometric lags from 1 cell to n/2 cells; an n-point axis spans at most log10(n - 1) decades.");
        for (const auto& rep : samples.fields) {
            std::vector<double> row;
            for (int c : cells) row.push_back(space_moment(rep[opt.time_slot], samples.n, c, q, opt.directions));
            per_replica.push_back(std::move(row));
        }
        return finish(std::move(phys), per_replica, q);
    }

    // time axis: every pair of sample times separated by a requested lag
    const auto& ts = samples.times;
    std::vector<double> used;
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> pairs;
    std::vector<double> sorted(lags.begin(), lags.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    for (double tau : sorted) {
        if (!(tau > 0.0)) throw DomainError("lags must be positive");
        std::vector<std::pair<std::size_t, std::size_t>> p;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            if (ts[i] < opt.t_min - 1e-12) continue;
            for (std::size_t j = 0; j < ts.size(); ++j)
                if (std::abs(ts[j] - ts[i] - tau) <= 1e-9 * std::max(1.0, tau)) p.emplace_back(i, j);
        }
        if (p.empty()) throw ConfigError("no pair of sample times at or after t_min is separated by lag " + std::to_string(tau));
        used.push_back(tau);
        pairs.push_back(std::move(p));
    }
    const double dec = used.empty() ? 0.0 : decades_spanned(used);
    if (used.size() < opt.min_lags || dec < opt.min_decades - 1e-9)
        refuse_lags(used.size(), dec, opt, "Sample the field at t and t + gap for geometric gaps over 1.5 decades.");
    for (const auto& rep : samples.fields) {
        std::vector<double> row;
        for (const auto& p : pairs) {
            double s = 0.0;
            for (const auto& [i, j] : p) s += grid_moment(rep[i], rep[j], q);
            row.push_back(s / static_cast<double>(p.size()));
        }
        per_replica.push_back(std::move(row));
    }
    return finish(std::move(used), per_replica, q);
}

std::string SubBox::describe() const {
    std::ostringstream os;
    os << "cells [" << lo[0] << "," << lo[0] + size[0] << ")x[" << lo[1] << "," << lo[1] + size[1] << ")x[" << lo[2]
       << "," << lo[2] + size[2] << ")";
    return os.str();
}

namespace {

// sum over offsets d with cut <= |d| of C(d) / |d|^{3 + gamma q}, in cell units
struct OffsetSums {
    double at_cut = 0.0;
    double at_wider = 0.0;
    std::size_t pairs = 0;
};

template <class C>
OffsetSums accumulate_offsets(const std::array<int, 3>& s, int cut, double power, C&& c_of_d) {
    OffsetSums out;
    for (int a = -s[0] + 1; a < s[0]; ++a)
        for (int b = -s[1] + 1; b < s[1]; ++b)
            for (int e = -s[2] + 1; e < s[2]; ++e) {
                const double r2 = static_cast<double>(a) * a + static_cast<double>(b) * b + static_cast<double>(e) * e;
                if (r2 < static_cast<double>(cut) * cut) continue;
                const double w = std::pow(r2, -0.5 * power);
                const double v = std::max(0.0, c_of_d(a, b, e)) * w;
                out.at_cut += v;
                if (r2 >= static_cast<double>(cut + 1) * (cut + 1)) out.at_wider += v;
                out.pairs += static_cast<std::size_t>(s[0] - std::abs(a)) * (s[1] - std::abs(b)) * (s[2] - std::abs(e));
            }
    return out;
}

}  // namespace

SobolevNormEstimate sobolev_norm(const RealGrid& field, int n, double dx, double gamma, double q, const SubBox& box,
                                 int min_separation_cells) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in (0, 1)");
    if (!(q >= 1.0)) throw DomainError("q must be >= 1");
    if (min_separation_cells < 1) throw DomainError("min_separation_cells must be >= 1");
    if (field.size() != static_cast<std::size_t>(n) * n * n) throw ConfigError("field size does not match n^3");
    for (int a = 0; a < 3; ++a)
        if (box.lo[a] < 0 || box.size[a] < 1 || box.lo[a] + box.size[a] > n) throw ConfigError("sub-box outside the slice");

    const auto& s = box.size;
    const std::size_t m = static_cast<std::size_t>(s[0]) * s[1] * s[2];
    // box values with the mean removed (differences do not see it)
    std::vector<double> g(m);
    double lq = 0.0, mean = 0.0;
    for (int i = 0; i < s[0]; ++i)
        for (int j = 0; j < s[1]; ++j)
            for (int k = 0; k < s[2]; ++k) {
                const double v = field[(static_cast<std::size_t>(box.lo[0] + i) * n + box.lo[1] + j) * n + box.lo[2] + k];
                g[(static_cast<std::size_t>(i) * s[1] + j) * s[2] + k] = v;
                lq += std::pow(std::abs(v), q);
                mean += v;
            }
    mean /= static_cast<double>(m);
    for (auto& v : g) v -= mean;

    SobolevNormEstimate out;
    out.gamma = gamma;
    out.q = q;
    out.domain = box.describe();
    out.min_separation_cells = min_separation_cells;
    out.lq_norm = std::pow(lq * dx * dx * dx, 1.0 / q);
    const double power = 3.0 + gamma * q;

    OffsetSums sums;
    if (q == 2.0) {
        // C(d) = sum_x m(x) m(x+d) (g(x+d) - g(x))^2 from three correlations on a zero-padded grid
        const int P[3] = {2 * s[0], 2 * s[1], 2 * s[2]};
        const std::size_t nr = static_cast<std::size_t>(P[0]) * P[1] * P[2];
        const std::size_t nc = static_cast<std::size_t>(P[0]) * P[1] * (P[2] / 2 + 1);
        simulator::RealGrid mr(nr), fr(nr), f2r(nr), out1(nr), out2(nr);
        simulator::ModeArray M(nc), F(nc), F2(nc), W(nc);
        auto pidx = [&](int i, int j, int k) { return (static_cast<std::size_t>(i) * P[1] + j) * P[2] + k; };
        for (int i = 0; i < s[0]; ++i)
            for (int j = 0; j < s[1]; ++j)
                for (int k = 0; k < s[2]; ++k) {
                    const double v = g[(static_cast<std::size_t>(i) * s[1] + j) * s[2] + k];
                    mr[pidx(i, j, k)] = 1.0;
                    fr[pidx(i, j, k)] = v;
                    f2r[pidx(i, j, k)] = v * v;
                }
        fftw_plan fwd, bwd;
        {
            std::lock_guard lock(simulator::fftw_planner_mutex());
            fwd = fftw_plan_dft_r2c_3d(P[0], P[1], P[2], mr.data(), reinterpret_cast<fftw_complex*>(M.data()), FFTW_ESTIMATE);
            bwd = fftw_plan_dft_c2r_3d(P[0], P[1], P[2], reinterpret_cast<fftw_complex*>(W.data()), out1.data(), FFTW_ESTIMATE);
        }
        if (!fwd || !bwd) throw NumericalError("FFTW planning failed");
        fftw_execute_dft_r2c(fwd, mr.data(), reinterpret_cast<fftw_complex*>(M.data()));
        fftw_execute_dft_r2c(fwd, fr.data(), reinterpret_cast<fftw_complex*>(F.data()));
        fftw_execute_dft_r2c(fwd, f2r.data(), reinterpret_cast<fftw_complex*>(F2.data()));
        // corr(a, b)(d) = sum_x a(x) b(x + d) = IFFT(conj(A) B)
        for (std::size_t i = 0; i < nc; ++i) W[i] = std::conj(M[i]) * F2[i];
        fftw_execute_dft_c2r(bwd, reinterpret_cast<fftw_complex*>(W.data()), out1.data());
        for (std::size_t i = 0; i < nc; ++i) W[i] = std::norm(F[i]);
        fftw_execute_dft_c2r(bwd, reinterpret_cast<fftw_complex*>(W.data()), out2.data());
        {
            std::lock_guard lock(simulator::fftw_planner_mutex());
            fftw_destroy_plan(fwd);
            fftw_destroy_plan(bwd);
        }
        const double norm = 1.0 / static_cast<double>(nr);
        auto wrap = [&](int d, int p) { return d < 0 ? d + p : d; };
        sums = accumulate_offsets(s, min_separation_cells, power, [&](int a, int b, int e) {
            const double mf2_plus = out1[pidx(wrap(a, P[0]), wrap(b, P[1]), wrap(e, P[2]))];
            const double mf2_minus = out1[pidx(wrap(-a, P[0]), wrap(-b, P[1]), wrap(-e, P[2]))];
            const double ff = out2[pidx(wrap(a, P[0]), wrap(b, P[1]), wrap(e, P[2]))];
            return (mf2_plus + mf2_minus - 2.0 * ff) * norm;
        });
    } else {
        auto at = [&](int i, int j, int k) { return g[(static_cast<std::size_t>(i) * s[1] + j) * s[2] + k]; };
        sums = accumulate_offsets(s, min_separation_cells, power, [&](int a, int b, int e) {
            double c = 0.0;
            for (int i = std::max(0, -a); i < std::min(s[0], s[0] - a); ++i)
                for (int j = std::max(0, -b); j < std::min(s[1], s[1] - b); ++j)
                    for (int k = std::max(0, -e); k < std::min(s[2], s[2] - e); ++k)
                        c += std::pow(std::abs(at(i + a, j + b, k + e) - at(i, j, k)), q);
            return c;
        });
    }
    // pairs carry dx^6, distances dx^{-(3 + gamma q)}
    const double scale = std::pow(dx, 6.0 - power);
    out.pairs = sums.pairs;
    out.seminorm = std::pow(sums.at_cut * scale, 1.0 / q);
    out.seminorm_wider_cut = std::pow(sums.at_wider * scale, 1.0 / q);
    out.value = out.lq_norm + out.seminorm;
    return out;
}

double exponent_window(double beta, double delta, double gamma1, double gamma2) {
    if (!(beta > 0.0 && beta < 2.0)) throw DomainError("beta must lie in (0, 2)");
    if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("delta must lie in (0, 1]");
    if (!(gamma1 > 0.0 && gamma1 <= 1.0) || !(gamma2 > 0.0 && gamma2 <= 1.0))
        throw DomainError("gamma1, gamma2 must lie in (0, 1]");
    const double tau = std::min((2.0 - beta) / 2.0, (1.0 + delta) / 2.0);
    return std::min({gamma1, gamma2, tau});
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Boundary: return "boundary";
        case Verdict::Smoother: return "smoother";
        case Verdict::Rougher: return "rougher";
        case Verdict::NoRegularity: return "no_regularity";
        case Verdict::Degenerate: return "degenerate";
    }
    return "unknown";
}

VerdictReport classify(const ExponentFit& fit, double alpha_high, double tolerance) {
    VerdictReport r;
    r.alpha_high = alpha_high;
    std::ostringstream os;
    if (fit.degenerate) {
        r.verdict = Verdict::Degenerate;
        r.text = "degenerate: every moment is zero, no fit";
        return r;
    }
    r.estimate = fit.exponent;
    if (std::abs(fit.exponent - alpha_high) <= tolerance) {
        r.verdict = Verdict::Boundary;
        os << "consistent with the window endpoint " << alpha_high << " (boundary, not inside)";
    } else if (std::abs(fit.exponent) <= tolerance) {
        r.verdict = Verdict::NoRegularity;
        os << "no Hölder regularity";
    } else if (fit.exponent > alpha_high) {
        r.verdict = Verdict::Smoother;
        os << "smoother than the window endpoint " << alpha_high;
    } else {
        r.verdict = Verdict::Rougher;
        os << "rougher than the window endpoint " << alpha_high;
    }
    r.text = os.str();
    return r;
}

RealGrid fractional_lines(int n, double dx, double hurst, std::uint64_t seed) {
    if (!(hurst > 0.0 && hurst < 1.0)) throw DomainError("Hurst index must lie in (0, 1)");
    if (n < 3) throw ConfigError("fractional_lines needs n >= 3");
    const int m = n - 1;  // increments per line
    const int big = 2 * m;
    auto acov = [&](double k) {
        const double h2 = 2.0 * hurst;
        return 0.5 * (std::pow(std::abs(k + 1.0), h2) - 2.0 * std::pow(std::abs(k), h2) + std::pow(std::abs(k - 1.0), h2));
    };
    simulator::ModeArray row(big), lam(big), work(big);
    for (int k = 0; k < big; ++k) row[k] = acov(k <= m ? k : big - k);
    fftw_plan plan;
    {
        std::lock_guard lock(simulator::fftw_planner_mutex());
        plan = fftw_plan_dft_1d(big, reinterpret_cast<fftw_complex*>(row.data()), reinterpret_cast<fftw_complex*>(lam.data()),
                                FFTW_FORWARD, FFTW_ESTIMATE);
    }
    if (!plan) throw NumericalError("FFTW planning failed");
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(row.data()), reinterpret_cast<fftw_complex*>(lam.data()));
    std::vector<double> root(big);
    double top = 0.0;
    for (const cplx& l : lam) top = std::max(top, l.real());
    for (int k = 0; k < big; ++k) {
        const double l = lam[k].real();
        if (l < -1e-10 * top) {
            std::lock_guard lock(simulator::fftw_planner_mutex());
            fftw_destroy_plan(plan);
            throw NumericalError("circulant embedding is not non-negative");
        }
        root[k] = std::sqrt(std::max(l, 0.0) / big);
    }

    RealGrid out(static_cast<std::size_t>(n) * n * n);
    const double scale = std::pow(dx, hurst);
    const std::size_t lines = static_cast<std::size_t>(n) * n;
    // each transform gives two independent lines (real and imaginary parts)
    for (std::size_t pair = 0; pair * 2 < lines; ++pair) {
        NormalStream rng(seed, static_cast<std::uint32_t>(pair));
        for (int k = 0; k < big; ++k) {
            const double a = rng.next();
            const double b = rng.next();
            work[k] = root[k] * cplx(a, b);
        }
        fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(work.data()), reinterpret_cast<fftw_complex*>(row.data()));
        for (int part = 0; part < 2; ++part) {
            const std::size_t line = 2 * pair + part;
            if (line >= lines) break;
            const std::size_t j = line / n, k = line % n;
            double acc = 0.0;
            out[(0 * static_cast<std::size_t>(n) + j) * n + k] = 0.0;
            for (int i = 1; i < n; ++i) {
                acc += part == 0 ? row[i - 1].real() : row[i - 1].imag();
                out[(static_cast<std::size_t>(i) * n + j) * n + k] = scale * acc;
            }
        }
    }
    {
        std::lock_guard lock(simulator::fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

RealGrid white_noise_field(int n, std::uint64_t seed) {
    if (n < 1) throw ConfigError("white_noise_field needs n >= 1");
    RealGrid out(static_cast<std::size_t>(n) * n * n);
    NormalStream rng(seed, 0x317Eu);
    for (auto& v : out) v = rng.next();
    return out;
}

}  // namespace wave3::regularity
