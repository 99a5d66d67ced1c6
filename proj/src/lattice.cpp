#include "wave3/lattice.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

namespace wave3::simulator {

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

std::string to_string(Cutoff c) {
    switch (c) {
        case Cutoff::None: return "none";
        case Cutoff::Dealias23: return "dealias23";
        case Cutoff::Spherical: return "spherical";
    }
    return "unknown";
}

Cutoff cutoff_from_string(const std::string& s) {
    if (s == "none") return Cutoff::None;
    if (s == "dealias23") return Cutoff::Dealias23;
    if (s == "spherical") return Cutoff::Spherical;
    throw ConfigError("unknown cutoff '" + s + "' (expected none, dealias23 or spherical)");
}

SpectralLattice::SpectralLattice(double box_side, int modes_per_axis, Cutoff cutoff, double window_diameter,
                                 double horizon, double cutoff_radius)
    : L_(box_side), N_(modes_per_axis), cutoff_(cutoff), window_(window_diameter), horizon_(horizon),
      radius_(cutoff_radius) {
    if (!(L_ > 0.0) || !std::isfinite(L_)) throw ConfigError("box side must be positive");
    if (N_ < 4 || N_ % 2 != 0) throw ConfigError("modes per axis must be even and at least 4");
    if (window_ < 0.0 || horizon_ < 0.0) throw ConfigError("window diameter and horizon must be non-negative");
    if (!(L_ > window_ + 2.0 * horizon_)) {
        std::ostringstream os;
        os << "light cone wraps around the torus: box side " << L_ << " must exceed window diameter " << window_
           << " + 2 * horizon " << horizon_;
        throw ConfigError(os.str());
    }
    if (cutoff_ == Cutoff::Spherical && !(radius_ > 0.0)) throw ConfigError("spherical cutoff needs a positive radius");
    if (cutoff_ == Cutoff::Dealias23) radius_ = dk() * (N_ / 3);

    const int nz = N_ / 2 + 1;
    const std::size_t m = mode_size();
    knorm_.resize(m);
    kvec_.resize(m);
    band_.resize(m);
    partner_.resize(m);
    mult_.resize(m);
    const int third = N_ / 3;
    for (int ix = 0; ix < N_; ++ix) {
        for (int iy = 0; iy < N_; ++iy) {
            for (int iz = 0; iz < nz; ++iz) {
                const std::size_t i = mode_index(ix, iy, iz);
                const int mx = signed_mode(ix);
                const int my = signed_mode(iy);
                const int mz = iz;
                const Vec3 k{dk() * mx, dk() * my, dk() * mz};
                kvec_[i] = k;
                knorm_[i] = k.norm();
                bool keep = true;
                switch (cutoff_) {
                    case Cutoff::None: break;
                    case Cutoff::Dealias23:
                        keep = std::abs(mx) <= third && std::abs(my) <= third && mz <= third;
                        break;
                    case Cutoff::Spherical: keep = knorm_[i] <= radius_; break;
                }
                band_[i] = keep ? 1 : 0;
                const bool edge = iz == 0 || iz == N_ / 2;
                mult_[i] = edge ? 1 : 2;
                partner_[i] = edge ? mode_index((N_ - ix) % N_, (N_ - iy) % N_, iz) : i;
            }
        }
    }

    RealGrid r = make_real();
    ModeArray c = make_modes();
    std::lock_guard lock(fftw_planner_mutex());
    r2c_ = fftw_plan_dft_r2c_3d(N_, N_, N_, r.data(), reinterpret_cast<fftw_complex*>(c.data()), FFTW_ESTIMATE);
    c2r_ = fftw_plan_dft_c2r_3d(N_, N_, N_, reinterpret_cast<fftw_complex*>(c.data()), r.data(), FFTW_ESTIMATE);
    if (!r2c_ || !c2r_) throw NumericalError("FFTW planning failed");
}

SpectralLattice::~SpectralLattice() {
    std::lock_guard lock(fftw_planner_mutex());
    if (r2c_) fftw_destroy_plan(r2c_);
    if (c2r_) fftw_destroy_plan(c2r_);
}

void SpectralLattice::forward(const RealGrid& in, ModeArray& out) const {
    if (in.size() != real_size() || out.size() != mode_size()) throw ConfigError("forward: buffer size mismatch");
    // r2c does not modify its input, the const_cast only satisfies the C API.
    fftw_execute_dft_r2c(r2c_, const_cast<double*>(in.data()), reinterpret_cast<fftw_complex*>(out.data()));
    const double scale = 1.0 / static_cast<double>(real_size());
    for (auto& z : out) z *= scale;
}

void SpectralLattice::backward(const ModeArray& in, RealGrid& out) const {
    if (in.size() != mode_size() || out.size() != real_size()) throw ConfigError("backward: buffer size mismatch");
    ModeArray work(in);  // c2r overwrites its input
    fftw_execute_dft_c2r(c2r_, reinterpret_cast<fftw_complex*>(work.data()), out.data());
}

void SpectralLattice::apply_band(ModeArray& m) const {
    for (std::size_t i = 0; i < m.size(); ++i)
        if (!band_[i]) m[i] = 0.0;
}

void SpectralLattice::enforce_hermitian(ModeArray& m) const {
    for (std::size_t i = 0; i < m.size(); ++i) {
        const std::size_t p = partner_[i];
        if (p == i) {
            if (mult_[i] == 1) m[i] = m[i].real();
        } else if (p > i) {
            m[p] = std::conj(m[i]);
        }
    }
}

double SpectralLattice::hermitian_defect(const ModeArray& m) const {
    double worst = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (mult_[i] == 2) continue;
        worst = std::max(worst, std::abs(m[partner_[i]] - std::conj(m[i])));
    }
    return worst;
}

std::string SpectralLattice::describe() const {
    std::ostringstream os;
    os << "N=" << N_ << " L=" << L_ << " cutoff=" << to_string(cutoff_);
    if (cutoff_ != Cutoff::None) os << " k_max=" << radius_;
    return os.str();
}

std::vector<double> discrete_density(const SpectralLattice& lattice, const covariance::CovarianceSpec& spec) {
    const auto& k = lattice.k_norm();
    const auto& band = lattice.band();
    const double cell = std::pow(lattice.dk(), 3);
    std::vector<double> q(k.size(), 0.0);
    // Densities of non-Riesz envelopes need a quadrature each, so evaluate
    // once per shell |m|^2.
    std::map<long, double> by_shell;
    for (std::size_t i = 0; i < k.size(); ++i) {
        if (!band[i] || k[i] == 0.0) continue;
        const long shell = std::lround(k[i] * k[i] / (lattice.dk() * lattice.dk()));
        auto it = by_shell.find(shell);
        if (it == by_shell.end()) it = by_shell.emplace(shell, covariance::spectral_density_radial(spec, k[i]) * cell).first;
        q[i] = it->second;
    }
    return q;
}

}  // namespace wave3::simulator
