#pragma once

// Periodic box [0, L)^3 with N points per axis and its half-spectrum layout.
// Fields are u(x) = sum_k u_k exp(i k.x); the forward transform divided by
// N^3 gives u_k. Spectral arrays hold kz in [0, N/2] (FFTW r2c layout).

#include <algorithm>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <fftw3.h>

#include "wave3/common.hpp"
#include "wave3/covariance.hpp"

namespace wave3::simulator {

using cplx = std::complex<double>;

enum class Cutoff {
    None,
    /// Keep |m_i| <= N/3 on every axis (2/3 rule).
    Dealias23,
    /// Keep |k| <= cutoff_radius.
    Spherical,
};

std::string to_string(Cutoff c);

/// FFTW planning is not thread safe; every plan is created and destroyed
/// under this lock. Execution with the new-array interface needs no lock.
std::mutex& fftw_planner_mutex();
Cutoff cutoff_from_string(const std::string& s);

/// Contiguous buffer from fftw_malloc so that every array has the alignment
/// the plans were created with.
template <class T>
class FftwBuffer {
public:
    FftwBuffer() = default;
    explicit FftwBuffer(std::size_t n) : n_(n), p_(static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1)))) {
        if (!p_) throw std::bad_alloc();
        std::fill(p_.get(), p_.get() + n, T{});
    }
    FftwBuffer(const FftwBuffer& o) : FftwBuffer(o.n_) { std::copy(o.begin(), o.end(), p_.get()); }
    FftwBuffer& operator=(const FftwBuffer& o) {
        if (this != &o) {
            if (n_ != o.n_) *this = FftwBuffer(o.n_);
            std::copy(o.begin(), o.end(), p_.get());
        }
        return *this;
    }
    FftwBuffer(FftwBuffer&&) noexcept = default;
    FftwBuffer& operator=(FftwBuffer&&) noexcept = default;

    T* data() { return p_.get(); }
    const T* data() const { return p_.get(); }
    std::size_t size() const { return n_; }
    T& operator[](std::size_t i) { return p_.get()[i]; }
    const T& operator[](std::size_t i) const { return p_.get()[i]; }
    T* begin() { return p_.get(); }
    T* end() { return p_.get() + n_; }
    const T* begin() const { return p_.get(); }
    const T* end() const { return p_.get() + n_; }
    void fill(const T& v) { std::fill(begin(), end(), v); }

private:
    struct Free {
        void operator()(T* p) const { fftw_free(p); }
    };
    std::size_t n_ = 0;
    std::unique_ptr<T, Free> p_;
};

using RealGrid = FftwBuffer<double>;
using ModeArray = FftwBuffer<cplx>;

class SpectralLattice {
public:
    /// Throws ConfigError unless N is even and positive and
    /// L > window_diameter + 2 * horizon (no wrap-around of the light cone).
    SpectralLattice(double box_side, int modes_per_axis, Cutoff cutoff = Cutoff::Dealias23, double window_diameter = 0.0,
                    double horizon = 1.0, double cutoff_radius = 0.0);
    ~SpectralLattice();
    SpectralLattice(const SpectralLattice&) = delete;
    SpectralLattice& operator=(const SpectralLattice&) = delete;

    double box_side() const { return L_; }
    int n() const { return N_; }
    double dx() const { return L_ / N_; }
    double dk() const { return 2.0 * kPi / L_; }
    Cutoff cutoff() const { return cutoff_; }
    double cutoff_radius() const { return radius_; }
    double window_diameter() const { return window_; }
    double horizon() const { return horizon_; }

    std::size_t real_size() const { return static_cast<std::size_t>(N_) * N_ * N_; }
    std::size_t mode_size() const { return static_cast<std::size_t>(N_) * N_ * (N_ / 2 + 1); }
    std::size_t real_index(int ix, int iy, int iz) const {
        return (static_cast<std::size_t>(ix) * N_ + iy) * N_ + iz;
    }
    std::size_t mode_index(int ix, int iy, int iz) const {
        return (static_cast<std::size_t>(ix) * N_ + iy) * (N_ / 2 + 1) + iz;
    }
    /// Signed integer wavenumber for a storage index along x or y.
    int signed_mode(int i) const { return i <= N_ / 2 ? i : i - N_; }

    /// Per-mode tables, indexed by mode storage index.
    const std::vector<double>& k_norm() const { return knorm_; }
    const std::vector<Vec3>& k_vec() const { return kvec_; }
    /// 1 inside the retained band, 0 outside. The zero mode is inside.
    const std::vector<unsigned char>& band() const { return band_; }
    /// Storage index of the mode -k when it lies in the half-spectrum
    /// (kz = 0 or kz = N/2 planes); otherwise equal to the index itself.
    const std::vector<std::size_t>& partner() const { return partner_; }
    /// 2 for modes whose conjugate partner is implicit (0 < kz < N/2), else 1.
    const std::vector<unsigned char>& multiplicity() const { return mult_; }

    RealGrid make_real() const { return RealGrid(real_size()); }
    ModeArray make_modes() const { return ModeArray(mode_size()); }

    /// u -> u_k (includes the 1/N^3).
    void forward(const RealGrid& in, ModeArray& out) const;
    /// u_k -> u. The input is left untouched.
    void backward(const ModeArray& in, RealGrid& out) const;

    /// Zeroes modes outside the band.
    void apply_band(ModeArray& m) const;
    /// Makes the array exactly Hermitian: the canonical member of each
    /// conjugate pair wins, self-conjugate modes become real.
    void enforce_hermitian(ModeArray& m) const;
    /// max |u(-k) - conj u(k)| over the stored planes.
    double hermitian_defect(const ModeArray& m) const;

    /// Physical coordinates of a grid point, each in [0, L).
    Vec3 position(int ix, int iy, int iz) const { return {ix * dx(), iy * dx(), iz * dx()}; }

    /// Points farther than this from the box centre may see wrapped signals.
    double trusted_radius() const { return 0.5 * (L_ - 2.0 * horizon_); }

    std::string describe() const;

private:
    double L_;
    int N_;
    Cutoff cutoff_;
    double window_;
    double horizon_;
    double radius_;
    std::vector<double> knorm_;
    std::vector<Vec3> kvec_;
    std::vector<unsigned char> band_;
    std::vector<std::size_t> partner_;
    std::vector<unsigned char> mult_;
    fftw_plan r2c_ = nullptr;
    fftw_plan c2r_ = nullptr;
};

/// Noise weights q_k = rho(k) (2 pi / L)^3 per stored mode: the continuum
/// spectral density sampled on the lattice, zero at k = 0 and outside the
/// band. Their inverse transform is the lattice covariance of the noise.
std::vector<double> discrete_density(const SpectralLattice& lattice, const covariance::CovarianceSpec& spec);

}  // namespace wave3::simulator
