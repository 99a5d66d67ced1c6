#pragma once

// Pseudo-spectral solver for the mild equation
//   u(t) = d/dt G(t) * v0 + G(t) * v0~ + int_0^t G(t - s) sigma(u(s)) W(ds) + int_0^t G(t - s) * b(u(s)) ds
// on the periodic lattice. Coordinates are centred: grid index i maps to
// i dx - L/2 on every axis, so the observation window sits around the origin.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wave3/covariance.hpp"
#include "wave3/lattice.hpp"
#include "wave3/wave_kernel.hpp"

namespace wave3::simulator {

/// Scalar nonlinearity with its declared Lipschitz constant.
struct Nonlinearity {
    std::string name;
    std::function<double(double)> fn;
    double lipschitz = 0.0;
    /// Set when fn is constant; lets the solver skip the physical-space pass.
    std::optional<double> constant;

    double operator()(double u) const { return fn(u); }

    static Nonlinearity constant_value(double c);
    static Nonlinearity sine();
    static Nonlinearity cosine();
    /// a u + c
    static Nonlinearity affine(double a, double c);
    /// "0", "1", "const(c)", "sin", "cos", "affine(a,c)". Throws ConfigError.
    static Nonlinearity parse(const std::string& text);
};

/// Smooth indicator of a ball, used to switch the noise off outside it.
/// Equal to 1 for |x - centre| <= radius and 0 beyond radius + taper.
struct NoiseWindow {
    Vec3 centre;
    double radius = 1.0;
    double taper = 0.25;

    double operator()(const Vec3& x) const;
};

struct ModelSpec {
    Nonlinearity sigma = Nonlinearity::constant_value(1.0);
    Nonlinearity b = Nonlinearity::constant_value(0.0);
    covariance::CovarianceSpec covariance{1.0, 1.0};
    /// nullopt means zero initial data.
    std::optional<kernel::InitialData> initial;
    /// Index of the mollified kernel G_n in the stochastic term (history solver only).
    std::optional<int> mollify_n;
    std::optional<NoiseWindow> noise_window;

    /// One line per field, for manifests.
    std::string describe() const;
};

struct FieldState {
    double t = 0.0;
    std::uint64_t step = 0;
    ModeArray u;
    ModeArray v;
};

/// Thrown when a step produces a non-finite value; carries the offending
/// state so that the caller can dump it.
class StepError : public NumericalError {
public:
    StepError(const std::string& what, FieldState state) : NumericalError(what), state_(std::move(state)) {}
    const FieldState& state() const { return state_; }

private:
    FieldState state_;
};

/// Counter-based key of one noise draw.
struct NoiseKey {
    std::uint64_t seed = 0;
    std::uint32_t replica = 0;
    std::uint32_t step = 0;
    std::uint32_t stream = 0;
};

/// Fourier modes of W((t, t + dt], .) on the lattice: complex Gaussian with
/// E|W_k|^2 = dt q_k, Hermitian, a pure function of the key.
ModeArray synthesize_noise_increment(const SpectralLattice& lattice, std::span<const double> q, double dt,
                                     const NoiseKey& key);

/// Centred coordinates of a grid point.
Vec3 centred_position(const SpectralLattice& lattice, int ix, int iy, int iz);

/// Samples a field at the centred grid coordinates.
RealGrid sample_on_grid(const SpectralLattice& lattice, const ScalarField& f);

/// sum_k (|k|^2 |u_k|^2 + |v_k|^2) over the full spectrum.
double mode_energy(const SpectralLattice& lattice, const FieldState& s);

/// Grid L^2 norm sqrt(sum_x |g(x)|^2 dx^3) of the field with modes g.
double grid_l2_norm(const SpectralLattice& lattice, const ModeArray& g);

/// Exact free evolution of every mode by time tau.
void propagate_free(const SpectralLattice& lattice, FieldState& s, double tau);

/// Scratch buffers for one worker.
struct StepWorkspace {
    RealGrid u_phys, x_phys, y_phys, scratch;
    ModeArray x_hat, y_hat, b_hat, tmp;
};

/// One exponential-integrator step per call: free rotation of each mode,
/// the stochastic forcing integrated exactly per mode for frozen sigma, and
/// the drift by the midpoint rule. sigma(u) and b(u) are evaluated at the
/// start of the step (left point) and dealiased after the pointwise product.
///
/// Noise is drawn on a fine grid of dt / noise_substeps and aggregated
/// exactly, so runs with dt and dt/2 (and twice the substeps) share a path.
class DuhamelStepper {
public:
    DuhamelStepper(const ModelSpec& model, const SpectralLattice& lattice, double dt, int noise_substeps = 1);

    const SpectralLattice& lattice() const { return lattice_; }
    double dt() const { return dt_; }
    int noise_substeps() const { return substeps_; }
    const std::vector<double>& density() const { return q_; }

    FieldState initial_state() const;
    StepWorkspace make_workspace() const;
    /// Advances s by dt. The noise of step s.step uses fine counters
    /// s.step * noise_substeps + j.
    void step(FieldState& s, std::uint64_t seed, std::uint32_t replica, StepWorkspace& ws) const;
    void step(FieldState& s, std::uint64_t seed, std::uint32_t replica) const;

private:
    struct ModeCoefficients {
        double c = 1.0, s_over_k = 0.0, minus_k_s = 0.0;
        double bu = 0.0, bv = 0.0;
        double l11 = 0.0, l21 = 0.0, l22 = 0.0;
        // fine-step rotation, used when aggregating substeps
        double fc = 1.0, fs_over_k = 0.0, fminus_k_s = 0.0;
    };
    void noise_pair(const FieldState& s, std::uint64_t seed, std::uint32_t replica, StepWorkspace& ws) const;

    ModelSpec model_;
    const SpectralLattice& lattice_;
    double dt_;
    int substeps_;
    std::vector<double> q_;
    std::vector<double> sqrt_q_;
    std::vector<ModeCoefficients> coef_;
    RealGrid window_;
    bool physical_noise_ = false;
};

struct ProbeInfo {
    std::array<int, 3> index{};
    Vec3 position;
    double distance = 0.0;
    /// Outside the observation window but inside the trusted radius.
    bool near_edge = false;
};

struct RunOptions {
    double t_end = 1.0;
    double dt = 0.02;
    int noise_substeps = 1;
    std::size_t replicas = 1;
    std::uint32_t first_replica = 0;
    std::uint64_t seed = 0;
    std::vector<std::array<int, 3>> probes;
    /// Probe sampling interval in steps; t = 0 and t_end are always sampled.
    std::size_t probe_every = 1;
    bool keep_final_fields = false;
    unsigned threads = 1;
};

struct RunResult {
    std::vector<double> times;
    std::vector<ProbeInfo> probes;
    /// values[replica][time][probe]
    std::vector<std::vector<std::vector<double>>> values;
    /// Physical fields at t_end, one per replica, when requested.
    std::vector<RealGrid> final_fields;
    std::size_t steps = 0;
};

/// Probe metadata; throws ConfigError for a probe beyond the trusted radius
/// (its light cone would wrap around the torus) or off the grid.
std::vector<ProbeInfo> check_probes(const SpectralLattice& lattice, std::span<const std::array<int, 3>> probes);

/// Replica r uses replica counter first_replica + r. Deterministic in the
/// seed whatever the thread count.
RunResult run(const ModelSpec& model, const SpectralLattice& lattice, const RunOptions& opt);

// History solver: every time level is kept and the stochastic and drift
// terms are the kernel sums over all earlier levels, which allows the
// time-dependent mollified kernel G_n.

struct HistoryOptions {
    double t_end = 1.0;
    double dt = 0.025;
    std::uint64_t seed = 0;
    /// 0 evaluates the causal scheme level by level. p > 0 runs p Picard
    /// sweeps from the free solution instead; after (number of steps)
    /// sweeps the result equals the causal one.
    int picard_sweeps = 0;
};

struct HistoryResult {
    ModeArray u_final;
    /// Largest grid-L^2 change of the final field per Picard sweep.
    std::vector<double> sweep_changes;
};

/// Kernel of the stochastic term: G_n when mollify_n is set, else G. The
/// noise on step j is the increment keyed by (seed, replica, j) evaluated
/// with the kernel at the step midpoint.
HistoryResult history_solve(const ModelSpec& model, const SpectralLattice& lattice, const HistoryOptions& opt,
                            std::uint32_t replica);

struct MollifiedComparison {
    std::vector<int> ns;
    /// diff[replica][i] = || u_{ns[i]}(t_end) - u(t_end) ||_{L^2(grid)}
    std::vector<std::vector<double>> diff;
    std::size_t strictly_decreasing = 0;
    double fraction_decreasing = 0.0;
};

/// Shared-noise comparison of the mollified solutions with the unmollified
/// one. n = 0 in `ns` stands for the unmollified kernel itself.
MollifiedComparison compare_mollified(const ModelSpec& model, const SpectralLattice& lattice, std::span<const int> ns,
                                      const HistoryOptions& opt, std::size_t replicas, unsigned threads = 1);

}  // namespace wave3::simulator
