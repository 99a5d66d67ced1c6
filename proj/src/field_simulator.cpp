#include "wave3/field_simulator.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

#include "wave3/gaussian_exact.hpp"
#include "wave3/parallel.hpp"
#include "wave3/rng.hpp"

namespace wave3::simulator {

namespace {

// Fourth counter word of each draw family.
constexpr std::uint32_t kPairTag = 0x7A1Au;
constexpr std::uint32_t kIncrementTag = 0x1C0Bu;

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

// Arguments of "name(a,b,...)"; nullopt if the text has no parentheses.
std::optional<std::vector<double>> call_args(const std::string& text, const std::string& name) {
    if (text.rfind(name + "(", 0) != 0 || text.back() != ')') return std::nullopt;
    std::vector<double> out;
    std::stringstream ss(text.substr(name.size() + 1, text.size() - name.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw ConfigError("bad number '" + item + "' in '" + text + "'");
        }
        if (used != item.size() || !std::isfinite(v)) throw ConfigError("bad number '" + item + "' in '" + text + "'");
        out.push_back(v);
    }
    return out;
}

bool all_finite(const ModeArray& m) {
    for (const auto& z : m)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

// The canonical member of each conjugate pair draws the numbers.
bool canonical(const SpectralLattice& lat, std::size_t i) {
    return lat.multiplicity()[i] == 2 || lat.partner()[i] >= i;
}

bool self_conjugate(const SpectralLattice& lat, std::size_t i) {
    return lat.multiplicity()[i] == 1 && lat.partner()[i] == i;
}

std::size_t step_count(double t_end, double dt) {
    if (!(t_end > 0.0) || !(dt > 0.0) || dt > t_end) throw ConfigError("need 0 < dt <= t_end");
    const double r = t_end / dt;
    const auto n = static_cast<std::size_t>(std::llround(r));
    if (std::abs(r - static_cast<double>(n)) > 1e-9 * r) throw ConfigError("t_end must be an integer multiple of dt");
    return n;
}

void check_horizon(const SpectralLattice& lattice, double t_end) {
    if (t_end > lattice.horizon() * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "t_end " << t_end << " exceeds the lattice horizon " << lattice.horizon()
           << "; the light cone would wrap around the torus";
        throw ConfigError(os.str());
    }
}

}  // namespace

Nonlinearity Nonlinearity::constant_value(double c) {
    std::ostringstream os;
    os << "const(" << c << ")";
    return {os.str(), [c](double) { return c; }, 0.0, c};
}

Nonlinearity Nonlinearity::sine() { return {"sin", [](double u) { return std::sin(u); }, 1.0, std::nullopt}; }

Nonlinearity Nonlinearity::cosine() { return {"cos", [](double u) { return std::cos(u); }, 1.0, std::nullopt}; }

Nonlinearity Nonlinearity::affine(double a, double c) {
    if (a == 0.0) return constant_value(c);
    std::ostringstream os;
    os << "affine(" << a << "," << c << ")";
    return {os.str(), [a, c](double u) { return a * u + c; }, std::abs(a), std::nullopt};
}

Nonlinearity Nonlinearity::parse(const std::string& raw) {
    const std::string text = trim(raw);
    if (text == "0" || text == "zero") return constant_value(0.0);
    if (text == "1" || text == "one") return constant_value(1.0);
    if (text == "sin") return sine();
    if (text == "cos") return cosine();
    if (auto a = call_args(text, "const")) {
        if (a->size() != 1) throw ConfigError("const(c) takes one argument");
        return constant_value((*a)[0]);
    }
    if (auto a = call_args(text, "affine")) {
        if (a->size() != 2) throw ConfigError("affine(a,c) takes two arguments");
        return affine((*a)[0], (*a)[1]);
    }
    throw ConfigError("unknown nonlinearity '" + text + "' (expected 0, 1, const(c), sin, cos or affine(a,c))");
}

double NoiseWindow::operator()(const Vec3& x) const {
    const double d = (x - centre).norm();
    if (d <= radius) return 1.0;
    if (taper <= 0.0 || d >= radius + taper) return 0.0;
    // C-infinity step built from exp(-1/s)
    const double s = (d - radius) / taper;
    const double a = std::exp(-1.0 / (1.0 - s));
    const double b = std::exp(-1.0 / s);
    return a / (a + b);
}

std::string ModelSpec::describe() const {
    std::ostringstream os;
    os << "sigma=" << sigma.name << " (lipschitz " << sigma.lipschitz << ")\n";
    os << "b=" << b.name << " (lipschitz " << b.lipschitz << ")\n";
    os << "covariance=beta " << covariance.beta() << ", delta " << covariance.delta() << ", phi "
       << covariance.describe() << "\n";
    os << "initial=" << (initial ? "given" : "zero") << "\n";
    os << "mollify_n=" << (mollify_n ? std::to_string(*mollify_n) : std::string("none")) << "\n";
    if (noise_window)
        os << "noise_window=centre (" << noise_window->centre.x << "," << noise_window->centre.y << ","
           << noise_window->centre.z << ") radius " << noise_window->radius << " taper " << noise_window->taper << "\n";
    return os.str();
}

ModeArray synthesize_noise_increment(const SpectralLattice& lattice, std::span<const double> q, double dt,
                                     const NoiseKey& key) {
    if (!(dt > 0.0)) throw DomainError("noise increment needs dt > 0");
    if (q.size() != lattice.mode_size()) throw ConfigError("density size does not match the lattice");
    ModeArray w = lattice.make_modes();
    const auto& partner = lattice.partner();
    const std::uint32_t tag = kIncrementTag ^ (key.stream << 16);
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] == 0.0 || !canonical(lattice, i)) continue;
        const NormalQuad g = philox_normals(key.seed, {static_cast<std::uint32_t>(i), key.step, key.replica, tag});
        const double s = std::sqrt(dt * q[i]);
        const cplx z = self_conjugate(lattice, i) ? cplx(g.z[0], 0.0) : cplx(g.z[0], g.z[1]) * std::sqrt(0.5);
        w[i] = s * z;
        if (partner[i] != i) w[partner[i]] = std::conj(w[i]);
    }
    return w;
}

Vec3 centred_position(const SpectralLattice& lattice, int ix, int iy, int iz) {
    const double h = 0.5 * lattice.box_side();
    const Vec3 p = lattice.position(ix, iy, iz);
    return {p.x - h, p.y - h, p.z - h};
}

RealGrid sample_on_grid(const SpectralLattice& lattice, const ScalarField& f) {
    RealGrid g = lattice.make_real();
    const int n = lattice.n();
    for (int ix = 0; ix < n; ++ix)
        for (int iy = 0; iy < n; ++iy)
            for (int iz = 0; iz < n; ++iz) g[lattice.real_index(ix, iy, iz)] = f(centred_position(lattice, ix, iy, iz));
    return g;
}

double mode_energy(const SpectralLattice& lattice, const FieldState& s) {
    const auto& k = lattice.k_norm();
    const auto& mult = lattice.multiplicity();
    double e = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) e += mult[i] * (k[i] * k[i] * std::norm(s.u[i]) + std::norm(s.v[i]));
    return e;
}

double grid_l2_norm(const SpectralLattice& lattice, const ModeArray& g) {
    const auto& mult = lattice.multiplicity();
    double sum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) sum += mult[i] * std::norm(g[i]);
    return std::sqrt(std::pow(lattice.box_side(), 3) * sum);
}

void propagate_free(const SpectralLattice& lattice, FieldState& s, double tau) {
    const auto& k = lattice.k_norm();
    for (std::size_t i = 0; i < k.size(); ++i) {
        const double c = std::cos(tau * k[i]);
        const double sk = kernel::fourier_G(tau, k[i]);
        const cplx u = s.u[i];
        const cplx v = s.v[i];
        s.u[i] = c * u + sk * v;
        s.v[i] = -k[i] * k[i] * sk * u + c * v;
    }
    s.t += tau;
}

DuhamelStepper::DuhamelStepper(const ModelSpec& model, const SpectralLattice& lattice, double dt, int noise_substeps)
    : model_(model), lattice_(lattice), dt_(dt), substeps_(noise_substeps) {
    if (!(dt_ > 0.0)) throw ConfigError("dt must be positive");
    if (substeps_ < 1) throw ConfigError("noise_substeps must be at least 1");
    if (model_.mollify_n) throw UnsupportedError("the stepper has no mollified kernel; use history_solve");
    if (model_.initial) model_.initial->validate();
    q_ = discrete_density(lattice_, model_.covariance);
    sqrt_q_.resize(q_.size());
    for (std::size_t i = 0; i < q_.size(); ++i) sqrt_q_[i] = std::sqrt(q_[i]);

    const double fine = dt_ / substeps_;
    const auto& k = lattice_.k_norm();
    coef_.resize(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) {
        auto& c = coef_[i];
        const double kk = k[i];
        c.c = std::cos(dt_ * kk);
        c.s_over_k = kernel::fourier_G(dt_, kk);
        c.minus_k_s = -kk * kk * c.s_over_k;
        c.bu = dt_ * kernel::fourier_G(0.5 * dt_, kk);
        c.bv = dt_ * std::cos(0.5 * dt_ * kk);
        c.fc = std::cos(fine * kk);
        c.fs_over_k = kernel::fourier_G(fine, kk);
        c.fminus_k_s = -kk * kk * c.fs_over_k;
        // Covariance of (int sin((h-s)k)/k dW, int cos((h-s)k) dW) over one fine step h.
        const double a = gaussian::mode_variance(kk, fine);
        const double b = 0.5 * c.fs_over_k * c.fs_over_k;
        const double cc = 0.5 * fine + 0.25 * kernel::fourier_G(2.0 * fine, kk);
        c.l11 = std::sqrt(a);
        c.l21 = a > 0.0 ? b / c.l11 : 0.0;
        c.l22 = std::sqrt(std::max(0.0, cc - c.l21 * c.l21));
    }
    if (model_.noise_window) window_ = sample_on_grid(lattice_, *model_.noise_window);
    physical_noise_ = !model_.sigma.constant || model_.noise_window.has_value();
}

FieldState DuhamelStepper::initial_state() const {
    FieldState s{0.0, 0, lattice_.make_modes(), lattice_.make_modes()};
    if (model_.initial) {
        lattice_.forward(sample_on_grid(lattice_, model_.initial->v0.value), s.u);
        lattice_.forward(sample_on_grid(lattice_, model_.initial->v0_tilde), s.v);
        lattice_.apply_band(s.u);
        lattice_.apply_band(s.v);
        lattice_.enforce_hermitian(s.u);
        lattice_.enforce_hermitian(s.v);
    }
    return s;
}

StepWorkspace DuhamelStepper::make_workspace() const {
    return {lattice_.make_real(),  lattice_.make_real(),  lattice_.make_real(),  lattice_.make_real(),
            lattice_.make_modes(), lattice_.make_modes(), lattice_.make_modes(), lattice_.make_modes()};
}

void DuhamelStepper::noise_pair(const FieldState& s, std::uint64_t seed, std::uint32_t replica,
                                StepWorkspace& ws) const {
    ws.x_hat.fill(0.0);
    ws.y_hat.fill(0.0);
    const auto& partner = lattice_.partner();
    const auto base = static_cast<std::uint32_t>(s.step * static_cast<std::uint64_t>(substeps_));
    for (std::size_t i = 0; i < q_.size(); ++i) {
        if (q_[i] == 0.0 || !canonical(lattice_, i)) continue;
        const auto& c = coef_[i];
        const bool real_mode = self_conjugate(lattice_, i);
        cplx x = 0.0, y = 0.0;
        for (int j = 0; j < substeps_; ++j) {
            const NormalQuad g = philox_normals(seed, {static_cast<std::uint32_t>(i), base + static_cast<std::uint32_t>(j),
                                                       replica, kPairTag});
            cplx z1, z2;
            if (real_mode) {
                z1 = g.z[0];
                z2 = g.z[1];
            } else {
                z1 = cplx(g.z[0], g.z[1]) * std::sqrt(0.5);
                z2 = cplx(g.z[2], g.z[3]) * std::sqrt(0.5);
            }
            // carry the earlier substeps to the end of this one
            const cplx xr = c.fc * x + c.fs_over_k * y;
            const cplx yr = c.fminus_k_s * x + c.fc * y;
            x = xr + c.l11 * z1;
            y = yr + c.l21 * z1 + c.l22 * z2;
        }
        ws.x_hat[i] = sqrt_q_[i] * x;
        ws.y_hat[i] = sqrt_q_[i] * y;
        if (partner[i] != i) {
            ws.x_hat[partner[i]] = std::conj(ws.x_hat[i]);
            ws.y_hat[partner[i]] = std::conj(ws.y_hat[i]);
        }
    }
}

void DuhamelStepper::step(FieldState& s, std::uint64_t seed, std::uint32_t replica, StepWorkspace& ws) const {
    const auto& sigma = model_.sigma;
    const auto& b = model_.b;
    const bool need_u = !sigma.constant || !b.constant;
    if (need_u) lattice_.backward(s.u, ws.u_phys);
    const std::size_t nreal = lattice_.real_size();

    // drift b(u) at the left point
    bool have_b = false;
    if (b.constant) {
        ws.b_hat.fill(0.0);
        if (*b.constant != 0.0) {
            ws.b_hat[0] = *b.constant;
            have_b = true;
        }
    } else {
        for (std::size_t x = 0; x < nreal; ++x) ws.scratch[x] = b(ws.u_phys[x]);
        lattice_.forward(ws.scratch, ws.b_hat);
        lattice_.apply_band(ws.b_hat);
        have_b = true;
    }

    // stochastic forcing
    const bool have_noise = !(sigma.constant && *sigma.constant == 0.0);
    if (have_noise) {
        noise_pair(s, seed, replica, ws);
        if (physical_noise_) {
            lattice_.backward(ws.x_hat, ws.x_phys);
            lattice_.backward(ws.y_hat, ws.y_phys);
            for (std::size_t x = 0; x < nreal; ++x) {
                double m = sigma.constant ? *sigma.constant : sigma(ws.u_phys[x]);
                if (model_.noise_window) m *= window_[x];
                ws.x_phys[x] *= m;
                ws.y_phys[x] *= m;
            }
            lattice_.forward(ws.x_phys, ws.x_hat);
            lattice_.forward(ws.y_phys, ws.y_hat);
            lattice_.apply_band(ws.x_hat);
            lattice_.apply_band(ws.y_hat);
        } else if (*sigma.constant != 1.0) {
            for (auto& z : ws.x_hat) z *= *sigma.constant;
            for (auto& z : ws.y_hat) z *= *sigma.constant;
        }
    }

    for (std::size_t i = 0; i < coef_.size(); ++i) {
        const auto& c = coef_[i];
        const cplx u = s.u[i];
        const cplx v = s.v[i];
        cplx un = c.c * u + c.s_over_k * v;
        cplx vn = c.minus_k_s * u + c.c * v;
        if (have_b) {
            un += c.bu * ws.b_hat[i];
            vn += c.bv * ws.b_hat[i];
        }
        if (have_noise) {
            un += ws.x_hat[i];
            vn += ws.y_hat[i];
        }
        s.u[i] = un;
        s.v[i] = vn;
    }
    lattice_.enforce_hermitian(s.u);
    lattice_.enforce_hermitian(s.v);
    s.t += dt_;
    ++s.step;
    if (!all_finite(s.u) || !all_finite(s.v)) {
        std::ostringstream os;
        os << "non-finite field after step " << s.step << " (t = " << s.t << ")";
        throw StepError(os.str(), s);
    }
}

void DuhamelStepper::step(FieldState& s, std::uint64_t seed, std::uint32_t replica) const {
    StepWorkspace ws = make_workspace();
    step(s, seed, replica, ws);
}

std::vector<ProbeInfo> check_probes(const SpectralLattice& lattice, std::span<const std::array<int, 3>> probes) {
    std::vector<ProbeInfo> out;
    for (const auto& p : probes) {
        for (int c : p)
            if (c < 0 || c >= lattice.n()) throw ConfigError("probe index outside the grid");
        ProbeInfo info;
        info.index = p;
        info.position = centred_position(lattice, p[0], p[1], p[2]);
        info.distance = info.position.norm();
        if (info.distance > lattice.trusted_radius() * (1.0 + 1e-12)) {
            std::ostringstream os;
            os << "probe (" << p[0] << "," << p[1] << "," << p[2] << ") at distance " << info.distance
               << " from the centre lies beyond the trusted radius " << lattice.trusted_radius()
               << "; its light cone wraps around the torus";
            throw ConfigError(os.str());
        }
        info.near_edge = info.distance > 0.5 * lattice.window_diameter();
        out.push_back(info);
    }
    return out;
}

RunResult run(const ModelSpec& model, const SpectralLattice& lattice, const RunOptions& opt) {
    const std::size_t steps = step_count(opt.t_end, opt.dt);
    check_horizon(lattice, opt.t_end);
    if (opt.probe_every == 0) throw ConfigError("probe_every must be positive");
    RunResult out;
    out.steps = steps;
    out.probes = check_probes(lattice, opt.probes);
    std::vector<std::size_t> sample_steps;
    for (std::size_t n = 0; n <= steps; ++n)
        if (n % opt.probe_every == 0 || n == steps) sample_steps.push_back(n);
    for (auto n : sample_steps) out.times.push_back(static_cast<double>(n) * opt.dt);
    out.values.resize(opt.replicas);
    if (opt.keep_final_fields) out.final_fields.resize(opt.replicas);

    const DuhamelStepper stepper(model, lattice, opt.dt, opt.noise_substeps);
    std::vector<std::size_t> probe_index;
    for (const auto& p : out.probes) probe_index.push_back(lattice.real_index(p.index[0], p.index[1], p.index[2]));

    parallel_for(opt.replicas, opt.threads, [&](std::size_t r) {
        const auto replica = static_cast<std::uint32_t>(opt.first_replica + r);
        FieldState s = stepper.initial_state();
        StepWorkspace ws = stepper.make_workspace();
        auto& series = out.values[r];
        std::size_t next = 0;
        auto record = [&] {
            if (probe_index.empty()) return;
            lattice.backward(s.u, ws.scratch);
            std::vector<double> row;
            for (auto idx : probe_index) row.push_back(ws.scratch[idx]);
            series.push_back(std::move(row));
        };
        for (std::size_t n = 0; n <= steps; ++n) {
            if (next < sample_steps.size() && sample_steps[next] == n) {
                record();
                ++next;
            }
            if (n < steps) stepper.step(s, opt.seed, replica, ws);
        }
        if (opt.keep_final_fields) {
            out.final_fields[r] = lattice.make_real();
            lattice.backward(s.u, out.final_fields[r]);
        }
    });
    return out;
}

namespace {

class HistorySolver {
public:
    HistorySolver(const ModelSpec& model, const SpectralLattice& lattice, const HistoryOptions& opt,
                  std::uint32_t replica)
        : model_(model), lat_(lattice), opt_(opt), replica_(replica), steps_(step_count(opt.t_end, opt.dt)) {
        check_horizon(lat_, opt.t_end);
        if (model_.initial) model_.initial->validate();
        if (model_.mollify_n && *model_.mollify_n < 1) throw DomainError("mollification index must be >= 1");
        if (opt_.picard_sweeps < 0) throw ConfigError("picard_sweeps must be non-negative");
        q_ = discrete_density(lat_, model_.covariance);
        const auto& k = lat_.k_norm();
        const auto& band = lat_.band();
        // kernels at lag l (midpoint tau = (l - 1/2) dt), l = 1..steps
        kern_.resize(steps_ + 1);
        drift_.resize(steps_ + 1);
        for (std::size_t l = 1; l <= steps_; ++l) {
            const double tau = (static_cast<double>(l) - 0.5) * opt_.dt;
            kern_[l].assign(k.size(), 0.0);
            drift_[l].assign(k.size(), 0.0);
            for (std::size_t i = 0; i < k.size(); ++i) {
                if (!band[i]) continue;
                const double g = kernel::fourier_G(tau, k[i]);
                drift_[l][i] = opt_.dt * g;
                kern_[l][i] = model_.mollify_n ? kernel::Mollifier::standard().fourier(tau * k[i] / *model_.mollify_n) * g : g;
            }
        }
        free_ = FieldState{0.0, 0, lat_.make_modes(), lat_.make_modes()};
        if (model_.initial) {
            lat_.forward(sample_on_grid(lat_, model_.initial->v0.value), free_.u);
            lat_.forward(sample_on_grid(lat_, model_.initial->v0_tilde), free_.v);
            lat_.apply_band(free_.u);
            lat_.apply_band(free_.v);
            lat_.enforce_hermitian(free_.u);
            lat_.enforce_hermitian(free_.v);
        }
        for (std::size_t j = 0; j < steps_; ++j)
            increments_.push_back(synthesize_noise_increment(
                lat_, q_, opt_.dt, {opt_.seed, replica_, static_cast<std::uint32_t>(j), 1u}));
        if (model_.noise_window) window_ = sample_on_grid(lat_, *model_.noise_window);
    }

    HistoryResult solve() {
        HistoryResult out;
        const bool state_free = model_.sigma.constant && model_.b.constant && !model_.noise_window;
        if (opt_.picard_sweeps == 0) {
            if (state_free) {
                for (std::size_t j = 0; j < steps_; ++j) add_sources(j, free_level(0.0));
                out.u_final = level(steps_);
                return out;
            }
            std::vector<ModeArray> levels;
            levels.push_back(free_level(0.0));
            for (std::size_t m = 1; m <= steps_; ++m) {
                add_sources(m - 1, levels[m - 1]);
                levels.push_back(level(m));
            }
            out.u_final = std::move(levels.back());
            return out;
        }
        std::vector<ModeArray> levels;
        for (std::size_t m = 0; m <= steps_; ++m) levels.push_back(free_level(m * opt_.dt));
        for (int p = 0; p < opt_.picard_sweeps; ++p) {
            noise_src_.clear();
            drift_src_.clear();
            for (std::size_t j = 0; j < steps_; ++j) add_sources(j, levels[j]);
            std::vector<ModeArray> next;
            next.push_back(levels[0]);
            for (std::size_t m = 1; m <= steps_; ++m) next.push_back(level(m));
            ModeArray d = lat_.make_modes();
            for (std::size_t i = 0; i < d.size(); ++i) d[i] = next[steps_][i] - levels[steps_][i];
            out.sweep_changes.push_back(grid_l2_norm(lat_, d));
            levels = std::move(next);
        }
        out.u_final = std::move(levels.back());
        return out;
    }

private:
    ModeArray free_level(double t) const {
        FieldState s{0.0, 0, free_.u, free_.v};
        if (t > 0.0) propagate_free(lat_, s, t);
        return std::move(s.u);
    }

    // sigma(u_j) dW_j and b(u_j) in Fourier space, appended as level j's sources.
    void add_sources(std::size_t j, const ModeArray& u) {
        const auto& sigma = model_.sigma;
        const auto& b = model_.b;
        const std::size_t nreal = lat_.real_size();
        RealGrid uphys = lat_.make_real();
        if (!sigma.constant || !b.constant) lat_.backward(u, uphys);

        ModeArray s = lat_.make_modes();
        if (sigma.constant && !model_.noise_window) {
            for (std::size_t i = 0; i < s.size(); ++i) s[i] = *sigma.constant * increments_[j][i];
        } else {
            RealGrid w = lat_.make_real();
            lat_.backward(increments_[j], w);
            for (std::size_t x = 0; x < nreal; ++x) {
                double m = sigma.constant ? *sigma.constant : sigma(uphys[x]);
                if (model_.noise_window) m *= window_[x];
                w[x] *= m;
            }
            lat_.forward(w, s);
            lat_.apply_band(s);
        }
        noise_src_.push_back(std::move(s));

        ModeArray d = lat_.make_modes();
        if (b.constant) {
            d[0] = *b.constant;
        } else {
            RealGrid w = lat_.make_real();
            for (std::size_t x = 0; x < nreal; ++x) w[x] = b(uphys[x]);
            lat_.forward(w, d);
            lat_.apply_band(d);
        }
        drift_src_.push_back(std::move(d));
    }

    // u(t_m) from the sources of levels 0..m-1.
    ModeArray level(std::size_t m) const {
        ModeArray u = free_level(m * opt_.dt);
        for (std::size_t j = 0; j < m; ++j) {
            const auto& kn = kern_[m - j];
            const auto& kd = drift_[m - j];
            const auto& sn = noise_src_[j];
            const auto& sd = drift_src_[j];
            for (std::size_t i = 0; i < u.size(); ++i) u[i] += kn[i] * sn[i] + kd[i] * sd[i];
        }
        lat_.enforce_hermitian(u);
        return u;
    }

    const ModelSpec& model_;
    const SpectralLattice& lat_;
    HistoryOptions opt_;
    std::uint32_t replica_;
    std::size_t steps_;
    std::vector<double> q_;
    std::vector<std::vector<double>> kern_, drift_;
    FieldState free_;
    std::vector<ModeArray> increments_;
    std::vector<ModeArray> noise_src_, drift_src_;
    RealGrid window_;
};

}  // namespace

HistoryResult history_solve(const ModelSpec& model, const SpectralLattice& lattice, const HistoryOptions& opt,
                            std::uint32_t replica) {
    return HistorySolver(model, lattice, opt, replica).solve();
}

MollifiedComparison compare_mollified(const ModelSpec& model, const SpectralLattice& lattice, std::span<const int> ns,
                                      const HistoryOptions& opt, std::size_t replicas, unsigned threads) {
    MollifiedComparison out;
    out.ns.assign(ns.begin(), ns.end());
    for (int n : ns)
        if (n < 0) throw DomainError("mollification index must be >= 1 (0 for none)");
    out.diff.assign(replicas, std::vector<double>(ns.size(), 0.0));
    parallel_for(replicas, threads, [&](std::size_t r) {
        const auto replica = static_cast<std::uint32_t>(r);
        ModelSpec base = model;
        base.mollify_n.reset();
        const ModeArray ref = history_solve(base, lattice, opt, replica).u_final;
        for (std::size_t i = 0; i < ns.size(); ++i) {
            if (ns[i] == 0) continue;
            ModelSpec m = model;
            m.mollify_n = ns[i];
            ModeArray d = history_solve(m, lattice, opt, replica).u_final;
            for (std::size_t k = 0; k < d.size(); ++k) d[k] -= ref[k];
            out.diff[r][i] = grid_l2_norm(lattice, d);
        }
    });
    for (const auto& row : out.diff) {
        bool dec = true;
        for (std::size_t i = 1; i < row.size(); ++i) dec = dec && row[i] < row[i - 1];
        if (dec) ++out.strictly_decreasing;
    }
    out.fraction_decreasing = replicas ? static_cast<double>(out.strictly_decreasing) / replicas : 0.0;
    return out;
}

}  // namespace wave3::simulator
