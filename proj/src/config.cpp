#include "wave3/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace wave3::config {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

bool parse_real(const std::string& s, double& v) {
    try {
        std::size_t used = 0;
        v = std::stod(s, &used);
        return used == s.size() && std::isfinite(v);
    } catch (const std::exception&) {
        return false;
    }
}

bool parse_int(const std::string& s, long long& v) {
    try {
        std::size_t used = 0;
        v = std::stoll(s, &used);
        return used == s.size();
    } catch (const std::exception&) {
        return false;
    }
}

}  // namespace

const std::vector<KeySpec>& schema() {
    static const std::vector<KeySpec> keys = {
        // general
        {"seed", Kind::Integer, "0", "base seed of every random stream"},
        {"threads", Kind::Integer, "0", "worker threads; 0 defers to --threads, WAVE3_THREADS, hardware"},
        // covariance f = phi * |x|^-beta
        {"beta", Kind::Real, "1.0", "Riesz exponent beta in (0, 2)"},
        {"delta", Kind::Real, "1.0", "Hoelder order of the envelope, in (0, 1]"},
        {"envelope", Kind::Text, "constant_one", "constant_one | gaussian"},
        {"envelope_sigma", Kind::Real, "1.0", "width parameter of the gaussian envelope"},
        // quadrature
        {"quad_rel_tol", Kind::Real, "1e-10", "relative tolerance of the 1-D rules"},
        {"quad_max_depth", Kind::Integer, "15", "bisection depth of adaptive Gauss-Kronrod"},
        {"oracle_rel_tol", Kind::Real, "1e-8", "relative tolerance inside the lemma oracles"},
        {"oracle_convergence", Kind::Real, "1e-5", "relative error above which an oracle point is unconverged"},
        // verify
        {"verify_suite", Kind::Text, "all", "all or a comma list of energy,time_weight,semigroup,B1,B2,B3,B4,B5,B6"},
        {"alpha_B2", Kind::Real, "0.75", "claimed exponent for the first-increment separation integral"},
        {"alpha_B3", Kind::Real, "0.75", "claimed exponent for the second-increment separation integral"},
        {"alpha_B5", Kind::Real, "0.75", "claimed exponent for the first time functional"},
        {"alpha_B6", Kind::Real, "0.75", "claimed exponent for the second time functional"},
        {"sep_min_len", Kind::Real, "1e-3", "smallest separation |x - y|"},
        {"sep_max_len", Kind::Real, "1e-1", "largest separation |x - y|"},
        {"sep_points", Kind::Integer, "9", "separations, geometric"},
        {"gap_min_time", Kind::Real, "1e-3", "smallest time gap"},
        {"gap_max_time", Kind::Real, "1e-1", "largest time gap"},
        {"gap_points", Kind::Integer, "9", "time gaps, geometric"},
        {"base_time", Kind::Real, "0.5", "lower time t of the gap oracles and time increments"},
        {"b1_first_order_b", Kind::Real, "0.5", "b of the first-increment finiteness integral, in (0, 1)"},
        {"b1_second_order_b", Kind::Real, "1.5", "b of the second-increment finiteness integral, in (0, 2)"},
        {"b1_samples", Kind::Integer, "200000", "Monte Carlo samples per direction in the direction check"},
        {"semigroup_pairs", Kind::Integer, "5", "random (x, y) pairs per exponent pair"},
        // cov
        {"betas", Kind::RealList, "1.0", "beta values of the covariance curves"},
        {"t_obs_time", Kind::Real, "1.0", "observation time of spatial increments"},
        {"horizon_time", Kind::Real, "1.0", "time horizon T"},
        {"x_min_len", Kind::Real, "1e-3", "smallest |x| of the spatial curve"},
        {"x_max_len", Kind::Real, "1e-1", "largest |x| of the spatial curve"},
        {"x_points", Kind::Integer, "9", "points of the spatial curve, geometric"},
        {"slope_tolerance_space", Kind::Real, "0.03", "allowed |slope - (2 - beta)| for the spatial curve"},
        {"slope_tolerance_time", Kind::Real, "0.05", "allowed |slope - (2 - beta)| for the time curves"},
        // simulate
        {"solver", Kind::Text, "duhamel", "duhamel | gaussian_exact | white_noise | fractional_lines"},
        {"box_side_len", Kind::Real, "4.0", "side L of the periodic box"},
        {"grid_points_per_axis", Kind::Integer, "64", "N, even"},
        {"cutoff", Kind::Text, "dealias23", "none | dealias23 | spherical"},
        {"cutoff_radius_wavenumber", Kind::Real, "0.0", "radius of the spherical cutoff"},
        {"window_diameter_len", Kind::Real, "1.0", "diameter of the observation window"},
        {"t_end_time", Kind::Real, "1.0", "final time"},
        {"dt_time", Kind::Real, "0.02", "time step"},
        {"noise_substeps", Kind::Integer, "1", "fine noise draws per step"},
        {"replicas", Kind::Integer, "1", "independent replicas"},
        {"sigma", Kind::Text, "1", "0 | 1 | const(c) | sin | cos | affine(a,c)"},
        {"b", Kind::Text, "0", "0 | 1 | const(c) | sin | cos | affine(a,c)"},
        {"sigma_lipschitz", Kind::Real, "-1", "declared Lipschitz constant of sigma; -1 uses the built-in one"},
        {"b_lipschitz", Kind::Real, "-1", "declared Lipschitz constant of b; -1 uses the built-in one"},
        {"initial", Kind::Text, "zero", "zero | bump"},
        {"bump_amplitude", Kind::Real, "1.0", "amplitude of the initial position bump"},
        {"bump_velocity_amplitude", Kind::Real, "0.0", "amplitude of the initial velocity bump"},
        {"bump_width_len", Kind::Real, "0.5", "width of both bumps"},
        {"sample_times", Kind::RealList, "1.0", "output times of the gaussian_exact solver"},
        {"probes", Kind::Text, "", "probe grid indices 'i,j,k;i,j,k'"},
        {"probe_every_steps", Kind::Integer, "1", "probe sampling interval"},
        {"hurst", Kind::Real, "0.5", "Hurst index of the fractional_lines solver"},
        // estimate
        {"input_dir", Kind::Text, "", "directory written by simulate"},
        {"axis", Kind::Text, "space", "space | time"},
        {"moment_q", Kind::Real, "2.0", "moment order q >= 2"},
        {"lag_cells", Kind::IntList, "1,2,3,5,7,10,15,22,32", "spatial lags in cells"},
        {"time_lags_time", Kind::RealList, "", "time lags; empty uses every sampled gap"},
        {"t_min_time", Kind::Real, "0.25", "time-axis pairs start at or after this time"},
        {"verdict_tolerance", Kind::Real, "0.08", "half width around the window endpoint"},
        {"gamma1", Kind::Real, "1.0", "Hoelder order of v0"},
        {"gamma2", Kind::Real, "1.0", "Hoelder order of v0~"},
        {"x_only", Kind::Integer, "0", "1 restricts spatial increments to the x direction"},
    };
    return keys;
}

ExperimentConfig::ExperimentConfig() {
    for (const auto& k : schema()) {
        values_[k.key] = k.default_value;
        explicit_[k.key] = false;
    }
}

const KeySpec& ExperimentConfig::spec_of(const std::string& key) const {
    for (const auto& k : schema())
        if (k.key == key) return k;
    throw ConfigError("unknown configuration key '" + key + "'");
}

void ExperimentConfig::set(const std::string& key, const std::string& raw) {
    const KeySpec& spec = spec_of(key);
    const std::string value = trim(raw);
    double r = 0.0;
    long long i = 0;
    switch (spec.kind) {
        case Kind::Real:
            if (!parse_real(value, r)) throw ConfigError("key '" + key + "' expects a real number, got '" + value + "'");
            break;
        case Kind::Integer:
            if (!parse_int(value, i)) throw ConfigError("key '" + key + "' expects an integer, got '" + value + "'");
            break;
        case Kind::Text: break;
        case Kind::RealList:
            for (const auto& item : split_list(value))
                if (!parse_real(item, r)) throw ConfigError("key '" + key + "' expects a list of reals, got '" + value + "'");
            break;
        case Kind::IntList:
            for (const auto& item : split_list(value))
                if (!parse_int(item, i)) throw ConfigError("key '" + key + "' expects a list of integers, got '" + value + "'");
            break;
    }
    values_[key] = value;
    explicit_[key] = true;
}

bool ExperimentConfig::is_default(const std::string& key) const {
    spec_of(key);
    return !explicit_.at(key);
}

ExperimentConfig ExperimentConfig::parse(std::istream& in, const std::string& origin) {
    ExperimentConfig cfg;
    std::map<std::string, int> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = origin + ":" + std::to_string(lineno) + ": ";
        if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (auto it = seen.find(key); it != seen.end())
            throw ConfigError(where + "duplicate key '" + key + "' (first set on line " + std::to_string(it->second) + ")");
        seen[key] = lineno;
        try {
            cfg.set(key, line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse(in, path);
}

double ExperimentConfig::real(const std::string& key) const {
    if (spec_of(key).kind != Kind::Real) throw ConfigError("key '" + key + "' is not a real");
    double v = 0.0;
    parse_real(values_.at(key), v);
    return v;
}

long long ExperimentConfig::integer(const std::string& key) const {
    if (spec_of(key).kind != Kind::Integer) throw ConfigError("key '" + key + "' is not an integer");
    long long v = 0;
    parse_int(values_.at(key), v);
    return v;
}

std::uint64_t ExperimentConfig::unsigned_integer(const std::string& key) const {
    const std::string& s = values_.at(key);
    if (spec_of(key).kind != Kind::Integer) throw ConfigError("key '" + key + "' is not an integer");
    try {
        std::size_t used = 0;
        if (!s.empty() && s[0] == '-') throw std::invalid_argument("negative");
        const auto v = std::stoull(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' expects a non-negative integer, got '" + s + "'");
    }
}

const std::string& ExperimentConfig::text(const std::string& key) const {
    if (spec_of(key).kind != Kind::Text) throw ConfigError("key '" + key + "' is not text");
    return values_.at(key);
}

std::vector<double> ExperimentConfig::reals(const std::string& key) const {
    if (spec_of(key).kind != Kind::RealList) throw ConfigError("key '" + key + "' is not a list of reals");
    std::vector<double> out;
    for (const auto& item : split_list(values_.at(key))) {
        double v = 0.0;
        parse_real(item, v);
        out.push_back(v);
    }
    return out;
}

std::vector<long long> ExperimentConfig::integers(const std::string& key) const {
    if (spec_of(key).kind != Kind::IntList) throw ConfigError("key '" + key + "' is not a list of integers");
    std::vector<long long> out;
    for (const auto& item : split_list(values_.at(key))) {
        long long v = 0;
        parse_int(item, v);
        out.push_back(v);
    }
    return out;
}

unsigned resolve_threads(int requested) {
    if (requested > 0) return static_cast<unsigned>(requested);
    if (const char* env = std::getenv("WAVE3_THREADS")) {
        long long v = 0;
        if (parse_int(trim(env), v) && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace wave3::config
