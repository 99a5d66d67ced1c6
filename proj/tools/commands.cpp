#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "wave3/field_simulator.hpp"
#include "wave3/gaussian_exact.hpp"
#include "wave3/io.hpp"
#include "wave3/lemma_oracles.hpp"
#include "wave3/parallel.hpp"
#include "wave3/regularity.hpp"

namespace wave3::cli {

namespace {

using io::json;
using quadrature::LemmaReport;
using quadrature::QuadratureOptions;
using quadrature::QuadratureResult;

// Fixed acceptance tolerances of the identity checks.
constexpr double kEnergyTolerance = 1e-6;
constexpr double kSemigroupTolerance = 1e-3;
constexpr double kTimeWeightExponent = 0.5;

std::ostream& out_of(const CommandContext& ctx) { return ctx.log ? *ctx.log : std::cout; }
std::ostream& err_of(const CommandContext& ctx) { return ctx.err ? *ctx.err : std::cerr; }

QuadratureOptions quad_options(const config::ExperimentConfig& cfg) {
    QuadratureOptions o;
    o.rel_tol = cfg.real("quad_rel_tol");
    const long long depth = cfg.integer("quad_max_depth");
    if (depth < 1 || depth > 40) throw ConfigError("quad_max_depth must lie in [1, 40]");
    o.max_depth = static_cast<unsigned>(depth);
    return o;
}

covariance::CovarianceSpec covariance_spec(const config::ExperimentConfig& cfg) {
    const std::string& env = cfg.text("envelope");
    if (env == "constant_one") return {cfg.real("beta"), cfg.real("delta")};
    if (env == "gaussian")
        return {cfg.real("beta"), cfg.real("delta"), covariance::GaussianEnvelope{cfg.real("envelope_sigma")}};
    throw ConfigError("envelope must be constant_one or gaussian, got '" + env + "'");
}

std::size_t positive_count(const config::ExperimentConfig& cfg, const std::string& key) {
    const long long v = cfg.integer(key);
    if (v < 1) throw ConfigError("key '" + key + "' must be at least 1");
    return static_cast<std::size_t>(v);
}

bool converged(const QuadratureResult& r, double threshold) {
    return std::isfinite(r.value) && r.abs_error_estimate <= threshold * std::abs(r.value);
}

std::string fmt(double v, int digits = 6) {
    std::ostringstream os;
    os << std::setprecision(digits) << v;
    return os.str();
}

// verify

std::set<std::string> suite_of(const std::string& text) {
    static const std::vector<std::string> all{"energy", "time_weight", "semigroup", "B1", "B2",
                                              "B3",     "B4",          "B5",        "B6"};
    if (text == "all") return {all.begin(), all.end()};
    std::set<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
        if (item.empty()) continue;
        if (std::find(all.begin(), all.end(), item) == all.end())
            throw ConfigError("unknown verify_suite entry '" + item + "'");
        out.insert(item);
    }
    if (out.empty()) throw ConfigError("verify_suite is empty");
    return out;
}

// weighted_energy(beta, t) / t^{3 - beta} over t in {0.25, 0.5, 1, 2}.
LemmaReport energy_report(double beta, const QuadratureOptions& qo, double threshold) {
    LemmaReport rep;
    rep.lemma = "energy_scaling";
    rep.params = {{"beta", beta}};
    rep.bound_form = "W(t)/t^(3-beta) constant";
    rep.abscissa = {0.25, 0.5, 1.0, 2.0};
    double lo = INFINITY, hi = -INFINITY;
    for (double t : rep.abscissa) {
        const QuadratureResult w = quadrature::weighted_energy(beta, t, qo);
        if (!converged(w, threshold)) rep.converged = false;
        const QuadratureResult ratio = w.scaled(std::pow(t, beta - 3.0));
        rep.values.push_back(ratio);
        lo = std::min(lo, ratio.value);
        hi = std::max(hi, ratio.value);
    }
    rep.value = hi;
    rep.error = rep.values.back().abs_error_estimate;
    const double spread = (hi - lo) / std::abs(hi);
    rep.params.emplace_back("spread", spread);
    rep.satisfied = rep.converged && spread < kEnergyTolerance;
    std::ostringstream note;
    note << "relative spread " << spread;
    if (beta == 1.0) {
        const double pi2 = kPi * kPi;
        const double dev = std::abs(hi - pi2) / pi2;
        rep.params.emplace_back("pi2_deviation", dev);
        rep.satisfied = rep.satisfied && dev < kEnergyTolerance;
        note << ", deviation from pi^2 " << dev;
    }
    if (!rep.converged) note << "; quadrature nonconvergence";
    rep.note = note.str();
    return rep;
}

// Closed form t^{3-beta-b} K / (3-beta-b) against integration by parts,
//   int_0^t s^{-b} W'(s) ds = t^{-b} W(t) + b int_0^t s^{-b-1} W(s) ds,
// with W evaluated by quadrature at every node (s = t e^{-y}).
LemmaReport time_weight_report(double beta, const QuadratureOptions& qo, double threshold) {
    const double b = kTimeWeightExponent;
    LemmaReport rep;
    rep.lemma = "time_weighted_energy";
    rep.params = {{"beta", beta}, {"b", b}};
    rep.bound_form = "closed form = parts";
    const double p = 3.0 - beta - b;
    const double y_max = 30.0 / p;
    double worst = 0.0;
    for (double t : {0.25, 0.5, 1.0}) {
        const QuadratureResult closed = quadrature::weighted_energy_with_time_weight(beta, b, t, qo);
        auto integrand = [&](double y) {
            const double s = t * std::exp(-y);
            return std::pow(s, -b) * quadrature::weighted_energy(beta, s, qo).value;
        };
        QuadratureOptions outer = qo;
        outer.rel_tol = std::max(qo.rel_tol, 1e-10);
        QuadratureResult parts = quadrature::integrate_gk(integrand, 0.0, y_max, outer).scaled(b);
        parts += quadrature::weighted_energy(beta, t, qo).scaled(std::pow(t, -b));
        const double dev = std::abs(parts.value - closed.value) / std::abs(closed.value);
        worst = std::max(worst, dev);
        if (!converged(closed, threshold) || !converged(parts, threshold)) rep.converged = false;
        rep.abscissa.push_back(t);
        rep.values.push_back(closed);
    }
    rep.value = rep.values.back().value;
    rep.error = rep.values.back().abs_error_estimate;
    rep.params.emplace_back("deviation", worst);
    rep.satisfied = rep.converged && worst < kEnergyTolerance;
    rep.note = "largest relative deviation " + fmt(worst);
    if (!rep.converged) rep.note += "; quadrature nonconvergence";
    return rep;
}

std::vector<LemmaReport> semigroup_reports(std::size_t pairs, std::uint64_t seed, const QuadratureOptions& qo,
                                           double threshold) {
    std::vector<LemmaReport> out;
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    std::vector<std::pair<Vec3, Vec3>> points;
    while (points.size() < pairs) {
        Vec3 x{coord(gen), coord(gen), coord(gen)};
        Vec3 y{coord(gen), coord(gen), coord(gen)};
        if ((x - y).norm() > 0.05) points.emplace_back(x, y);
    }
    for (auto [a, b] : std::vector<std::pair<double, double>>{{1.0, 1.0}, {0.5, 0.9}, {1.2, 0.6}}) {
        LemmaReport rep;
        rep.lemma = "riesz_semigroup";
        const double c = covariance::riesz_semigroup_constant(a, b);
        rep.params = {{"a", a}, {"b", b}, {"constant", c}};
        rep.bound_form = "conv/|x-y|^(a+b-3) = C(a,b)";
        double worst = 0.0;
        for (const auto& [x, y] : points) {
            const double d = (x - y).norm();
            const QuadratureResult v = quadrature::riesz_convolution(a, b, x, y, qo).scaled(std::pow(d, 3.0 - a - b));
            if (!converged(v, threshold)) rep.converged = false;
            worst = std::max(worst, std::abs(v.value - c) / c);
            rep.abscissa.push_back(d);
            rep.values.push_back(v);
        }
        rep.value = c;
        rep.params.emplace_back("deviation", worst);
        rep.satisfied = rep.converged && worst < kSemigroupTolerance;
        rep.note = "largest relative deviation " + fmt(worst);
        if (!rep.converged) rep.note += "; quadrature nonconvergence";
        out.push_back(std::move(rep));
    }
    return out;
}

}  // namespace

int cmd_verify(const CommandContext& ctx) {
    const auto& cfg = ctx.cfg;
    const auto suite = suite_of(cfg.text("verify_suite"));
    const auto spec = covariance_spec(cfg);
    const QuadratureOptions qo = quad_options(cfg);
    quadrature::OracleOptions oo;
    oo.rel_tol = cfg.real("oracle_rel_tol");
    oo.base_time = cfg.real("base_time");
    oo.threads = ctx.threads;
    oo.convergence_threshold = ctx.tolerance ? *ctx.tolerance : cfg.real("oracle_convergence");
    const auto seps =
        geometric_grid(cfg.real("sep_min_len"), cfg.real("sep_max_len"), positive_count(cfg, "sep_points"));
    const auto gaps =
        geometric_grid(cfg.real("gap_min_time"), cfg.real("gap_max_time"), positive_count(cfg, "gap_points"));

    std::vector<LemmaReport> reports;
    auto& log = out_of(ctx);
    if (suite.count("energy")) reports.push_back(energy_report(spec.beta(), qo, oo.convergence_threshold));
    if (suite.count("time_weight")) reports.push_back(time_weight_report(spec.beta(), qo, oo.convergence_threshold));
    if (suite.count("semigroup")) {
        for (auto& r : semigroup_reports(positive_count(cfg, "semigroup_pairs"), cfg.unsigned_integer("seed"), qo,
                                         oo.convergence_threshold))
            reports.push_back(std::move(r));
    }
    if (suite.count("B1")) {
        const std::vector<Vec3> dirs{{1, 0, 0}, {0, 0, 1}, Vec3{1, 1, 1} * (1.0 / std::sqrt(3.0))};
        const auto samples = positive_count(cfg, "b1_samples");
        const auto seed = cfg.unsigned_integer("seed");
        reports.push_back(quadrature::lemma_B1_report(cfg.real("b1_first_order_b"), quadrature::IncrementOrder::First,
                                                      dirs, samples, seed));
        reports.push_back(quadrature::lemma_B1_report(cfg.real("b1_second_order_b"),
                                                      quadrature::IncrementOrder::Second, dirs, samples, seed));
    }
    if (suite.count("B2")) reports.push_back(quadrature::lemma_B2_oracle(spec, cfg.real("alpha_B2"), seps, oo));
    if (suite.count("B3")) reports.push_back(quadrature::lemma_B3_oracle(spec, cfg.real("alpha_B3"), seps, oo));
    if (suite.count("B4")) {
        const auto grid = quadrature::default_B4_grid(cfg.real("horizon_time"));
        reports.push_back(quadrature::lemma_B4_oracle(spec, grid, oo));
    }
    if (suite.count("B5")) reports.push_back(quadrature::lemma_B5_oracle(spec, cfg.real("alpha_B5"), gaps, oo));
    if (suite.count("B6")) reports.push_back(quadrature::lemma_B6_oracle(spec, cfg.real("alpha_B6"), gaps, oo));

    io::ensure_directory(ctx.out_dir);
    {
        std::ofstream csv(ctx.out_dir + "/verify.csv");
        quadrature::write_lemma_csv(csv, reports);
        if (!csv) throw ConfigError("write failed for '" + ctx.out_dir + "/verify.csv'");
    }
    bool all_converged = true, all_satisfied = true;
    json summary = json::array();
    for (const auto& r : reports) {
        all_converged = all_converged && r.converged;
        all_satisfied = all_satisfied && r.satisfied;
        json row;
        row["lemma"] = r.lemma;
        for (const auto& [k, v] : r.params) row["params"][k] = v;
        if (r.claimed_alpha) row["claimed_alpha"] = *r.claimed_alpha;
        if (r.fit) {
            row["slope"] = r.fit->slope;
            row["stderr"] = r.fit->stderr_slope;
        }
        row["converged"] = r.converged;
        row["satisfied"] = r.satisfied;
        row["note"] = r.note;
        summary.push_back(row);
        log << (r.satisfied ? "ok        " : (r.converged ? "VIOLATION " : "NONCONV   ")) << r.lemma;
        if (r.fit) log << "  slope " << fmt(r.fit->slope, 5) << " +- " << fmt(r.fit->stderr_slope, 2);
        if (r.claimed_alpha) log << "  alpha " << *r.claimed_alpha;
        if (!r.note.empty()) log << "  (" << r.note << ")";
        log << "\n";
    }
    json extra;
    extra["reports"] = summary;
    extra["quadrature"] = {{"rel_tol", qo.rel_tol}, {"max_depth", qo.max_depth}, {"oracle_rel_tol", oo.rel_tol},
                           {"convergence_threshold", oo.convergence_threshold}};
    io::write_manifest(ctx.out_dir, "verify", cfg, extra);
    if (!all_converged) {
        err_of(ctx) << "verify: quadrature nonconvergence\n";
        return kNumericalFailure;
    }
    if (!all_satisfied) {
        for (const auto& r : reports)
            if (!r.satisfied) err_of(ctx) << "verify: bound violated by " << r.lemma << ": " << r.note << "\n";
        return kScientificFailure;
    }
    return kPass;
}

int cmd_cov(const CommandContext& ctx) {
    const auto& cfg = ctx.cfg;
    const QuadratureOptions qo = quad_options(cfg);
    const double threshold = cfg.real("oracle_convergence");
    const double tol_space = ctx.tolerance ? *ctx.tolerance : cfg.real("slope_tolerance_space");
    const double tol_time = ctx.tolerance ? *ctx.tolerance : cfg.real("slope_tolerance_time");
    const auto betas = cfg.reals("betas");
    if (betas.empty()) throw ConfigError("betas is empty");
    const auto xs = geometric_grid(cfg.real("x_min_len"), cfg.real("x_max_len"), positive_count(cfg, "x_points"));
    const auto gaps =
        geometric_grid(cfg.real("gap_min_time"), cfg.real("gap_max_time"), positive_count(cfg, "gap_points"));

    io::ensure_directory(ctx.out_dir);
    std::ostringstream space_csv, time_csv, slope_csv;
    space_csv << std::setprecision(12) << "beta,x,variance,error\n";
    time_csv << std::setprecision(12) << "beta,gap,variance,error,t1,t1_error\n";
    slope_csv << std::setprecision(12) << "beta,curve,slope,stderr,r2,expected,tolerance,pass\n";
    bool all_pass = true, all_converged = true;
    json rows = json::array();
    auto& log = out_of(ctx);
    for (double beta : betas) {
        gaussian::GaussianCaseParams p;
        p.beta = beta;
        p.horizon = cfg.real("horizon_time");
        p.t = cfg.real("t_obs_time");
        p.t0 = std::min(cfg.real("base_time"), p.t);
        p.validate();
        if (cfg.real("base_time") + gaps.back() > p.horizon)
            throw ConfigError("base_time + gap_max_time exceeds horizon_time");
        const auto space = gaussian::spatial_curve(p, xs, qo, ctx.threads);
        gaussian::GaussianCaseParams pt = p;
        pt.t0 = cfg.real("base_time");
        pt.t = std::max(pt.t, pt.t0);
        const auto time = gaussian::time_curve(pt, gaps, false, qo, ctx.threads);
        const auto t1 = gaussian::time_curve(pt, gaps, true, qo, ctx.threads);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            space_csv << beta << ',' << xs[i] << ',' << space.values[i].value << ','
                      << space.values[i].abs_error_estimate << '\n';
            all_converged = all_converged && converged(space.values[i], threshold);
        }
        for (std::size_t i = 0; i < gaps.size(); ++i) {
            time_csv << beta << ',' << gaps[i] << ',' << time.values[i].value << ','
                     << time.values[i].abs_error_estimate << ',' << t1.values[i].value << ','
                     << t1.values[i].abs_error_estimate << '\n';
            all_converged = all_converged && converged(time.values[i], threshold) && converged(t1.values[i], threshold);
        }
        auto emit = [&](const std::string& name, const PowerFit& fit, double expected, double tol) {
            // Strict: a zero tolerance never passes.
            const bool pass = std::abs(fit.slope - expected) < tol;
            all_pass = all_pass && pass;
            slope_csv << beta << ',' << name << ',' << fit.slope << ',' << fit.stderr_slope << ',' << fit.r2 << ','
                      << expected << ',' << tol << ',' << (pass ? "true" : "false") << '\n';
            rows.push_back({{"beta", beta}, {"curve", name}, {"slope", fit.slope}, {"expected", expected},
                            {"tolerance", tol}, {"pass", pass}});
            log << (pass ? "ok   " : "FAIL ") << "beta " << beta << "  " << name << " slope " << fmt(fit.slope, 6)
                << " (expected " << expected << " +- " << tol << ")\n";
        };
        emit("space", space.fit, 2.0 - beta, tol_space);
        emit("time", time.fit, 2.0 - beta, tol_time);
        emit("time_t1", t1.fit, 3.0 - beta, tol_time);
    }
    io::write_text_file(ctx.out_dir + "/cov_space.csv", space_csv.str());
    io::write_text_file(ctx.out_dir + "/cov_time.csv", time_csv.str());
    io::write_text_file(ctx.out_dir + "/cov_slopes.csv", slope_csv.str());
    json extra;
    extra["slopes"] = rows;
    extra["quadrature"] = {{"rel_tol", qo.rel_tol}, {"max_depth", qo.max_depth}};
    io::write_manifest(ctx.out_dir, "cov", cfg, extra);
    if (!all_converged) {
        err_of(ctx) << "cov: quadrature nonconvergence\n";
        return kNumericalFailure;
    }
    return all_pass ? kPass : kScientificFailure;
}

std::vector<std::array<int, 3>> parse_probes(const std::string& text) {
    std::vector<std::array<int, 3>> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        std::array<int, 3> p{};
        char c1 = 0, c2 = 0;
        std::istringstream is(item);
        if (!(is >> p[0] >> c1 >> p[1] >> c2 >> p[2]) || c1 != ',' || c2 != ',' || !(is >> std::ws).eof())
            throw ConfigError("bad probe '" + item + "' (expected i,j,k)");
        out.push_back(p);
    }
    return out;
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    // splitmix64 finaliser over the combined key
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (a + 1) + 0xBF58476D1CE4E5B9ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

simulator::ModelSpec model_spec(const config::ExperimentConfig& cfg) {
    simulator::ModelSpec m;
    m.sigma = simulator::Nonlinearity::parse(cfg.text("sigma"));
    m.b = simulator::Nonlinearity::parse(cfg.text("b"));
    if (cfg.real("sigma_lipschitz") >= 0.0) m.sigma.lipschitz = cfg.real("sigma_lipschitz");
    if (cfg.real("b_lipschitz") >= 0.0) m.b.lipschitz = cfg.real("b_lipschitz");
    m.covariance = covariance_spec(cfg);
    const std::string& init = cfg.text("initial");
    if (init == "bump") {
        const double w = cfg.real("bump_width_len");
        kernel::InitialData d;
        d.v0 = kernel::gaussian_bump(cfg.real("bump_amplitude"), w);
        d.v0_tilde = kernel::gaussian_bump(cfg.real("bump_velocity_amplitude"), w).value;
        d.validate();
        m.initial = d;
    } else if (init != "zero") {
        throw ConfigError("initial must be zero or bump, got '" + init + "'");
    }
    return m;
}

void dump_failed_state(const CommandContext& ctx, const simulator::SpectralLattice& lat, const io::DumpHeader& base,
                       const simulator::StepError& e) {
    io::DumpHeader h = base;
    h.times = {e.state().t, e.state().t};
    h.replicas = 1;
    h.extra["contents"] = "u,v at the failing step";
    h.extra["step"] = e.state().step;
    std::vector<std::vector<simulator::RealGrid>> fields(1);
    for (const auto* m : {&e.state().u, &e.state().v}) {
        auto g = lat.make_real();
        lat.backward(*m, g);
        fields[0].push_back(std::move(g));
    }
    io::write_field_dump(ctx.out_dir + "/failed_state", h, fields);
}

}  // namespace

int cmd_simulate(const CommandContext& ctx) {
    const auto& cfg = ctx.cfg;
    const std::string& solver = cfg.text("solver");
    const long long n_raw = cfg.integer("grid_points_per_axis");
    if (n_raw < 4 || n_raw > 1024) throw ConfigError("grid_points_per_axis must lie in [4, 1024]");
    const int n = static_cast<int>(n_raw);
    const double L = cfg.real("box_side_len");
    const std::size_t replicas = positive_count(cfg, "replicas");
    const std::uint64_t seed = cfg.unsigned_integer("seed");
    const auto spec = covariance_spec(cfg);

    io::DumpHeader h;
    h.n = n;
    h.box_side = L;
    h.dx = L / n;
    h.seed = seed;
    h.replicas = replicas;
    h.beta = spec.beta();
    h.delta = spec.delta();
    h.extra["solver"] = solver;
    std::vector<std::vector<simulator::RealGrid>> fields(replicas);
    json results;
    io::ensure_directory(ctx.out_dir);

    if (solver == "duhamel" || solver == "gaussian_exact") {
        simulator::SpectralLattice lat(L, n, simulator::cutoff_from_string(cfg.text("cutoff")),
                                       cfg.real("window_diameter_len"), cfg.real("horizon_time"),
                                       cfg.real("cutoff_radius_wavenumber"));
        h.extra["cutoff"] = simulator::to_string(lat.cutoff());
        h.extra["window_diameter"] = lat.window_diameter();
        h.extra["horizon"] = lat.horizon();
        if (solver == "duhamel") {
            const auto model = model_spec(cfg);
            simulator::RunOptions ro;
            ro.t_end = cfg.real("t_end_time");
            ro.dt = cfg.real("dt_time");
            ro.noise_substeps = static_cast<int>(positive_count(cfg, "noise_substeps"));
            ro.replicas = replicas;
            ro.seed = seed;
            ro.probes = parse_probes(cfg.text("probes"));
            ro.probe_every = positive_count(cfg, "probe_every_steps");
            ro.keep_final_fields = true;
            ro.threads = ctx.threads;
            h.dt = ro.dt;
            h.times = {ro.t_end};
            h.model_hash = io::fnv1a_hex(model.describe());
            simulator::RunResult rr;
            try {
                rr = simulator::run(model, lat, ro);
            } catch (const simulator::StepError& e) {
                dump_failed_state(ctx, lat, h, e);
                err_of(ctx) << "simulate: " << e.what() << " (state written to " << ctx.out_dir << "/failed_state)\n";
                return kNumericalFailure;
            }
            for (std::size_t r = 0; r < replicas; ++r) fields[r].push_back(std::move(rr.final_fields[r]));
            if (!rr.probes.empty()) {
                std::ostringstream csv;
                csv << std::setprecision(17) << "replica,time,probe,ix,iy,iz,value\n";
                for (std::size_t r = 0; r < rr.values.size(); ++r)
                    for (std::size_t t = 0; t < rr.times.size(); ++t)
                        for (std::size_t p = 0; p < rr.probes.size(); ++p) {
                            const auto& idx = rr.probes[p].index;
                            csv << r << ',' << rr.times[t] << ',' << p << ',' << idx[0] << ',' << idx[1] << ','
                                << idx[2] << ',' << rr.values[r][t][p] << '\n';
                        }
                io::write_text_file(ctx.out_dir + "/probes.csv", csv.str());
                json pj = json::array();
                for (const auto& p : rr.probes)
                    pj.push_back({{"index", p.index}, {"distance", p.distance}, {"near_edge", p.near_edge}});
                results["probes"] = pj;
            }
            results["steps"] = rr.steps;
            results["model"] = model.describe();
        } else {
            gaussian::GaussianCaseParams p;
            p.beta = spec.beta();
            p.horizon = cfg.real("horizon_time");
            auto times = cfg.reals("sample_times");
            if (times.empty()) throw ConfigError("sample_times is empty");
            if (!std::is_sorted(times.begin(), times.end()))
                throw ConfigError("sample_times must be increasing");
            p.t0 = times.front();
            p.t = times.back();
            if (!spec.is_riesz()) throw UnsupportedError("gaussian_exact supports the constant_one envelope only");
            const gaussian::GaussianSampler sampler(p, lat, times);
            parallel_for(replicas, ctx.threads, [&](std::size_t r) {
                fields[r] = sampler.sample(seed, static_cast<std::uint32_t>(r)).fields;
            });
            h.times = times;
            h.model_hash = io::fnv1a_hex("gaussian_exact beta=" + fmt(p.beta, 17));
            results["max_jitter"] = sampler.max_jitter();
        }
    } else if (solver == "white_noise" || solver == "fractional_lines") {
        auto times = cfg.reals("sample_times");
        if (times.empty()) throw ConfigError("sample_times is empty");
        const double hurst = cfg.real("hurst");
        parallel_for(replicas, ctx.threads, [&](std::size_t r) {
            for (std::size_t i = 0; i < times.size(); ++i) {
                const auto s = mix_seed(seed, r, i);
                fields[r].push_back(solver == "white_noise" ? regularity::white_noise_field(n, s)
                                                            : regularity::fractional_lines(n, h.dx, hurst, s));
            }
        });
        h.times = times;
        if (solver == "fractional_lines") h.extra["hurst"] = hurst;
        h.model_hash = io::fnv1a_hex(solver + (solver == "fractional_lines" ? " H=" + fmt(hurst, 17) : ""));
    } else {
        throw ConfigError("solver must be duhamel, gaussian_exact, white_noise or fractional_lines, got '" + solver +
                          "'");
    }

    io::write_field_dump(ctx.out_dir + "/fields", h, fields);
    results["dump"] = "fields";
    results["model_hash"] = h.model_hash;
    io::write_manifest(ctx.out_dir, "simulate", cfg, results);
    out_of(ctx) << "simulate: " << solver << ", " << replicas << " replica(s) of " << n << "^3 at " << h.times.size()
                << " time(s) written to " << ctx.out_dir << "/fields.bin\n";
    return kPass;
}

int cmd_estimate(const CommandContext& ctx) {
    const auto& cfg = ctx.cfg;
    const std::string& dir = cfg.text("input_dir");
    if (dir.empty()) throw ConfigError("estimate needs input_dir (the output directory of simulate)");
    auto dump = io::read_field_dump(dir + "/fields");
    const auto& h = dump.header;

    regularity::FieldSamples samples;
    samples.n = h.n;
    samples.dx = h.dx;
    samples.times = h.times;
    samples.fields = std::move(dump.fields);

    const std::string& axis_name = cfg.text("axis");
    regularity::StructureOptions so;
    so.t_min = cfg.real("t_min_time");
    if (cfg.integer("x_only") != 0) so.directions = {true, false, false};
    so.time_slot = samples.times.size() - 1;
    std::vector<double> lags;
    regularity::Axis axis;
    if (axis_name == "space") {
        axis = regularity::Axis::Space;
        for (long long c : cfg.integers("lag_cells")) {
            if (c < 1) throw ConfigError("lag_cells must be positive");
            lags.push_back(static_cast<double>(c) * h.dx);
        }
    } else if (axis_name == "time") {
        axis = regularity::Axis::Time;
        lags = cfg.reals("time_lags_time");
        if (lags.empty()) {
            std::set<double> gaps;
            for (std::size_t i = 0; i < h.times.size(); ++i)
                for (std::size_t j = i + 1; j < h.times.size(); ++j)
                    if (h.times[i] >= so.t_min) gaps.insert(h.times[j] - h.times[i]);
            lags.assign(gaps.begin(), gaps.end());
        }
    } else {
        throw ConfigError("axis must be space or time, got '" + axis_name + "'");
    }

    const double q = cfg.real("moment_q");
    const auto fit = regularity::structure_function(samples, axis, q, lags, so);
    const double gamma1 = cfg.real("gamma1"), gamma2 = cfg.real("gamma2");
    const double alpha_high = regularity::exponent_window(h.beta, h.delta, gamma1, gamma2);
    const double tol = ctx.tolerance ? *ctx.tolerance : cfg.real("verdict_tolerance");
    auto verdict = regularity::classify(fit, alpha_high, tol);
    const double noise_endpoint = (2.0 - h.beta) / 2.0;
    if (verdict.verdict == regularity::Verdict::Boundary && alpha_high == noise_endpoint)
        verdict.text = "consistent with (2-beta)/2 = " + fmt(noise_endpoint) + " (window endpoint, not inside)";

    std::ostringstream csv;
    csv << std::setprecision(12) << "lag,moment,mc_error\n";
    for (std::size_t i = 0; i < fit.lags.size(); ++i)
        csv << fit.lags[i] << ',' << fit.moments[i] << ',' << fit.mc_errors[i] << '\n';
    io::ensure_directory(ctx.out_dir);
    io::write_text_file(ctx.out_dir + "/structure_function.csv", csv.str());
    json extra;
    extra["input"] = dir;
    extra["input_model_hash"] = h.model_hash;
    extra["axis"] = axis_name;
    extra["q"] = q;
    extra["exponent"] = fit.exponent;
    extra["exponent_stderr"] = fit.exponent_stderr;
    extra["slope"] = fit.fit.slope;
    extra["r2"] = fit.fit.r2;
    extra["replicas"] = fit.replicas;
    extra["mc_adequate"] = fit.mc_adequate;
    extra["degenerate"] = fit.degenerate;
    extra["alpha_high"] = alpha_high;
    extra["verdict"] = regularity::to_string(verdict.verdict);
    extra["verdict_text"] = verdict.text;
    io::write_manifest(ctx.out_dir, "estimate", cfg, extra);

    auto& log = out_of(ctx);
    log << "estimate: " << axis_name << " exponent " << fmt(fit.exponent, 5) << " +- " << fmt(fit.exponent_stderr, 2)
        << " from " << fit.replicas << " replica(s); window endpoint " << fmt(alpha_high, 5) << "\n";
    log << "verdict: " << verdict.text << "\n";
    if (!fit.mc_adequate && !fit.degenerate)
        err_of(ctx) << "estimate: Monte Carlo error above 10% or a single replica; treat the verdict as indicative\n";
    return kPass;
}

int run_cli(int argc, char** argv, std::ostream& log, std::ostream& err) {
    CLI::App app{"wave3_cli: quadrature oracles, covariance curves, lattice simulations and regularity estimates"};
    app.require_subcommand(1, 1);
    std::string config_path, out_dir = "wave3_out";
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::optional<double> tolerance;
    std::vector<std::string> sets;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "overrides the seed key");
        sub->add_option("--threads", threads, "worker threads (0: WAVE3_THREADS, then hardware)");
        sub->add_option("--tolerance", tolerance, "command-specific pass tolerance");
        sub->add_option("--set", sets, "extra key=value overrides, applied after the file");
    };
    add_common(app.add_subcommand("verify", "run the quadrature oracle suite"));
    add_common(app.add_subcommand("cov", "increment-variance curves of the Gaussian solution"));
    add_common(app.add_subcommand("simulate", "lattice simulation, writes a field dump"));
    add_common(app.add_subcommand("estimate", "structure-function exponent from a field dump"));
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, log, err);
        return code == 0 ? kPass : kUsage;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    try {
        CommandContext ctx;
        ctx.cfg = config_path.empty() ? config::ExperimentConfig{} : config::ExperimentConfig::load(config_path);
        for (const auto& kv : sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
            ctx.cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (seed) ctx.cfg.set("seed", std::to_string(*seed));
        if (threads < 0) throw ConfigError("--threads must be nonnegative");
        const long long cfg_threads = ctx.cfg.integer("threads");
        ctx.threads = config::resolve_threads(threads > 0 ? threads : static_cast<int>(std::max(0LL, cfg_threads)));
        ctx.out_dir = out_dir;
        ctx.tolerance = tolerance;
        if (tolerance && !(*tolerance >= 0.0)) throw ConfigError("--tolerance must be nonnegative");
        ctx.log = &log;
        ctx.err = &err;
        if (command == "verify") return cmd_verify(ctx);
        if (command == "cov") return cmd_cov(ctx);
        if (command == "simulate") return cmd_simulate(ctx);
        return cmd_estimate(ctx);
    } catch (const ConfigError& e) {
        err << command << ": configuration error: " << e.what() << "\n";
        return kUsage;
    } catch (const DomainError& e) {
        err << command << ": parameter out of range: " << e.what() << "\n";
        return kUsage;
    } catch (const UnsupportedError& e) {
        err << command << ": unsupported: " << e.what() << "\n";
        return kUsage;
    } catch (const NumericalError& e) {
        err << command << ": numerical failure: " << e.what() << "\n";
        return kNumericalFailure;
    }
}

}  // namespace wave3::cli
