#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "wave3/config.hpp"
#include "wave3/io.hpp"

using namespace wave3;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun run(std::vector<std::string> args) {
    args.insert(args.begin(), "wave3_cli");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("wave3_unit_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) { return io::read_text_file(p.string()); }

}  // namespace

TEST_CASE("config defaults and parsing") {
    config::ExperimentConfig d;
    CHECK(d.real("beta") == 1.0);
    CHECK(d.is_default("beta"));
    std::istringstream in("# comment\nbeta = 0.5  # trailing\nbetas = 0.5, 1.0,1.5\nlag_cells = 1,2\n\n");
    auto c = config::ExperimentConfig::parse(in, "t.cfg");
    CHECK(c.real("beta") == 0.5);
    CHECK_FALSE(c.is_default("beta"));
    CHECK(c.reals("betas") == std::vector<double>{0.5, 1.0, 1.5});
    CHECK(c.integers("lag_cells") == std::vector<long long>{1, 2});
    for (const auto& k : config::schema()) CHECK(c.values().count(k.key) == 1);
}

TEST_CASE("config errors name the origin and line") {
    auto expect = [](const std::string& text, const std::string& needle) {
        std::istringstream in(text);
        try {
            config::ExperimentConfig::parse(in, "x.cfg");
            FAIL("no error for " << text);
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    expect("beta = 1\nfoo = 2\n", "x.cfg:2: unknown configuration key 'foo'");
    expect("beta = 1\nbeta = 2\n", "duplicate key 'beta'");
    expect("beta = one\n", "expects a real");
    expect("sep_points = 2.5\n", "expects an integer");
    expect("just text\n", "expected 'key = value'");
}

TEST_CASE("thread resolution") {
    CHECK(config::resolve_threads(3) == 3);
    setenv("WAVE3_THREADS", "2", 1);
    CHECK(config::resolve_threads(0) == 2);
    CHECK(config::resolve_threads(5) == 5);
    unsetenv("WAVE3_THREADS");
    CHECK(config::resolve_threads(0) >= 1);
}

TEST_CASE("fnv1a reference values") {
    CHECK(io::fnv1a_hex("") == "cbf29ce484222325");
    CHECK(io::fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("field dump round trip and corruption") {
    const auto dir = scratch("dump");
    io::DumpHeader h;
    h.n = 4;
    h.box_side = 2.0;
    h.dx = 0.5;
    h.times = {0.5, 1.0};
    h.replicas = 2;
    h.seed = 12345678901234ull;
    h.model_hash = "abc";
    std::vector<std::vector<simulator::RealGrid>> f(2);
    for (int r = 0; r < 2; ++r)
        for (int t = 0; t < 2; ++t) {
            simulator::RealGrid g(64);
            for (int i = 0; i < 64; ++i) g[i] = r * 1000 + t * 100 + i + 0.25;
            f[r].push_back(std::move(g));
        }
    const std::string stem = (dir / "fields").string();
    io::write_field_dump(stem, h, f);
    const auto d = io::read_field_dump(stem);
    CHECK(d.header.seed == h.seed);
    CHECK(d.header.times == h.times);
    CHECK(d.fields[1][1][63] == 1000 + 100 + 63 + 0.25);
    fs::resize_file(stem + ".bin", 100);
    CHECK_THROWS_AS(io::read_field_dump(stem), ConfigError);
    CHECK_THROWS_AS(io::read_field_dump((dir / "missing").string()), ConfigError);
}

TEST_CASE("probe parsing") {
    const auto p = cli::parse_probes("1,2,3; 4,5,6");
    CHECK(p.size() == 2);
    CHECK(p[1] == std::array<int, 3>{4, 5, 6});
    CHECK(cli::parse_probes("").empty());
    CHECK_THROWS_AS(cli::parse_probes("1,2"), ConfigError);
}

TEST_CASE("cli verify: pass, violation and usage errors") {
    const auto dir = scratch("verify");
    auto ok = run({"verify", "--out", (dir / "a").string(), "--set", "verify_suite=energy,B2,B5"});
    CHECK(ok.code == 0);
    CHECK(fs::exists(dir / "a" / "verify.csv"));
    const auto manifest = slurp(dir / "a" / "manifest.json");
    CHECK(manifest.find("\"oracle_rel_tol\"") != std::string::npos);
    CHECK(manifest.find("\"version\"") != std::string::npos);

    auto bad = run({"verify", "--out", (dir / "b").string(), "--set", "verify_suite=B2", "--set", "alpha_B2=1.2"});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("violated by B2") != std::string::npos);

    io::write_text_file((dir / "bad.cfg").string(), "beta = 1\nnot_a_key = 2\n");
    auto usage = run({"verify", "--config", (dir / "bad.cfg").string()});
    CHECK(usage.code == 64);
    CHECK(usage.err.find("not_a_key") != std::string::npos);
    CHECK(run({"verify", "--bogus"}).code == 64);
    CHECK(run({}).code == 64);
    CHECK(run({"cov", "--set", "beta=3", "--out", (dir / "c").string()}).code == 0);  // cov reads betas
    CHECK(run({"verify", "--set", "beta=3", "--out", (dir / "d").string()}).code == 64);
}

TEST_CASE("cli cov: slopes, several betas and the zero tolerance") {
    const auto dir = scratch("cov");
    auto two = run({"cov", "--out", (dir / "a").string(), "--set", "betas=0.5,1.5"});
    CHECK(two.code == 0);
    const auto slopes = slurp(dir / "a" / "cov_slopes.csv");
    CHECK(slopes.find("\n0.5,space,1.4") != std::string::npos);
    CHECK(slopes.find("\n1.5,space,0.49") != std::string::npos);
    CHECK(run({"cov", "--out", (dir / "b").string(), "--tolerance", "0"}).code == 1);
}

TEST_CASE("cli simulate and estimate") {
    const auto dir = scratch("sim");
    const std::vector<std::string> common{"--seed", "7", "--set", "solver=gaussian_exact", "--set", "replicas=6"};
    auto args = [&](const std::string& out) {
        std::vector<std::string> a{"simulate", "--out", (dir / out).string()};
        a.insert(a.end(), common.begin(), common.end());
        return a;
    };
    CHECK(run(args("g1")).code == 0);
    CHECK(run(args("g2")).code == 0);
    CHECK(slurp(dir / "g1" / "fields.bin") == slurp(dir / "g2" / "fields.bin"));
    CHECK(slurp(dir / "g1" / "manifest.json") == slurp(dir / "g2" / "manifest.json"));

    auto est = run({"estimate", "--out", (dir / "e1").string(), "--set", "input_dir=" + (dir / "g1").string()});
    CHECK(est.code == 0);
    CHECK(est.out.find("consistent with (2-beta)/2") != std::string::npos);

    CHECK(run({"simulate", "--out", (dir / "w").string(), "--set", "solver=white_noise", "--set", "replicas=2"}).code == 0);
    auto wn = run({"estimate", "--out", (dir / "e2").string(), "--set", "input_dir=" + (dir / "w").string()});
    CHECK(wn.code == 0);
    CHECK(wn.out.find("no Hölder regularity") != std::string::npos);

    CHECK(run({"estimate", "--set", "input_dir=" + (dir / "nothing").string(), "--out", (dir / "e3").string()}).code == 64);
    // light cone longer than the box allows
    CHECK(run({"simulate", "--out", (dir / "d").string(), "--set", "t_end_time=2"}).code == 64);
    CHECK(run({"simulate", "--out", (dir / "d").string(), "--set", "solver=spectral"}).code == 64);
}

TEST_CASE("cli simulate: a blown-up step exits 2 and dumps the state") {
    const auto dir = scratch("blowup");
    auto r = run({"simulate", "--out", (dir / "x").string(), "--set", "grid_points_per_axis=16", "--set", "sigma=0",
                  "--set", "b=affine(1e200,0)", "--set", "initial=bump", "--set", "dt_time=0.1"});
    CHECK(r.code == 2);
    CHECK(fs::exists(dir / "x" / "failed_state.bin"));
    CHECK(fs::exists(dir / "x" / "failed_state.json"));
}
