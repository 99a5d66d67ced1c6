#include "wave3/io.hpp"

#include <bit>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace wave3::io {

static_assert(std::endian::native == std::endian::little, "dumps are written in host order, which must be little endian");

void ensure_directory(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create directory '" + dir + "': " + ec.message());
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << content;
    if (!out) throw ConfigError("write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

json config_to_json(const config::ExperimentConfig& cfg) {
    json j = json::object();
    for (const auto& [k, v] : cfg.values()) j[k] = v;
    return j;
}

void write_manifest(const std::string& dir, const std::string& command, const config::ExperimentConfig& cfg,
                    const json& extra) {
    json m;
    m["tool"] = "wave3_cli";
    m["version"] = kToolVersion;
    m["command"] = command;
    m["config"] = config_to_json(cfg);
    m["results"] = extra;
    write_text_file(dir + "/manifest.json", m.dump(2) + "\n");
}

void write_field_dump(const std::string& stem, const DumpHeader& h,
                      const std::vector<std::vector<simulator::RealGrid>>& fields) {
    const std::size_t npts = static_cast<std::size_t>(h.n) * h.n * h.n;
    if (fields.size() != h.replicas) throw ConfigError("dump: replica count does not match the header");
    std::ofstream bin(stem + ".bin", std::ios::binary);
    if (!bin) throw ConfigError("cannot write '" + stem + ".bin'");
    for (const auto& rep : fields) {
        if (rep.size() != h.times.size()) throw ConfigError("dump: time count does not match the header");
        for (const auto& g : rep) {
            if (g.size() != npts) throw ConfigError("dump: field size does not match n^3");
            bin.write(reinterpret_cast<const char*>(g.data()), static_cast<std::streamsize>(npts * sizeof(double)));
        }
    }
    if (!bin) throw ConfigError("write failed for '" + stem + ".bin'");

    json j;
    j["format"] = "wave3-field-dump";
    j["dtype"] = "float64";
    j["endianness"] = "little";
    j["order"] = "replica,time,ix,iy,iz";
    j["shape"] = {h.replicas, h.times.size(), h.n, h.n, h.n};
    j["n"] = h.n;
    j["box_side"] = h.box_side;
    j["dx"] = h.dx;
    j["dt"] = h.dt;
    j["times"] = h.times;
    j["seed"] = h.seed;
    j["first_replica"] = h.first_replica;
    j["replicas"] = h.replicas;
    j["model_hash"] = h.model_hash;
    j["beta"] = h.beta;
    j["delta"] = h.delta;
    j["extra"] = h.extra;
    write_text_file(stem + ".json", j.dump(2) + "\n");
}

FieldDump read_field_dump(const std::string& stem) {
    FieldDump d;
    json j;
    try {
        j = json::parse(read_text_file(stem + ".json"));
        auto& h = d.header;
        if (j.at("format") != "wave3-field-dump" || j.at("dtype") != "float64" || j.at("endianness") != "little")
            throw ConfigError("'" + stem + ".json' is not a float64 little-endian wave3 dump");
        h.n = j.at("n").get<int>();
        h.box_side = j.at("box_side").get<double>();
        h.dx = j.at("dx").get<double>();
        h.dt = j.at("dt").get<double>();
        h.times = j.at("times").get<std::vector<double>>();
        h.seed = j.at("seed").get<std::uint64_t>();
        h.first_replica = j.at("first_replica").get<std::uint32_t>();
        h.replicas = j.at("replicas").get<std::size_t>();
        h.model_hash = j.at("model_hash").get<std::string>();
        h.beta = j.at("beta").get<double>();
        h.delta = j.at("delta").get<double>();
        h.extra = j.at("extra");
    } catch (const json::exception& e) {
        throw ConfigError("bad dump header '" + stem + ".json': " + e.what());
    }
    const auto& h = d.header;
    if (h.n < 2 || h.replicas == 0 || h.times.empty()) throw ConfigError("dump header '" + stem + ".json' is empty");
    const std::size_t npts = static_cast<std::size_t>(h.n) * h.n * h.n;
    const auto expected = static_cast<std::uintmax_t>(h.replicas * h.times.size() * npts * sizeof(double));
    std::error_code ec;
    const auto size = std::filesystem::file_size(stem + ".bin", ec);
    if (ec) throw ConfigError("missing dump data '" + stem + ".bin'");
    if (size != expected) throw ConfigError("dump data '" + stem + ".bin' has the wrong size for its header");
    std::ifstream bin(stem + ".bin", std::ios::binary);
    for (std::size_t r = 0; r < h.replicas; ++r) {
        std::vector<simulator::RealGrid> rep;
        for (std::size_t t = 0; t < h.times.size(); ++t) {
            simulator::RealGrid g(npts);
            bin.read(reinterpret_cast<char*>(g.data()), static_cast<std::streamsize>(npts * sizeof(double)));
            rep.push_back(std::move(g));
        }
        d.fields.push_back(std::move(rep));
    }
    if (!bin) throw ConfigError("short read from '" + stem + ".bin'");
    return d;
}

}  // namespace wave3::io
