#pragma once

// Manifests, CSV helpers and flat binary field dumps with a JSON header.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "wave3/config.hpp"
#include "wave3/lattice.hpp"

namespace wave3::io {

using json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";

void ensure_directory(const std::string& dir);
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

/// FNV-1a of the text, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

json config_to_json(const config::ExperimentConfig& cfg);

/// dir/manifest.json: tool version, command, every config value and the
/// command-specific `extra`. No timestamps, so identical runs write
/// identical bytes.
void write_manifest(const std::string& dir, const std::string& command, const config::ExperimentConfig& cfg,
                    const json& extra);

struct DumpHeader {
    int n = 0;
    double box_side = 0.0;
    double dx = 0.0;
    double dt = 0.0;
    std::vector<double> times;
    std::uint64_t seed = 0;
    std::uint32_t first_replica = 0;
    std::size_t replicas = 0;
    std::string model_hash;
    double beta = 1.0;
    double delta = 1.0;
    /// Free-form extra fields (solver, cutoff, ...).
    json extra = json::object();
};

/// stem.bin holds float64 little-endian values in the order
/// [replica][time][ix][iy][iz]; stem.json holds the header.
void write_field_dump(const std::string& stem, const DumpHeader& header,
                      const std::vector<std::vector<simulator::RealGrid>>& fields);

struct FieldDump {
    DumpHeader header;
    std::vector<std::vector<simulator::RealGrid>> fields;
};

/// Throws ConfigError when a file is missing or inconsistent with its header.
FieldDump read_field_dump(const std::string& stem);

}  // namespace wave3::io
