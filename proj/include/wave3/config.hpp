#pragma once

// Flat typed key = value experiment configuration. Every key has a default,
// unknown keys are rejected, and the effective values go into the manifest.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "wave3/common.hpp"

namespace wave3::config {

enum class Kind { Real, Integer, Text, RealList, IntList };

struct KeySpec {
    std::string key;
    Kind kind;
    std::string default_value;
    std::string help;
};

/// All accepted keys in documentation order.
const std::vector<KeySpec>& schema();

class ExperimentConfig {
public:
    /// Every key at its default.
    ExperimentConfig();

    /// Lines "key = value"; '#' starts a comment. Throws ConfigError naming
    /// the origin and line for unknown keys, duplicates or bad values.
    static ExperimentConfig parse(std::istream& in, const std::string& origin = "<config>");
    static ExperimentConfig load(const std::string& path);

    /// Validates the value against the key's kind.
    void set(const std::string& key, const std::string& value);
    bool is_default(const std::string& key) const;

    double real(const std::string& key) const;
    long long integer(const std::string& key) const;
    std::uint64_t unsigned_integer(const std::string& key) const;
    const std::string& text(const std::string& key) const;
    std::vector<double> reals(const std::string& key) const;
    std::vector<long long> integers(const std::string& key) const;

    /// Effective values of every key, sorted by key.
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    const KeySpec& spec_of(const std::string& key) const;
    std::map<std::string, std::string> values_;
    std::map<std::string, bool> explicit_;
};

/// --threads if positive, else WAVE3_THREADS if set and positive, else the
/// hardware concurrency (at least 1).
unsigned resolve_threads(int requested);

}  // namespace wave3::config
