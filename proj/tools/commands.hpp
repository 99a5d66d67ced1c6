#pragma once

// Subcommands of wave3_cli. Each returns an exit code and writes its tables
// and a manifest into the output directory.

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wave3/config.hpp"

namespace wave3::cli {

enum ExitCode : int {
    kPass = 0,
    kScientificFailure = 1,
    kNumericalFailure = 2,
    kUsage = 64,
};

struct CommandContext {
    config::ExperimentConfig cfg;
    std::string out_dir = "wave3_out";
    /// --tolerance; its meaning depends on the command (see README).
    std::optional<double> tolerance;
    unsigned threads = 1;
    std::ostream* log = nullptr;
    std::ostream* err = nullptr;
};

int cmd_verify(const CommandContext& ctx);
int cmd_cov(const CommandContext& ctx);
int cmd_simulate(const CommandContext& ctx);
int cmd_estimate(const CommandContext& ctx);

/// Parses argv, runs the subcommand and maps exceptions to exit codes:
/// ConfigError, DomainError, UnsupportedError and CLI misuse give 64,
/// NumericalError gives 2.
int run_cli(int argc, char** argv, std::ostream& log, std::ostream& err);

/// "i,j,k;i,j,k" -> index triples. Throws ConfigError.
std::vector<std::array<int, 3>> parse_probes(const std::string& text);

}  // namespace wave3::cli
