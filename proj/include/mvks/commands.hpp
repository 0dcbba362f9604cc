#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mvks/config.hpp"

namespace mvks {

struct CheckRecord {
    std::string name;
    double value = 0.0;
    double bound = 0.0;
    bool pass = false;
    std::string note;
};

struct RunReport {
    std::string command;
    std::vector<CheckRecord> checks;
    std::string config_hash;
    std::string code_version;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, double>> timing; // seconds per phase
    std::vector<std::pair<std::string, double>> metrics;

    void check(std::string name, double value, double bound, bool pass, std::string note = {});
    bool all_pass() const;
    std::string to_json() const;
};

struct CommandOptions {
    std::filesystem::path out_dir; // resolved by output_directory()
    std::optional<std::uint64_t> seed;
    std::optional<SolveMode> mode;
    std::ostream* log = nullptr;
};

/// --out, else outputs.directory, else $MVKS_OUT_DIR, else ./mvks_out.
std::filesystem::path output_directory(const RunConfig& config,
                                       const std::optional<std::filesystem::path>& flag);

const char* code_version();

/// Each command writes its files under options.out_dir and returns 0 when
/// every check passed, 1 otherwise. Configuration problems throw.
int cmd_check_kernel(const RunConfig& config, const CommandOptions& options,
                     RunReport* report = nullptr);
int cmd_solve(const RunConfig& config, const CommandOptions& options, RunReport* report = nullptr);
int cmd_particles(const RunConfig& config, const CommandOptions& options,
                  RunReport* report = nullptr);
int cmd_qz(const RunConfig& config, const CommandOptions& options, RunReport* report = nullptr);
int cmd_picard(const RunConfig& config, const CommandOptions& options, RunReport* report = nullptr);

} // namespace mvks
