#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mvks/field.hpp"
#include "mvks/grid.hpp"
#include "mvks/kernel.hpp"
#include "mvks/mild.hpp"
#include "mvks/particle.hpp"

namespace mvks {

/// Every problem found while loading a configuration, reported together.
class ConfigError : public UsageError {
public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

/// A shape with numeric arguments, e.g. `gaussian(0, 1)`, or a samples file.
struct ShapeSpec {
    std::string name;
    std::vector<double> args;
    std::filesystem::path path; // name == "samples"

    std::string text() const;
};

struct RunConfig {
    struct Model {
        double chi = 1.0;
        double lambda = 0.0;
        Normalization normalization = Normalization::heat;
        std::string kernel = "keller_segel"; // keller_segel | none | custom:sign_power
    } model;
    struct Initial {
        ShapeSpec p0{"gaussian", {0.0, 1.0}, {}};
        ShapeSpec c0{"gaussian_bump", {1.0, 1.0}, {}};
    } initial;
    struct Discretization {
        double L = 16.0;
        Index n = 1024;
        double T = 2.0;
        Index M = 400;
    } discretization;
    struct Particles {
        std::vector<Index> N{1000, 10000};
        std::uint64_t seed = 20240601;
        double bandwidth = 0.0; // 0 = Silverman
        InteractionMode interaction = InteractionMode::mesh;
        Index M = 200;
    } particles;
    struct Picard {
        double safety = 0.5;
        Index k_max = 60;
        double tol = 1e-10;
        Index M = 400;
    } picard;
    struct Solve {
        SolveMode mode = SolveMode::march;
        double mass_tol = 1e-6;
    } solve;
    struct QZ {
        double beta = 0.5;
        double y = 0.0;
        double x = 1.0;
        double t = 1.0;
        Index N = 100000;
        double dt = 1e-3;
        double bin_width = 0.2;
        double corollary_beta = 0.3; // drift bound of the uniform-start sup check
    } qz;
    struct Outputs {
        std::string directory;
        std::vector<std::string> formats{"csv", "dat", "json"};
        Index row_stride = 1;
    } outputs;

    std::string source;                     // raw text, hashed into provenance
    std::filesystem::path base_directory;   // resolves relative sample paths

    bool wants(const std::string& format) const;
};

/// Parses `key = value` lines with dotted sections; `#` starts a comment.
/// Unknown keys, malformed values and violated preconditions are collected
/// and thrown as a single ConfigError.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_directory = {});
RunConfig load_config(const std::filesystem::path& path);

/// 64-bit FNV-1a of the configuration text, as hex.
std::string config_hash(const RunConfig& config);

Grid1D make_grid(const RunConfig& config);
TimeMesh make_mesh(const RunConfig& config);
KernelSpec make_kernel(const RunConfig& config);
DensityField make_p0(const RunConfig& config, const Grid1D& grid);
InitialChemical make_c0(const RunConfig& config, const Grid1D& grid);

/// The custom kernel K_t(x) = t^{-3/2} sign(x), which is not integrable in x.
KernelSpec sign_power_kernel();

} // namespace mvks
