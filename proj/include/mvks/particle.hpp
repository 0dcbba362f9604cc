#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mvks/field.hpp"
#include "mvks/grid.hpp"
#include "mvks/history.hpp"
#include "mvks/kernel.hpp"

namespace mvks {

/// Philox4x32-10 counter-based generator.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;
    static Counter block(Counter ctr, Key key);
};

enum class RngPurpose : std::uint32_t { noise = 0, initial = 1 };

/// Deterministic draws addressed by (seed, stream, step, purpose).
class ParticleRng {
public:
    explicit ParticleRng(std::uint64_t seed) : seed_(seed) {}
    std::uint64_t seed() const { return seed_; }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform(std::uint64_t stream, std::uint64_t step, RngPurpose purpose) const;
    /// Standard normal by Box-Muller.
    double normal(std::uint64_t stream, std::uint64_t step, RngPurpose purpose) const;

private:
    Philox4x32::Counter draw(std::uint64_t stream, std::uint64_t step, RngPurpose purpose) const;
    std::uint64_t seed_;
};

enum class InteractionMode { mesh, direct };

struct SimulationStats {
    double seconds = 0.0;
    double interaction_evaluations = 0.0; // kernel evaluations or spectral products
};

/// Particle trajectories. Row r of `positions` holds all particles at mesh
/// step recorded_steps[r].
struct ParticleEnsemble {
    Index N = 0;
    TimeMesh mesh{1.0, 1};
    RowMatrix positions;
    std::vector<Index> recorded_steps;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> streams;
    std::string initial_sampling = "inverse_cdf";
    std::optional<double> drift_bound; // declared sup |b|
    SimulationStats stats;

    Index row_of_step(Index step) const;
    Eigen::VectorXd at_step(Index step) const { return positions.row(row_of_step(step)).transpose(); }
};

/// Maps a uniform u in [0, 1) to a sample of the density p on the grid, which
/// is read as piecewise constant on cells centered at the grid points.
std::function<double(double)> inverse_cdf_sampler(const Grid1D& grid,
                                                  const Eigen::Ref<const Field>& p);

struct ParticleOptions {
    InteractionMode interaction = InteractionMode::mesh;
    std::vector<std::uint64_t> streams; // defaults to 0..N-1
};

/// Euler-Maruyama for the interacting system
///   X^i_{k+1} = X^i_k + dt [b(t_k, X^i_k) + B_k(X^i_k)] + sqrt(dt) xi^i_k,
/// where B_k = sum_{l<k} lag_kernel(k - l) * mu_l over the empirical measures
/// mu_l of the particles at earlier steps.
///
/// `mesh` deposits mu_l on the grid by cloud-in-cell (exact fixed-point sums)
/// and reuses the spectral memory operator of the PDE solver, costing
/// O(M^2 n log n + N M). `direct` sums the exact lag kernels over every pair
/// and past step, O(N^2 M^2).
ParticleEnsemble simulate_particles(Index N, const DensityField& p0, const KernelSpec& spec,
                                    const InitialChemical& chem, const Grid1D& grid,
                                    const TimeMesh& mesh, std::uint64_t seed,
                                    const ParticleOptions& options = {});

using DriftFunction = std::function<double(double, double)>;

/// Independent paths of dX = b(t, X) dt + dW. Rows are kept every
/// `record_stride` steps (and at the last step).
ParticleEnsemble simulate_bounded_drift(const DriftFunction& b, double beta,
                                        const std::function<double(double)>& x0_sampler,
                                        const TimeMesh& mesh, Index N, std::uint64_t seed,
                                        Index record_stride = 1);

struct KdeDensity {
    DensityField density;
    double bandwidth = 0.0;
    bool degenerate = false;
};

/// Silverman's rule 1.06 sigma N^{-1/5}.
double silverman_bandwidth(const Eigen::Ref<const Eigen::VectorXd>& samples);

/// Gaussian KDE of the ensemble at a mesh step, sampled on the grid.
/// bandwidth <= 0 selects Silverman's rule.
KdeDensity kde_density(const ParticleEnsemble& ensemble, Index step, const Grid1D& grid,
                       double bandwidth = 0.0);

struct ErrorTable {
    std::vector<double> t;
    std::vector<double> l1;
    std::vector<double> l2;
    std::vector<double> linf;
    double max_l1 = 0.0;
    double max_l2 = 0.0;
    double max_linf = 0.0;

    void push(double time, double a, double b, double c);
};

ErrorTable compare_histories(const MarginalHistory& a, const MarginalHistory& b);

/// Row-wise distances of two densities on one grid.
ErrorTable compare_densities(const Grid1D& grid, const std::vector<DensityField>& a,
                             const std::vector<DensityField>& b);

} // namespace mvks
