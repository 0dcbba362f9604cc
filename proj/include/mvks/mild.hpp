#pragma once

#include <limits>
#include <string>
#include <vector>

#include "mvks/field.hpp"
#include "mvks/grid.hpp"
#include "mvks/history.hpp"
#include "mvks/kernel.hpp"

namespace mvks {

enum class DriftSource { self_history, prefix_history, iterate };

/// B(t_k, x_i) sampled on the grid.
struct MemoryDrift {
    Field values;
    double time = 0.0;
    DriftSource source = DriftSource::self_history;
    Index iterate = 0; // Picard iterate that supplied the history, when source == iterate

    double sup() const { return values.size() ? values.abs().maxCoeff() : 0.0; }
};

/// Spectral cache of the lag kernels int_{(j-1) dt}^{j dt} K_u du, j = 1..max_lag.
///
/// With history rows frozen at the left end of each subinterval,
///   B(t_k) = sum_{l < k} lag_kernel(k - l) * p_l,
/// which is causal: step k reads rows 0..k-1 only.
class MemoryOperator {
public:
    MemoryOperator(const KernelSpec& spec, const Grid1D& grid, double dt, Index max_lag);

    const SpectralConvolver& convolver() const { return conv_; }
    Index max_lag() const { return static_cast<Index>(lags_.size()) - 1; }
    bool active() const { return active_; }
    const Spectrum& lag_spectrum(Index j) const { return lags_.at(static_cast<std::size_t>(j)); }

    /// Extends the cache to cover lags up to `max_lag`.
    void reserve(Index max_lag);

    /// sum_{l = first}^{last - 1} lag_kernel(k - l) * rows[l], where rows holds
    /// row spectra indexed from 0 and k > last - 1.
    Field apply(const std::vector<Spectrum>& rows, Index first, Index last, Index k) const;

private:
    KernelSpec spec_;
    SpectralConvolver conv_;
    double dt_;
    bool active_;
    std::vector<Spectrum> lags_;
};

/// B(t_k, .) from rows 0..k-1 of the history.
MemoryDrift memory_drift(const MarginalHistory& history, const KernelSpec& spec, Index k);

/// B(t_k, .) for every populated row, sharing one spectral cache.
std::vector<Field> memory_drift_history(const MarginalHistory& history, const KernelSpec& spec);

struct MarchOptions {
    double mass_tol = 1e-6;
};

/// Causal one-step Duhamel march:
///   p_{k+1} = g(dt) * p_k - dt (d/dx g(dt)) * (u_k p_k),  u_k = b(t_k) + B(t_k; p).
/// Each new row is clipped, its mass logged and then renormalized. A mass
/// drift beyond 10 mass_tol raises InstabilityError naming the step.
MarginalHistory march(const DensityField& p0, const KernelSpec& spec, const InitialChemical& chem,
                      const Grid1D& grid, const TimeMesh& mesh, const MarchOptions& options = {});

struct PicardOptions {
    Index k_max = 60;
    double tol = 1e-10;
    double mass_tol = 1e-6;
    bool keep_iterates = true;
};

struct PicardResult {
    std::vector<MarginalHistory> iterates; // only the last one unless keep_iterates
    std::vector<double> distances;         // distances[j] = max_k ||p^{j+2}_k - p^{j+1}_k||_1
    Index iterations = 0;
    bool converged = false;
    bool diverged = false;
    double D_of_T = 0.0;
    std::string note;

    const MarginalHistory& last() const { return iterates.back(); }
};

/// Picard iteration of the mild equation on the mesh horizon: iterate 1 takes
/// the memory drift from the frozen history p_s == p0, iterate j from iterate j-1.
/// Stops when the distance drops below tol; three consecutive distance ratios
/// above 1 flag divergence.
PicardResult picard(const DensityField& p0, const KernelSpec& spec, const InitialChemical& chem,
                    const Grid1D& grid, const TimeMesh& mesh, const PicardOptions& options = {});

/// b1(t, x) = int_0^{T0} (K_{T0 + t - s} * p_s)(x) ds for the prefix history on
/// [0, T0], rows frozen on each subinterval, kernel integrated exactly in time.
double restart_drift(const MarginalHistory& prefix, const KernelSpec& spec, double t, double x);

/// b1 at t = j dt on the grid.
Field restart_drift_field(const MarginalHistory& prefix, const KernelSpec& spec, Index j);

enum class SolveMode { march, picard_with_restart };

struct SolveOptions {
    SolveMode mode = SolveMode::march;
    double safety = 0.5;
    MarchOptions march;
    PicardOptions picard{.keep_iterates = false};
};

struct WindowReport {
    Index first_step = 0;
    Index last_step = 0;
    Index iterations = 0;
    std::vector<double> distances;
    bool converged = false;
    bool diverged = false;
    double restart_sup = 0.0; // sup |b1| over the window
};

struct SolveResult {
    MarginalHistory history;
    double T0 = std::numeric_limits<double>::infinity();
    std::vector<WindowReport> windows;
};

/// march mode: one causal march over the mesh. picard_with_restart: windows of
/// length T0 = find_T0(safety) (a multiple of dt), Picard on each window with
/// the memory of all earlier windows entering as a frozen restart drift, rows
/// shared at window joints.
SolveResult solve_global(const DensityField& p0, const KernelSpec& spec,
                         const InitialChemical& chem, const Grid1D& grid, const TimeMesh& mesh,
                         const SolveOptions& options = {});

} // namespace mvks
