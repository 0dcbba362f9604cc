#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mvks/grid.hpp"

namespace mvks {

/// Constant in the denominator of the chemotaxis kernel. `heat` (sqrt(2 pi))
/// makes K_t = chi e^{-lambda t} d/dx g(t, .); `paper_literal` uses 2 pi.
enum class Normalization { heat, paper_literal };

enum class KernelKind { keller_segel, custom, none };

/// Interaction kernel K_t(x).
struct KernelSpec {
    double chi = 1.0;
    double lambda = 0.0;
    Normalization normalization = Normalization::heat;
    KernelKind kind = KernelKind::keller_segel;
    std::string name = "keller_segel";
    std::function<double(double, double)> custom; // (t, x) -> K_t(x), kind == custom

    static KernelSpec keller_segel(double chi, double lambda,
                                   Normalization norm = Normalization::heat);
    static KernelSpec custom_kernel(std::string name, std::function<double(double, double)> fn);
    /// No self-interaction: B == 0.
    static KernelSpec off();

    /// Throws DomainError when chi <= 0 or lambda < 0 for keller_segel.
    void validate() const;

    /// 1 for heat normalization, 1/sqrt(2 pi) for paper-literal.
    double normalization_factor() const;
};

double kernel_eval(const KernelSpec& spec, double t, double x);

/// ||K_t||_{L^1(R)}. Closed form for keller_segel; custom kernels are
/// integrated over growing windows and report +inf when the tails never settle.
double kernel_l1_norm(const KernelSpec& spec, double t);
double kernel_l2_norm(const KernelSpec& spec, double t);

/// int_a^b K_u(z) du for 0 <= a < b.
///
/// keller_segel: exact, via the first-passage identity
///   int_0^b e^{-lambda u} |z| (2 pi u^3)^{-1/2} e^{-z^2/(2u)} du
///     = (e^{-mu|z|} erfc((|z| - mu b)/sqrt(2b)) + e^{mu|z|} erfc((|z| + mu b)/sqrt(2b))) / 2
/// with mu = sqrt(2 lambda). custom: product integration freezing sqrt(u) K_u(z)
/// at the subinterval midpoint against the exact weight int_a^b u^{-1/2} du.
double kernel_time_integral(const KernelSpec& spec, double a, double b, double z);

/// Samples kernel_time_integral((j-1) dt, j dt, .) at the grid displacements:
/// the contribution of the history row j steps in the past.
Field lag_kernel(const KernelSpec& spec, const Grid1D& grid, double dt, Index lag);

/// int_0^T ||K_t||_{L^1} dt.
double horizon_D(const KernelSpec& spec, double T);

/// Largest T0 with D(T0) <= safety; floored to a multiple of `dt` when dt > 0.
/// Returns +inf when D stays below `safety` on every horizon; throws
/// NoHorizonError when D is infinite on every horizon.
double find_T0(const KernelSpec& spec, double safety, double dt = 0.0);

struct HypothesisItem {
    std::string name;
    double value = 0.0;
    double bound = 0.0;
    bool pass = false;
    std::string note;
    std::vector<double> probe; // refinement / limit data
};

struct HypothesisReport {
    std::vector<HypothesisItem> items; // H.1 .. H.6
    double f1_sup = 0.0;
    double f2_sup = 0.0;
    std::vector<double> f1_profile; // f1 at the probed mesh nodes
    std::vector<double> f1_times;
    double D_of_T = 0.0;
    std::optional<double> T0;

    bool all_pass() const;
    const HypothesisItem& item(const std::string& name) const;
};

/// Trial probability densities for the H.5 supremum: Gaussians of several
/// widths and centers, uniforms, and a near-delta.
std::vector<Field> default_trial_densities(const Grid1D& grid);

HypothesisReport check_hypotheses(const KernelSpec& spec, double T, const Grid1D& grid,
                                  const TimeMesh& mesh, const std::vector<Field>& trial_densities,
                                  double t0_safety = 0.5);

} // namespace mvks
