#include "mvks/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mvks/quadrature.hpp"

namespace mvks {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);

/// exp(x^2) erfc(x) for x >= 0.
double erfcx(double x)
{
    if (x < 25.0)
        return std::exp(x * x) * std::erfc(x);
    const double inv2 = 1.0 / (x * x);
    return (1.0 - 0.5 * inv2 + 0.75 * inv2 * inv2 - 1.875 * inv2 * inv2 * inv2)
           / (x * std::sqrt(std::numbers::pi));
}

/// e^{sign * alpha mu} erfc(arg), where arg^2 - sign*alpha*mu == alpha^2/(2b) + lambda b.
double scaled_erfc(double sign_alpha_mu, double arg, double common_exponent)
{
    if (arg <= 0.0)
        return std::exp(sign_alpha_mu) * std::erfc(arg);
    return std::exp(common_exponent) * erfcx(arg);
}

/// int_0^b e^{-lambda u} alpha (2 pi u^3)^{-1/2} e^{-alpha^2/(2u)} du for alpha > 0.
double hitting_cdf(double alpha, double lambda, double b)
{
    if (b <= 0.0)
        return 0.0;
    const double sb = std::sqrt(2.0 * b);
    if (lambda == 0.0)
        return std::erfc(alpha / sb);
    const double mu = std::sqrt(2.0 * lambda);
    const double common = -alpha * alpha / (2.0 * b) - lambda * b;
    const double lo = scaled_erfc(-alpha * mu, (alpha - mu * b) / sb, common);
    const double hi = scaled_erfc(alpha * mu, (alpha + mu * b) / sb, common);
    return 0.5 * (lo + hi);
}

double sgn(double z) { return (z > 0.0) - (z < 0.0); }

void require_positive_time(double t, const char* what)
{
    if (!(t > 0.0))
        throw DomainError(std::string(what) + ": t must be positive");
}

/// int_R |K_t|^p over windows doubling outward until the tails settle.
double custom_lp_norm(const KernelSpec& spec, double t, int p)
{
    auto integrand = [&](double x) {
        const double v = std::abs(spec.custom(t, x));
        return p == 1 ? v : v * v;
    };
    double R = std::max(1.0, 8.0 * std::sqrt(t));
    auto core = integrate_adaptive(integrand, -R, R, 1e-300, 1e-10);
    double total = core.value;
    for (int doubling = 0; doubling < 40; ++doubling) {
        const double outer = integrate_adaptive(integrand, R, 2 * R, 1e-300, 1e-10).value
                             + integrate_adaptive(integrand, -2 * R, -R, 1e-300, 1e-10).value;
        total += outer;
        R *= 2.0;
        if (!std::isfinite(total))
            return kInf;
        if (outer <= 1e-12 * total)
            return p == 1 ? total : std::sqrt(total);
    }
    return kInf;
}

} // namespace

KernelSpec KernelSpec::keller_segel(double chi, double lambda, Normalization norm)
{
    KernelSpec s;
    s.chi = chi;
    s.lambda = lambda;
    s.normalization = norm;
    s.validate();
    return s;
}

KernelSpec KernelSpec::custom_kernel(std::string name, std::function<double(double, double)> fn)
{
    KernelSpec s;
    s.kind = KernelKind::custom;
    s.name = std::move(name);
    s.custom = std::move(fn);
    return s;
}

KernelSpec KernelSpec::off()
{
    KernelSpec s;
    s.kind = KernelKind::none;
    s.name = "none";
    return s;
}

void KernelSpec::validate() const
{
    if (kind == KernelKind::keller_segel) {
        if (!(chi > 0.0) || !std::isfinite(chi))
            throw DomainError("kernel: chi must be positive");
        if (!(lambda >= 0.0) || !std::isfinite(lambda))
            throw DomainError("kernel: lambda must be non-negative");
    }
    if (kind == KernelKind::custom && !custom)
        throw UsageError("kernel: custom kind without a function");
}

double KernelSpec::normalization_factor() const
{
    return normalization == Normalization::heat ? 1.0 : 1.0 / kSqrt2Pi;
}

double kernel_eval(const KernelSpec& spec, double t, double x)
{
    require_positive_time(t, "kernel_eval");
    switch (spec.kind) {
    case KernelKind::none:
        return 0.0;
    case KernelKind::custom:
        return spec.custom(t, x);
    case KernelKind::keller_segel:
        break;
    }
    const double gauss = std::exp(-x * x / (2.0 * t));
    if (gauss == 0.0)
        return 0.0; // t^{-3/2} may have overflowed
    return spec.normalization_factor() * spec.chi * std::exp(-spec.lambda * t) * -x
           / (kSqrt2Pi * t * std::sqrt(t)) * gauss;
}

double kernel_l1_norm(const KernelSpec& spec, double t)
{
    require_positive_time(t, "kernel_l1_norm");
    switch (spec.kind) {
    case KernelKind::none:
        return 0.0;
    case KernelKind::custom:
        return custom_lp_norm(spec, t, 1);
    case KernelKind::keller_segel:
        break;
    }
    return spec.normalization_factor() * spec.chi * std::exp(-spec.lambda * t)
           * std::sqrt(2.0 / std::numbers::pi) / std::sqrt(t);
}

double kernel_l2_norm(const KernelSpec& spec, double t)
{
    require_positive_time(t, "kernel_l2_norm");
    switch (spec.kind) {
    case KernelKind::none:
        return 0.0;
    case KernelKind::custom:
        return custom_lp_norm(spec, t, 2);
    case KernelKind::keller_segel:
        break;
    }
    // ||x t^{-3/2} e^{-x^2/2t}/sqrt(2 pi)||_2^2 = 1 / (4 sqrt(pi) t^{3/2})
    return spec.normalization_factor() * spec.chi * std::exp(-spec.lambda * t)
           / (2.0 * std::pow(std::numbers::pi, 0.25) * std::pow(t, 0.75));
}

double kernel_time_integral(const KernelSpec& spec, double a, double b, double z)
{
    if (!(a >= 0.0 && b > a))
        throw DomainError("kernel_time_integral: need 0 <= a < b");
    switch (spec.kind) {
    case KernelKind::none:
        return 0.0;
    case KernelKind::custom: {
        const double m = 0.5 * (a + b);
        return std::sqrt(m) * spec.custom(m, z) * 2.0 * (std::sqrt(b) - std::sqrt(a));
    }
    case KernelKind::keller_segel:
        break;
    }
    if (z == 0.0)
        return 0.0;
    const double alpha = std::abs(z);
    const double mass = hitting_cdf(alpha, spec.lambda, b) - hitting_cdf(alpha, spec.lambda, a);
    return -sgn(z) * spec.normalization_factor() * spec.chi * mass;
}

Field lag_kernel(const KernelSpec& spec, const Grid1D& grid, double dt, Index lag)
{
    if (lag < 1)
        throw UsageError("lag_kernel: lag must be >= 1");
    const double a = static_cast<double>(lag - 1) * dt;
    const double b = static_cast<double>(lag) * dt;
    return grid.sample([&](double z) { return kernel_time_integral(spec, a, b, z); });
}

double horizon_D(const KernelSpec& spec, double T)
{
    if (!(T > 0.0))
        throw DomainError("horizon_D: T must be positive");
    if (spec.kind == KernelKind::none)
        return 0.0;
    if (spec.kind == KernelKind::custom) {
        const auto probe = probe_singular_integral(
            [&spec](double t) { return kernel_l1_norm(spec, t); }, T);
        return probe.converged ? probe.value : kInf;
    }
    // ||K_t||_1 ~ t^{-1/2}: integrate in s = sqrt(t), dt = 2 s ds.
    const auto r = integrate_adaptive(
        [&spec](double s) { return s > 0.0 ? 2.0 * s * kernel_l1_norm(spec, s * s) : 0.0; }, 0.0,
        std::sqrt(T), 1e-15, 1e-13);
    return r.value;
}

double find_T0(const KernelSpec& spec, double safety, double dt)
{
    if (!(safety > 0.0 && safety <= 1.0))
        throw DomainError("find_T0: safety must lie in (0, 1]");
    if (spec.kind == KernelKind::none)
        return kInf;
    if (!std::isfinite(horizon_D(spec, 1e-6)))
        throw NoHorizonError("find_T0: D(T) is infinite for every horizon");
    double hi = 1.0;
    while (horizon_D(spec, hi) <= safety) {
        hi *= 2.0;
        if (hi > 1e8)
            return kInf;
    }
    double lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (horizon_D(spec, mid) <= safety ? lo : hi) = mid;
    }
    if (dt <= 0.0)
        return lo;
    auto k = static_cast<Index>(std::floor(lo / dt));
    while (k > 0 && horizon_D(spec, static_cast<double>(k) * dt) > safety)
        --k;
    if (k == 0)
        throw UsageError("find_T0: time step exceeds the contraction horizon");
    return static_cast<double>(k) * dt;
}

bool HypothesisReport::all_pass() const
{
    return !items.empty()
           && std::all_of(items.begin(), items.end(), [](const auto& i) { return i.pass; });
}

const HypothesisItem& HypothesisReport::item(const std::string& name) const
{
    for (const auto& i : items)
        if (i.name == name)
            return i;
    throw UsageError("HypothesisReport: no item " + name);
}

std::vector<Field> default_trial_densities(const Grid1D& grid)
{
    const double L = grid.half_width();
    const double h = grid.spacing();
    std::vector<Field> out;
    auto gaussian = [&](double mean, double sd) {
        Field f = grid.sample([&](double x) { return heat_kernel(sd * sd, x - mean); });
        normalize(grid, f);
        out.push_back(f);
    };
    auto uniform = [&](double a, double b) {
        Field f = grid.sample([&](double x) { return (x >= a && x <= b) ? 1.0 : 0.0; });
        normalize(grid, f);
        out.push_back(f);
    };
    for (double sd : {0.1, 0.5, 1.0, 2.0})
        gaussian(0.0, sd);
    gaussian(0.25 * L, 0.5);
    uniform(-0.5, 0.5);
    uniform(-0.25 * L, 0.25 * L);
    gaussian(0.0, 2.0 * h); // near-delta
    return out;
}

namespace {

/// int_0^t N(t - s) s^{-p} ds, singular at both ends.
double memory_profile(const std::function<double(double)>& norm, double t, double p, bool* ok)
{
    const auto r = integrate_tanh_sinh(
        [&](double s, double dist) {
            const double lag = s > 0.5 * t ? dist : t - s;
            const double from_zero = s > 0.5 * t ? s : dist;
            return norm(lag) / std::pow(from_zero, p);
        },
        0.0, t, 1e-9);
    if (!r.converged || !std::isfinite(r.value))
        *ok = false;
    return r.value;
}

double max_adjacent_jump(const KernelSpec& spec, double t, const Grid1D& grid)
{
    double jump = 0.0;
    double prev = kernel_eval(spec, t, grid.x(0));
    for (Index i = 1; i < grid.size(); ++i) {
        const double v = kernel_eval(spec, t, grid.x(i));
        jump = std::max(jump, std::abs(v - prev));
        prev = v;
    }
    return jump;
}

/// int_0^t |K_u(z)| du sampled on the grid displacements.
Field time_integrated_abs_kernel(const KernelSpec& spec, const Grid1D& grid, double t)
{
    if (spec.kind == KernelKind::keller_segel) {
        return grid.sample([&](double z) { return std::abs(kernel_time_integral(spec, 0.0, t, z)); });
    }
    return grid.sample([&](double z) {
        const auto probe = probe_singular_integral(
            [&](double u) { return std::abs(kernel_eval(spec, u, z)); }, t);
        return probe.converged ? probe.value : kInf;
    });
}

} // namespace

HypothesisReport check_hypotheses(const KernelSpec& spec, double T, const Grid1D& grid,
                                  const TimeMesh& mesh, const std::vector<Field>& trial_densities,
                                  double t0_safety)
{
    if (!(T > 0.0))
        throw DomainError("check_hypotheses: T must be positive");
    if (trial_densities.empty())
        throw UsageError("check_hypotheses: need at least one trial density");
    spec.validate();

    HypothesisReport report;
    const auto l1 = [&spec](double t) { return kernel_l1_norm(spec, t); };
    const auto l2 = [&spec](double t) { return kernel_l2_norm(spec, t); };

    // H.1: K in L^1((0,T]; L^1) and L^1((0,T]; L^2).
    {
        const auto p1 = probe_singular_integral(l1, T);
        const auto p2 = probe_singular_integral(l2, T);
        HypothesisItem h{"H.1", p1.value, kInf, p1.converged && p2.converged, "", {}};
        h.probe = {p1.value, p2.value, p1.last_ratio, p2.last_ratio};
        h.note = "int_0^T ||K_t||_1 dt; probe = {L1 integral, L2 integral, tail ratios}";
        report.items.push_back(h);
    }

    // H.2: continuity, probed by the largest jump between neighbours under refinement.
    {
        HypothesisItem h{"H.2", 0.0, 0.0, true, "max adjacent jump on n, 2n, 4n, 8n", {}};
        for (double t : {0.1 * T, 0.5 * T, T}) {
            std::vector<double> jumps;
            for (Index f = 1; f <= 8; f *= 2)
                jumps.push_back(
                    max_adjacent_jump(spec, t, Grid1D(grid.half_width(), grid.size() * f)));
            h.probe.insert(h.probe.end(), jumps.begin(), jumps.end());
            h.value = std::max(h.value, jumps.back());
            for (std::size_t j = 1; j < jumps.size(); ++j)
                if (jumps[j - 1] > 0.0 && !(jumps[j] <= jumps[j - 1] / 1.5))
                    h.pass = false;
        }
        report.items.push_back(h);
    }

    // H.3: K_t(x) -> 0 as t -> 0 at sampled x != 0.
    {
        HypothesisItem h{"H.3", 0.0, 1e-6, true, "|K_tmin(x)| / max_t |K_t(x)|", {}};
        for (double x : {-2.0, -1.0, -0.5, -0.1, 0.1, 0.5, 1.0, 2.0}) {
            double peak = 0.0;
            double last = 0.0;
            for (int j = 0; j <= 10; ++j) {
                last = std::abs(kernel_eval(spec, T * std::pow(10.0, -j), x));
                if (!std::isfinite(last))
                    break;
                peak = std::max(peak, last);
            }
            const double rel = peak > 0.0 ? last / peak : 0.0;
            h.probe.push_back(rel);
            h.value = std::max(h.value, std::isfinite(rel) ? rel : kInf);
        }
        h.pass = h.value <= h.bound;
        report.items.push_back(h);
    }

    // H.4: f1, f2 bounded on [0, T].
    {
        bool ok = true;
        const Index probes = std::min<Index>(mesh.steps(), 20);
        for (Index j = 1; j <= probes; ++j) {
            const Index k = j * mesh.steps() / probes;
            const double t = mesh.t(k) - mesh.start();
            const double f1 = memory_profile(l1, t, 0.5, &ok);
            const double f2 = memory_profile(l2, t, 0.25, &ok);
            report.f1_profile.push_back(f1);
            report.f1_times.push_back(t);
            report.f1_sup = std::max(report.f1_sup, f1);
            report.f2_sup = std::max(report.f2_sup, f2);
        }
        if (!std::isfinite(report.f1_sup) || !std::isfinite(report.f2_sup))
            ok = false;
        HypothesisItem h{"H.4", report.f1_sup, kInf, ok, "sup f1 (value), sup f2 (probe)", {}};
        h.probe = {report.f2_sup};
        report.items.push_back(h);
    }

    // H.5: sup_{t,x,phi} int phi(y) ||K.(x - y)||_{L^1(0,t)} dy over the trial family.
    {
        HypothesisItem h{"H.5", 0.0, kInf, true, "per-trial sup over (t, x)", {}};
        for (double t : {0.1 * T, T}) {
            const Field profile = time_integrated_abs_kernel(spec, grid, t);
            if (!profile.allFinite()) {
                h.value = kInf;
                h.pass = false;
                break;
            }
            for (const auto& phi : trial_densities) {
                const double sup = convolve(grid, phi, profile).maxCoeff();
                h.probe.push_back(sup);
                h.value = std::max(h.value, sup);
            }
        }
        if (!std::isfinite(h.value))
            h.pass = false;
        report.items.push_back(h);
    }

    // H.6: sup_{t <= T} int_0^T ||K_{T+t-s}||_1 s^{-1/2} ds.
    {
        bool ok = true;
        double sup = 0.0;
        HypothesisItem h{"H.6", 0.0, kInf, true, "sampled t in [0, T]", {}};
        for (int j = 0; j <= 10; ++j) {
            const double t = T * j / 10.0;
            const auto r = integrate_tanh_sinh(
                [&](double s, double dist) {
                    const double lag = (s > 0.5 * T ? dist : T - s) + t;
                    const double from_zero = s > 0.5 * T ? s : dist;
                    return l1(lag) / std::sqrt(from_zero);
                },
                0.0, T, 1e-9);
            if (!r.converged || !std::isfinite(r.value))
                ok = false;
            h.probe.push_back(r.value);
            sup = std::max(sup, r.value);
        }
        h.value = sup;
        h.pass = ok && std::isfinite(sup);
        report.items.push_back(h);
    }

    report.D_of_T = horizon_D(spec, T);
    try {
        report.T0 = find_T0(spec, t0_safety, mesh.dt());
    } catch (const std::exception&) {
        report.T0.reset();
    }
    return report;
}

} // namespace mvks
