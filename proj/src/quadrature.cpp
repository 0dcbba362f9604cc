#include "mvks/quadrature.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <queue>

namespace mvks {

namespace {

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double value;
    double error;
};

Segment gk15(const ScalarFunction& f, double a, double b)
{
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double kronrod = fc * kWgk[7];
    double gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        const double fsum = f(c - dx) + f(c + dx);
        kronrod += kWgk[j] * fsum;
        if (j % 2 == 1)
            gauss += kWg[j / 2] * fsum;
    }
    return {kronrod * h, std::abs((kronrod - gauss) * h)};
}

} // namespace

QuadratureResult integrate_adaptive(const ScalarFunction& f, double a, double b, double abs_tol,
                                    double rel_tol, int max_segments)
{
    if (a == b)
        return {0.0, 0.0, true};
    struct Piece {
        double a, b;
        Segment s;
        bool operator<(const Piece& o) const { return s.error < o.s.error; }
    };
    std::priority_queue<Piece> heap;
    const Segment whole = gk15(f, a, b);
    heap.push({a, b, whole});
    double value = whole.value;
    double error = whole.error;
    const double min_width = 1e-14 * std::abs(b - a);
    for (int count = 1; count < max_segments; ++count) {
        if (!std::isfinite(value))
            return {value, error, false};
        if (error <= std::max(abs_tol, rel_tol * std::abs(value)))
            return {value, error, true};
        const Piece worst = heap.top();
        if (std::abs(worst.b - worst.a) < min_width)
            break; // roundoff floor
        heap.pop();
        const double c = 0.5 * (worst.a + worst.b);
        const Segment left = gk15(f, worst.a, c);
        const Segment right = gk15(f, c, worst.b);
        value += left.value + right.value - worst.s.value;
        error += left.error + right.error - worst.s.error;
        heap.push({worst.a, c, left});
        heap.push({c, worst.b, right});
    }
    // Re-sum to shed the drift of the running totals.
    value = 0.0;
    error = 0.0;
    for (; !heap.empty(); heap.pop()) {
        value += heap.top().s.value;
        error += heap.top().s.error;
    }
    return {value, error, error <= std::max(abs_tol, rel_tol * std::abs(value))};
}

QuadratureResult integrate_tanh_sinh(const std::function<double(double, double)>& f, double a,
                                     double b, double rel_tol, int max_level)
{
    if (a == b)
        return {0.0, 0.0, true};
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    constexpr double kHalfPi = 0.5 * std::numbers::pi;
    // Abscissae beyond |tau| = 4 sit within ~1e-300 of the endpoints.
    constexpr double kTauMax = 4.0;

    auto term = [&](double tau) {
        const double s = kHalfPi * std::sinh(tau);
        const double ch = std::cosh(s);
        // 1 - tanh(s) without cancellation.
        const double gap = 1.0 / (std::exp(2.0 * s) + 1.0) * 2.0;
        const double weight = kHalfPi * std::cosh(tau) / (ch * ch);
        const double d = half * gap; // distance from b (tau > 0) or a (tau < 0)
        if (!(d > 0.0))
            return 0.0;
        return weight * f(b - d, d);
    };
    auto term_neg = [&](double tau) {
        const double s = kHalfPi * std::sinh(tau);
        const double ch = std::cosh(s);
        const double gap = 1.0 / (std::exp(2.0 * s) + 1.0) * 2.0;
        const double weight = kHalfPi * std::cosh(tau) / (ch * ch);
        const double d = half * gap;
        if (!(d > 0.0))
            return 0.0;
        return weight * f(a + d, d);
    };

    double h = 1.0;
    double sum = kHalfPi * f(mid, half);
    for (double tau = h; tau <= kTauMax; tau += h)
        sum += term(tau) + term_neg(tau);
    double estimate = sum * h * half;
    for (int level = 1; level <= max_level; ++level) {
        h *= 0.5;
        for (double tau = h; tau <= kTauMax; tau += 2.0 * h)
            sum += term(tau) + term_neg(tau);
        const double next = sum * h * half;
        const double err = std::abs(next - estimate);
        estimate = next;
        if (!std::isfinite(estimate))
            return {estimate, err, false};
        if (level >= 3 && err <= rel_tol * std::abs(estimate))
            return {estimate, err, true};
    }
    return {estimate, std::abs(estimate) * rel_tol, false};
}

QuadratureResult integrate_tanh_sinh(const ScalarFunction& f, double a, double b, double rel_tol,
                                     int max_level)
{
    return integrate_tanh_sinh([&f](double x, double) { return f(x); }, a, b, rel_tol, max_level);
}

SingularIntegralProbe probe_singular_integral(const ScalarFunction& f, double T, int decades)
{
    SingularIntegralProbe probe;
    double lower = T;
    double total = 0.0;
    for (int j = 1; j <= decades; ++j) {
        const double eps = T * std::pow(10.0, -j);
        // Integrate in log-time: int_eps^lower f(t) dt = int e^u f(e^u) du.
        const auto piece = integrate_adaptive(
            [&f](double u) {
                const double t = std::exp(u);
                return t * f(t);
            },
            std::log(eps), std::log(lower), 1e-300, 1e-11);
        probe.increments.push_back(piece.value);
        total += piece.value;
        lower = eps;
        if (!std::isfinite(total))
            break;
    }
    probe.value = total;
    const auto& inc = probe.increments;
    if (inc.size() >= 4 && std::isfinite(total)) {
        // Converging power-law tails shrink geometrically decade over decade.
        bool shrinking = true;
        for (std::size_t j = inc.size() - 3; j < inc.size(); ++j) {
            const double ratio = std::abs(inc[j]) / std::max(std::abs(inc[j - 1]), 1e-300);
            probe.last_ratio = ratio;
            if (!(ratio < 0.95))
                shrinking = false;
        }
        const double r = probe.last_ratio;
        const double tail = std::abs(inc.back()) * r / (1.0 - std::min(r, 0.95));
        probe.converged = shrinking && tail <= 1e-2 * std::abs(total) + 1e-300;
        if (std::abs(inc.back()) == 0.0 && std::abs(inc[inc.size() - 2]) == 0.0)
            probe.converged = true;
    }
    return probe;
}

} // namespace mvks
