#pragma once

#include <functional>
#include <vector>

namespace mvks {

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    bool converged = false;
};

using ScalarFunction = std::function<double(double)>;

/// Globally adaptive Gauss-Kronrod (7/15) on a finite interval: the segment
/// with the largest error estimate is bisected until the summed estimate meets
/// max(abs_tol, rel_tol |I|) or the segment budget runs out.
QuadratureResult integrate_adaptive(const ScalarFunction& f, double a, double b,
                                    double abs_tol = 1e-12, double rel_tol = 1e-10,
                                    int max_segments = 4000);

/// Tanh-sinh quadrature. Tolerates integrable endpoint singularities; f is
/// never evaluated exactly at a or b. The second argument passed to f is the
/// distance to the nearer endpoint, which stays accurate where x itself
/// rounds onto the endpoint.
QuadratureResult integrate_tanh_sinh(const std::function<double(double, double)>& f, double a,
                                     double b, double rel_tol = 1e-10, int max_level = 12);

QuadratureResult integrate_tanh_sinh(const ScalarFunction& f, double a, double b,
                                     double rel_tol = 1e-10, int max_level = 12);

/// Convergence probe for int_0^T f(t) dt with a possibly non-integrable
/// singularity at 0: integrates over [eps, T] for eps = T 10^-j and watches
/// the increments between decades.
struct SingularIntegralProbe {
    double value = 0.0;
    bool converged = false;
    std::vector<double> increments;
    double last_ratio = 0.0;
};

SingularIntegralProbe probe_singular_integral(const ScalarFunction& f, double T,
                                              int decades = 10);

} // namespace mvks
