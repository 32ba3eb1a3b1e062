#ifndef ILT_QUADRATURE_HPP
#define ILT_QUADRATURE_HPP

#include <functional>

namespace ilt::quad {

struct Result {
    double value = 0.0;
    double error = 0.0;   // estimated absolute error
    long evaluations = 0;
    bool converged = false;
};

/// Adaptive Gauss-Kronrod (G7/K15) on a finite interval. Subdivides the
/// interval with the largest error estimate until the requested tolerance
/// max(abs_tol, rel_tol * |I|) is met.
Result integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-10, double abs_tol = 0.0, int max_intervals = 4000);

/// Integral over [a, infinity) by geometric panel doubling with tail
/// truncation: panels [b, 2b] are accumulated until two consecutive panels
/// contribute below tolerance. Suited to integrands with exponential or
/// power-law decay faster than 1/t.
Result integrate_to_inf(const std::function<double(double)>& f, double a,
                        double rel_tol = 1e-10, double abs_tol = 0.0, int max_panels = 220);

}  // namespace ilt::quad

#endif
