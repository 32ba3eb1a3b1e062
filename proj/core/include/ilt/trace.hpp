#ifndef ILT_TRACE_HPP
#define ILT_TRACE_HPP

#include <span>
#include <vector>

#include "ilt/rng.hpp"
#include "ilt/subordinator.hpp"
#include "ilt/types.hpp"

namespace ilt::trace {

/// Radial Levy density of the subordinate Brownian motion B_{S_t} at |x| = r:
///   mu(r) = int_0^infty (4 pi t)^{-d/2} exp(-r^2/(4t)) nu(t) dt,
/// the heat-kernel convention matching a Brownian motion with variance 2t.
/// Adaptive quadrature split at t* = r^2/4, with the substitution
/// s = r^2/(4t) on the small-t side; relative error <= 1e-6.
double subordinated_levy_density(const subordinator::LevyDensity& nu, int d, double r,
                                 double rel_tol = 1e-9);

/// j(r) = mu^(alpha)(r) - mu(r) for the stable/relativistic pair: the
/// subordinated density of the difference c_alpha t^{-1-alpha}(1 - e^{-mt}).
/// Nonnegative and nonincreasing on (0, 1].
double j_difference(StableIndex alpha, Mass m, int d, double r, double rel_tol = 1e-9);

struct JBoundReport {
    bool ok = false;
    double c_effective = 0.0;       // sup over the grid of j(r) r^{d + 2 alpha - 2}
    double refinement_delta = 0.0;  // relative change under grid refinement
};

/// Rate check for j <= C r^{2 - 2 alpha - d} on r_grid in (0, 1]: reports
/// the empirical constant and whether it is finite and stable (within 1%)
/// when the grid is refined by log-midpoint insertion.
JBoundReport j_bound_check(StableIndex alpha, Mass m, int d, std::span<const double> r_grid);

/// Positions B_{S_{t_k}} of the d-dimensional trace path on the given
/// local-time grid: subordinator increments are drawn exactly per gap and
/// the Brownian coordinates advance with variance 2 * dS each.
/// positions[c][k] is coordinate c at grid index k.
std::vector<std::vector<double>> sample_trace_path(StableIndex alpha, Mass m, int d,
                                                   std::span<const double> t_grid, RngStream& rng);

/// Radial Levy density of a trace process, bundled with its dimension.
struct TraceLevyDensity {
    int dimension;
    subordinator::LevyDensity nu;

    double eval(double r) const { return subordinated_levy_density(nu, dimension, r); }
};

}  // namespace ilt::trace

#endif
