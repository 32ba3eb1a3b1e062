#ifndef ILT_GREEN_HPP
#define ILT_GREEN_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "ilt/types.hpp"

namespace ilt::green {

/// Green function of the symmetric stable process of order alpha2 in (0, 2),
/// normalized to characteristic exponent |xi|^{alpha2}, on D = (-1, 1):
///   G(x, y) = kappa |x-y|^{alpha2 - 1} int_0^w s^{alpha2/2 - 1} (1+s)^{-1/2} ds,
/// w = (1-x^2)(1-y^2)/(x-y)^2, kappa = 2^{-alpha2} / Gamma(alpha2/2)^2.
/// Symmetric, vanishing at the boundary. The diagonal is finite only for
/// alpha2 > 1 (computed as its limit); for alpha2 <= 1 a diagonal evaluation
/// throws.
double green_stable_interval(double alpha2, double x, double y);

/// Monte Carlo occupation-density estimate of the Green function of the
/// trace process B_{S_t} on D = (-1, 1), from source x.
struct GreenEstimate {
    double x = 0.0;
    std::vector<double> bins;     // cell edges, increasing
    std::vector<double> values;   // occupation per unit length per path
    std::vector<double> stderrs;  // per-bin standard errors
    long n_paths = 0;
};

/// Simulates trace paths on a subordinator grid of gap `grid_gap`, kills at
/// the first grid point outside D, and accumulates occupation time per bin.
/// Occupation is accumulated in the standard stable clock (c_alpha per unit
/// of subordinator time), which makes the m = 0 estimate directly comparable
/// to green_stable_interval. Throws BudgetError when a pilot run predicts
/// more steps than the runtime cap.
GreenEstimate green_mc_estimate(StableIndex alpha, Mass m, double x,
                                std::span<const double> bin_edges, long n_paths, double grid_gap,
                                int workers, std::uint64_t master_seed);

struct GreenRatioReport {
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    bool ok = false;
};

/// Min/max of estimate / closed form over interior bins (at least 0.1 from
/// the boundary and from the source point); ok iff both lie in
/// [1/c_cap, c_cap].
GreenRatioReport green_ratio_report(const GreenEstimate& est, double alpha2, double c_cap = 3.0);

}  // namespace ilt::green

#endif
