#include "ilt/trace.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ilt/quadrature.hpp"
#include "ilt/specfun.hpp"

namespace ilt::trace {

namespace {
constexpr double kPi = 3.14159265358979323846264338328;
}

double subordinated_levy_density(const subordinator::LevyDensity& nu, int d, double r,
                                 double rel_tol) {
    if (!(r > 0.0)) throw std::domain_error("subordinated_levy_density: requires r > 0");
    if (d < 1) throw std::invalid_argument("subordinated_levy_density: requires d >= 1");
    const double half_d = 0.5 * d;
    const double r2 = r * r;
    const double t_star = 0.25 * r2;

    // t in (0, t*]: substitute s = r^2/(4t), mapping to s in [1, infinity)
    // with an e^{-s} factor that kills the heat kernel's essential
    // singularity at t = 0.
    const auto small_t = [&](double s) {
        const double t = r2 / (4.0 * s);
        return std::pow(kPi * r2 / s, -half_d) * std::exp(-s) * nu(t) * r2 / (4.0 * s * s);
    };
    const auto lower = quad::integrate_to_inf(small_t, 1.0, rel_tol, 0.0);

    // t in [t*, infinity): direct, with geometric tail truncation.
    const auto large_t = [&](double t) {
        return std::pow(4.0 * kPi * t, -half_d) * std::exp(-r2 / (4.0 * t)) * nu(t);
    };
    const auto upper = quad::integrate_to_inf(large_t, t_star, rel_tol, 0.0);

    if (!lower.converged || !upper.converged)
        throw std::runtime_error("subordinated_levy_density: quadrature failed to converge");
    return lower.value + upper.value;
}

double j_difference(StableIndex alpha, Mass m, int d, double r, double rel_tol) {
    if (m.value == 0.0) return 0.0;
    const auto diff = subordinator::LevyDensity::difference(
        subordinator::LevyDensity::stable(alpha),
        subordinator::LevyDensity::relativistic(alpha, m));
    return subordinated_levy_density(diff, d, r, rel_tol);
}

JBoundReport j_bound_check(StableIndex alpha, Mass m, int d, std::span<const double> r_grid) {
    if (r_grid.empty()) throw std::invalid_argument("j_bound_check: empty grid");
    std::vector<double> grid(r_grid.begin(), r_grid.end());
    std::sort(grid.begin(), grid.end());
    if (!(grid.front() > 0.0) || grid.back() > 1.0)
        throw std::invalid_argument("j_bound_check: grid must lie in (0, 1]");

    const double exponent = d + 2.0 * alpha.value - 2.0;
    auto scaled = [&](double r) { return j_difference(alpha, m, d, r) * std::pow(r, exponent); };

    double coarse = 0.0;
    for (double r : grid) coarse = std::max(coarse, scaled(r));

    // Refine by log-midpoint insertion between the same endpoints.
    double fine = coarse;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        fine = std::max(fine, scaled(std::sqrt(grid[i] * grid[i + 1])));

    JBoundReport report;
    report.c_effective = fine;
    report.refinement_delta = (fine > 0.0) ? (fine - coarse) / fine : 0.0;
    report.ok = std::isfinite(fine) && report.refinement_delta < 0.01;
    return report;
}

std::vector<std::vector<double>> sample_trace_path(StableIndex alpha, Mass m, int d,
                                                   std::span<const double> t_grid,
                                                   RngStream& rng) {
    if (d < 1) throw std::invalid_argument("sample_trace_path: requires d >= 1");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1]))
            throw std::invalid_argument("sample_trace_path: t_grid must be increasing");

    std::vector<std::vector<double>> positions(d, std::vector<double>(t_grid.size(), 0.0));
    if (t_grid.empty()) return positions;

    double prev_t = 0.0;
    std::vector<double> pos(d, 0.0);
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
        const double gap = t_grid[k] - prev_t;
        prev_t = t_grid[k];
        if (gap > 0.0) {
            const double ds = (m.value == 0.0) ? subordinator::sample_stable(alpha, gap, rng)
                                               : subordinator::sample_relativistic(alpha, m, gap, rng);
            const double step_sd = std::sqrt(2.0 * ds);  // Brownian variance 2t convention
            for (int c = 0; c < d; ++c) pos[c] += step_sd * rng.normal();
        }
        for (int c = 0; c < d; ++c) positions[c][k] = pos[c];
    }
    return positions;
}

}  // namespace ilt::trace
