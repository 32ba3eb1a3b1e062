#ifndef ILT_SUBORDINATOR_HPP
#define ILT_SUBORDINATOR_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "ilt/rng.hpp"
#include "ilt/types.hpp"

namespace ilt::subordinator {

/// Laplace exponent phi(lambda) of a driftless, killing-free subordinator:
/// E exp(-lambda S_t) = exp(-t phi(lambda)).
///
/// Closed forms: Stable has phi = c_alpha lambda^alpha, Relativistic has
/// phi = c_alpha ((lambda+m)^alpha - m^alpha). An Esscher shift by mass m
/// maps phi to phi(. + m) - phi(m); on the closed forms the shift composes
/// structurally (stable -> relativistic, relativistic masses add), so the
/// composition identity holds to the last bit.
class LaplaceExponent {
public:
    enum class Kind { Stable, Relativistic, EsscherShifted, Empirical };

    static LaplaceExponent stable(StableIndex alpha);
    static LaplaceExponent relativistic(StableIndex alpha, Mass m);
    /// Tabulated exponent; interpolated piecewise-linearly in log(lambda).
    /// The grid must be strictly increasing and positive, the values
    /// nonnegative, nondecreasing and concave.
    static LaplaceExponent empirical(std::vector<double> lambda_grid,
                                     std::vector<double> phi_values);

    /// phi(lambda), lambda >= 0. Throws std::domain_error when an empirical
    /// exponent is evaluated outside its grid.
    double operator()(double lambda) const;

    Kind kind() const { return kind_; }
    double alpha() const { return alpha_; }
    double mass() const { return mass_; }

    friend LaplaceExponent esscher(const LaplaceExponent& phi, Mass m);

private:
    LaplaceExponent() = default;

    Kind kind_ = Kind::Stable;
    double alpha_ = 0.5;
    double mass_ = 0.0;   // total Esscher shift for closed forms
    std::shared_ptr<const LaplaceExponent> base_;  // EsscherShifted over Empirical
    std::vector<double> log_lambda_, phi_values_;
};

/// Esscher transform of the exponent: phi^(m)(lambda) = phi(lambda + m) - phi(m).
LaplaceExponent esscher(const LaplaceExponent& phi, Mass m);

/// Levy density nu(t) on (0, infinity). Stable: c_alpha t^{-1-alpha};
/// Relativistic: c_alpha t^{-1-alpha} e^{-mt}; Difference evaluates a - b
/// pointwise (possibly negative, callers decide).
class LevyDensity {
public:
    enum class Kind { Stable, Relativistic, Difference };

    static LevyDensity stable(StableIndex alpha);
    static LevyDensity relativistic(StableIndex alpha, Mass m);
    static LevyDensity difference(LevyDensity a, LevyDensity b);

    double operator()(double t) const;

    /// Tail mass nu((s, infinity)), s > 0, by closed form for the stable
    /// density and adaptive quadrature otherwise (relative error <= 1e-8).
    double tail(double s) const;

    Kind kind() const { return kind_; }
    double alpha() const { return alpha_; }
    double mass() const { return mass_; }

private:
    LevyDensity() = default;

    Kind kind_ = Kind::Stable;
    double alpha_ = 0.5;
    double mass_ = 0.0;
    std::shared_ptr<const LevyDensity> a_, b_;
};

/// A batch of inverse-local-time draws at a fixed local-time level t.
struct SubordinatorSample {
    double t = 1.0;
    std::vector<double> draws;
    std::uint64_t seed = 0;
};

/// One draw of S_t for the alpha-stable subordinator normalized to
/// E exp(-lambda S_t) = exp(-t c_alpha lambda^alpha).
///
/// Kanter's representation: S = (A(U)/E)^((1-alpha)/alpha) with U uniform,
/// E exponential, has E exp(-lambda S) = exp(-lambda^alpha); the draw is then
/// scaled by (c_alpha t)^{1/alpha}.
double sample_stable(StableIndex alpha, double t, RngStream& rng);

/// One draw of S_t for the relativistic alpha-stable subordinator with mass
/// m, by exponential-tilting rejection: propose stable, accept with
/// probability e^{-m S}. Expected acceptance rate is exp(-t c_alpha m^alpha);
/// throws BudgetError when that rate falls below 1e-6.
double sample_relativistic(StableIndex alpha, Mass m, double t, RngStream& rng);

struct CmReport {
    bool ok = true;
    double worst_violation = 0.0;   // most negative (-1)^k-signed divided difference, clipped at 0
    int first_violation_order = -1;
};

/// Checks complete monotonicity on a grid: (-1)^k Delta^k f >= -tol for
/// k = 0..order, with Delta^k the forward divided differences and
/// tol = 1e-9 |f(grid[0])| + 1e-12.
CmReport complete_monotonicity_check(const std::function<double(double)>& f,
                                     std::span<const double> grid, int order);

/// Checks the Bernstein property (f >= 0 with completely monotone
/// derivative), the sense in which a difference of Laplace exponents of
/// ordered subordinators is "completely monotone": equivalently
/// (-1)^{k-1} Delta^k f >= -tol for k = 1..order and f >= -tol.
CmReport bernstein_check(const std::function<double(double)>& f,
                         std::span<const double> grid, int order);

struct DominanceReport {
    bool ok = false;
    double max_cdf_crossing = 0.0;  // sup_s (F_upper(s) - F_lower(s)), clipped at 0
    double ks_band = 0.0;           // one-sided 99% band
};

/// One-sided two-sample Kolmogorov-Smirnov dominance check: ok iff the
/// empirical CDF of `lower` dominates that of `upper` up to the one-sided
/// 99% band. Requires >= 100 draws on each side and equal levels t.
DominanceReport stochastic_dominance_check(const SubordinatorSample& lower,
                                           const SubordinatorSample& upper);

struct SandwichReport {
    bool ok = true;
    double worst_lower = 0.0;  // most negative margin on the lower inequality
    double worst_upper = 0.0;  // most negative margin on the upper inequality
};

/// Closed-form Levy sandwich: 0 <= nu^(alpha) - nu^(alpha,m) <=
/// c_alpha (1 - e^{-mt}) / t^{1+alpha} pointwise on t_grid (the right-hand
/// side is an identity for this pair).
SandwichReport levy_sandwich_check(StableIndex alpha, Mass m, std::span<const double> t_grid);

/// Empirical tail sandwich: nu^(alpha,m)((s,oo)) <= nu_hat((s,oo)) <=
/// nu^(alpha)((s,oo)) within the provided one-sided bands, after rescaling
/// nu_hat by a single constant fixed at the anchor (the geometric mean of
/// the two closed-form tails at the first grid point).
SandwichReport levy_sandwich_check_empirical(StableIndex alpha, Mass m,
                                             std::span<const double> s_grid,
                                             std::span<const double> tail_estimates,
                                             std::span<const double> tail_bands);

}  // namespace ilt::subordinator

#endif
