#ifndef ILT_SPECFUN_HPP
#define ILT_SPECFUN_HPP

#include "ilt/types.hpp"

namespace ilt::specfun {

/// Gamma function by Lanczos approximation (Godfrey 15-term set), with the
/// reflection formula for x < 0.5. Relative error well below 1e-12 on
/// [0.01, 50]. Throws std::domain_error at the poles (non-positive integers).
double gamma_fn(double x);

/// log |Gamma(x)| for x > 0.
double log_gamma(double x);

/// c_alpha = alpha / Gamma(1 - alpha), the stable-subordinator constant.
double c_alpha(StableIndex alpha);

/// Modified Bessel function of the first kind I_nu(x), x > 0.
/// Power series below the regime switch point (x = 18), Hankel asymptotic
/// expansion above. Throws std::overflow_error once e^x is unrepresentable.
double bessel_i(BesselOrder nu, double x);

/// e^{-x} I_nu(x); safe for arbitrarily large x.
double bessel_i_scaled(BesselOrder nu, double x);

/// Modified Bessel function of the second kind K_nu(x), x > 0, K_{-nu} = K_nu.
///
/// Three regimes: the two-branch small-x expansion of
/// (pi/2)(I_{-nu} - I_nu)/sin(nu pi) for x <= 2 (near integer orders the
/// branches cancel, so the order is displaced by +-1e-4 and the two values
/// averaged), a Thompson-Barnett continued fraction for 2 < x <= 18, and the
/// large-x asymptotic expansion beyond.
double bessel_k(BesselOrder nu, double x);

/// e^{x} K_nu(x); safe for arbitrarily large x.
double bessel_k_scaled(BesselOrder nu, double x);

/// khat(x) = x^alpha K_alpha(x) for x > 0, extended by its finite limit
/// 2^{alpha-1} Gamma(alpha) at x = 0. Strictly decreasing.
double khat(StableIndex alpha, double x);

/// rho_m(x) = khat(alpha, sqrt(2m) x) / (2^{alpha-1} Gamma(alpha)), the
/// Laplace transform E_x[exp(-m T_0)] of the first hitting time of 0 for the
/// reflected Bessel process; normalized so rho_m(0) = 1, decreasing to 0.
double rho_m(StableIndex alpha, Mass m, double x);

/// rho_m'(x)/rho_m(x) = -sqrt(2m) K_{alpha-1}(sqrt(2m) x) / K_alpha(sqrt(2m) x).
/// Strictly negative for m > 0; identically -sqrt(2m) at alpha = 1/2.
double drift_ratio(StableIndex alpha, Mass m, double x);

enum class Regime { Zero, Infinity };

/// One-term asymptote of drift_ratio: coefficient * x^power.
struct DriftAsymptote {
    double coefficient;
    double power;

    double eval(double x) const;
};

/// Asymptote of rho'_m/rho_m: near zero the power law
/// -(m^alpha Gamma(1-alpha) / (2^{alpha-1} Gamma(alpha))) x^{2 alpha - 1},
/// near infinity the constant -sqrt(2m).
DriftAsymptote drift_ratio_asymptotic(StableIndex alpha, Mass m, Regime regime);

/// Transition density p(t, x, y) of the reflected Bessel process of index
/// alpha with respect to the speed measure m(dy) = 2 y^{1-2 alpha} dy:
///   p = (xy)^alpha / (2t) * exp(-(x^2+y^2)/(2t)) * I_{-alpha}(xy/t),
/// with the x -> 0 limit taken through the leading series term. Symmetric in
/// (x, y) and normalized to unit mass against the speed measure.
double bessel_transition_density(StableIndex alpha, double t, double x, double y);

/// Per-regime evaluators, exposed so the regime-consistency checks can
/// compare adjacent methods across their switch points.
namespace detail {
double bessel_i_series(double nu, double x);
double bessel_i_asymptotic_scaled(double nu, double x);
double bessel_k_small(double nu, double x);            // x <= ~2 branch expansion
double bessel_k_continued_fraction(double nu, double x);
double bessel_k_asymptotic_scaled(double nu, double x);
}  // namespace detail

}  // namespace ilt::specfun

#endif
