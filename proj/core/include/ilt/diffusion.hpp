#ifndef ILT_DIFFUSION_HPP
#define ILT_DIFFUSION_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ilt/rng.hpp"
#include "ilt/subordinator.hpp"
#include "ilt/types.hpp"

namespace ilt::diffusion {

/// Drift b(x) of a reflected diffusion on [0, infinity) with diffusion
/// coefficient a(x) = 1/2 throughout.
///
///   Bessel:             (1-2 alpha)/(2x)
///   RelativisticBessel: (1-2 alpha)/(2x) + rho'_m/rho_m (strictly smaller)
///   Perturbed:          (1-2 alpha)/(2x) - f(x), 0 <= f <= c1 (1 ^ x)^{2 alpha - 1}
///
/// The perturbation envelope is verified by spot-sampling f at 10^3
/// log-spaced points on construction.
class DriftField {
public:
    enum class Kind { Bessel, RelativisticBessel, Perturbed };

    static DriftField bessel(StableIndex alpha);
    static DriftField relativistic_bessel(StableIndex alpha, Mass m);
    static DriftField perturbed(StableIndex alpha, std::function<double(double)> f, double c1);

    /// Drift value at x > 0 (singular at 0; simulators clamp their argument).
    double operator()(double x) const;

    Kind kind() const { return kind_; }
    double alpha() const { return alpha_; }
    double mass() const { return mass_; }
    double c1() const { return c1_; }

private:
    DriftField() = default;

    Kind kind_ = Kind::Bessel;
    double alpha_ = 0.5;
    double mass_ = 0.0;
    double c1_ = 0.0;
    std::function<double(double)> f_;
};

/// A reflected trajectory on a uniform grid: values[k] ~ X_{k dt}, all >= 0.
struct SamplePath {
    double dt = 0.0;
    std::vector<double> values;
    double x0 = 0.0;
    std::uint64_t seed = 0;
};

/// Euler-Maruyama with reflection by absolute value:
///   X_{k+1} = | X_k + b(X_k v x_floor) dt + sqrt(dt) xi_k |,
/// x_floor = sqrt(dt). Throws when dt * sup|b| exceeds the sqrt(dt) stability
/// cap on [x_floor, max(10, 2 x0)].
SamplePath simulate_reflected(const DriftField& field, double x0, double T, double dt,
                              RngStream& rng, std::uint64_t seed_label = 0);

/// Grid skeleton of the reflected Bessel process of index alpha, exact in
/// distribution at the grid times: the squared process is advanced by its
/// exact squared-Bessel transition of dimension delta = 2 - 2 alpha, sampled
/// as the gamma-Poisson mixture of the scaled noncentral chi-square.
SamplePath simulate_bessel_exact(StableIndex alpha, double x0, double T, double dt, RngStream& rng,
                                 std::uint64_t seed_label = 0);

struct CoupledResult {
    SamplePath lower, upper;
    double violation_fraction = 0.0;  // grid points with lower > upper
};

/// Two reflected diffusions driven by one Brownian path. Requires the drifts
/// to be ordered (spot-checked). Coupled runs reflect by projection to 0
/// rather than by |.|: the projection is monotone in the pre-reflection
/// value, which carries the drift ordering through every step, whereas |.|
/// reverses near-zero pairs at joint reflections often enough to break the
/// 1e-3 ordering budget.
CoupledResult simulate_coupled(const DriftField& lower_field, const DriftField& upper_field,
                               double x0, double T, double dt, RngStream& rng);

/// epsilon-resolution local time at 0: L(t) = gauge * D_t(epsilon), where
/// D counts completed downcrossings of the band [0, epsilon] (descents from
/// above epsilon to below epsilon/2; the half-band hysteresis keeps grid
/// chatter at the band edge from registering as crossings).
struct LocalTimeEstimate {
    double epsilon = 0.0;
    double gauge = 1.0;
    double dt = 0.0;
    std::size_t n_steps = 0;
    std::vector<std::uint32_t> completion_steps;  // nondecreasing grid indices
    std::vector<double> excursion_durations;      // completed above-band excursions
    std::vector<bool> zero_set_mask;              // value <= epsilon per grid point

    double total() const { return gauge * static_cast<double>(completion_steps.size()); }
};

/// Shared gauge calibration: simulates reference reflected Brownian paths
/// and fixes gauge(epsilon) so that gauge * E[D_T(epsilon)] equals the
/// Tanaka-normalized E L_T = sqrt(2T/pi). Every cross-process comparison
/// must reuse one calibrated (epsilon, gauge, dt) triple.
double calibrate_gauge(double epsilon, double dt, double T, int n_paths,
                       std::uint64_t master_seed);

/// Requires epsilon >= 3 sqrt(dt) (resolution guard).
LocalTimeEstimate local_time(const SamplePath& path, double epsilon, double gauge);

struct InverseLocalTime {
    std::vector<double> levels;
    std::vector<double> times;  // S(level), right-continuous generalized inverse
};

/// S(t) = inf{s : L(s) > t} on the grid. Throws for levels >= L(T).
InverseLocalTime inverse_local_time(const LocalTimeEstimate& L, std::span<const double> levels);

/// Normalization-free Laplace exponent ratios phi_hat(lambda)/phi_hat(ref)
/// with phi_hat(lambda) = -(1/t) log mean(exp(-lambda S_t)). Invariant under
/// rescaling of the local-time gauge. Requires >= 10^3 draws.
std::vector<double> empirical_laplace_ratio(const subordinator::SubordinatorSample& samples,
                                            std::span<const double> lambdas, double lambda_ref);

/// Excursion-duration tail counts aggregated over paths sharing one gauge.
struct ExcursionAggregate {
    std::vector<double> durations;
    double total_local_time = 0.0;

    void absorb(const LocalTimeEstimate& estimate);
};

/// nu_hat((s, infinity)) = #{excursions longer than s} / total local time,
/// nonincreasing in s. Throws when fewer than 50 excursions exceed the
/// smallest s.
std::vector<double> excursion_tail_estimate(const LocalTimeEstimate& estimate,
                                            std::span<const double> s_grid);
std::vector<double> excursion_tail_estimate(const ExcursionAggregate& aggregate,
                                            std::span<const double> s_grid);

/// Smallest m with c1 <= min(sqrt(2m), m^alpha Gamma(1-alpha)/(2^{alpha-1}
/// Gamma(alpha))) by bisection, then doubled until the pointwise domination
/// c1 (1 ^ x)^{2 alpha - 1} <= -rho'_m/rho_m holds on a 10^3-point log grid
/// (the asymptotic constraints alone do not control intermediate x).
Mass mass_from_c1(StableIndex alpha, double c1);

/// Numeric upper bound for sup_x E_x int_0^T f(X_t^{(alpha)})^2 dt with
/// f <= c1 (1 ^ x)^{2 alpha - 1}: c1^2 T for alpha >= 1/2, otherwise
/// c1^2 (T + sup_x int_0^1 int_0^T p^{(alpha)}(t,x,y) y^{4 alpha - 2}
/// m^{(alpha)}(dy) dt) by double quadrature over a log grid in x.
/// Returns +infinity if the quadrature fails to converge.
double girsanov_condition_bound(StableIndex alpha, double c1, double T);

/// max over x_grid of |(1/2) rho'' + ((1-2 alpha)/(2x)) rho' - m rho| / (m rho),
/// derivatives by 5-point central differences with h = 1e-4.
double rho_ode_residual(StableIndex alpha, Mass m, std::span<const double> x_grid);

// ---------------------------------------------------------------------------
// Experiment pipelines (streaming; paths are not materialized)

/// Coupled three-process sandwich run: relativistic(alpha, m) <= perturbed
/// (envelope f = c1 (1 ^ x)^{2 alpha - 1}) <= Bessel(alpha), all driven by
/// one Brownian path, with inverse local times read off at a common level.
struct SandwichExperimentResult {
    double mass = 0.0;
    double level = 0.0;
    double order_violation_fraction = 0.0;      // worst of the two adjacent pairs
    double inclusion_violation_fraction = 0.0;  // zero-set inclusion, worst pair
    std::size_t dropped_runs = 0;               // runs not reaching the level
    subordinator::SubordinatorSample s_relativistic, s_perturbed, s_stable;
};

SandwichExperimentResult run_sandwich_experiment(StableIndex alpha, double c1, double T, double dt,
                                                 double epsilon, double gauge,
                                                 double level_fraction, std::size_t n_runs,
                                                 int workers, std::uint64_t master_seed);

/// Inverse-local-time draws at a common level from independent paths of one
/// field (exact Bessel skeleton or Euler of the given drift field).
struct PathLaplaceResult {
    subordinator::SubordinatorSample sample;
    std::size_t dropped_runs = 0;
    double level = 0.0;
};

PathLaplaceResult sample_inverse_local_time_exact(StableIndex alpha, double T, double dt,
                                                  double epsilon, double gauge,
                                                  double level_fraction, std::size_t n_paths,
                                                  int workers, std::uint64_t master_seed);

PathLaplaceResult sample_inverse_local_time_euler(const DriftField& field, double T, double dt,
                                                  double epsilon, double gauge,
                                                  double level_fraction, std::size_t n_paths,
                                                  int workers, std::uint64_t master_seed);

/// Aggregated excursion statistics from Euler paths of one field.
ExcursionAggregate collect_excursions(const DriftField& field, double T, double dt, double epsilon,
                                      double gauge, std::size_t n_paths, int workers,
                                      std::uint64_t master_seed);

}  // namespace ilt::diffusion

#endif
