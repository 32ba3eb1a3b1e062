#include "ilt/subordinator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ilt/quadrature.hpp"
#include "ilt/specfun.hpp"

namespace ilt::subordinator {

namespace {
constexpr double kPi = 3.14159265358979323846264338328;
}

// ---------------------------------------------------------------------------
// LaplaceExponent

LaplaceExponent LaplaceExponent::stable(StableIndex alpha) {
    LaplaceExponent phi;
    phi.kind_ = Kind::Stable;
    phi.alpha_ = alpha.value;
    return phi;
}

LaplaceExponent LaplaceExponent::relativistic(StableIndex alpha, Mass m) {
    if (m.value == 0.0) return stable(alpha);
    LaplaceExponent phi;
    phi.kind_ = Kind::Relativistic;
    phi.alpha_ = alpha.value;
    phi.mass_ = m.value;
    return phi;
}

LaplaceExponent LaplaceExponent::empirical(std::vector<double> lambda_grid,
                                           std::vector<double> phi_values) {
    if (lambda_grid.size() != phi_values.size() || lambda_grid.size() < 2)
        throw std::invalid_argument("LaplaceExponent::empirical: need matching grids, size >= 2");
    for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
        if (!(lambda_grid[i] > 0.0))
            throw std::invalid_argument("LaplaceExponent::empirical: lambda grid must be positive");
        if (i > 0 && !(lambda_grid[i] > lambda_grid[i - 1]))
            throw std::invalid_argument(
                "LaplaceExponent::empirical: lambda grid must be strictly increasing");
        if (!(phi_values[i] >= 0.0))
            throw std::invalid_argument("LaplaceExponent::empirical: phi must be >= 0");
        if (i > 0 && phi_values[i] < phi_values[i - 1])
            throw std::invalid_argument("LaplaceExponent::empirical: phi must be nondecreasing");
    }
    // Concavity on the stored grid.
    for (std::size_t i = 2; i < lambda_grid.size(); ++i) {
        const double s1 = (phi_values[i - 1] - phi_values[i - 2]) /
                          (lambda_grid[i - 1] - lambda_grid[i - 2]);
        const double s2 =
            (phi_values[i] - phi_values[i - 1]) / (lambda_grid[i] - lambda_grid[i - 1]);
        if (s2 > s1 * (1.0 + 1e-9) + 1e-12)
            throw std::invalid_argument("LaplaceExponent::empirical: phi must be concave");
    }
    LaplaceExponent phi;
    phi.kind_ = Kind::Empirical;
    phi.log_lambda_.reserve(lambda_grid.size());
    for (double l : lambda_grid) phi.log_lambda_.push_back(std::log(l));
    phi.phi_values_ = std::move(phi_values);
    return phi;
}

double LaplaceExponent::operator()(double lambda) const {
    if (!(lambda >= 0.0)) throw std::domain_error("LaplaceExponent: requires lambda >= 0");
    switch (kind_) {
        case Kind::Stable:
            return specfun::c_alpha(StableIndex(alpha_)) * std::pow(lambda, alpha_);
        case Kind::Relativistic:
            return specfun::c_alpha(StableIndex(alpha_)) *
                   (std::pow(lambda + mass_, alpha_) - std::pow(mass_, alpha_));
        case Kind::EsscherShifted:
            return (*base_)(lambda + mass_) - (*base_)(mass_);
        case Kind::Empirical: {
            if (lambda == 0.0) return 0.0;
            const double ll = std::log(lambda);
            if (ll < log_lambda_.front() - 1e-12 || ll > log_lambda_.back() + 1e-12)
                throw std::domain_error("LaplaceExponent: lambda outside empirical grid");
            const auto it = std::upper_bound(log_lambda_.begin(), log_lambda_.end(), ll);
            std::size_t hi = std::min<std::size_t>(
                std::max<std::ptrdiff_t>(it - log_lambda_.begin(), 1), log_lambda_.size() - 1);
            const std::size_t lo = hi - 1;
            const double u = (ll - log_lambda_[lo]) / (log_lambda_[hi] - log_lambda_[lo]);
            return phi_values_[lo] + u * (phi_values_[hi] - phi_values_[lo]);
        }
    }
    return 0.0;
}

LaplaceExponent esscher(const LaplaceExponent& phi, Mass m) {
    if (m.value == 0.0) return phi;
    switch (phi.kind_) {
        case LaplaceExponent::Kind::Stable:
            return LaplaceExponent::relativistic(StableIndex(phi.alpha_), m);
        case LaplaceExponent::Kind::Relativistic:
            return LaplaceExponent::relativistic(StableIndex(phi.alpha_),
                                                 Mass(phi.mass_ + m.value));
        case LaplaceExponent::Kind::EsscherShifted: {
            LaplaceExponent out;
            out.kind_ = LaplaceExponent::Kind::EsscherShifted;
            out.base_ = phi.base_;
            out.mass_ = phi.mass_ + m.value;  // shifts compose additively
            return out;
        }
        case LaplaceExponent::Kind::Empirical: {
            LaplaceExponent out;
            out.kind_ = LaplaceExponent::Kind::EsscherShifted;
            out.base_ = std::make_shared<LaplaceExponent>(phi);
            out.mass_ = m.value;
            return out;
        }
    }
    return phi;
}

// ---------------------------------------------------------------------------
// LevyDensity

LevyDensity LevyDensity::stable(StableIndex alpha) {
    LevyDensity nu;
    nu.kind_ = Kind::Stable;
    nu.alpha_ = alpha.value;
    return nu;
}

LevyDensity LevyDensity::relativistic(StableIndex alpha, Mass m) {
    LevyDensity nu;
    nu.kind_ = Kind::Relativistic;
    nu.alpha_ = alpha.value;
    nu.mass_ = m.value;
    return nu;
}

LevyDensity LevyDensity::difference(LevyDensity a, LevyDensity b) {
    LevyDensity nu;
    nu.kind_ = Kind::Difference;
    nu.a_ = std::make_shared<LevyDensity>(std::move(a));
    nu.b_ = std::make_shared<LevyDensity>(std::move(b));
    return nu;
}

double LevyDensity::operator()(double t) const {
    if (!(t > 0.0)) throw std::domain_error("LevyDensity: requires t > 0");
    switch (kind_) {
        case Kind::Stable:
            return specfun::c_alpha(StableIndex(alpha_)) * std::pow(t, -1.0 - alpha_);
        case Kind::Relativistic:
            return specfun::c_alpha(StableIndex(alpha_)) * std::pow(t, -1.0 - alpha_) *
                   std::exp(-mass_ * t);
        case Kind::Difference:
            return (*a_)(t) - (*b_)(t);
    }
    return 0.0;
}

double LevyDensity::tail(double s) const {
    if (!(s > 0.0)) throw std::domain_error("LevyDensity::tail: diverges at s = 0");
    switch (kind_) {
        case Kind::Stable:
            // integral of c_alpha t^{-1-alpha} over (s, oo) = s^{-alpha}/Gamma(1-alpha)
            return std::pow(s, -alpha_) / specfun::gamma_fn(1.0 - alpha_);
        case Kind::Relativistic: {
            const auto f = [this](double t) { return (*this)(t); };
            const auto res = quad::integrate_to_inf(f, s, 1e-9, 0.0);
            return res.value;
        }
        case Kind::Difference:
            return a_->tail(s) - b_->tail(s);
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Exact samplers

double sample_stable(StableIndex alpha, double t, RngStream& rng) {
    if (!(t > 0.0)) throw std::domain_error("sample_stable: requires t > 0");
    const double a = alpha.value;
    const double u = rng.uniform();
    const double e = rng.exponential();
    // Kanter: log A(u) assembled in logs to stay finite near the endpoints.
    const double log_a = (a / (1.0 - a)) * std::log(std::sin(a * kPi * u)) +
                         std::log(std::sin((1.0 - a) * kPi * u)) -
                         (1.0 / (1.0 - a)) * std::log(std::sin(kPi * u));
    const double unit = std::exp(((1.0 - a) / a) * (log_a - std::log(e)));
    return std::pow(specfun::c_alpha(alpha) * t, 1.0 / a) * unit;
}

double sample_relativistic(StableIndex alpha, Mass m, double t, RngStream& rng) {
    if (!(t > 0.0)) throw std::domain_error("sample_relativistic: requires t > 0");
    if (m.value == 0.0) return sample_stable(alpha, t, rng);
    const double log_accept = -t * specfun::c_alpha(alpha) * std::pow(m.value, alpha.value);
    if (log_accept < std::log(1e-6))
        throw BudgetError("sample_relativistic: acceptance rate below 1e-6");
    for (;;) {
        const double s = sample_stable(alpha, t, rng);
        if (rng.uniform() <= std::exp(-m.value * s)) return s;
    }
}

// ---------------------------------------------------------------------------
// Checkers

namespace {

// Forward divided-difference tables row by row; row k holds f[x_i..x_{i+k}].
CmReport signed_difference_check(const std::function<double(double)>& f,
                                 std::span<const double> grid, int order, bool bernstein) {
    if (order < 0 || order > 6)
        throw std::invalid_argument("monotonicity check: order must be in [0, 6]");
    if (grid.size() < static_cast<std::size_t>(order) + 1)
        throw std::invalid_argument("monotonicity check: grid shorter than order + 1");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0) || (i > 0 && !(grid[i] > grid[i - 1])))
            throw std::invalid_argument(
                "monotonicity check: grid must be positive and strictly increasing");
    }
    std::vector<double> row(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) row[i] = f(grid[i]);
    const double tol = 1e-9 * std::fabs(row[0]) + 1e-12;

    CmReport report;
    auto scan = [&](int k, double sign) {
        for (std::size_t i = 0; i + k < grid.size(); ++i) {
            const double v = sign * row[i];
            if (v < -tol) {
                report.ok = false;
                if (report.first_violation_order < 0) report.first_violation_order = k;
                report.worst_violation = std::min(report.worst_violation, v);
            }
        }
    };
    // k = 0: f itself must be nonnegative in both conventions.
    scan(0, 1.0);
    for (int k = 1; k <= order; ++k) {
        for (std::size_t i = 0; i + k < grid.size(); ++i)
            row[i] = (row[i + 1] - row[i]) / (grid[i + k] - grid[i]);
        // Strict CM wants (-1)^k Delta^k f >= 0; the Bernstein variant wants
        // the derivative CM, i.e. (-1)^{k-1} Delta^k f >= 0 for k >= 1.
        const double sign = ((bernstein ? k - 1 : k) % 2 == 0) ? 1.0 : -1.0;
        scan(k, sign);
    }
    return report;
}

}  // namespace

CmReport complete_monotonicity_check(const std::function<double(double)>& f,
                                     std::span<const double> grid, int order) {
    return signed_difference_check(f, grid, order, false);
}

CmReport bernstein_check(const std::function<double(double)>& f, std::span<const double> grid,
                         int order) {
    return signed_difference_check(f, grid, order, true);
}

DominanceReport stochastic_dominance_check(const SubordinatorSample& lower,
                                           const SubordinatorSample& upper) {
    if (lower.draws.size() < 100 || upper.draws.size() < 100)
        throw std::invalid_argument("stochastic_dominance_check: need >= 100 draws per sample");
    if (lower.t != upper.t)
        throw std::invalid_argument("stochastic_dominance_check: samples at different levels");

    std::vector<double> lo(lower.draws), up(upper.draws);
    std::sort(lo.begin(), lo.end());
    std::sort(up.begin(), up.end());
    const double n = static_cast<double>(lo.size());
    const double m = static_cast<double>(up.size());

    // D- = sup_s (F_up(s) - F_lo(s)); dominance F_lo >= F_up means D- <= band.
    // Walk the merged order statistics.
    double crossing = 0.0;
    std::size_t i = 0, j = 0;
    while (i < lo.size() || j < up.size()) {
        double s;
        if (j >= up.size() || (i < lo.size() && lo[i] <= up[j]))
            s = lo[i++];
        else
            s = up[j++];
        while (i < lo.size() && lo[i] <= s) ++i;
        while (j < up.size() && up[j] <= s) ++j;
        crossing = std::max(crossing, static_cast<double>(j) / m - static_cast<double>(i) / n);
    }
    DominanceReport report;
    // One-sided KS at 99%: P(D- > c sqrt((n+m)/(nm))) ~ exp(-2 c^2) = 0.01.
    report.ks_band = std::sqrt(std::log(100.0) / 2.0) * std::sqrt((n + m) / (n * m));
    report.max_cdf_crossing = crossing;
    report.ok = crossing <= report.ks_band;
    return report;
}

SandwichReport levy_sandwich_check(StableIndex alpha, Mass m, std::span<const double> t_grid) {
    const LevyDensity nu_stable = LevyDensity::stable(alpha);
    const LevyDensity nu_rel = LevyDensity::relativistic(alpha, m);
    const double ca = specfun::c_alpha(alpha);
    SandwichReport report;
    for (double t : t_grid) {
        const double diff = nu_stable(t) - nu_rel(t);
        const double envelope = ca * (1.0 - std::exp(-m.value * t)) / std::pow(t, 1.0 + alpha.value);
        const double tol = 1e-12 + 1e-9 * envelope;
        if (diff < -tol) {
            report.ok = false;
            report.worst_lower = std::min(report.worst_lower, diff);
        }
        if (envelope - diff < -tol) {
            report.ok = false;
            report.worst_upper = std::min(report.worst_upper, envelope - diff);
        }
    }
    return report;
}

SandwichReport levy_sandwich_check_empirical(StableIndex alpha, Mass m,
                                             std::span<const double> s_grid,
                                             std::span<const double> tail_estimates,
                                             std::span<const double> tail_bands) {
    if (s_grid.size() != tail_estimates.size() || s_grid.size() != tail_bands.size() ||
        s_grid.empty())
        throw std::invalid_argument("levy_sandwich_check_empirical: mismatched grids");
    const LevyDensity nu_stable = LevyDensity::stable(alpha);
    const LevyDensity nu_rel = LevyDensity::relativistic(alpha, m);

    // The downcrossing gauge leaves one unknown multiplicative constant in
    // the empirical tails; pin it at the first grid point against the
    // geometric mean of the two closed-form tails.
    const double anchor_target =
        std::sqrt(nu_stable.tail(s_grid[0]) * std::max(nu_rel.tail(s_grid[0]), 1e-300));
    if (!(tail_estimates[0] > 0.0))
        throw std::invalid_argument("levy_sandwich_check_empirical: empty tail estimate at anchor");
    const double scale = anchor_target / tail_estimates[0];

    SandwichReport report;
    for (std::size_t i = 0; i < s_grid.size(); ++i) {
        const double est = scale * tail_estimates[i];
        const double band = scale * tail_bands[i];
        const double lower_margin = est - nu_rel.tail(s_grid[i]) + band;
        const double upper_margin = nu_stable.tail(s_grid[i]) - est + band;
        if (lower_margin < 0.0) {
            report.ok = false;
            report.worst_lower = std::min(report.worst_lower, lower_margin);
        }
        if (upper_margin < 0.0) {
            report.ok = false;
            report.worst_upper = std::min(report.worst_upper, upper_margin);
        }
    }
    return report;
}

}  // namespace ilt::subordinator
