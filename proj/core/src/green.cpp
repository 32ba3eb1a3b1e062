#include "ilt/green.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ilt/parallel.hpp"
#include "ilt/quadrature.hpp"
#include "ilt/rng.hpp"
#include "ilt/specfun.hpp"
#include "ilt/subordinator.hpp"

namespace ilt::green {

namespace {

constexpr std::uint64_t kPilotBase = 1ULL << 40;
constexpr double kStepCap = 2e7;          // hard per-path step cap
constexpr double kBudgetCap = 6e9;        // predicted total steps triggering BudgetError

// int_0^w s^{beta/2 - 1} (1+s)^{-1/2} ds. The endpoint singularity on
// (0, 1] is removed by u = s^{beta/2}; the remainder is smooth and handled
// adaptively.
double incomplete_interval_integral(double beta, double w) {
    if (w <= 0.0) return 0.0;
    const double half_beta = 0.5 * beta;
    const double head_end = std::min(w, 1.0);
    const auto head = [&](double u) {
        const double s = std::pow(u, 1.0 / half_beta);
        return std::pow(1.0 + s, -0.5) / half_beta;
    };
    double total = quad::integrate(head, 0.0, std::pow(head_end, half_beta), 1e-11).value;
    if (w > 1.0) {
        const auto tail = [&](double s) {
            return std::pow(s, half_beta - 1.0) / std::sqrt(1.0 + s);
        };
        total += quad::integrate(tail, 1.0, w, 1e-11, 0.0, 20000).value;
    }
    return total;
}

}  // namespace

double green_stable_interval(double alpha2, double x, double y) {
    if (!(alpha2 > 0.0 && alpha2 < 2.0))
        throw std::invalid_argument("green_stable_interval: alpha2 must be in (0, 2)");
    if (!(std::fabs(x) < 1.0 && std::fabs(y) < 1.0))
        throw std::domain_error("green_stable_interval: x, y must lie in (-1, 1)");
    const double kappa =
        std::pow(2.0, -alpha2) / std::pow(specfun::gamma_fn(0.5 * alpha2), 2.0);
    if (x == y) {
        if (alpha2 <= 1.0)
            throw std::domain_error("green_stable_interval: diagonal is singular for alpha2 <= 1");
        // Limit y -> x: G = kappa * 2/(alpha2-1) * (1-x^2)^{alpha2-1}.
        return kappa * 2.0 / (alpha2 - 1.0) * std::pow(1.0 - x * x, alpha2 - 1.0);
    }
    const double dist2 = (x - y) * (x - y);
    const double w = (1.0 - x * x) * (1.0 - y * y) / dist2;
    return kappa * std::pow(dist2, 0.5 * (alpha2 - 1.0)) * incomplete_interval_integral(alpha2, w);
}

GreenEstimate green_mc_estimate(StableIndex alpha, Mass m, double x,
                                std::span<const double> bin_edges, long n_paths, double grid_gap,
                                int workers, std::uint64_t master_seed) {
    if (!(std::fabs(x) < 1.0))
        throw std::invalid_argument("green_mc_estimate: source x must lie in (-1, 1)");
    if (n_paths < 1000) throw std::invalid_argument("green_mc_estimate: need n_paths >= 10^3");
    if (!(grid_gap > 0.0)) throw std::invalid_argument("green_mc_estimate: grid_gap must be > 0");
    if (bin_edges.size() < 2) throw std::invalid_argument("green_mc_estimate: need >= 1 bin");
    for (std::size_t i = 1; i < bin_edges.size(); ++i)
        if (!(bin_edges[i] > bin_edges[i - 1]))
            throw std::invalid_argument("green_mc_estimate: bin edges must be increasing");

    const std::size_t n_bins = bin_edges.size() - 1;
    const double ca = specfun::c_alpha(alpha);
    // Occupation weight per interior grid point, in the standard stable clock.
    const double weight = ca * grid_gap;

    auto run_path = [&](RngStream& rng, std::vector<double>& occupation, bool& capped) {
        std::fill(occupation.begin(), occupation.end(), 0.0);
        double pos = x;
        long steps = 0;
        while (std::fabs(pos) < 1.0) {
            if (++steps > static_cast<long>(kStepCap)) {
                capped = true;
                break;
            }
            const auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), pos);
            if (it != bin_edges.begin() && it != bin_edges.end()) {
                const std::size_t bin = static_cast<std::size_t>(it - bin_edges.begin()) - 1;
                occupation[bin] += weight;
            }
            const double ds = (m.value == 0.0)
                                  ? subordinator::sample_stable(alpha, grid_gap, rng)
                                  : subordinator::sample_relativistic(alpha, m, grid_gap, rng);
            pos += std::sqrt(2.0 * ds) * rng.normal();
        }
        return steps;
    };

    // Pilot: predict the total step budget before committing.
    {
        double pilot_steps = 0.0;
        std::vector<double> occupation(n_bins);
        bool capped = false;
        for (int p = 0; p < 64; ++p) {
            RngStream rng = RngStream::derive(master_seed, kPilotBase + p);
            pilot_steps += static_cast<double>(run_path(rng, occupation, capped));
        }
        const double predicted = pilot_steps / 64.0 * static_cast<double>(n_paths);
        if (capped || predicted > kBudgetCap)
            throw BudgetError("green_mc_estimate: predicted step count exceeds runtime cap");
    }

    // Chunked accumulation: path -> chunk assignment is by index, so the
    // merge is identical for every worker count.
    const std::size_t n_chunks = 512;
    std::vector<std::vector<double>> chunk_sum(n_chunks, std::vector<double>(n_bins, 0.0));
    std::vector<std::vector<double>> chunk_sumsq(n_chunks, std::vector<double>(n_bins, 0.0));
    const std::size_t per_chunk =
        (static_cast<std::size_t>(n_paths) + n_chunks - 1) / n_chunks;

    parallel_tasks(n_chunks, workers, [&](std::size_t chunk) {
        std::vector<double> occupation(n_bins);
        const std::size_t begin = chunk * per_chunk;
        const std::size_t end =
            std::min(begin + per_chunk, static_cast<std::size_t>(n_paths));
        for (std::size_t p = begin; p < end; ++p) {
            RngStream rng = RngStream::derive(master_seed, p);
            bool capped = false;
            run_path(rng, occupation, capped);
            for (std::size_t b = 0; b < n_bins; ++b) {
                chunk_sum[chunk][b] += occupation[b];
                chunk_sumsq[chunk][b] += occupation[b] * occupation[b];
            }
        }
    });

    GreenEstimate est;
    est.x = x;
    est.bins.assign(bin_edges.begin(), bin_edges.end());
    est.values.resize(n_bins);
    est.stderrs.resize(n_bins);
    est.n_paths = n_paths;
    const double n = static_cast<double>(n_paths);
    for (std::size_t b = 0; b < n_bins; ++b) {
        double sum = 0.0, sumsq = 0.0;
        for (std::size_t chunk = 0; chunk < n_chunks; ++chunk) {
            sum += chunk_sum[chunk][b];
            sumsq += chunk_sumsq[chunk][b];
        }
        const double width = bin_edges[b + 1] - bin_edges[b];
        const double mean = sum / n;
        const double var = std::max(0.0, sumsq / n - mean * mean);
        est.values[b] = mean / width;
        est.stderrs[b] = std::sqrt(var / n) / width;
    }
    return est;
}

GreenRatioReport green_ratio_report(const GreenEstimate& est, double alpha2, double c_cap) {
    GreenRatioReport report;
    report.min_ratio = std::numeric_limits<double>::infinity();
    report.max_ratio = 0.0;
    bool any = false;
    for (std::size_t b = 0; b + 1 < est.bins.size(); ++b) {
        const double center = 0.5 * (est.bins[b] + est.bins[b + 1]);
        if (std::fabs(center) > 0.9) continue;                // boundary exclusion
        if (std::fabs(center - est.x) < 0.1) continue;        // diagonal exclusion
        const double reference = green_stable_interval(alpha2, est.x, center);
        if (!(reference > 0.0)) continue;
        const double ratio = est.values[b] / reference;
        report.min_ratio = std::min(report.min_ratio, ratio);
        report.max_ratio = std::max(report.max_ratio, ratio);
        any = true;
    }
    if (!any) {
        report.min_ratio = 0.0;
        return report;
    }
    report.ok = report.min_ratio >= 1.0 / c_cap && report.max_ratio <= c_cap;
    return report;
}

}  // namespace ilt::green
