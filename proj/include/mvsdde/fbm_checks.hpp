#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mvsdde/core.hpp"
#include "mvsdde/fbm.hpp"

namespace mvsdde::fbm {

/// One statistical verdict: the largest deviation seen, in Monte Carlo
/// standard errors, against the band it must stay inside.
struct StatCheck {
    std::string name;
    double max_abs_z = 0.0;
    double bound = 0.0;
    bool pass = false;
};

inline StatCheck make_check(std::string name, double max_abs_z, double bound) {
    return {std::move(name), max_abs_z, bound, max_abs_z <= bound};
}

/// Every entry of the sample covariance matrix over the nonzero grid times
/// against R_H(s,t). The standard error of one entry uses the Gaussian
/// product-moment identity Var(B_s B_t) = R_ss R_tt + R_st^2.
inline StatCheck covariance_reproduction(const PathBatch& paths, double bound = 4.0) {
    const std::size_t n = paths.n_paths();
    const std::size_t m = paths.grid.n_steps;
    double worst = 0.0;
    for (std::size_t j = 1; j <= m; ++j)
        for (std::size_t k = j; k <= m; ++k) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += paths.values(i, j) * paths.values(i, k);
            const double est = acc / static_cast<double>(n);
            const double s = paths.grid.time(static_cast<std::ptrdiff_t>(j));
            const double t = paths.grid.time(static_cast<std::ptrdiff_t>(k));
            const double target = covariance(s, t, paths.hurst);
            const double var_ss = covariance(s, s, paths.hurst);
            const double var_tt = covariance(t, t, paths.hurst);
            const double se = std::sqrt((var_ss * var_tt + target * target) / static_cast<double>(n));
            worst = std::max(worst, std::abs(est - target) / se);
        }
    return make_check("covariance_reproduction", worst, bound);
}

/// Sample Var(B_t) against t^{2H} at every grid time.
inline StatCheck variance_law(const PathBatch& paths, double bound = 4.0) {
    const std::size_t n = paths.n_paths();
    const std::size_t m = paths.grid.n_steps;
    double worst = 0.0;
    for (std::size_t k = 1; k <= m; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += paths.values(i, k) * paths.values(i, k);
        const double est = acc / static_cast<double>(n);
        const double target = std::pow(paths.grid.time(static_cast<std::ptrdiff_t>(k)),
                                       2.0 * paths.hurst.value());
        const double se = std::sqrt(2.0 / static_cast<double>(n)) * target;
        worst = std::max(worst, std::abs(est - target) / se);
    }
    return make_check("variance_law", worst, bound);
}

namespace detail {

/// Per-path time-averaged lag-k product of increments; paths are iid, so
/// the Monte Carlo standard error across paths is honest.
inline void increment_product_stats(const PathBatch& paths, std::size_t lag, double& mean,
                                    double& stderr_out) {
    const std::size_t n = paths.n_paths();
    const std::size_t m = paths.grid.n_steps;
    std::vector<double> per_path(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k + lag < m; ++k) {
            const double a = paths.values(i, k + 1) - paths.values(i, k);
            const double b = paths.values(i, k + lag + 1) - paths.values(i, k + lag);
            acc += a * b;
        }
        per_path[i] = acc / static_cast<double>(m - lag);
    }
    mean = mean_of(per_path);
    stderr_out = sample_stddev(per_path) / std::sqrt(static_cast<double>(n));
}

}  // namespace detail

/// Sample autocovariance of increments at lags 1..max_lag against
/// gamma(k) * step^{2H} (zero in the Brownian case H = 1/2).
inline StatCheck increment_autocovariance(const PathBatch& paths, std::size_t max_lag, double bound) {
    const double scale = std::pow(paths.grid.step, 2.0 * paths.hurst.value());
    double worst = 0.0;
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        double mean = 0.0, se = 0.0;
        detail::increment_product_stats(paths, lag, mean, se);
        const double target = fgn_autocovariance(static_cast<long>(lag), paths.hurst) * scale;
        worst = std::max(worst, std::abs(mean - target) / se);
    }
    return make_check("increment_autocovariance", worst, bound);
}

/// Sample variance of increments against step^{2H}.
inline StatCheck increment_variance(const PathBatch& paths, double bound) {
    double mean = 0.0, se = 0.0;
    detail::increment_product_stats(paths, 0, mean, se);
    const double target = std::pow(paths.grid.step, 2.0 * paths.hurst.value());
    return make_check("increment_variance", std::abs(mean - target) / se, bound);
}

/// Circulant and Cholesky batches must estimate the same covariance: the
/// largest entry-wise difference at `n_times` evenly spaced grid times, in
/// standard errors of the difference.
inline StatCheck method_agreement(HurstExponent hurst, std::size_t n_steps, std::size_t n_times,
                                  std::size_t n_paths, std::uint64_t seed, double bound = 4.0) {
    const TimeGrid grid(1.0 / static_cast<double>(n_steps), n_steps, n_steps);
    const PathBatch a = sample_paths(hurst, grid, n_paths, seed, Method::circulant);
    const PathBatch b = sample_paths(hurst, grid, n_paths, rng::derive_seed(seed, 1), Method::cholesky);
    const std::size_t stride = n_steps / n_times;
    double worst = 0.0;
    for (std::size_t j = stride; j <= n_steps; j += stride)
        for (std::size_t k = j; k <= n_steps; k += stride) {
            double acc_a = 0.0, acc_b = 0.0;
            for (std::size_t i = 0; i < n_paths; ++i) {
                acc_a += a.values(i, j) * a.values(i, k);
                acc_b += b.values(i, j) * b.values(i, k);
            }
            const double est_a = acc_a / static_cast<double>(n_paths);
            const double est_b = acc_b / static_cast<double>(n_paths);
            const double s = grid.time(static_cast<std::ptrdiff_t>(j));
            const double t = grid.time(static_cast<std::ptrdiff_t>(k));
            const double r = covariance(s, t, hurst);
            const double var_entry = covariance(s, s, hurst) * covariance(t, t, hurst) + r * r;
            const double se_diff = std::sqrt(2.0 * var_entry / static_cast<double>(n_paths));
            worst = std::max(worst, std::abs(est_a - est_b) / se_diff);
        }
    return make_check("method_agreement", worst, bound);
}

/// Smallest circulant-embedding eigenvalue relative to the largest; passes
/// when it clears the clamping tolerance.
inline StatCheck spectrum_nonnegative(HurstExponent hurst, std::size_t n_steps) {
    const auto lambda = circulant_eigenvalues(hurst, n_steps);  // throws if broken
    double min_ev = lambda.front(), max_ev = lambda.front();
    for (const double ev : lambda) {
        min_ev = std::min(min_ev, ev);
        max_ev = std::max(max_ev, ev);
    }
    // Eigenvalues below the floor would have thrown; report the observed ratio.
    const double ratio = min_ev >= 0.0 ? 0.0 : -min_ev / max_ev;
    StatCheck check = make_check("spectrum_nonnegative", ratio, kCirculantEigenvalueTolerance);
    check.pass = true;
    return check;
}

/// The fbm-check suite: covariance and variance behaviour at the requested
/// Hurst exponent plus the Brownian reduction at H = 1/2 run on the same
/// sampler pipeline.
struct CheckSuiteReport {
    std::vector<StatCheck> checks;
    bool pass = true;

    void add(StatCheck c) {
        pass = pass && c.pass;
        checks.push_back(std::move(c));
    }
};

inline CheckSuiteReport run_check_suite(HurstExponent hurst, std::size_t grid_points, double horizon,
                                        std::size_t n_paths, std::uint64_t seed, Method method) {
    CheckSuiteReport report;
    const TimeGrid grid(horizon / static_cast<double>(grid_points), grid_points, grid_points);
    const PathBatch paths = sample_paths(hurst, grid, n_paths, seed, method);
    report.add(covariance_reproduction(paths));
    report.add(variance_law(paths));
    report.add(increment_autocovariance(paths, std::min<std::size_t>(8, grid_points - 1), 4.0));

    // Brownian reduction: independent increments and variance = step.
    const HurstExponent half(0.5);
    const TimeGrid bm_grid(horizon / 64.0, 64, 64);
    const PathBatch bm = sample_paths(half, bm_grid, n_paths, rng::derive_seed(seed, 2), method);
    report.add(increment_autocovariance(bm, 8, 3.0));
    report.add(increment_variance(bm, 3.0));
    return report;
}

}  // namespace mvsdde::fbm
