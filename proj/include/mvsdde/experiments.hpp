#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvsdde/core.hpp"
#include "mvsdde/parallel.hpp"
#include "mvsdde/solver.hpp"

namespace mvsdde::experiments {

/// A study could not produce a meaningful result (e.g. too few surviving
/// levels after divergence exclusion).
class StudyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double r_squared = 1.0;
};

/// Ordinary least squares on (log x, log y); the standard error is that of
/// the slope estimate.
inline LogLogFit fit_loglog_slope(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("fit_loglog_slope: size mismatch");
    const std::size_t n = xs.size();
    if (n < 3) throw std::invalid_argument("fit_loglog_slope: need at least 3 points");
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
            throw std::invalid_argument("fit_loglog_slope: values must be positive");
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
    }
    const double mx = mean_of(lx);
    const double my = mean_of(ly);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("fit_loglog_slope: x values must not all coincide");

    LogLogFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
        ss_res += r * r;
    }
    fit.slope_stderr = std::sqrt(std::max(ss_res, 0.0) / static_cast<double>(n - 2) / sxx);
    fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return fit;
}

/// Per-level Monte Carlo aggregate of E[max_k |difference|^p].
struct LevelStat {
    double level = 0.0;        // step size or particle count
    double error_p = 0.0;      // mean of the p-th power
    double error = 0.0;        // p-th root of error_p
    double error_p_stderr = 0.0;
    double error_stderr = 0.0; // delta-method propagation to the root
    std::size_t n_effective = 0;
    std::size_t n_diverged = 0;
    bool dropped = false;      // > 50% repetitions diverged
};

namespace detail {

constexpr double kExactThreshold = 1e-12;

/// Mean/stderr over the valid (finite) per-repetition values, reduced by
/// pairwise summation in repetition order so results cannot depend on the
/// thread schedule.
inline void aggregate_level(const std::vector<double>& per_rep, double p, LevelStat& stat) {
    std::vector<double> valid;
    valid.reserve(per_rep.size());
    for (const double v : per_rep)
        if (std::isfinite(v)) valid.push_back(v);
    stat.n_effective = valid.size();
    stat.n_diverged = per_rep.size() - valid.size();
    stat.dropped = stat.n_diverged * 2 > per_rep.size();
    if (valid.empty() || stat.dropped) return;

    stat.error_p = pairwise_sum(valid) / static_cast<double>(valid.size());
    stat.error = std::pow(stat.error_p, 1.0 / p);
    if (valid.size() > 1) {
        std::vector<double> sq(valid.size());
        for (std::size_t i = 0; i < valid.size(); ++i)
            sq[i] = (valid[i] - stat.error_p) * (valid[i] - stat.error_p);
        stat.error_p_stderr = std::sqrt(pairwise_sum(sq) / static_cast<double>(valid.size() - 1) /
                                        static_cast<double>(valid.size()));
        stat.error_stderr = stat.error_p > 0.0
                                ? stat.error_p_stderr * std::pow(stat.error_p, 1.0 / p - 1.0) / p
                                : 0.0;
    }
}

/// max over grid times k >= 0 of the Euclidean distance between the two
/// slices of particle i, comparing level time index k to reference k*factor.
inline double sup_difference(const solver::SimOutput& coarse, const solver::SimOutput& reference,
                             std::size_t factor, std::size_t particle) {
    double worst = 0.0;
    const auto last = coarse.last_index();
    for (std::ptrdiff_t k = 0; k <= last; ++k) {
        const double dist = measure::euclidean_distance(
            coarse.at(k).row(particle),
            reference.at(k * static_cast<std::ptrdiff_t>(factor)).row(particle));
        worst = std::max(worst, dist);
    }
    return worst;
}

}  // namespace detail

/// Step-size convergence study report. `errors` are p-th roots of the mean
/// p-th-power sup errors; `fit` is the log-log slope of those roots against
/// the step (for p = 2 the RMS slope), `fit_p` the slope of the raw p-th
/// powers (the MSE slope), which is exactly p times the former.
struct ConvergenceReport {
    std::string model_name;
    double hurst = 0.0;
    std::size_t n_particles = 0;
    std::size_t fine_steps = 0;
    double p = 2.0;
    std::size_t n_mc = 0;
    std::uint64_t seed = 0;
    std::vector<LevelStat> levels;  // ascending step size, dropped levels included
    bool exact = false;             // every surviving level below the exactness threshold
    std::optional<LogLogFit> fit;   // on (step, error)
    std::optional<LogLogFit> fit_p; // on (step, error_p)

    std::vector<double> deltas() const {
        std::vector<double> v;
        for (const auto& s : levels) v.push_back(s.level);
        return v;
    }
    std::vector<double> errors() const {
        std::vector<double> v;
        for (const auto& s : levels) v.push_back(s.error);
        return v;
    }
};

/// Strong-error-in-step study: per repetition one fine driver set, coupled
/// runs at every factor, error of each level measured against the factor-1
/// reference at shared grid times, averaged over particles and repetitions.
inline ConvergenceReport strong_convergence_study(const model::ModelSpec& spec, HurstExponent hurst,
                                                  std::vector<std::size_t> coarse_factors,
                                                  std::size_t fine_steps, std::size_t n_particles,
                                                  double p, std::size_t n_mc, std::uint64_t seed,
                                                  unsigned threads = 1) {
    if (!(p >= 2.0)) throw std::invalid_argument("strong_convergence_study: need p >= 2");
    if (n_mc < 2) throw std::invalid_argument("strong_convergence_study: need n_mc >= 2");
    if (coarse_factors.size() < 3)
        throw std::invalid_argument("strong_convergence_study: need at least 3 coarse factors");
    std::sort(coarse_factors.begin(), coarse_factors.end());
    for (std::size_t i = 0; i + 1 < coarse_factors.size(); ++i)
        if (coarse_factors[i] == coarse_factors[i + 1])
            throw std::invalid_argument("strong_convergence_study: duplicate coarse factor");
    for (const std::size_t f : coarse_factors)
        if (f < 2 || fine_steps % f != 0)
            throw std::invalid_argument("strong_convergence_study: factors must be >= 2 and divide fine_steps");

    // Horizon equals the delay (m = M), so every factor that divides the
    // step count keeps the delay grid-aligned.
    const TimeGrid fine_grid(spec.delay / static_cast<double>(fine_steps), fine_steps, fine_steps);
    std::vector<std::size_t> factors = {1};
    factors.insert(factors.end(), coarse_factors.begin(), coarse_factors.end());

    const std::size_t n_levels = coarse_factors.size();
    std::vector<std::vector<double>> per_rep(n_levels, std::vector<double>(n_mc, std::nan("")));

    parallel_for(n_mc, threads, [&](std::size_t rep) {
        solver::SimConfig cfg;
        cfg.n_particles = n_particles;
        cfg.grid = fine_grid;
        cfg.hurst = hurst;
        cfg.seed = rng::derive_seed(seed, rep);
        const solver::DriverSet drivers = solver::make_drivers(spec.dimension, cfg);
        const auto outputs = solver::coupled_simulate(spec, cfg, drivers, factors);
        const auto& reference = outputs.front();
        if (reference.diverged()) return;  // whole repetition excluded
        for (std::size_t lvl = 0; lvl < n_levels; ++lvl) {
            const auto& coarse = outputs[lvl + 1];
            if (coarse.diverged()) continue;
            std::vector<double> powers(n_particles);
            for (std::size_t i = 0; i < n_particles; ++i)
                powers[i] = std::pow(detail::sup_difference(coarse, reference, coarse_factors[lvl], i), p);
            per_rep[lvl][rep] = pairwise_sum(powers) / static_cast<double>(n_particles);
        }
    });

    ConvergenceReport report;
    report.model_name = spec.name;
    report.hurst = hurst.value();
    report.n_particles = n_particles;
    report.fine_steps = fine_steps;
    report.p = p;
    report.n_mc = n_mc;
    report.seed = seed;
    for (std::size_t lvl = 0; lvl < n_levels; ++lvl) {
        LevelStat stat;
        stat.level = fine_grid.step * static_cast<double>(coarse_factors[lvl]);
        detail::aggregate_level(per_rep[lvl], p, stat);
        report.levels.push_back(stat);
    }

    std::vector<double> xs, ys, ys_p;
    bool all_exact = true;
    for (const auto& s : report.levels) {
        if (s.dropped) continue;
        if (s.error > detail::kExactThreshold) all_exact = false;
        if (s.error > 0.0) {
            xs.push_back(s.level);
            ys.push_back(s.error);
            ys_p.push_back(s.error_p);
        }
    }
    const std::size_t surviving =
        static_cast<std::size_t>(std::count_if(report.levels.begin(), report.levels.end(),
                                               [](const LevelStat& s) { return !s.dropped; }));
    if (surviving < 3) throw StudyError("strong_convergence_study: fewer than 3 surviving levels");
    if (all_exact) {
        report.exact = true;
        return report;
    }
    if (xs.size() < 3) throw StudyError("strong_convergence_study: fewer than 3 positive error levels");
    report.fit = fit_loglog_slope(xs, ys);
    report.fit_p = fit_loglog_slope(xs, ys_p);
    return report;
}

/// Particle-count study report. Per the chaos-rate bound the slope of the
/// raw p-th powers against N is the quantity of interest, so `fit_p` is the
/// headline fit here; `fit` tracks the p-th roots.
struct ChaosReport {
    std::string model_name;
    double hurst = 0.0;
    std::size_t reference_count = 0;
    std::size_t grid_steps = 0;
    double p = 2.0;
    std::size_t n_mc = 0;
    std::uint64_t seed = 0;
    std::vector<LevelStat> levels;  // ascending particle count
    bool exact = false;
    std::optional<LogLogFit> fit;    // on (N, error)
    std::optional<LogLogFit> fit_p;  // on (N, error_p)
};

/// Propagation-of-chaos proxy study: each repetition generates drivers and
/// initial draws for the reference count once; the N-particle system reuses
/// exactly the first N rows (coupling), and the level error compares
/// particle i in the N-system against the same particle in the reference
/// system. The measured rate is bounded by the sum of the two chaos terms
/// (level N and reference), since the idealized non-interacting limit is not
/// directly computable.
inline ChaosReport chaos_study(const model::ModelSpec& spec, HurstExponent hurst,
                               std::vector<std::size_t> particle_counts, std::size_t reference_count,
                               const TimeGrid& grid, double p, std::size_t n_mc, std::uint64_t seed,
                               unsigned threads = 1) {
    if (!(p >= 2.0)) throw std::invalid_argument("chaos_study: need p >= 2");
    if (n_mc < 2) throw std::invalid_argument("chaos_study: need n_mc >= 2");
    if (particle_counts.size() < 3) throw std::invalid_argument("chaos_study: need at least 3 levels");
    for (std::size_t i = 0; i + 1 < particle_counts.size(); ++i)
        if (particle_counts[i] >= particle_counts[i + 1])
            throw std::invalid_argument("chaos_study: particle counts must be strictly increasing");
    if (particle_counts.back() >= reference_count)
        throw std::invalid_argument("chaos_study: all particle counts must be below the reference count");
    if (particle_counts.front() < 1) throw std::invalid_argument("chaos_study: counts must be positive");

    const std::size_t n_levels = particle_counts.size();
    std::vector<std::vector<double>> per_rep(n_levels, std::vector<double>(n_mc, std::nan("")));

    parallel_for(n_mc, threads, [&](std::size_t rep) {
        solver::SimConfig ref_cfg;
        ref_cfg.n_particles = reference_count;
        ref_cfg.grid = grid;
        ref_cfg.hurst = hurst;
        ref_cfg.seed = rng::derive_seed(seed, rep);
        const solver::DriverSet ref_drivers = solver::make_drivers(spec.dimension, ref_cfg);
        const auto reference = solver::simulate(spec, ref_cfg, ref_drivers);
        if (reference.diverged()) return;
        for (std::size_t lvl = 0; lvl < n_levels; ++lvl) {
            const std::size_t n = particle_counts[lvl];
            solver::SimConfig cfg = ref_cfg;
            cfg.n_particles = n;
            const auto out = solver::simulate(spec, cfg, solver::take_first_particles(ref_drivers, n));
            if (out.diverged()) continue;
            const std::size_t observed = std::min<std::size_t>(n, 32);
            std::vector<double> powers(observed);
            for (std::size_t i = 0; i < observed; ++i)
                powers[i] = std::pow(detail::sup_difference(out, reference, 1, i), p);
            per_rep[lvl][rep] = pairwise_sum(powers) / static_cast<double>(observed);
        }
    });

    ChaosReport report;
    report.model_name = spec.name;
    report.hurst = hurst.value();
    report.reference_count = reference_count;
    report.grid_steps = grid.n_steps;
    report.p = p;
    report.n_mc = n_mc;
    report.seed = seed;
    for (std::size_t lvl = 0; lvl < n_levels; ++lvl) {
        LevelStat stat;
        stat.level = static_cast<double>(particle_counts[lvl]);
        detail::aggregate_level(per_rep[lvl], p, stat);
        report.levels.push_back(stat);
    }

    std::vector<double> xs, ys, ys_p;
    bool all_exact = true;
    for (const auto& s : report.levels) {
        if (s.dropped) continue;
        if (s.error > detail::kExactThreshold) all_exact = false;
        if (s.error > 0.0) {
            xs.push_back(s.level);
            ys.push_back(s.error);
            ys_p.push_back(s.error_p);
        }
    }
    const std::size_t surviving =
        static_cast<std::size_t>(std::count_if(report.levels.begin(), report.levels.end(),
                                               [](const LevelStat& s) { return !s.dropped; }));
    if (surviving < 3) throw StudyError("chaos_study: fewer than 3 surviving levels");
    if (all_exact) {
        report.exact = true;
        return report;
    }
    if (xs.size() < 3) throw StudyError("chaos_study: fewer than 3 positive error levels");
    report.fit = fit_loglog_slope(xs, ys);
    report.fit_p = fit_loglog_slope(xs, ys_p);
    return report;
}

/// Monte Carlo estimates of E sup_{0<=k<=M} |Y_{t_k}|^p at one step size.
struct MomentLevel {
    double step = 0.0;
    std::vector<double> estimates;  // one per requested p
    std::vector<double> stderrs;
    double divergence_fraction = 0.0;
    bool reliable = true;  // false when more than half the repetitions diverged
};

struct MomentReport {
    std::string model_name;
    std::vector<double> p_values;
    MomentLevel coarse;  // at the configured step
    MomentLevel fine;    // at half the step, same underlying paths
    std::vector<double> relative_delta;   // |coarse - fine| / max(coarse, fine)
    std::vector<bool> bands_overlap;      // 2-sigma interval overlap per p
    std::size_t n_mc = 0;
    std::uint64_t seed = 0;
};

/// Stability-in-step probe of the moment bound: estimates at the configured
/// step and at half that step, the coarse run driven by block-summed fine
/// increments so both levels see the same driving noise.
inline MomentReport moment_study(const model::ModelSpec& spec, const solver::SimConfig& config,
                                 const std::vector<double>& p_values, std::size_t n_mc,
                                 unsigned threads = 1) {
    if (p_values.empty()) throw std::invalid_argument("moment_study: need at least one p");
    for (const double p : p_values)
        if (!(p > 0.0)) throw std::invalid_argument("moment_study: p values must be positive");
    if (n_mc < 2) throw std::invalid_argument("moment_study: need n_mc >= 2");

    const TimeGrid fine_grid(config.grid.step / 2.0, config.grid.n_steps * 2, config.grid.delay_steps * 2);
    const std::size_t n_p = p_values.size();
    // per level, per p, per repetition
    std::vector<std::vector<std::vector<double>>> values(
        2, std::vector<std::vector<double>>(n_p, std::vector<double>(n_mc, std::nan(""))));

    parallel_for(n_mc, threads, [&](std::size_t rep) {
        solver::SimConfig fine_cfg = config;
        fine_cfg.grid = fine_grid;
        fine_cfg.seed = rng::derive_seed(config.seed, rep);
        const solver::DriverSet fine_drivers = solver::make_drivers(spec.dimension, fine_cfg);
        const auto fine_out = solver::simulate(spec, fine_cfg, fine_drivers);

        solver::SimConfig coarse_cfg = config;
        coarse_cfg.seed = fine_cfg.seed;
        const auto coarse_out =
            solver::simulate(spec, coarse_cfg, solver::coarsen_drivers(fine_drivers, 2));

        const solver::SimOutput* outs[2] = {&coarse_out, &fine_out};
        for (int level = 0; level < 2; ++level) {
            if (outs[level]->diverged()) continue;
            const auto& out = *outs[level];
            const std::size_t n = out.config.n_particles;
            std::vector<double> sups(n, 0.0);
            for (std::ptrdiff_t k = 0; k <= out.last_index(); ++k) {
                const auto& slice = out.at(k);
                for (std::size_t i = 0; i < n; ++i)
                    sups[i] = std::max(sups[i], measure::euclidean_norm(slice.row(i)));
            }
            for (std::size_t ip = 0; ip < n_p; ++ip) {
                std::vector<double> powers(n);
                for (std::size_t i = 0; i < n; ++i) powers[i] = std::pow(sups[i], p_values[ip]);
                values[level][ip][rep] = pairwise_sum(powers) / static_cast<double>(n);
            }
        }
    });

    MomentReport report;
    report.model_name = spec.name;
    report.p_values = p_values;
    report.n_mc = n_mc;
    report.seed = config.seed;
    MomentLevel* levels[2] = {&report.coarse, &report.fine};
    const double steps[2] = {config.grid.step, fine_grid.step};
    for (int level = 0; level < 2; ++level) {
        MomentLevel& ml = *levels[level];
        ml.step = steps[level];
        for (std::size_t ip = 0; ip < n_p; ++ip) {
            std::vector<double> valid;
            for (const double v : values[level][ip])
                if (std::isfinite(v)) valid.push_back(v);
            ml.divergence_fraction =
                static_cast<double>(n_mc - valid.size()) / static_cast<double>(n_mc);
            ml.reliable = valid.size() * 2 > n_mc;
            if (valid.empty()) {
                ml.estimates.push_back(std::nan(""));
                ml.stderrs.push_back(std::nan(""));
                continue;
            }
            const double est = pairwise_sum(valid) / static_cast<double>(valid.size());
            ml.estimates.push_back(est);
            ml.stderrs.push_back(sample_stddev(valid) / std::sqrt(static_cast<double>(valid.size())));
        }
    }
    for (std::size_t ip = 0; ip < n_p; ++ip) {
        const double a = report.coarse.estimates[ip];
        const double b = report.fine.estimates[ip];
        report.relative_delta.push_back(std::abs(a - b) / std::max(std::abs(a), std::abs(b)));
        const double half_width = 2.0 * (report.coarse.stderrs[ip] + report.fine.stderrs[ip]);
        report.bands_overlap.push_back(std::abs(a - b) <= half_width);
    }
    return report;
}

}  // namespace mvsdde::experiments
