#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvsdde/core.hpp"
#include "mvsdde/fbm.hpp"
#include "mvsdde/grid.hpp"
#include "mvsdde/measure.hpp"
#include "mvsdde/model.hpp"
#include "mvsdde/parallel.hpp"

namespace mvsdde::solver {

enum class Scheme { euler_maruyama, caratheodory };

inline const char* scheme_name(Scheme s) {
    return s == Scheme::euler_maruyama ? "euler_maruyama" : "caratheodory";
}

inline Scheme scheme_from_name(const std::string& s) {
    if (s == "euler_maruyama") return Scheme::euler_maruyama;
    if (s == "caratheodory") return Scheme::caratheodory;
    throw std::invalid_argument("unknown scheme: " + s);
}

struct SimConfig {
    std::size_t n_particles = 1;
    TimeGrid grid{1.0, 1, 1};
    HurstExponent hurst{0.8};
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::euler_maruyama;
    std::size_t caratheodory_lag_steps = 1;
    bool allow_small_hurst = false;
};

inline void validate_config(const SimConfig& cfg) {
    if (cfg.n_particles < 1) throw std::invalid_argument("simulation needs at least one particle");
    if (cfg.grid.delay_steps > cfg.grid.n_steps)
        throw std::invalid_argument("delay_steps must not exceed n_steps");
    if (cfg.hurst.value() <= 0.5 && !cfg.allow_small_hurst)
        throw std::invalid_argument(
            "Hurst exponent <= 1/2 is outside the supported regime; set allow_small_hurst to override");
    if (cfg.scheme == Scheme::caratheodory) {
        if (cfg.caratheodory_lag_steps < 1)
            throw std::invalid_argument("Caratheodory lag must be at least one step");
        if (cfg.caratheodory_lag_steps > cfg.grid.delay_steps)
            throw std::invalid_argument("Caratheodory lag must not exceed the delay in steps");
    }
}

/// Thrown by a single step when a coefficient or state turns non-finite.
class Divergence : public std::runtime_error {
public:
    explicit Divergence(std::size_t particle)
        : std::runtime_error("non-finite state for particle " + std::to_string(particle)),
          particle_(particle) {}
    std::size_t particle() const { return particle_; }

private:
    std::size_t particle_;
};

struct DivergenceRecord {
    std::size_t step;      // first time index whose state is non-finite
    std::size_t particle;  // lowest-index offending particle
};

/// Per-particle fBm increments on the grid: increments[k] is the N x d matrix
/// of dB over [t_k, t_{k+1}).
struct DriverSet {
    std::vector<RowMatrix> increments;
    std::uint64_t seed = 0;
    double hurst_value = 0.0;
    double step = 0.0;

    std::size_t n_steps() const { return increments.size(); }
    std::size_t n_particles() const { return increments.empty() ? 0 : increments.front().rows(); }
    std::size_t dimension() const { return increments.empty() ? 0 : increments.front().cols(); }
};

/// Generates drivers for `n_particles` particles in dimension `d`: one
/// independent scalar fBm per particle and component, path index
/// particle * d + component.
inline DriverSet make_drivers(std::size_t dimension, const SimConfig& cfg,
                              fbm::Method method = fbm::Method::circulant) {
    const std::size_t n_rows = cfg.n_particles * dimension;
    const auto batch = fbm::sample_fgn(cfg.hurst, cfg.grid.n_steps, n_rows, cfg.seed, method);
    const double scale = std::pow(cfg.grid.step, cfg.hurst.value());

    DriverSet drivers;
    drivers.seed = cfg.seed;
    drivers.hurst_value = cfg.hurst.value();
    drivers.step = cfg.grid.step;
    drivers.increments.assign(cfg.grid.n_steps, RowMatrix(cfg.n_particles, dimension));
    for (std::size_t i = 0; i < cfg.n_particles; ++i)
        for (std::size_t c = 0; c < dimension; ++c) {
            const auto row = batch.increments.row(i * dimension + c);
            for (std::size_t k = 0; k < cfg.grid.n_steps; ++k)
                drivers.increments[k](i, c) = scale * row[k];
        }
    return drivers;
}

/// Block-sums increments in time so the coarse drivers ride the same
/// underlying path: dB'_{k'} = sum of the factor fine increments it spans.
inline DriverSet coarsen_drivers(const DriverSet& fine, std::size_t factor) {
    if (factor == 0 || fine.n_steps() % factor != 0)
        throw std::invalid_argument("coarsen_drivers: factor must divide the step count");
    DriverSet coarse;
    coarse.seed = fine.seed;
    coarse.hurst_value = fine.hurst_value;
    coarse.step = fine.step * static_cast<double>(factor);
    const std::size_t n_coarse = fine.n_steps() / factor;
    coarse.increments.assign(n_coarse, RowMatrix(fine.n_particles(), fine.dimension()));
    for (std::size_t k = 0; k < n_coarse; ++k) {
        auto& out = coarse.increments[k];
        for (std::size_t j = 0; j < factor; ++j) {
            const auto& in = fine.increments[k * factor + j];
            for (std::size_t idx = 0; idx < out.flat().size(); ++idx) out.flat()[idx] += in.flat()[idx];
        }
    }
    return coarse;
}

/// First `n` particle rows of a driver set, bit-identical to the originals.
inline DriverSet take_first_particles(const DriverSet& drivers, std::size_t n) {
    if (n < 1 || n > drivers.n_particles())
        throw std::invalid_argument("take_first_particles: bad particle count");
    DriverSet out;
    out.seed = drivers.seed;
    out.hurst_value = drivers.hurst_value;
    out.step = drivers.step;
    out.increments.assign(drivers.n_steps(), RowMatrix(n, drivers.dimension()));
    for (std::size_t k = 0; k < drivers.n_steps(); ++k)
        for (std::size_t i = 0; i < n; ++i) {
            const auto src = drivers.increments[k].row(i);
            std::copy(src.begin(), src.end(), out.increments[k].row(i).begin());
        }
    return out;
}

/// Particle trajectories on the grid. states[0] holds time index -m; slice
/// k + delay_steps holds time index k. A diverged run keeps only the finite
/// slices and records where generation stopped.
struct SimOutput {
    std::vector<RowMatrix> states;
    std::size_t delay_steps = 0;
    SimConfig config;
    std::string model_name;
    std::vector<std::string> warnings;
    std::optional<DivergenceRecord> divergence;

    const RowMatrix& at(std::ptrdiff_t time_index) const {
        return states[static_cast<std::size_t>(time_index + static_cast<std::ptrdiff_t>(delay_steps))];
    }
    std::ptrdiff_t last_index() const {
        return static_cast<std::ptrdiff_t>(states.size()) - 1 - static_cast<std::ptrdiff_t>(delay_steps);
    }
    bool diverged() const { return divergence.has_value(); }
};

namespace detail {

/// One scheme step for every particle:
/// out_i = D(next_delay_i) + x_i - D(delay_i) + b(coeff_x_i, delay_i, mu) dt
///       + sigma(coeff_x_i, mu) dB_i.
/// For Euler-Maruyama coeff_x is the current slice and mu its measure; the
/// Caratheodory scheme feeds the lagged slice and lagged measure instead.
/// Returns the lowest particle index with a non-finite result, if any.
inline std::optional<std::size_t> step_all(const model::ModelSpec& spec, double dt,
                                           const RowMatrix& x, const RowMatrix& delay,
                                           const RowMatrix& next_delay, const RowMatrix& coeff_x,
                                           const measure::EmpiricalMeasure& mu,
                                           const RowMatrix& increments, RowMatrix& out,
                                           unsigned threads) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    std::vector<std::uint8_t> bad(n, 0);

    parallel_for(n, threads, [&](std::size_t i) {
        std::vector<double> d_next(d), d_cur(d), drift(d), sigma(d * d);
        spec.neutral_map(next_delay.row(i), d_next);
        spec.neutral_map(delay.row(i), d_cur);
        spec.drift(coeff_x.row(i), delay.row(i), mu, drift);
        spec.diffusion(coeff_x.row(i), mu, sigma);

        const auto xi = x.row(i);
        const auto db = increments.row(i);
        auto dst = out.row(i);
        bool finite = true;
        for (std::size_t r = 0; r < d; ++r) {
            double noise = 0.0;
            for (std::size_t c = 0; c < d; ++c) noise += sigma[r * d + c] * db[c];
            const double v = d_next[r] + xi[r] - d_cur[r] + drift[r] * dt + noise;
            dst[r] = v;
            finite = finite && std::isfinite(v);
        }
        if (!finite) bad[i] = 1;
    });

    for (std::size_t i = 0; i < n; ++i)
        if (bad[i]) return i;
    return std::nullopt;
}

}  // namespace detail

/// Single discrete EM update from slice k to k+1. The empirical measure is
/// one shared snapshot of states_k over all particles, each particle
/// included.
inline RowMatrix em_step(const model::ModelSpec& spec, double dt, const RowMatrix& states_k,
                         const RowMatrix& states_k_minus_m, const RowMatrix& states_k_plus_1_minus_m,
                         const RowMatrix& increments_k) {
    const std::size_t n = states_k.rows();
    const std::size_t d = states_k.cols();
    if (states_k_minus_m.rows() != n || states_k_plus_1_minus_m.rows() != n || increments_k.rows() != n ||
        states_k_minus_m.cols() != d || states_k_plus_1_minus_m.cols() != d || increments_k.cols() != d)
        throw std::invalid_argument("em_step: shape mismatch");
    measure::EmpiricalMeasure mu(states_k);
    RowMatrix out(n, d);
    const auto bad = detail::step_all(spec, dt, states_k, states_k_minus_m, states_k_plus_1_minus_m,
                                      states_k, mu, increments_k, out, 1);
    if (bad) throw Divergence(*bad);
    return out;
}

/// Initial slices -m..0 per particle, drawn from the model's segment sampler
/// with one counter-based stream per particle.
inline std::vector<RowMatrix> sample_initial_slices(const model::ModelSpec& spec, const SimConfig& cfg) {
    const std::size_t m = cfg.grid.delay_steps;
    std::vector<RowMatrix> slices(m + 1, RowMatrix(cfg.n_particles, spec.dimension));
    for (std::size_t i = 0; i < cfg.n_particles; ++i) {
        rng::Stream stream(cfg.seed, i, rng::StreamTag::initial_segment);
        const auto segment = spec.initial_segment(stream);
        for (std::size_t j = 0; j <= m; ++j) {
            const double t = cfg.grid.time(static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(m));
            segment(t, slices[j].row(i));
        }
    }
    return slices;
}

/// Runs the scheme selected by the config over the whole grid. Seeds the
/// delay buffer from the initial segment (or from `initial` when supplied:
/// m+1 slices for time indices -m..0), then steps k = 0..M-1. Deterministic
/// given (model, config, drivers) for every thread count.
inline SimOutput simulate(const model::ModelSpec& spec, const SimConfig& cfg, const DriverSet& drivers,
                          const std::optional<std::vector<RowMatrix>>& initial = std::nullopt,
                          unsigned threads = 1) {
    model::validate_spec(spec);
    validate_config(cfg);
    if (drivers.n_steps() != cfg.grid.n_steps || drivers.n_particles() != cfg.n_particles ||
        drivers.dimension() != spec.dimension)
        throw std::invalid_argument("simulate: drivers do not match the configuration shape");
    if (drivers.hurst_value != cfg.hurst.value() || drivers.step != cfg.grid.step)
        throw std::invalid_argument("simulate: drivers were generated for a different grid or Hurst exponent");
    if (std::abs(cfg.grid.delay() - spec.delay) > 1e-12 * std::max(1.0, spec.delay))
        throw std::invalid_argument("simulate: grid delay does not equal the model delay");

    const std::size_t m = cfg.grid.delay_steps;
    const std::size_t M = cfg.grid.n_steps;
    const std::size_t lag = cfg.scheme == Scheme::caratheodory ? cfg.caratheodory_lag_steps : 0;

    SimOutput out;
    out.delay_steps = m;
    out.config = cfg;
    out.model_name = spec.name;
    if (cfg.hurst.value() <= 0.5)
        out.warnings.push_back("Hurst exponent <= 1/2: outside the regime covered by the convergence theory");

    if (initial) {
        if (initial->size() != m + 1)
            throw std::invalid_argument("simulate: initial data must provide delay_steps + 1 slices");
        for (const auto& slice : *initial)
            if (slice.rows() != cfg.n_particles || slice.cols() != spec.dimension)
                throw std::invalid_argument("simulate: initial slice shape mismatch");
        out.states = *initial;
    } else {
        out.states = sample_initial_slices(spec, cfg);
    }
    out.states.reserve(m + M + 1);

    for (std::size_t k = 0; k < M; ++k) {
        const RowMatrix& x = out.states[k + m];
        const RowMatrix& delay = out.states[k];        // time index k - m
        const RowMatrix& next_delay = out.states[k + 1];  // time index k + 1 - m
        const RowMatrix& coeff_x = out.states[k + m - lag];
        measure::EmpiricalMeasure mu(coeff_x);

        RowMatrix next(cfg.n_particles, spec.dimension);
        const auto bad = detail::step_all(spec, cfg.grid.step, x, delay, next_delay, coeff_x, mu,
                                          drivers.increments[k], next, threads);
        if (bad) {
            out.divergence = DivergenceRecord{k + 1, *bad};
            return out;
        }
        out.states.push_back(std::move(next));
    }
    return out;
}

/// The Caratheodory integrator: identical grid loop, with drift and diffusion
/// evaluated at the state and empirical measure lagged by
/// caratheodory_lag_steps; the delay argument is unchanged.
inline SimOutput caratheodory_simulate(const model::ModelSpec& spec, SimConfig cfg,
                                       const DriverSet& drivers,
                                       const std::optional<std::vector<RowMatrix>>& initial = std::nullopt,
                                       unsigned threads = 1) {
    cfg.scheme = Scheme::caratheodory;
    return simulate(spec, cfg, drivers, initial, threads);
}

/// One run per factor, every level driven by block-summed increments of the
/// same fine drivers; factor 1 reproduces the fine run and serves as the
/// reference.
inline std::vector<SimOutput> coupled_simulate(const model::ModelSpec& spec, const SimConfig& base_cfg,
                                               const DriverSet& fine_drivers,
                                               const std::vector<std::size_t>& factors,
                                               unsigned threads = 1) {
    for (const std::size_t f : factors) {
        if (f == 0 || base_cfg.grid.n_steps % f != 0)
            throw std::invalid_argument("coupled_simulate: factor must divide n_steps");
        if (base_cfg.grid.delay_steps % f != 0)
            throw std::invalid_argument("coupled_simulate: factor must divide delay_steps");
    }
    std::vector<SimOutput> outputs;
    outputs.reserve(factors.size());
    for (const std::size_t f : factors) {
        SimConfig cfg = base_cfg;
        cfg.grid = base_cfg.grid.coarsened(f);
        if (f == 1) {
            outputs.push_back(simulate(spec, cfg, fine_drivers, std::nullopt, threads));
        } else {
            const DriverSet coarse = coarsen_drivers(fine_drivers, f);
            outputs.push_back(simulate(spec, cfg, coarse, std::nullopt, threads));
        }
    }
    return outputs;
}

/// CSV export: header `time,particle,component,value`, rows time-major then
/// particle-minor, full round-trip precision, RFC-4180 line endings.
inline void write_trajectory_csv(const SimOutput& out, std::ostream& os) {
    os << "time,particle,component,value\r\n";
    char buf[64];
    const auto m = static_cast<std::ptrdiff_t>(out.delay_steps);
    for (std::ptrdiff_t k = -m; k <= out.last_index(); ++k) {
        const RowMatrix& slice = out.at(k);
        const double t = out.config.grid.time(k);
        for (std::size_t i = 0; i < slice.rows(); ++i)
            for (std::size_t c = 0; c < slice.cols(); ++c) {
                std::snprintf(buf, sizeof buf, "%.17g", t);
                os << buf << ',' << i << ',' << c << ',';
                std::snprintf(buf, sizeof buf, "%.17g", slice(i, c));
                os << buf << "\r\n";
            }
    }
}

}  // namespace mvsdde::solver
