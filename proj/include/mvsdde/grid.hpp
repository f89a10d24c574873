#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace mvsdde {

/// Hurst exponent, open interval (0,1). Boundary values are rejected.
class HurstExponent {
public:
    explicit HurstExponent(double h) : h_(h) {
        if (!(h > 0.0 && h < 1.0))
            throw std::invalid_argument("Hurst exponent must lie strictly in (0,1)");
    }
    double value() const { return h_; }

    bool operator==(const HurstExponent&) const = default;

private:
    double h_;
};

/// Uniform time grid t_k = k * step for k = 0..n_steps, with the model delay
/// pinned to delay_steps * step. When the delay and step are dyadic, that
/// product is binary-exact.
struct TimeGrid {
    double step;
    std::size_t n_steps;      // number of steps over [0, horizon]
    std::size_t delay_steps;  // delay expressed in steps

    TimeGrid(double step_, std::size_t n_steps_, std::size_t delay_steps_)
        : step(step_), n_steps(n_steps_), delay_steps(delay_steps_) {
        if (!(step > 0.0)) throw std::invalid_argument("TimeGrid: step must be positive");
        if (n_steps < 1) throw std::invalid_argument("TimeGrid: need at least one step");
        if (delay_steps < 1) throw std::invalid_argument("TimeGrid: delay must span at least one step");
    }

    double horizon() const { return step * static_cast<double>(n_steps); }
    double delay() const { return step * static_cast<double>(delay_steps); }
    double time(std::ptrdiff_t k) const { return step * static_cast<double>(k); }

    /// Grid with the step multiplied by `factor`; the factor must divide both
    /// the step count and the delay so the delay stays grid-aligned.
    TimeGrid coarsened(std::size_t factor) const {
        if (factor == 0 || n_steps % factor != 0)
            throw std::invalid_argument("TimeGrid: coarsening factor must divide n_steps");
        if (delay_steps % factor != 0)
            throw std::invalid_argument("TimeGrid: coarsening factor must divide delay_steps");
        return TimeGrid(step * static_cast<double>(factor), n_steps / factor, delay_steps / factor);
    }

    bool operator==(const TimeGrid&) const = default;
};

/// Grid for horizon T split into n_steps with delay tau; tau must land
/// exactly on the grid.
inline TimeGrid make_grid(double horizon, double delay, std::size_t n_steps) {
    if (!(horizon > 0.0) || !(delay > 0.0))
        throw std::invalid_argument("make_grid: horizon and delay must be positive");
    const double step = horizon / static_cast<double>(n_steps);
    const double m_real = delay / step;
    const auto m = static_cast<std::size_t>(m_real + 0.5);
    if (m < 1 || std::abs(m_real - static_cast<double>(m)) > 1e-9)
        throw std::invalid_argument("make_grid: delay is not an integer number of steps");
    return TimeGrid(step, n_steps, m);
}

}  // namespace mvsdde
