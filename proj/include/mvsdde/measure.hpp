#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "mvsdde/core.hpp"

namespace mvsdde::measure {

/// Moment order theta >= 1.
class Theta {
public:
    explicit Theta(double v) : v_(v) {
        if (!(v >= 1.0)) throw std::invalid_argument("theta must be >= 1");
    }
    double value() const { return v_; }

private:
    double v_;
};

/// Uniform-weight atomic measure (1/N) sum of delta_{x_j} over the rows of a
/// sample matrix. Immutable; the mean and (for d = 1) the ascending order of
/// samples are computed once at construction. All reductions over samples sum
/// in ascending value order, so permuting the rows never changes any result
/// bit.
class EmpiricalMeasure {
public:
    explicit EmpiricalMeasure(RowMatrix samples) : samples_(std::move(samples)) {
        if (samples_.rows() == 0) throw std::invalid_argument("empirical measure needs at least one sample");
        if (samples_.cols() == 0) throw std::invalid_argument("empirical measure needs dimension >= 1");
        const std::size_t n = samples_.rows();
        const std::size_t d = samples_.cols();
        mean_.resize(d);
        std::vector<double> column(n);
        for (std::size_t c = 0; c < d; ++c) {
            for (std::size_t j = 0; j < n; ++j) column[j] = samples_(j, c);
            if (d == 1) {
                sorted_ = column;
                std::sort(sorted_.begin(), sorted_.end());
                double s = 0.0;
                for (double x : sorted_) s += x;
                mean_[0] = s / static_cast<double>(n);
            } else {
                mean_[c] = sorted_sum(column) / static_cast<double>(n);
            }
        }
    }

    static EmpiricalMeasure dirac(std::span<const double> point) {
        RowMatrix m(1, point.size());
        std::copy(point.begin(), point.end(), m.row(0).begin());
        return EmpiricalMeasure(std::move(m));
    }

    static EmpiricalMeasure dirac1(double x) { return dirac(std::span<const double>(&x, 1)); }

    std::size_t size() const { return samples_.rows(); }
    std::size_t dimension() const { return samples_.cols(); }
    std::span<const double> sample(std::size_t j) const { return samples_.row(j); }
    const RowMatrix& samples() const { return samples_; }
    std::span<const double> mean() const { return mean_; }

    /// Ascending samples; only defined for d = 1.
    const std::vector<double>& sorted() const {
        if (dimension() != 1) throw std::domain_error("sorted(): only available in dimension 1");
        return sorted_;
    }

private:
    RowMatrix samples_;
    std::vector<double> mean_;
    std::vector<double> sorted_;  // d == 1 only
};

inline double euclidean_norm(std::span<const double> x) {
    if (x.size() == 1) return std::abs(x[0]);
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

inline double euclidean_distance(std::span<const double> x, std::span<const double> y) {
    if (x.size() == 1) return std::abs(x[0] - y[0]);
    double s = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) s += (x[c] - y[c]) * (x[c] - y[c]);
    return std::sqrt(s);
}

/// theta-th moment functional ((1/N) sum |x_j|^theta)^{1/theta}; equals the
/// Wasserstein distance from mu to the Dirac mass at the origin.
inline double theta_moment(const EmpiricalMeasure& mu, Theta theta) {
    const double th = theta.value();
    std::vector<double> terms(mu.size());
    for (std::size_t j = 0; j < mu.size(); ++j)
        terms[j] = std::pow(euclidean_norm(mu.sample(j)), th);
    return std::pow(sorted_sum(std::move(terms)) / static_cast<double>(mu.size()), 1.0 / th);
}

/// Exact theta-Wasserstein distance between two equal-size one-dimensional
/// empirical measures: the sorted (comonotone) coupling attains the infimum.
inline double wasserstein_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, Theta theta) {
    if (mu.dimension() != 1 || nu.dimension() != 1)
        throw std::domain_error("wasserstein_1d: only dimension 1 is supported");
    if (mu.size() != nu.size())
        throw std::invalid_argument("wasserstein_1d: sample counts must match");
    const double th = theta.value();
    const auto& xs = mu.sorted();
    const auto& ys = nu.sorted();
    std::vector<double> terms(xs.size());
    for (std::size_t j = 0; j < xs.size(); ++j)
        terms[j] = std::pow(std::abs(xs[j] - ys[j]), th);
    return std::pow(sorted_sum(std::move(terms)) / static_cast<double>(xs.size()), 1.0 / th);
}

/// Identity-pairing transport cost ((1/N) sum |x_j - y_j|^theta)^{1/theta},
/// an upper bound on the theta-Wasserstein distance in any dimension.
inline double pairing_bound(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, Theta theta) {
    if (mu.size() != nu.size())
        throw std::invalid_argument("pairing_bound: sample counts must match");
    if (mu.dimension() != nu.dimension())
        throw std::invalid_argument("pairing_bound: dimensions must match");
    const double th = theta.value();
    std::vector<double> terms(mu.size());
    for (std::size_t j = 0; j < mu.size(); ++j)
        terms[j] = std::pow(euclidean_distance(mu.sample(j), nu.sample(j)), th);
    return std::pow(sorted_sum(std::move(terms)) / static_cast<double>(mu.size()), 1.0 / th);
}

/// Componentwise sample mean.
inline std::vector<double> mean(const EmpiricalMeasure& mu) {
    return {mu.mean().begin(), mu.mean().end()};
}

}  // namespace mvsdde::measure
