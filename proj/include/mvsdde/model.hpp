#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvsdde/core.hpp"
#include "mvsdde/measure.hpp"
#include "mvsdde/rng.hpp"

namespace mvsdde::model {

/// Neutral map D: R^d -> R^d.
using NeutralFn = std::function<void(std::span<const double> x, std::span<double> out)>;

/// Drift b(x, y_delayed, mu) -> R^d.
using DriftFn = std::function<void(std::span<const double> x, std::span<const double> y_delayed,
                                   const measure::EmpiricalMeasure& mu, std::span<double> out)>;

/// Diffusion sigma(x, mu) -> R^{d x d}, written row-major into `out`. The
/// underlying theory takes sigma(mu) only; the state argument exists because
/// the super-linear one-dimensional example's diffusion reads the state.
/// Coefficients that ignore x match the theory exactly.
using DiffusionFn = std::function<void(std::span<const double> x, const measure::EmpiricalMeasure& mu,
                                       std::span<double> out)>;

/// One initial segment xi: [-tau, 0] -> R^d. Sampled once per particle; must
/// be pure given the stream.
using SegmentFn = std::function<void(double t, std::span<double> out)>;
using InitialSegmentSampler = std::function<SegmentFn(rng::Stream&)>;

/// Coefficient bundle for a neutral McKean-Vlasov delay equation
/// d(X_t - D(X_{t-tau})) = b(X_t, X_{t-tau}, mu_t) dt + sigma(X_t, mu_t) dB^H_t.
/// Coefficient functions must be pure and safe for concurrent evaluation.
struct ModelSpec {
    std::string name;
    std::size_t dimension = 1;
    double delay = 1.0;                // tau > 0
    NeutralFn neutral_map;             // D, must satisfy D(0) = 0
    double neutral_contraction = 0.5;  // lambda in (0,1)
    DriftFn drift;
    DiffusionFn diffusion;
    InitialSegmentSampler initial_segment;
    double growth_l = 1.0;    // l >= 1, delay-argument polynomial degree
    double lipschitz_L = 1.0; // L > 0
    measure::Theta theta{2.0};
    bool diffusion_uses_state = false;
};

/// Structural sanity of a spec: field ranges plus the exact D(0) = 0 check.
inline void validate_spec(const ModelSpec& spec) {
    if (spec.dimension < 1) throw std::invalid_argument("model: dimension must be >= 1");
    if (!(spec.delay > 0.0)) throw std::invalid_argument("model: delay must be positive");
    if (!(spec.neutral_contraction > 0.0 && spec.neutral_contraction < 1.0))
        throw std::invalid_argument("model: neutral contraction must lie in (0,1)");
    if (!(spec.growth_l >= 1.0)) throw std::invalid_argument("model: growth exponent l must be >= 1");
    if (!(spec.lipschitz_L > 0.0)) throw std::invalid_argument("model: Lipschitz constant must be positive");
    if (!spec.neutral_map || !spec.drift || !spec.diffusion || !spec.initial_segment)
        throw std::invalid_argument("model: all coefficient functions must be set");
    std::vector<double> zero(spec.dimension, 0.0), out(spec.dimension, 0.0);
    spec.neutral_map(zero, out);
    for (double v : out)
        if (v != 0.0) throw std::invalid_argument("model: neutral map must satisfy D(0) = 0 exactly");
}

/// Sample points witnessing a violated inequality.
struct ProbeWitness {
    std::string check;
    std::vector<double> x, x_bar, y, y_bar;
    RowMatrix mu_samples, nu_samples;
    double lhs = 0.0, rhs = 0.0;
};

struct AssumptionCheck {
    bool ok = true;
    double worst_ratio = 0.0;  // worst observed lhs / bracket, compared to the constant
    std::optional<ProbeWitness> witness;
};

/// Outcome of sampling-based falsification of the structural assumptions.
/// All-true flags are necessary, not sufficient, evidence: the inequalities
/// quantify over the whole space and we only probe a ball.
struct AssumptionReport {
    AssumptionCheck contraction;          // |D(x)-D(x')| <= lambda |x-x'|
    AssumptionCheck drift_lipschitz;      // vs L [|x-x'| + (1+|y|^l+|y'|^l)|y-y'| + W_theta]
    AssumptionCheck diffusion_lipschitz;  // vs L W_theta at fixed state
    AssumptionCheck drift_growth;         // |b| <= L (1 + |x| + |y|^{l+1} + W_theta(mu, delta_0))
    AssumptionCheck diffusion_growth;     // ||sigma|| <= L (1 + W_theta(mu, delta_0))
    bool diffusion_state_dependent = false;
    std::size_t probes_used = 0;
    std::uint64_t seed = 0;

    bool growth_ok() const { return drift_growth.ok && diffusion_growth.ok; }
    bool all_ok() const {
        return contraction.ok && drift_lipschitz.ok && diffusion_lipschitz.ok && growth_ok();
    }
};

namespace detail {

inline void sample_in_ball(rng::Stream& stream, double radius, std::span<double> out) {
    double norm_sq = 0.0;
    for (double& v : out) {
        v = stream.normal();
        norm_sq += v * v;
    }
    const double norm = std::sqrt(norm_sq);
    const double dim = static_cast<double>(out.size());
    const double r = radius * std::pow(stream.uniform01(), 1.0 / dim);
    const double scale = norm > 0.0 ? r / norm : 0.0;
    for (double& v : out) v *= scale;
}

inline RowMatrix sample_cloud(rng::Stream& stream, std::size_t n, std::size_t d, double radius) {
    RowMatrix cloud(n, d);
    for (std::size_t j = 0; j < n; ++j) sample_in_ball(stream, radius, cloud.row(j));
    return cloud;
}

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline double frobenius_norm(std::span<const double> m) {
    double s = 0.0;
    for (double v : m) s += v * v;
    return std::sqrt(s);
}

/// theta-Wasserstein between equal-size probe clouds: exact sorted coupling
/// in d = 1, identity-pairing upper bound otherwise (which only relaxes the
/// checks it feeds).
inline double probe_distance(const measure::EmpiricalMeasure& mu, const measure::EmpiricalMeasure& nu,
                             measure::Theta theta) {
    if (mu.dimension() == 1) return measure::wasserstein_1d(mu, nu, theta);
    return measure::pairing_bound(mu, nu, theta);
}

inline void track(AssumptionCheck& check, double lhs, double bracket, double bound,
                  const std::function<ProbeWitness()>& make_witness) {
    if (!std::isfinite(lhs)) {
        if (check.ok) {
            check.ok = false;
            check.witness = make_witness();
            check.witness->check += " (non-finite coefficient output)";
        }
        return;
    }
    if (!(bracket > 0.0)) return;
    const double ratio = lhs / bracket;
    if (ratio > check.worst_ratio) check.worst_ratio = ratio;
    if (ratio > bound * (1.0 + 1e-12) + 1e-15 && check.ok) {
        check.ok = false;
        check.witness = make_witness();
    }
}

}  // namespace detail

/// Draws random state/measure pairs in the ball of the given radius and
/// checks each structural inequality on them. Deterministic given
/// (seed, n_probes, radius).
inline AssumptionReport validate_assumptions(const ModelSpec& spec, std::size_t n_probes,
                                             double radius, std::uint64_t seed) {
    if (n_probes < 1) throw std::invalid_argument("validate_assumptions: need n_probes >= 1");
    if (!(radius > 0.0)) throw std::invalid_argument("validate_assumptions: radius must be positive");
    validate_spec(spec);

    const std::size_t d = spec.dimension;
    const double lambda = spec.neutral_contraction;
    const double L = spec.lipschitz_L;
    const double l = spec.growth_l;

    AssumptionReport report;
    report.probes_used = n_probes;
    report.seed = seed;

    std::vector<double> x(d), x_bar(d), y(d), y_bar(d);
    std::vector<double> dx(d), dx_bar(d), bv(d), bv_bar(d);
    std::vector<double> sig(d * d), sig_bar(d * d), sig_x(d * d);

    for (std::size_t probe = 0; probe < n_probes; ++probe) {
        rng::Stream stream(seed, probe, rng::StreamTag::assumption_probe);
        detail::sample_in_ball(stream, radius, x);
        detail::sample_in_ball(stream, radius, x_bar);
        detail::sample_in_ball(stream, radius, y);
        detail::sample_in_ball(stream, radius, y_bar);
        const std::size_t atoms = 1 + static_cast<std::size_t>(stream.uniform01() * 8.0);
        measure::EmpiricalMeasure mu(detail::sample_cloud(stream, atoms, d, radius));
        measure::EmpiricalMeasure nu(detail::sample_cloud(stream, atoms, d, radius));

        auto witness = [&](const char* check) {
            return [&, check]() {
                ProbeWitness w;
                w.check = check;
                w.x = x;
                w.x_bar = x_bar;
                w.y = y;
                w.y_bar = y_bar;
                w.mu_samples = mu.samples();
                w.nu_samples = nu.samples();
                return w;
            };
        };

        // Contraction of the neutral map.
        spec.neutral_map(x, dx);
        spec.neutral_map(x_bar, dx_bar);
        {
            const double lhs = detail::all_finite(dx) && detail::all_finite(dx_bar)
                                   ? measure::euclidean_distance(dx, dx_bar)
                                   : std::nan("");
            detail::track(report.contraction, lhs, measure::euclidean_distance(x, x_bar), lambda,
                          witness("contraction"));
        }

        const double w_mu_nu = detail::probe_distance(mu, nu, spec.theta);
        const double w_mu_0 = measure::theta_moment(mu, spec.theta);
        const double norm_y = measure::euclidean_norm(y);
        const double norm_y_bar = measure::euclidean_norm(y_bar);

        // Drift Lipschitz with the super-linear delay modulus.
        spec.drift(x, y, mu, bv);
        spec.drift(x_bar, y_bar, nu, bv_bar);
        {
            const double lhs = detail::all_finite(bv) && detail::all_finite(bv_bar)
                                   ? measure::euclidean_distance(bv, bv_bar)
                                   : std::nan("");
            const double bracket = measure::euclidean_distance(x, x_bar) +
                                   (1.0 + std::pow(norm_y, l) + std::pow(norm_y_bar, l)) *
                                       measure::euclidean_distance(y, y_bar) +
                                   w_mu_nu;
            detail::track(report.drift_lipschitz, lhs, bracket, L, witness("drift_lipschitz"));
        }

        // Diffusion Lipschitz in the measure at fixed state, plus detection
        // of any state dependence.
        spec.diffusion(x, mu, sig);
        spec.diffusion(x, nu, sig_bar);
        {
            double lhs = std::nan("");
            if (detail::all_finite(sig) && detail::all_finite(sig_bar)) {
                lhs = 0.0;
                for (std::size_t i = 0; i < sig.size(); ++i)
                    lhs += (sig[i] - sig_bar[i]) * (sig[i] - sig_bar[i]);
                lhs = std::sqrt(lhs);
            }
            detail::track(report.diffusion_lipschitz, lhs, w_mu_nu, L, witness("diffusion_lipschitz"));
        }
        if (!report.diffusion_state_dependent) {
            spec.diffusion(x_bar, mu, sig_x);
            for (std::size_t i = 0; i < sig.size(); ++i)
                if (std::abs(sig[i] - sig_x[i]) > 1e-12) {
                    report.diffusion_state_dependent = true;
                    break;
                }
        }

        // Growth bounds.
        detail::track(report.drift_growth,
                      detail::all_finite(bv) ? measure::euclidean_norm(bv) : std::nan(""),
                      1.0 + measure::euclidean_norm(x) + std::pow(norm_y, l + 1.0) + w_mu_0, L,
                      witness("drift_growth"));
        detail::track(report.diffusion_growth,
                      detail::all_finite(sig) ? detail::frobenius_norm(sig) : std::nan(""),
                      1.0 + w_mu_0, L, witness("diffusion_growth"));
    }
    return report;
}

/// Initial segment constant in time, with xi(0) standard normal in every
/// component.
inline InitialSegmentSampler standard_normal_constant_segment(std::size_t dimension) {
    return [dimension](rng::Stream& stream) {
        std::vector<double> value(dimension);
        for (double& v : value) v = stream.normal();
        return SegmentFn([value = std::move(value)](double, std::span<double> out) {
            std::copy(value.begin(), value.end(), out.begin());
        });
    };
}

/// The one-dimensional super-linear example:
/// d(X_t + X_{t-tau}/2) = (X_t + X_{t-tau}^2 + (X_t - mean)) dt + (X_t - mean) dB^H_t,
/// i.e. D(x) = -x/2, b(x,y,mu) = x + y^2 + (x - mean(mu)),
/// sigma(x,mu) = x - mean(mu), xi constant with xi(0) ~ N(0,1).
inline ModelSpec example_model(double tau = 1.0) {
    ModelSpec spec;
    spec.name = "example61";
    spec.dimension = 1;
    spec.delay = tau;
    spec.neutral_contraction = 0.5;
    spec.growth_l = 1.0;
    spec.lipschitz_L = 2.0;
    spec.theta = measure::Theta(2.0);
    spec.diffusion_uses_state = true;
    spec.neutral_map = [](std::span<const double> x, std::span<double> out) { out[0] = -0.5 * x[0]; };
    spec.drift = [](std::span<const double> x, std::span<const double> y,
                    const measure::EmpiricalMeasure& mu, std::span<double> out) {
        out[0] = x[0] + y[0] * y[0] + (x[0] - mu.mean()[0]);
    };
    spec.diffusion = [](std::span<const double> x, const measure::EmpiricalMeasure& mu,
                        std::span<double> out) { out[0] = x[0] - mu.mean()[0]; };
    spec.initial_segment = standard_normal_constant_segment(1);
    validate_spec(spec);
    return spec;
}

/// Trivial additive-noise model: D = 0, b = 0, sigma = identity. Any
/// consistent scheme reproduces X_t = xi(0) + B^H_t with zero discretization
/// error, which makes it the solver's exact-solution oracle.
inline ModelSpec additive_model(std::size_t dimension = 1, double tau = 1.0) {
    ModelSpec spec;
    spec.name = "additive";
    spec.dimension = dimension;
    spec.delay = tau;
    spec.neutral_contraction = 0.5;
    spec.growth_l = 1.0;
    // Frobenius norm of the identity is sqrt(d); L = 1 suffices only in d = 1.
    spec.lipschitz_L = std::max(1.0, std::sqrt(static_cast<double>(dimension)));
    spec.theta = measure::Theta(2.0);
    spec.diffusion_uses_state = false;
    spec.neutral_map = [](std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
    };
    spec.drift = [](std::span<const double>, std::span<const double>,
                    const measure::EmpiricalMeasure&, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
    };
    spec.diffusion = [dimension](std::span<const double>, const measure::EmpiricalMeasure&,
                                 std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t c = 0; c < dimension; ++c) out[c * dimension + c] = 1.0;
    };
    spec.initial_segment = standard_normal_constant_segment(dimension);
    validate_spec(spec);
    return spec;
}

/// CLI model registry; user-defined models are code-level only.
inline ModelSpec model_by_name(const std::string& name, std::size_t dimension = 1, double tau = 1.0) {
    if (name == "example61") {
        if (dimension != 1) throw std::invalid_argument("example61 is one-dimensional");
        return example_model(tau);
    }
    if (name == "additive") return additive_model(dimension, tau);
    throw std::invalid_argument("unknown model: " + name + " (expected example61 or additive)");
}

}  // namespace mvsdde::model
