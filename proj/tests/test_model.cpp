#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mvsdde/model.hpp"

using namespace mvsdde;
using Catch::Matchers::WithinAbs;

TEST_CASE("example model coefficients") {
    const auto spec = model::example_model();
    double out = 0.0;

    // D(1) = -1/2, so X_t - D(X_{t-tau}) = X_t + X_{t-tau}/2.
    double x = 1.0;
    spec.neutral_map(std::span<const double>(&x, 1), std::span<double>(&out, 1));
    CHECK_THAT(out, WithinAbs(-0.5, 0.0));

    // b(0, 0, delta_0) = 0.
    const auto delta0 = measure::EmpiricalMeasure::dirac1(0.0);
    double zero = 0.0;
    spec.drift(std::span<const double>(&zero, 1), std::span<const double>(&zero, 1), delta0,
               std::span<double>(&out, 1));
    CHECK_THAT(out, WithinAbs(0.0, 0.0));

    // Hand evaluation: b(1, 2, delta_3) = 1 + 4 + (1 - 3) = 3.
    double one = 1.0, two = 2.0;
    const auto delta3 = measure::EmpiricalMeasure::dirac1(3.0);
    spec.drift(std::span<const double>(&one, 1), std::span<const double>(&two, 1), delta3,
               std::span<double>(&out, 1));
    CHECK_THAT(out, WithinAbs(3.0, 0.0));

    // sigma(x, mu) = x - mean(mu).
    spec.diffusion(std::span<const double>(&one, 1), delta3, std::span<double>(&out, 1));
    CHECK_THAT(out, WithinAbs(-2.0, 0.0));

    CHECK(spec.diffusion_uses_state);
    CHECK(spec.neutral_contraction == 0.5);
    CHECK(spec.growth_l == 1.0);
    CHECK(spec.theta.value() == 2.0);
}

TEST_CASE("example model passes the assumption probe") {
    const auto spec = model::example_model();
    const auto report = model::validate_assumptions(spec, 800, 2.0, 424242);
    CHECK(report.contraction.ok);
    // |D(x) - D(y)| = |x - y| / 2 exactly.
    CHECK_THAT(report.contraction.worst_ratio, WithinAbs(0.5, 1e-13));
    CHECK(report.drift_lipschitz.ok);
    CHECK(report.diffusion_lipschitz.ok);
    CHECK(report.growth_ok());
    CHECK(report.diffusion_state_dependent);
    CHECK(report.probes_used == 800);
}

TEST_CASE("additive model passes all checks with L = 1") {
    const auto spec = model::additive_model();
    CHECK(spec.lipschitz_L == 1.0);
    const auto report = model::validate_assumptions(spec, 500, 3.0, 7);
    CHECK(report.all_ok());
    CHECK_FALSE(report.diffusion_state_dependent);
    CHECK(report.contraction.worst_ratio == 0.0);

    const auto spec3 = model::additive_model(3, 0.5);
    CHECK(model::validate_assumptions(spec3, 200, 2.0, 8).all_ok());
}

TEST_CASE("assumption probe flags violations with witnesses") {
    auto spec = model::additive_model();
    // D(x) = 2x breaks the contraction (and D(0) = 0 still holds).
    spec.neutral_map = [](std::span<const double> x, std::span<double> out) { out[0] = 2.0 * x[0]; };
    const auto report = model::validate_assumptions(spec, 100, 1.0, 3);
    CHECK_FALSE(report.contraction.ok);
    REQUIRE(report.contraction.witness.has_value());
    CHECK(report.contraction.witness->check == "contraction");
    CHECK(report.contraction.worst_ratio > 1.0);

    // Non-finite drift output is reported as a violation, not a crash.
    auto bad = model::additive_model();
    bad.drift = [](std::span<const double>, std::span<const double>, const measure::EmpiricalMeasure&,
                   std::span<double> out) { out[0] = std::nan(""); };
    const auto nan_report = model::validate_assumptions(bad, 10, 1.0, 3);
    CHECK_FALSE(nan_report.drift_lipschitz.ok);
    REQUIRE(nan_report.drift_lipschitz.witness.has_value());
    CHECK(nan_report.drift_lipschitz.witness->check.find("non-finite") != std::string::npos);
}

TEST_CASE("probe ratio oracle: D(x) = -x/2 has worst ratio exactly one half") {
    auto spec = model::additive_model();
    spec.neutral_map = [](std::span<const double> x, std::span<double> out) { out[0] = -0.5 * x[0]; };
    const auto report = model::validate_assumptions(spec, 300, 2.0, 11);
    CHECK(report.contraction.ok);
    CHECK_THAT(report.contraction.worst_ratio, WithinAbs(0.5, 1e-13));
}

TEST_CASE("validate_assumptions is deterministic in (seed, n_probes, radius)") {
    const auto spec = model::example_model();
    const auto a = model::validate_assumptions(spec, 64, 1.5, 555);
    const auto b = model::validate_assumptions(spec, 64, 1.5, 555);
    CHECK(a.contraction.worst_ratio == b.contraction.worst_ratio);
    CHECK(a.drift_lipschitz.worst_ratio == b.drift_lipschitz.worst_ratio);
    CHECK(a.diffusion_lipschitz.worst_ratio == b.diffusion_lipschitz.worst_ratio);
    CHECK(a.drift_growth.worst_ratio == b.drift_growth.worst_ratio);
    const auto c = model::validate_assumptions(spec, 64, 1.5, 556);
    CHECK(a.drift_lipschitz.worst_ratio != c.drift_lipschitz.worst_ratio);
}

TEST_CASE("spec validation rejects malformed models") {
    auto spec = model::example_model();
    spec.neutral_contraction = 1.0;
    CHECK_THROWS_AS(model::validate_spec(spec), std::invalid_argument);

    spec = model::example_model();
    spec.delay = 0.0;
    CHECK_THROWS_AS(model::validate_spec(spec), std::invalid_argument);

    spec = model::example_model();
    spec.neutral_map = [](std::span<const double>, std::span<double> out) { out[0] = 0.25; };
    CHECK_THROWS_AS(model::validate_spec(spec), std::invalid_argument);

    CHECK_THROWS_AS(model::model_by_name("nope"), std::invalid_argument);
    CHECK_THROWS_AS(model::model_by_name("example61", 2), std::invalid_argument);
}

TEST_CASE("initial segment sampler is constant in time and per-particle deterministic") {
    const auto spec = model::example_model();
    rng::Stream s1(10, 4, rng::StreamTag::initial_segment);
    rng::Stream s2(10, 4, rng::StreamTag::initial_segment);
    const auto f1 = spec.initial_segment(s1);
    const auto f2 = spec.initial_segment(s2);
    double a = 0, b = 0, c = 0;
    f1(-1.0, std::span<double>(&a, 1));
    f1(0.0, std::span<double>(&b, 1));
    f2(-0.5, std::span<double>(&c, 1));
    CHECK(a == b);
    CHECK(a == c);
}
