#pragma once

#include <cstdio>
#include <ostream>
#include <string>

#include <json.hpp>

#include "mvsdde/experiments.hpp"
#include "mvsdde/fbm_checks.hpp"
#include "mvsdde/model.hpp"
#include "mvsdde/solver.hpp"

namespace mvsdde::report {

using Json = nlohmann::ordered_json;

inline Json to_json(const experiments::LogLogFit& fit) {
    return Json{{"slope", fit.slope},
                {"intercept", fit.intercept},
                {"slope_stderr", fit.slope_stderr},
                {"r_squared", fit.r_squared}};
}

inline Json to_json(const experiments::LevelStat& s) {
    return Json{{"level", s.level},
                {"error", s.error},
                {"error_p", s.error_p},
                {"error_stderr", s.error_stderr},
                {"error_p_stderr", s.error_p_stderr},
                {"n_effective", s.n_effective},
                {"n_diverged", s.n_diverged},
                {"dropped", s.dropped}};
}

inline Json to_json(const experiments::ConvergenceReport& r) {
    Json j{{"study", "strong_convergence"},
           {"model", r.model_name},
           {"hurst", r.hurst},
           {"n_particles", r.n_particles},
           {"fine_steps", r.fine_steps},
           {"p", r.p},
           {"n_mc", r.n_mc},
           {"seed", r.seed},
           {"exact", r.exact}};
    j["levels"] = Json::array();
    for (const auto& s : r.levels) j["levels"].push_back(to_json(s));
    j["fit_root_error"] = r.fit ? to_json(*r.fit) : Json(nullptr);
    j["fit_p_power_error"] = r.fit_p ? to_json(*r.fit_p) : Json(nullptr);
    return j;
}

inline Json to_json(const experiments::ChaosReport& r) {
    Json j{{"study", "propagation_of_chaos"},
           {"note",
            "levels compare the N-particle system against a coupled reference system; the measured "
            "rate is bounded by the sum of the two chaos terms (level and reference)"},
           {"model", r.model_name},
           {"hurst", r.hurst},
           {"reference_count", r.reference_count},
           {"grid_steps", r.grid_steps},
           {"p", r.p},
           {"n_mc", r.n_mc},
           {"seed", r.seed},
           {"exact", r.exact}};
    j["levels"] = Json::array();
    for (const auto& s : r.levels) j["levels"].push_back(to_json(s));
    j["fit_root_error"] = r.fit ? to_json(*r.fit) : Json(nullptr);
    j["fit_p_power_error"] = r.fit_p ? to_json(*r.fit_p) : Json(nullptr);
    return j;
}

inline Json to_json(const experiments::MomentLevel& l, const std::vector<double>& p_values) {
    Json j{{"step", l.step},
           {"divergence_fraction", l.divergence_fraction},
           {"reliable", l.reliable}};
    j["estimates"] = Json::array();
    for (std::size_t i = 0; i < p_values.size(); ++i)
        j["estimates"].push_back(Json{{"p", p_values[i]},
                                      {"estimate", l.estimates[i]},
                                      {"stderr", l.stderrs[i]}});
    return j;
}

inline Json to_json(const experiments::MomentReport& r) {
    Json j{{"study", "moment_stability"},
           {"model", r.model_name},
           {"n_mc", r.n_mc},
           {"seed", r.seed}};
    j["p_values"] = r.p_values;
    j["coarse"] = to_json(r.coarse, r.p_values);
    j["fine"] = to_json(r.fine, r.p_values);
    j["relative_delta"] = r.relative_delta;
    j["bands_overlap"] = r.bands_overlap;
    return j;
}

inline Json to_json(const fbm::StatCheck& c) {
    return Json{{"name", c.name}, {"max_abs_z", c.max_abs_z}, {"bound", c.bound}, {"pass", c.pass}};
}

inline Json to_json(const fbm::CheckSuiteReport& r) {
    Json j{{"suite", "fbm_statistical_checks"}, {"pass", r.pass}};
    j["checks"] = Json::array();
    for (const auto& c : r.checks) j["checks"].push_back(to_json(c));
    return j;
}

inline Json to_json(const model::AssumptionCheck& c) {
    Json j{{"ok", c.ok}, {"worst_ratio", c.worst_ratio}};
    if (c.witness) {
        Json w{{"check", c.witness->check},
               {"x", c.witness->x},
               {"x_bar", c.witness->x_bar},
               {"y", c.witness->y},
               {"y_bar", c.witness->y_bar}};
        Json mu = Json::array(), nu = Json::array();
        for (std::size_t r = 0; r < c.witness->mu_samples.rows(); ++r) {
            const auto row = c.witness->mu_samples.row(r);
            mu.push_back(std::vector<double>(row.begin(), row.end()));
        }
        for (std::size_t r = 0; r < c.witness->nu_samples.rows(); ++r) {
            const auto row = c.witness->nu_samples.row(r);
            nu.push_back(std::vector<double>(row.begin(), row.end()));
        }
        w["mu_samples"] = mu;
        w["nu_samples"] = nu;
        j["witness"] = w;
    }
    return j;
}

inline Json to_json(const model::AssumptionReport& r) {
    return Json{{"contraction", to_json(r.contraction)},
                {"drift_lipschitz", to_json(r.drift_lipschitz)},
                {"diffusion_lipschitz", to_json(r.diffusion_lipschitz)},
                {"drift_growth", to_json(r.drift_growth)},
                {"diffusion_growth", to_json(r.diffusion_growth)},
                {"growth_ok", r.growth_ok()},
                {"all_ok", r.all_ok()},
                {"diffusion_state_dependent", r.diffusion_state_dependent},
                {"probes_used", r.probes_used},
                {"seed", r.seed}};
}

inline Json config_echo(const solver::SimConfig& cfg, const std::string& model_name) {
    return Json{{"model", model_name},
                {"n_particles", cfg.n_particles},
                {"step", cfg.grid.step},
                {"n_steps", cfg.grid.n_steps},
                {"delay_steps", cfg.grid.delay_steps},
                {"hurst", cfg.hurst.value()},
                {"seed", cfg.seed},
                {"scheme", solver::scheme_name(cfg.scheme)},
                {"caratheodory_lag_steps", cfg.caratheodory_lag_steps},
                {"allow_small_hurst", cfg.allow_small_hurst}};
}

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Per-level CSV table: level parameter, error, stderr, effective sample
/// count. RFC-4180 line endings, round-trip double precision.
template <typename Report>
inline void write_levels_csv(const Report& r, std::ostream& os) {
    os << "level,error,stderr,n_effective\r\n";
    for (const auto& s : r.levels)
        os << format_double(s.level) << ',' << format_double(s.error) << ','
           << format_double(s.error_stderr) << ',' << s.n_effective << "\r\n";
}

}  // namespace mvsdde::report
