// Command-line front end: study orchestration and artifact emission.
// Exit codes: 0 pass, 1 usage/IO error, 2 statistical or study failure,
// 3 divergence.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mvsdde/config.hpp"
#include "mvsdde/mvsdde.hpp"
#include "mvsdde/report_io.hpp"
#include "mvsdde/svg.hpp"

namespace {

using mvsdde::config::Config;
using Json = mvsdde::report::Json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitStatFailure = 2;
constexpr int kExitDivergence = 3;

struct CommonArgs {
    std::string config_path;
    std::uint64_t seed = 12345;
    unsigned threads = 0;  // 0 = auto
    std::string out_dir = "out";
    CLI::Option* seed_opt = nullptr;
    CLI::Option* threads_opt = nullptr;
    CLI::Option* out_opt = nullptr;

    Config file;  // loaded before the command runs

    void load() {
        if (!config_path.empty()) file = Config::parse_file(config_path);
        if (!seed_opt->count() && file.has("seed"))
            seed = static_cast<std::uint64_t>(file.get_int("seed", 0));
        if (!threads_opt->count() && file.has("threads"))
            threads = static_cast<unsigned>(file.get_int("threads", 0));
        if (!out_opt->count() && file.has("out")) out_dir = file.get_string("out", out_dir);
    }

    double pick_double(const CLI::Option* opt, double flag_value, const std::string& key,
                       double fallback) const {
        if (opt->count()) return flag_value;
        return file.get_double(key, fallback);
    }
    std::int64_t pick_int(const CLI::Option* opt, std::int64_t flag_value, const std::string& key,
                          std::int64_t fallback) const {
        if (opt->count()) return flag_value;
        return file.get_int(key, fallback);
    }
    std::string pick_string(const CLI::Option* opt, const std::string& flag_value,
                            const std::string& key, const std::string& fallback) const {
        if (opt->count()) return flag_value;
        return file.get_string(key, fallback);
    }
    bool pick_bool(const CLI::Option* opt, bool flag_value, const std::string& key,
                   bool fallback) const {
        if (opt->count()) return flag_value;
        return file.get_bool(key, fallback);
    }
    std::vector<double> pick_array(const CLI::Option* opt, const std::vector<double>& flag_value,
                                   const std::string& key, std::vector<double> fallback) const {
        if (opt->count()) return flag_value;
        return file.get_array(key, std::move(fallback));
    }
};

std::filesystem::path prepare_out_dir(const CommonArgs& common) {
    std::filesystem::path dir(common.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory: " + dir.string());
    return dir;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
    os << content;
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

void write_json(const std::filesystem::path& path, const Json& j) {
    write_text(path, j.dump(2) + "\n");
}

std::vector<std::size_t> to_sizes(const std::vector<double>& v, const char* what) {
    std::vector<std::size_t> out;
    for (const double x : v) {
        if (!(x >= 1.0) || x != std::floor(x))
            throw std::invalid_argument(std::string(what) + " must be positive integers");
        out.push_back(static_cast<std::size_t>(x));
    }
    return out;
}

// ---------------------------------------------------------------------------

struct FbmCheckArgs {
    double hurst = 0.8;
    std::int64_t grid_points = 16;
    double horizon = 1.0;
    std::int64_t n_paths = 10000;
    std::string method = "circulant";
    bool cross_check = false;
    std::string dump_paths;
    CLI::Option *hurst_opt, *grid_opt, *horizon_opt, *paths_opt, *method_opt, *cross_opt, *dump_opt;
};

int cmd_fbm_check(CommonArgs& common, FbmCheckArgs& args) {
    common.load();
    const double hurst = common.pick_double(args.hurst_opt, args.hurst, "fbm-check.hurst", 0.8);
    const auto grid_points = common.pick_int(args.grid_opt, args.grid_points, "fbm-check.grid_points", 16);
    const double horizon = common.pick_double(args.horizon_opt, args.horizon, "fbm-check.horizon", 1.0);
    const auto n_paths = common.pick_int(args.paths_opt, args.n_paths, "fbm-check.n_paths", 10000);
    const std::string method_name =
        common.pick_string(args.method_opt, args.method, "fbm-check.method", "circulant");
    const bool cross_check =
        common.pick_bool(args.cross_opt, args.cross_check, "fbm-check.cross_check", false);
    const std::string dump_paths =
        common.pick_string(args.dump_opt, args.dump_paths, "fbm-check.dump_paths", "");
    if (grid_points < 2 || n_paths < 16) throw std::invalid_argument("fbm-check: grid/path counts too small");

    const mvsdde::HurstExponent H(hurst);
    const auto method = mvsdde::fbm::method_from_name(method_name);
    auto report = mvsdde::fbm::run_check_suite(H, static_cast<std::size_t>(grid_points), horizon,
                                               static_cast<std::size_t>(n_paths), common.seed, method);
    if (cross_check)
        report.add(mvsdde::fbm::method_agreement(H, 256, 16, std::min<std::size_t>(n_paths, 4000),
                                                 common.seed));

    const auto dir = prepare_out_dir(common);
    Json j;
    j["config"] = Json{{"hurst", hurst},
                       {"grid_points", grid_points},
                       {"horizon", horizon},
                       {"n_paths", n_paths},
                       {"method", method_name},
                       {"cross_check", cross_check},
                       {"seed", common.seed}};
    j["result"] = mvsdde::report::to_json(report);
    write_json(dir / "fbm_check.json", j);

    if (!dump_paths.empty()) {
        const mvsdde::TimeGrid grid(horizon / static_cast<double>(grid_points),
                                    static_cast<std::size_t>(grid_points),
                                    static_cast<std::size_t>(grid_points));
        const auto batch = mvsdde::fbm::sample_paths(H, grid, static_cast<std::size_t>(n_paths),
                                                     common.seed, method);
        std::ofstream os(dir / dump_paths, std::ios::binary);
        if (!os) throw std::runtime_error("cannot open path dump for writing");
        mvsdde::fbm::write_fbmp(batch, os);
    }

    std::cout << (report.pass ? "fbm-check: pass" : "fbm-check: statistical failure") << "\n";
    return report.pass ? kExitOk : kExitStatFailure;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string model;
    std::int64_t dimension = 1;
    double tau = 1.0;
    double horizon = 0.0;  // 0 means "equal to tau"
    double hurst = 0.8;
    std::int64_t n_particles = 256;
    std::int64_t steps = 256;
    std::string scheme = "euler_maruyama";
    std::int64_t lag = 1;
    bool allow_small_hurst = false;
    CLI::Option *model_opt, *dim_opt, *tau_opt, *horizon_opt, *hurst_opt, *particles_opt, *steps_opt,
        *scheme_opt, *lag_opt, *small_hurst_opt;
};

int cmd_simulate(CommonArgs& common, SimulateArgs& args) {
    common.load();
    const std::string model_name = common.pick_string(args.model_opt, args.model, "simulate.model", "");
    if (model_name.empty()) throw std::invalid_argument("simulate: a model name is required");
    const auto dimension = common.pick_int(args.dim_opt, args.dimension, "simulate.dimension", 1);
    const double tau = common.pick_double(args.tau_opt, args.tau, "simulate.tau", 1.0);
    double horizon = common.pick_double(args.horizon_opt, args.horizon, "simulate.horizon", 0.0);
    if (horizon == 0.0) horizon = tau;
    const double hurst = common.pick_double(args.hurst_opt, args.hurst, "simulate.hurst", 0.8);
    const auto n_particles =
        common.pick_int(args.particles_opt, args.n_particles, "simulate.n_particles", 256);
    const auto steps = common.pick_int(args.steps_opt, args.steps, "simulate.steps", 256);
    const std::string scheme_name =
        common.pick_string(args.scheme_opt, args.scheme, "simulate.scheme", "euler_maruyama");
    const auto lag = common.pick_int(args.lag_opt, args.lag, "simulate.caratheodory_lag_steps", 1);
    const bool allow_small_hurst = common.pick_bool(args.small_hurst_opt, args.allow_small_hurst,
                                                    "simulate.allow_small_hurst", false);

    const auto spec = mvsdde::model::model_by_name(model_name, static_cast<std::size_t>(dimension), tau);
    mvsdde::solver::SimConfig cfg;
    cfg.n_particles = static_cast<std::size_t>(n_particles);
    cfg.grid = mvsdde::make_grid(horizon, tau, static_cast<std::size_t>(steps));
    cfg.hurst = mvsdde::HurstExponent(hurst);
    cfg.seed = common.seed;
    cfg.scheme = mvsdde::solver::scheme_from_name(scheme_name);
    cfg.caratheodory_lag_steps = static_cast<std::size_t>(lag);
    cfg.allow_small_hurst = allow_small_hurst;
    mvsdde::solver::validate_config(cfg);

    const auto drivers = mvsdde::solver::make_drivers(spec.dimension, cfg);
    const auto out = mvsdde::solver::simulate(spec, cfg, drivers, std::nullopt,
                                              mvsdde::resolve_threads(common.threads));

    const auto dir = prepare_out_dir(common);
    {
        std::ofstream os(dir / "trajectory.csv", std::ios::binary);
        if (!os) throw std::runtime_error("cannot open trajectory.csv for writing");
        mvsdde::solver::write_trajectory_csv(out, os);
    }

    Json j;
    j["config"] = mvsdde::report::config_echo(cfg, model_name);
    j["warnings"] = out.warnings;
    if (out.diverged()) {
        j["divergence"] = Json{{"step", out.divergence->step}, {"particle", out.divergence->particle}};
        write_json(dir / "summary.json", j);
        std::cout << "simulate: diverged at step " << out.divergence->step << "\n";
        return kExitDivergence;
    }
    j["divergence"] = Json(nullptr);

    // Terminal-time empirical moments.
    const auto& terminal = out.at(out.last_index());
    mvsdde::measure::EmpiricalMeasure mu(terminal);
    Json moments;
    moments["mean"] = mvsdde::measure::mean(mu);
    for (const double p : {1.0, 2.0, 4.0})
        moments["theta_moment_p" + std::to_string(static_cast<int>(p))] =
            mvsdde::measure::theta_moment(mu, mvsdde::measure::Theta(p));
    j["terminal_moments"] = moments;

    if (model_name == "additive") {
        // Exact-solution check: Y_t must equal xi(0) + B_t up to accumulation
        // roundoff.
        double worst = 0.0;
        for (std::size_t i = 0; i < cfg.n_particles; ++i) {
            for (std::size_t c = 0; c < spec.dimension; ++c) {
                double b = 0.0;
                const double xi = out.at(0)(i, c);
                for (std::ptrdiff_t k = 1; k <= out.last_index(); ++k) {
                    b += drivers.increments[static_cast<std::size_t>(k - 1)](i, c);
                    worst = std::max(worst, std::abs(out.at(k)(i, c) - (xi + b)));
                }
            }
        }
        const double bound = 1e-12 * static_cast<double>(cfg.grid.n_steps);
        j["exact_solution_check"] =
            Json{{"max_deviation", worst}, {"bound", bound}, {"pass", worst <= bound}};
    }
    write_json(dir / "summary.json", j);
    std::cout << "simulate: ok\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct StudyArgs {
    std::string model = "example61";
    double tau = 1.0;
    double hurst = 0.8;
    double p = 2.0;
    std::int64_t n_mc = 0;
    double ref_slope = 0.0;
    bool self_test = false;
    double self_test_slope = 0.8;
    // convergence specific
    std::int64_t fine_steps = 2048;
    std::vector<double> factors = {8, 16, 32, 64, 128};
    std::int64_t n_particles = 256;
    // chaos specific
    std::vector<double> counts = {16, 32, 64, 128, 256};
    std::int64_t reference_count = 2048;
    std::int64_t steps = 256;
    CLI::Option *model_opt, *tau_opt, *hurst_opt, *p_opt, *nmc_opt, *ref_slope_opt, *self_opt,
        *self_slope_opt, *fine_opt, *factors_opt, *particles_opt, *counts_opt, *refcount_opt,
        *steps_opt;
};

int run_self_test(const CommonArgs& common, const std::string& study, double slope,
                  const std::vector<double>& levels) {
    // Injected exact power law: the fit must recover the exponent exactly.
    std::vector<double> ys;
    for (const double x : levels) ys.push_back(0.37 * std::pow(x, slope));
    const auto fit = mvsdde::experiments::fit_loglog_slope(levels, ys);
    const bool pass = std::abs(fit.slope - slope) <= 1e-12 && fit.slope_stderr <= 1e-9;
    Json j{{"study", study + "_self_test"},
           {"injected_slope", slope},
           {"recovered_slope", fit.slope},
           {"slope_stderr", fit.slope_stderr},
           {"r_squared", fit.r_squared},
           {"pass", pass}};
    write_json(prepare_out_dir(common) / (study + "_self_test.json"), j);
    std::cout << study << " self-test: " << (pass ? "pass" : "fail") << "\n";
    return pass ? kExitOk : kExitStatFailure;
}

int cmd_convergence(CommonArgs& common, StudyArgs& args) {
    common.load();
    const std::string model_name =
        common.pick_string(args.model_opt, args.model, "convergence.model", "example61");
    const double tau = common.pick_double(args.tau_opt, args.tau, "convergence.tau", 1.0);
    const double hurst = common.pick_double(args.hurst_opt, args.hurst, "convergence.hurst", 0.8);
    const double p = common.pick_double(args.p_opt, args.p, "convergence.p", 2.0);
    const auto n_mc = common.pick_int(args.nmc_opt, args.n_mc, "convergence.n_mc", 500);
    const auto fine_steps =
        common.pick_int(args.fine_opt, args.fine_steps, "convergence.fine_steps", 2048);
    const auto factors = to_sizes(
        common.pick_array(args.factors_opt, args.factors, "convergence.factors", {8, 16, 32, 64, 128}),
        "coarse factors");
    const auto n_particles =
        common.pick_int(args.particles_opt, args.n_particles, "convergence.n_particles", 256);
    const double ref_slope =
        common.pick_double(args.ref_slope_opt, args.ref_slope, "convergence.ref_slope", hurst);
    const bool self_test = common.pick_bool(args.self_opt, args.self_test, "convergence.self_test", false);

    if (self_test) {
        std::vector<double> deltas;
        for (const auto f : factors)
            deltas.push_back(tau / static_cast<double>(fine_steps) * static_cast<double>(f));
        return run_self_test(common, "convergence",
                             common.pick_double(args.self_slope_opt, args.self_test_slope,
                                                "convergence.self_test_slope", 0.8),
                             deltas);
    }

    const auto spec = mvsdde::model::model_by_name(model_name, 1, tau);
    const auto report = mvsdde::experiments::strong_convergence_study(
        spec, mvsdde::HurstExponent(hurst), factors, static_cast<std::size_t>(fine_steps),
        static_cast<std::size_t>(n_particles), p, static_cast<std::size_t>(n_mc), common.seed,
        mvsdde::resolve_threads(common.threads));

    const auto dir = prepare_out_dir(common);
    Json j;
    j["config"] = Json{{"model", model_name},
                       {"tau", tau},
                       {"hurst", hurst},
                       {"p", p},
                       {"n_mc", n_mc},
                       {"fine_steps", fine_steps},
                       {"factors", factors},
                       {"n_particles", n_particles},
                       {"ref_slope", ref_slope},
                       {"seed", common.seed},
                       {"diffusion_uses_state", spec.diffusion_uses_state}};
    j["result"] = mvsdde::report::to_json(report);
    write_json(dir / "convergence_report.json", j);
    {
        std::ofstream os(dir / "convergence_levels.csv", std::ios::binary);
        if (!os) throw std::runtime_error("cannot open levels csv for writing");
        mvsdde::report::write_levels_csv(report, os);
    }
    if (!report.exact) {
        std::vector<mvsdde::svg::Series> series(2);
        series[0].label = "root error (p-th root)";
        series[1].label = "p-power error";
        series[1].color = "#b44b1f";
        for (const auto& s : report.levels) {
            if (s.dropped || !(s.error > 0.0)) continue;
            series[0].xs.push_back(s.level);
            series[0].ys.push_back(s.error);
            series[1].xs.push_back(s.level);
            series[1].ys.push_back(s.error_p);
        }
        write_text(dir / "convergence.svg",
                   mvsdde::svg::loglog_chart("Strong error vs step size", "step size", "error", series,
                                             ref_slope,
                                             "guide slope " + mvsdde::report::format_double(ref_slope)));
    }
    std::cout << "convergence: ok";
    if (report.fit)
        std::cout << " (root-error slope " << report.fit->slope << " +/- " << report.fit->slope_stderr
                  << ")";
    std::cout << "\n";
    return kExitOk;
}

int cmd_chaos(CommonArgs& common, StudyArgs& args) {
    common.load();
    const std::string model_name = common.pick_string(args.model_opt, args.model, "chaos.model", "example61");
    const double tau = common.pick_double(args.tau_opt, args.tau, "chaos.tau", 1.0);
    const double hurst = common.pick_double(args.hurst_opt, args.hurst, "chaos.hurst", 0.8);
    const double p = common.pick_double(args.p_opt, args.p, "chaos.p", 2.0);
    const auto n_mc = common.pick_int(args.nmc_opt, args.n_mc, "chaos.n_mc", 200);
    const auto counts = to_sizes(
        common.pick_array(args.counts_opt, args.counts, "chaos.counts", {16, 32, 64, 128, 256}),
        "particle counts");
    const auto reference_count =
        common.pick_int(args.refcount_opt, args.reference_count, "chaos.reference_count", 2048);
    const auto steps = common.pick_int(args.steps_opt, args.steps, "chaos.steps", 256);
    const double ref_slope =
        common.pick_double(args.ref_slope_opt, args.ref_slope, "chaos.ref_slope", -0.5);
    const bool self_test = common.pick_bool(args.self_opt, args.self_test, "chaos.self_test", false);

    if (self_test) {
        std::vector<double> levels(counts.begin(), counts.end());
        return run_self_test(common, "chaos",
                             common.pick_double(args.self_slope_opt, args.self_test_slope,
                                                "chaos.self_test_slope", -0.5),
                             levels);
    }

    const auto spec = mvsdde::model::model_by_name(model_name, 1, tau);
    const mvsdde::TimeGrid grid = mvsdde::make_grid(tau, tau, static_cast<std::size_t>(steps));
    const auto report = mvsdde::experiments::chaos_study(
        spec, mvsdde::HurstExponent(hurst), counts, static_cast<std::size_t>(reference_count), grid, p,
        static_cast<std::size_t>(n_mc), common.seed, mvsdde::resolve_threads(common.threads));

    const auto dir = prepare_out_dir(common);
    Json j;
    j["config"] = Json{{"model", model_name},
                       {"tau", tau},
                       {"hurst", hurst},
                       {"p", p},
                       {"n_mc", n_mc},
                       {"counts", counts},
                       {"reference_count", reference_count},
                       {"steps", steps},
                       {"ref_slope", ref_slope},
                       {"seed", common.seed},
                       {"diffusion_uses_state", spec.diffusion_uses_state}};
    j["result"] = mvsdde::report::to_json(report);
    write_json(dir / "chaos_report.json", j);
    {
        std::ofstream os(dir / "chaos_levels.csv", std::ios::binary);
        if (!os) throw std::runtime_error("cannot open levels csv for writing");
        mvsdde::report::write_levels_csv(report, os);
    }
    if (!report.exact) {
        std::vector<mvsdde::svg::Series> series(1);
        series[0].label = "p-power error";
        series[0].color = "#b44b1f";
        for (const auto& s : report.levels) {
            if (s.dropped || !(s.error_p > 0.0)) continue;
            series[0].xs.push_back(s.level);
            series[0].ys.push_back(s.error_p);
        }
        write_text(dir / "chaos.svg",
                   mvsdde::svg::loglog_chart("Coupled particle error vs N", "particles N",
                                             "p-power error", series, ref_slope,
                                             "guide slope " + mvsdde::report::format_double(ref_slope)));
    }
    std::cout << "chaos: ok";
    if (report.fit_p)
        std::cout << " (p-power slope " << report.fit_p->slope << " +/- " << report.fit_p->slope_stderr
                  << ")";
    std::cout << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct ValidateArgs {
    std::string model;
    std::int64_t dimension = 1;
    double tau = 1.0;
    std::int64_t n_probes = 1000;
    double radius = 2.0;
    CLI::Option *model_opt, *dim_opt, *tau_opt, *probes_opt, *radius_opt;
};

int cmd_validate_model(CommonArgs& common, ValidateArgs& args) {
    common.load();
    const std::string model_name =
        common.pick_string(args.model_opt, args.model, "validate-model.model", "");
    if (model_name.empty()) throw std::invalid_argument("validate-model: a model name is required");
    const auto dimension = common.pick_int(args.dim_opt, args.dimension, "validate-model.dimension", 1);
    const double tau = common.pick_double(args.tau_opt, args.tau, "validate-model.tau", 1.0);
    const auto n_probes = common.pick_int(args.probes_opt, args.n_probes, "validate-model.n_probes", 1000);
    const double radius = common.pick_double(args.radius_opt, args.radius, "validate-model.radius", 2.0);

    const auto spec = mvsdde::model::model_by_name(model_name, static_cast<std::size_t>(dimension), tau);
    const auto report = mvsdde::model::validate_assumptions(spec, static_cast<std::size_t>(n_probes),
                                                            radius, common.seed);
    Json j;
    j["config"] = Json{{"model", model_name},
                       {"dimension", dimension},
                       {"tau", tau},
                       {"n_probes", n_probes},
                       {"radius", radius},
                       {"seed", common.seed}};
    j["result"] = mvsdde::report::to_json(report);
    write_json(prepare_out_dir(common) / "validation.json", j);
    std::cout << "validate-model: " << (report.all_ok() ? "all checks passed" : "violations found")
              << "\n";
    return report.all_ok() ? kExitOk : kExitStatFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interacting-particle simulation of neutral McKean-Vlasov delay equations driven "
                 "by fractional Brownian motion"};
    app.require_subcommand(1);

    // Each subcommand owns its CommonArgs so option-presence checks consult
    // the options actually parsed for it.
    CommonArgs common_fbm, common_sim, common_conv, common_chaos, common_val;
    FbmCheckArgs fbm_args;
    SimulateArgs sim_args;
    StudyArgs conv_args;
    StudyArgs chaos_args;
    ValidateArgs val_args;

    auto add_common = [](CLI::App* sub, CommonArgs& common) {
        sub->add_option("--config", common.config_path, "Configuration file (key = value with [tables])");
        common.seed_opt = sub->add_option("--seed", common.seed, "Master RNG seed");
        common.threads_opt = sub->add_option("--threads", common.threads, "Worker threads (0 = auto)");
        common.out_opt = sub->add_option("--out", common.out_dir, "Output directory");
    };

    std::function<int()> action;

    {
        auto* sub = app.add_subcommand("fbm-check", "Statistical self-test of the fBm sampler");
        add_common(sub, common_fbm);
        fbm_args.hurst_opt = sub->add_option("--hurst", fbm_args.hurst, "Hurst exponent");
        fbm_args.grid_opt = sub->add_option("--grid-points", fbm_args.grid_points, "Grid points");
        fbm_args.horizon_opt = sub->add_option("--horizon", fbm_args.horizon, "Time horizon");
        fbm_args.paths_opt = sub->add_option("--n-paths", fbm_args.n_paths, "Sample paths");
        fbm_args.method_opt = sub->add_option("--method", fbm_args.method, "circulant or cholesky");
        fbm_args.cross_opt = sub->add_flag("--cross-check", fbm_args.cross_check,
                                           "Also compare circulant against Cholesky");
        fbm_args.dump_opt = sub->add_option("--dump-paths", fbm_args.dump_paths,
                                            "Write the sampled PathBatch to this file (FBMP format)");
        sub->callback([&] { action = [&] { return cmd_fbm_check(common_fbm, fbm_args); }; });
    }
    {
        auto* sub = app.add_subcommand("simulate", "One particle-system simulation");
        add_common(sub, common_sim);
        sim_args.model_opt = sub->add_option("--model", sim_args.model, "Model name (example61, additive)");
        sim_args.dim_opt = sub->add_option("--dimension", sim_args.dimension, "State dimension (additive)");
        sim_args.tau_opt = sub->add_option("--tau", sim_args.tau, "Delay");
        sim_args.horizon_opt = sub->add_option("--horizon", sim_args.horizon, "Horizon (default tau)");
        sim_args.hurst_opt = sub->add_option("--hurst", sim_args.hurst, "Hurst exponent");
        sim_args.particles_opt = sub->add_option("--n-particles", sim_args.n_particles, "Particles");
        sim_args.steps_opt = sub->add_option("--steps", sim_args.steps, "Grid steps");
        sim_args.scheme_opt = sub->add_option("--scheme", sim_args.scheme,
                                              "euler_maruyama or caratheodory");
        sim_args.lag_opt = sub->add_option("--caratheodory-lag", sim_args.lag, "Lag in steps");
        sim_args.small_hurst_opt = sub->add_flag("--allow-small-hurst", sim_args.allow_small_hurst,
                                                 "Accept H <= 1/2 (outside the theory)");
        sub->callback([&] { action = [&] { return cmd_simulate(common_sim, sim_args); }; });
    }
    {
        auto* sub = app.add_subcommand("convergence", "Strong convergence study in the step size");
        add_common(sub, common_conv);
        conv_args.model_opt = sub->add_option("--model", conv_args.model, "Model name");
        conv_args.tau_opt = sub->add_option("--tau", conv_args.tau, "Delay (horizon equals tau)");
        conv_args.hurst_opt = sub->add_option("--hurst", conv_args.hurst, "Hurst exponent");
        conv_args.p_opt = sub->add_option("--p", conv_args.p, "Error moment p >= 2");
        conv_args.nmc_opt = sub->add_option("--n-mc", conv_args.n_mc, "Monte Carlo repetitions");
        conv_args.fine_opt = sub->add_option("--fine-steps", conv_args.fine_steps, "Reference grid steps");
        conv_args.factors_opt = sub->add_option("--factors", conv_args.factors, "Coarsening factors");
        conv_args.particles_opt = sub->add_option("--n-particles", conv_args.n_particles, "Particles");
        conv_args.ref_slope_opt = sub->add_option("--ref-slope", conv_args.ref_slope,
                                                  "Guide-line slope in the SVG (default H)");
        conv_args.self_opt = sub->add_flag("--self-test", conv_args.self_test,
                                           "Inject an exact power law and verify slope recovery");
        conv_args.self_slope_opt =
            sub->add_option("--self-test-slope", conv_args.self_test_slope, "Injected slope");
        sub->callback([&] { action = [&] { return cmd_convergence(common_conv, conv_args); }; });
    }
    {
        auto* sub = app.add_subcommand("chaos", "Propagation-of-chaos study in the particle count");
        add_common(sub, common_chaos);
        chaos_args.model_opt = sub->add_option("--model", chaos_args.model, "Model name");
        chaos_args.tau_opt = sub->add_option("--tau", chaos_args.tau, "Delay (horizon equals tau)");
        chaos_args.hurst_opt = sub->add_option("--hurst", chaos_args.hurst, "Hurst exponent");
        chaos_args.p_opt = sub->add_option("--p", chaos_args.p, "Error moment p >= 2");
        chaos_args.nmc_opt = sub->add_option("--n-mc", chaos_args.n_mc, "Monte Carlo repetitions");
        chaos_args.counts_opt = sub->add_option("--counts", chaos_args.counts, "Particle counts");
        chaos_args.refcount_opt =
            sub->add_option("--reference-count", chaos_args.reference_count, "Reference particles");
        chaos_args.steps_opt = sub->add_option("--steps", chaos_args.steps, "Grid steps");
        chaos_args.ref_slope_opt = sub->add_option("--ref-slope", chaos_args.ref_slope,
                                                   "Guide-line slope in the SVG (default -1/2)");
        chaos_args.self_opt = sub->add_flag("--self-test", chaos_args.self_test,
                                            "Inject an exact power law and verify slope recovery");
        chaos_args.self_slope_opt =
            sub->add_option("--self-test-slope", chaos_args.self_test_slope, "Injected slope");
        sub->callback([&] { action = [&] { return cmd_chaos(common_chaos, chaos_args); }; });
    }
    {
        auto* sub = app.add_subcommand("validate-model", "Numeric probe of the structural assumptions");
        add_common(sub, common_val);
        val_args.model_opt = sub->add_option("--model", val_args.model, "Model name");
        val_args.dim_opt = sub->add_option("--dimension", val_args.dimension, "State dimension");
        val_args.tau_opt = sub->add_option("--tau", val_args.tau, "Delay");
        val_args.probes_opt = sub->add_option("--n-probes", val_args.n_probes, "Probe count");
        val_args.radius_opt = sub->add_option("--radius", val_args.radius, "Probe ball radius");
        sub->callback([&] { action = [&] { return cmd_validate_model(common_val, val_args); }; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        return action ? action() : kExitUsage;
    } catch (const mvsdde::experiments::StudyError& e) {
        std::cerr << "study error: " << e.what() << "\n";
        return kExitStatFailure;
    } catch (const mvsdde::solver::Divergence& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
