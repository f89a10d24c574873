// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failed criteria. Statistical criteria run on fixed seeds, so verdicts are
// reproducible.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mvsdde/mvsdde.hpp"

namespace fs = std::filesystem;
using namespace mvsdde;

namespace {

struct Criterion {
    int number;
    std::string label;
    bool pass;
    std::string detail;
};

std::vector<Criterion> results;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void record(int number, const std::string& label, bool pass, const std::string& detail) {
    results.push_back({number, label, pass, detail});
    std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", number, label.c_str(),
                detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

// 1. fBm covariance reproduction for H in {0.5, 0.7, 0.8}.
void criterion_covariance() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    bool pass = true;
    for (const double h : {0.5, 0.7, 0.8}) {
        const auto paths =
            fbm::sample_paths(HurstExponent(h), TimeGrid(1.0 / 16, 16, 16), 10000, 0xC0FFEE + int(h * 10));
        const auto check = fbm::covariance_reproduction(paths, 4.0);
        worst = std::max(worst, check.max_abs_z);
        pass = pass && check.pass;
    }
    const double secs = seconds_since(t0);
    pass = pass && secs < 30.0;
    record(1, "fBm covariance within 4 MC standard errors",
           pass, fmt("max |z| = %.2f <= 4, runtime %.1f s < 30 s", worst, secs));
}

// 2. Brownian reduction at H = 1/2.
void criterion_brownian_reduction() {
    const auto paths =
        fbm::sample_paths(HurstExponent(0.5), TimeGrid(1.0 / 64, 64, 64), 10000, 106);
    const auto corr = fbm::increment_autocovariance(paths, 8, 3.0);
    const auto var = fbm::increment_variance(paths, 3.0);
    record(2, "Brownian reduction: independent increments, variance = step",
           corr.pass && var.pass,
           fmt("lag-1..8 max |z| = %.2f <= 3, variance |z| = %.2f <= 3", corr.max_abs_z,
               var.max_abs_z));
}

// 3. Circulant vs Cholesky agreement and clean embedding spectrum.
void criterion_sampler_crosscheck() {
    bool pass = true;
    double worst = 0.0;
    for (const double h : {0.55, 0.8}) {
        const auto agree = fbm::method_agreement(HurstExponent(h), 256, 16, 4000, 0xAB + int(h * 100));
        worst = std::max(worst, agree.max_abs_z);
        pass = pass && agree.pass;
    }
    bool spectrum_ok = true;
    for (const double h : {0.55, 0.7, 0.8, 0.95})
        for (const std::size_t m : {std::size_t(256), std::size_t(4096), std::size_t(16384)}) {
            try {
                (void)fbm::circulant_eigenvalues(HurstExponent(h), m);
            } catch (const std::exception&) {
                spectrum_ok = false;
            }
        }
    record(3, "sampler cross-check and nonnegative embedding spectrum", pass && spectrum_ok,
           fmt("cross-method max |z| = %.2f <= 4, spectrum clean up to M = 2^14: %s", worst,
               spectrum_ok ? "yes" : "no"));
}

// 4. Exact 1-D Wasserstein against the permutation brute force.
void criterion_wasserstein_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    rng::Stream stream(0xACE, 0, rng::StreamTag::assumption_probe);
    double worst = 0.0;
    for (int instance = 0; instance < 1000; ++instance) {
        const std::size_t n = 1 + static_cast<std::size_t>(stream.uniform01() * 6.0);
        std::vector<double> xs(n), ys(n);
        for (double& v : xs) v = 4.0 * stream.normal();
        for (double& v : ys) v = 4.0 * stream.normal();
        RowMatrix mx(n, 1), my(n, 1);
        for (std::size_t i = 0; i < n; ++i) {
            mx(i, 0) = xs[i];
            my(i, 0) = ys[i];
        }
        const measure::EmpiricalMeasure mu(mx), nu(my);
        for (const double theta : {1.0, 2.0, 3.0}) {
            const double fast = measure::wasserstein_1d(mu, nu, measure::Theta(theta));
            // Brute force over all pairings.
            std::vector<std::size_t> perm(n);
            std::iota(perm.begin(), perm.end(), 0);
            double best = std::numeric_limits<double>::infinity();
            do {
                double cost = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                    cost += std::pow(std::abs(xs[i] - ys[perm[i]]), theta);
                best = std::min(best, cost);
            } while (std::next_permutation(perm.begin(), perm.end()));
            const double brute = std::pow(best / double(n), 1.0 / theta);
            worst = std::max(worst, std::abs(fast - brute));
        }
    }
    const double secs = seconds_since(t0);
    record(4, "sorted coupling equals permutation brute force", worst <= 1e-12 && secs < 5.0,
           fmt("1000 instances, max |difference| = %.2e <= 1e-12, runtime %.2f s < 5 s", worst, secs));
}

// 5. Scheme exactness on the additive model across step sizes.
void criterion_scheme_exactness() {
    bool pass = true;
    double worst_ratio = 0.0;
    const auto spec = model::additive_model();
    for (int level = 4; level <= 10; ++level) {
        const std::size_t steps = std::size_t(1) << level;
        solver::SimConfig cfg;
        cfg.n_particles = 64;
        cfg.grid = TimeGrid(1.0 / double(steps), steps, steps);
        cfg.hurst = HurstExponent(0.8);
        cfg.seed = 0xE0 + std::uint64_t(level);
        const auto drivers = solver::make_drivers(1, cfg);
        const auto em = solver::simulate(spec, cfg, drivers);
        if (em.diverged()) {
            pass = false;
            continue;
        }
        double worst = 0.0;
        for (std::size_t i = 0; i < cfg.n_particles; ++i) {
            const double xi = em.at(0)(i, 0);
            double b = 0.0;
            for (std::ptrdiff_t k = 1; k <= em.last_index(); ++k) {
                b += drivers.increments[std::size_t(k - 1)](i, 0);
                worst = std::max(worst, std::abs(em.at(k)(i, 0) - (xi + b)));
            }
        }
        const double bound = 1e-12 * double(steps);
        worst_ratio = std::max(worst_ratio, worst / bound);
        pass = pass && worst <= bound;

        auto cara_cfg = cfg;
        cara_cfg.caratheodory_lag_steps = 1;
        const auto cara = solver::caratheodory_simulate(spec, cara_cfg, drivers);
        if (cara.states.size() != em.states.size()) {
            pass = false;
        } else {
            for (std::size_t s = 0; s < em.states.size(); ++s)
                if (!(cara.states[s] == em.states[s])) pass = false;
        }
    }
    record(5, "additive-model exactness and Caratheodory/EM bit-identity", pass,
           fmt("steps 2^-4..2^-10, worst deviation = %.2f of the 1e-12*M budget, schemes bit-identical",
               worst_ratio));
}

// 6. Neutral telescoping identity on example61 runs.
void criterion_telescoping() {
    const auto spec = model::example_model();
    bool pass = true;
    double worst = 0.0;
    for (const std::size_t steps : {std::size_t(128), std::size_t(256)}) {
        solver::SimConfig cfg;
        cfg.n_particles = 64;
        cfg.grid = TimeGrid(1.0 / double(steps), steps, steps);
        cfg.hurst = HurstExponent(0.8);
        cfg.seed = 0x7E1E + steps;
        const auto drivers = solver::make_drivers(1, cfg);
        const auto out = solver::simulate(spec, cfg, drivers);
        if (out.diverged()) {
            pass = false;
            continue;
        }
        const auto m = static_cast<std::ptrdiff_t>(cfg.grid.delay_steps);
        for (std::size_t i = 0; i < cfg.n_particles; ++i) {
            const double xi0 = out.at(0)(i, 0);
            const double ximt = out.at(-m)(i, 0);
            double rhs = xi0 + 0.5 * ximt;  // xi(0) - D(xi(-tau)), D(x) = -x/2
            for (std::ptrdiff_t k = 0; k < out.last_index(); ++k) {
                const measure::EmpiricalMeasure mu(out.at(k));
                double b = 0.0, s = 0.0;
                spec.drift(out.at(k).row(i), out.at(k - m).row(i), mu, std::span<double>(&b, 1));
                spec.diffusion(out.at(k).row(i), mu, std::span<double>(&s, 1));
                rhs += b * cfg.grid.step + s * drivers.increments[std::size_t(k)](i, 0);
                const double lhs = out.at(k + 1)(i, 0) + 0.5 * out.at(k + 1 - m)(i, 0);
                worst = std::max(worst, std::abs(lhs - rhs));
            }
        }
    }
    pass = pass && worst <= 1e-10;
    record(6, "neutral telescoping identity re-accumulates", pass,
           fmt("worst |residual| = %.2e <= 1e-10", worst));
}

// 7. Desk-scale replication of the step-size study.
void criterion_convergence_study() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto spec = model::example_model();
    const auto report = experiments::strong_convergence_study(
        spec, HurstExponent(0.8), {8, 16, 32, 64, 128}, 2048, 256, 2.0, 500, 0x5EC7, 0);
    const double secs = seconds_since(t0);
    if (!report.fit || !report.fit_p) {
        record(7, "strong convergence slope at desk scale", false, "no fit produced");
        return;
    }
    const double rms = report.fit->slope;
    const double mse = report.fit_p->slope;
    const double stderr_rms = report.fit->slope_stderr;
    const bool pass = rms >= 0.65 && rms <= 1.05 && stderr_rms < 0.1 && mse >= 1.3 && mse <= 2.1 &&
                      secs < 600.0;
    record(7, "strong convergence slope at desk scale", pass,
           fmt("RMS slope %.3f in [0.65,1.05], stderr %.3f < 0.1, MSE slope %.3f in [1.3,2.1], "
               "runtime %.0f s < 600 s",
               rms, stderr_rms, mse, secs));
}

// 8. Desk-scale propagation-of-chaos slope.
void criterion_chaos_study() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto spec = model::example_model();
    const auto report = experiments::chaos_study(spec, HurstExponent(0.8), {16, 32, 64, 128, 256},
                                                 2048, TimeGrid(1.0 / 256, 256, 256), 2.0, 200,
                                                 0xCA05, 0);
    const double secs = seconds_since(t0);
    if (!report.fit_p) {
        record(8, "propagation-of-chaos slope at desk scale", false, "no fit produced");
        return;
    }
    const double slope = report.fit_p->slope;
    const bool pass = slope >= -0.9 && slope <= -0.25 && secs < 900.0;
    record(8, "propagation-of-chaos slope at desk scale", pass,
           fmt("MSE-vs-N slope %.3f in [-0.9,-0.25], stderr %.3f, runtime %.0f s < 900 s", slope,
               report.fit_p->slope_stderr, secs));
}

// 9. Moment stability under step halving.
void criterion_moment_stability() {
    const auto spec = model::example_model();
    solver::SimConfig cfg;
    cfg.n_particles = 64;
    cfg.grid = TimeGrid(1.0 / 128, 128, 128);  // halved internally to 2^-8
    cfg.hurst = HurstExponent(0.8);
    cfg.seed = 0x3A11;
    const auto report = experiments::moment_study(spec, cfg, {2.0}, 200, 0);
    const bool no_divergence =
        report.coarse.divergence_fraction == 0.0 && report.fine.divergence_fraction == 0.0;
    const bool pass = report.relative_delta[0] < 0.2 && report.bands_overlap[0] && no_divergence;
    record(9, "second-moment stability from step 2^-7 to 2^-8", pass,
           fmt("estimates %.4f vs %.4f, relative delta %.1f%% < 20%%, 2-sigma bands %s, divergence "
               "fraction %.0f%%",
               report.coarse.estimates[0], report.fine.estimates[0],
               100.0 * report.relative_delta[0], report.bands_overlap[0] ? "overlap" : "disjoint",
               100.0 * std::max(report.coarse.divergence_fraction, report.fine.divergence_fraction)));
}

// 10. Byte-identical CLI outputs across thread counts.
void criterion_cli_determinism() {
    const fs::path base = fs::temp_directory_path() / "mvsdde_acceptance_threads";
    std::error_code ec;
    fs::remove_all(base, ec);
    fs::create_directories(base);
    const fs::path cfg_path = base / "study.conf";
    {
        std::ofstream os(cfg_path);
        os << "seed = 90210\n[convergence]\nmodel = \"example61\"\nfine_steps = 256\n"
           << "factors = [4, 8, 16]\nn_particles = 16\nn_mc = 12\n";
    }
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    bool pass = true;
    std::string ref_json, ref_csv, ref_svg;
    for (const int threads : {1, 4, 8}) {
        const fs::path out = base / ("t" + std::to_string(threads));
        const std::string cmd = std::string(MVSDDE_CLI_PATH) + " convergence --config " +
                                cfg_path.string() + " --threads " + std::to_string(threads) +
                                " --out " + out.string() + " > /dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        if (status == -1 || WEXITSTATUS(status) != 0) {
            pass = false;
            break;
        }
        const std::string j = slurp(out / "convergence_report.json");
        const std::string c = slurp(out / "convergence_levels.csv");
        const std::string s = slurp(out / "convergence.svg");
        if (threads == 1) {
            ref_json = j;
            ref_csv = c;
            ref_svg = s;
        } else {
            pass = pass && j == ref_json && c == ref_csv && s == ref_svg;
        }
    }
    record(10, "cmd_convergence byte-identical under threads {1,4,8}", pass,
           pass ? "JSON, CSV and SVG identical" : "outputs differ or run failed");
}

}  // namespace

int main(int argc, char** argv) {
    void (*criteria[])() = {criterion_covariance,      criterion_brownian_reduction,
                            criterion_sampler_crosscheck, criterion_wasserstein_oracle,
                            criterion_scheme_exactness,   criterion_telescoping,
                            criterion_convergence_study,  criterion_chaos_study,
                            criterion_moment_stability,   criterion_cli_determinism};
    const int n_criteria = int(std::size(criteria));

    if (argc > 1) {
        // Run a single criterion (1-based), as registered with ctest.
        const int which = std::atoi(argv[1]);
        if (which < 1 || which > n_criteria) {
            std::fprintf(stderr, "usage: %s [criterion 1..%d]\n", argv[0], n_criteria);
            return 64;
        }
        criteria[which - 1]();
        return results.front().pass ? 0 : 1;
    }

    for (const auto& criterion : criteria) criterion();
    int failures = 0;
    for (const auto& c : results)
        if (!c.pass) ++failures;
    std::printf("%d/%d criteria passed\n", n_criteria - failures, n_criteria);
    return failures;
}
