#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = MVSDDE_CLI_PATH;

int run_cli(const std::string& args) {
    const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("mvsdde_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("cli: fbm-check passes on small runs and validates input", "[cli]") {
    const auto dir = fresh_dir("fbmcheck");
    CHECK(run_cli("fbm-check --hurst 0.5 --n-paths 2000 --grid-points 8 --seed 7 --out " +
                  dir.string()) == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "fbm_check.json"));
    CHECK(j["result"]["pass"] == true);
    CHECK(j["config"]["hurst"] == 0.5);

    // Out-of-range Hurst exponent is a usage error.
    CHECK(run_cli("fbm-check --hurst 1.2 --out " + dir.string()) == 1);
    // Binary dump lands next to the verdict.
    CHECK(run_cli("fbm-check --hurst 0.8 --n-paths 64 --grid-points 8 --seed 7 --dump-paths paths.bin "
                  "--out " +
                  dir.string()) == 0);
    CHECK(fs::exists(dir / "paths.bin"));
}

TEST_CASE("cli: simulate additive embeds a passing exactness check", "[cli]") {
    const auto dir = fresh_dir("simulate");
    CHECK(run_cli("simulate --model additive --n-particles 8 --steps 32 --seed 5 --out " +
                  dir.string()) == 0);
    CHECK(fs::exists(dir / "trajectory.csv"));
    const auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(j["exact_solution_check"]["pass"] == true);
    CHECK(j["divergence"].is_null());
    CHECK(j["config"]["model"] == "additive");

    // Missing model name.
    CHECK(run_cli("simulate --out " + dir.string()) == 1);
    // Unknown model name.
    CHECK(run_cli("simulate --model nope --out " + dir.string()) == 1);
}

TEST_CASE("cli: example61 smoke run emits finite summary", "[cli]") {
    const auto dir = fresh_dir("simulate61");
    CHECK(run_cli("simulate --model example61 --n-particles 64 --steps 64 --hurst 0.8 --seed 9 --out " +
                  dir.string()) == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(j["terminal_moments"]["theta_moment_p2"].get<double>() > 0.0);
}

TEST_CASE("cli: study self-tests recover injected slopes exactly", "[cli]") {
    const auto dir = fresh_dir("selftest");
    CHECK(run_cli("convergence --self-test --self-test-slope 1.25 --out " + dir.string()) == 0);
    auto j = nlohmann::json::parse(slurp(dir / "convergence_self_test.json"));
    CHECK(j["pass"] == true);
    CHECK(j["recovered_slope"].get<double>() == Catch::Approx(1.25).margin(1e-12));

    CHECK(run_cli("chaos --self-test --self-test-slope -0.5 --out " + dir.string()) == 0);
    j = nlohmann::json::parse(slurp(dir / "chaos_self_test.json"));
    CHECK(j["pass"] == true);
}

TEST_CASE("cli: small convergence study emits report, csv and svg", "[cli]") {
    const auto dir = fresh_dir("conv");
    CHECK(run_cli("convergence --model example61 --fine-steps 128 --factors 4 8 16 "
                  "--n-particles 8 --n-mc 6 --seed 21 --out " +
                  dir.string()) == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "convergence_report.json"));
    CHECK(j["result"]["fit_root_error"]["slope"].is_number());
    CHECK(j["result"]["fit_root_error"]["slope_stderr"].is_number());
    CHECK(j["result"]["levels"].size() == 3);
    const std::string csv = slurp(dir / "convergence_levels.csv");
    CHECK(csv.rfind("level,error,stderr,n_effective\r\n", 0) == 0);
    const std::string svg = slurp(dir / "convergence.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);

    // Config echo round-trips the effective parameters.
    CHECK(j["config"]["fine_steps"] == 128);
    CHECK(j["config"]["n_mc"] == 6);
    CHECK(j["config"]["seed"] == 21);
}

TEST_CASE("cli: config file feeds parameters and flags win", "[cli]") {
    const auto dir = fresh_dir("cfgfile");
    const fs::path cfg_path = dir / "study.conf";
    {
        std::ofstream os(cfg_path);
        os << "seed = 33\nout = \"" << (dir / "from_config").string() << "\"\n\n[convergence]\n"
           << "model = \"example61\"\nfine_steps = 128\nfactors = [4, 8, 16]\nn_particles = 8\n"
           << "n_mc = 4\n";
    }
    CHECK(run_cli("convergence --config " + cfg_path.string()) == 0);
    auto j = nlohmann::json::parse(slurp(dir / "from_config" / "convergence_report.json"));
    CHECK(j["config"]["seed"] == 33);
    CHECK(j["config"]["fine_steps"] == 128);

    // Flag overrides the file.
    CHECK(run_cli("convergence --config " + cfg_path.string() + " --seed 44 --out " +
                  (dir / "flagged").string()) == 0);
    j = nlohmann::json::parse(slurp(dir / "flagged" / "convergence_report.json"));
    CHECK(j["config"]["seed"] == 44);

    // Broken config file is a usage error.
    const fs::path broken = dir / "broken.conf";
    std::ofstream(broken) << "key value without equals\n";
    CHECK(run_cli("convergence --config " + broken.string()) == 1);
}

TEST_CASE("cli: convergence outputs are byte-identical across thread counts", "[cli]") {
    const auto base = fresh_dir("threads");
    const std::string common =
        "convergence --model example61 --fine-steps 128 --factors 4 8 16 --n-particles 8 "
        "--n-mc 6 --seed 77 ";
    std::string first_json, first_csv, first_svg;
    for (int threads : {1, 2, 8}) {
        const fs::path out = base / ("t" + std::to_string(threads));
        CHECK(run_cli(common + "--threads " + std::to_string(threads) + " --out " + out.string()) == 0);
        const std::string j = slurp(out / "convergence_report.json");
        const std::string c = slurp(out / "convergence_levels.csv");
        const std::string s = slurp(out / "convergence.svg");
        if (threads == 1) {
            first_json = j;
            first_csv = c;
            first_svg = s;
        } else {
            CHECK(first_json == j);
            CHECK(first_csv == c);
            CHECK(first_svg == s);
        }
    }
}

TEST_CASE("cli: chaos study smoke run", "[cli]") {
    const auto dir = fresh_dir("chaos");
    CHECK(run_cli("chaos --model example61 --counts 4 8 16 --reference-count 64 --steps 32 "
                  "--n-mc 6 --seed 88 --out " +
                  dir.string()) == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "chaos_report.json"));
    CHECK(j["result"]["fit_p_power_error"]["slope"].is_number());
    CHECK(fs::exists(dir / "chaos_levels.csv"));
    CHECK(fs::exists(dir / "chaos.svg"));
}

TEST_CASE("cli: validate-model verdicts", "[cli]") {
    const auto dir = fresh_dir("validate");
    CHECK(run_cli("validate-model --model example61 --n-probes 200 --radius 2 --seed 3 --out " +
                  dir.string()) == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "validation.json"));
    CHECK(j["result"]["all_ok"] == true);
    CHECK(j["result"]["diffusion_state_dependent"] == true);
    CHECK(run_cli("validate-model --model additive --out " + dir.string()) == 0);
}

TEST_CASE("cli: unwritable output directory is an IO error", "[cli]") {
    CHECK(run_cli("simulate --model additive --n-particles 2 --steps 8 --out /dev/null/impossible") ==
          1);
}

TEST_CASE("cli: no subcommand is a usage error", "[cli]") {
    CHECK(run_cli("") == 1);
    CHECK(run_cli("--help") == 0);
}
