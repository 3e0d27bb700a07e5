#include <doctest.h>

#include "wt/config.hpp"
#include "wt/experiment.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace wt;

namespace {

const char* kMinimal = R"(
[space]
topology = euclidean
dim = 1

[functional]
kind = mmd

[transport]
alpha = 0.5
iters = 3
n_particles = 16

[init]
sampler = gaussian
mean = 0
sigma = 1

[target]
kind = gaussian
mean = 1
sigma = 1
samples = 16

[run]
seed = 7
out_dir = out/test
)";

bool has_error_mentioning(const ConfigError& e, const std::string& needle) {
    for (const auto& msg : e.errors) {
        if (msg.find(needle) != std::string::npos) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("minimal config parses with defaults filled") {
    ExperimentConfig cfg = parse_config_text(kMinimal, "<test>");
    CHECK(cfg.kind == "mmd");
    CHECK(cfg.backend == "closed_form");  // default for mmd
    CHECK(cfg.wrap_images == 3);
    CHECK(cfg.safeguard == true);
    CHECK(cfg.mode == "direct");
    CHECK(cfg.n_particles == 16);
    CHECK(cfg.seed == 7);
    CHECK(cfg.target_mean.size() == 1);
}

TEST_CASE("negative alpha is rejected with the offending key named") {
    std::string text = kMinimal;
    auto pos = text.find("alpha = 0.5");
    text.replace(pos, 11, "alpha = -1 ");
    try {
        parse_config_text(text, "<test>");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(has_error_mentioning(e, "transport.alpha"));
    }
}

TEST_CASE("illegal kind/backend pair cites the legality invariant") {
    std::string text = kMinimal;
    auto pos = text.find("kind = mmd");
    text.replace(pos, 10, "kind = mmd\nbackend = rkhs_dual");
    try {
        parse_config_text(text, "<test>");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(has_error_mentioning(e, "functional.backend"));
        CHECK(has_error_mentioning(e, "not legal"));
    }
}

TEST_CASE("all errors are collected, not just the first") {
    std::string text = kMinimal;
    auto pos = text.find("alpha = 0.5");
    text.replace(pos, 11, "alpha = -1 ");
    pos = text.find("dim = 1");
    text.replace(pos, 7, "dim = 0");
    try {
        parse_config_text(text, "<test>");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.errors.size() >= 2);
        CHECK(has_error_mentioning(e, "transport.alpha"));
        CHECK(has_error_mentioning(e, "space.dim"));
    }
}

TEST_CASE("unknown keys and malformed lines are reported") {
    std::string text = std::string(kMinimal) + "\n[transport]\nbogus_key = 3\n";
    try {
        parse_config_text(text, "<test>");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(has_error_mentioning(e, "transport.bogus_key"));
    }

    try {
        parse_config_text("key_without_section = 1\n", "<t>");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(has_error_mentioning(e, "outside a section"));
    }
}

TEST_CASE("gibbs target cross-field checks") {
    std::string text = kMinimal;
    auto pos = text.find("kind = gaussian");
    text.replace(pos, 15, "kind = gibbs   ");
    try {
        parse_config_text(text, "<test>");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(has_error_mentioning(e, "target.kind"));
    }
}

TEST_CASE("config round-trips through its serialization") {
    ExperimentConfig cfg = parse_config_text(kMinimal, "<test>");
    std::string echo = serialize_config(cfg);
    ExperimentConfig cfg2 = parse_config_text(echo, "<echo>");
    CHECK(serialize_config(cfg2) == echo);
}

TEST_CASE("torus config with entropy functional parses") {
    const char* torus_cfg = R"(
[space]
topology = torus
dim = 1

[functional]
kind = linear_entropy_kl
backend = kde_score
g = cosine
tau = 0.4
prior = uniform_torus

[transport]
alpha = 0.05
iters = 2
n_particles = 32

[init]
sampler = uniform_torus

[target]
kind = none

[run]
seed = 1
out_dir = out/torus
)";
    ExperimentConfig cfg = parse_config_text(torus_cfg, "<test>");
    CHECK(cfg.topology == "torus");
    CHECK(cfg.g_name == "cosine");
}

TEST_CASE("run_experiment writes the output files and a coherent summary") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "wt_cfg_test";
    fs::remove_all(dir);

    ExperimentConfig cfg = parse_config_text(kMinimal, "<test>");
    cfg.baselines = {"ula", "svgd"};
    cfg.null_mmd2 = true;
    RunOverrides ov;
    ov.out_dir = dir.string();
    ov.quiet = true;
    run_experiment(cfg, ov);

    CHECK(fs::exists(dir / "metrics.csv"));
    CHECK(fs::exists(dir / "metrics_ula.csv"));
    CHECK(fs::exists(dir / "metrics_svgd.csv"));
    CHECK(fs::exists(dir / "snapshots.jsonl"));
    CHECK(fs::exists(dir / "summary.json"));
    CHECK(fs::exists(dir / "target_density.csv"));
    CHECK_FALSE(fs::exists(dir / "summary.json.tmp"));

    std::ifstream f(dir / "summary.json");
    nlohmann::json summary = nlohmann::json::parse(f);
    CHECK(summary["vt"]["iterations"] == 3);
    CHECK(summary.contains("mmd2_null"));
    ExperimentConfig echoed =
        parse_config_text(summary["config"].get<std::string>(), "<echo>");
    CHECK(serialize_config(echoed) == summary["config"].get<std::string>());

    std::ifstream m(dir / "metrics.csv");
    std::string header;
    std::getline(m, header);
    CHECK(header.substr(0, 5) == "iter,");
    int rows = 0;
    std::string line;
    while (std::getline(m, line)) ++rows;
    CHECK(rows == 4);  // iters 0..3
    fs::remove_all(dir);
}

TEST_CASE("run_experiment with zero iterations reports initial metrics only") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "wt_cfg_k0";
    fs::remove_all(dir);
    ExperimentConfig cfg = parse_config_text(kMinimal, "<test>");
    cfg.iters = 0;
    RunOverrides ov;
    ov.out_dir = dir.string();
    ov.quiet = true;
    CHECK(run_experiment_main(cfg, ov) == 0);
    std::ifstream f(dir / "summary.json");
    nlohmann::json summary = nlohmann::json::parse(f);
    CHECK(summary["vt"]["iterations"] == 0);
    CHECK(summary["vt"]["final"]["iter"] == 0);
    fs::remove_all(dir);
}

TEST_CASE("backend override via RunOverrides is validated") {
    ExperimentConfig cfg = parse_config_text(kMinimal, "<test>");
    RunOverrides ov;
    ov.backend = "rkhs_dual";  // illegal for mmd
    ov.quiet = true;
    CHECK(run_experiment_main(cfg, ov) == 2);
}
