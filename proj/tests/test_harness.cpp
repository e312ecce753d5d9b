#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rotaprop/config.hpp"
#include "rotaprop/harness.hpp"
#include "rotaprop/table.hpp"

using namespace rotaprop;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string write_temp(const std::string& name, const std::string& text) {
    const std::string path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path, std::ios::trunc);
    out << text;
    return path;
}

const char* kMinimalConfig = R"({
  "version": 1,
  "seed": 7,
  "grids": { "g": { "n_r": 40, "n_phi": 18, "r_max": 8.0, "p_max": 8.0 } },
  "potentials": { "fan": { "variant": "fan", "amplitude": 0.5, "r0": 1.5, "harmonic": 3 } },
  "scenarios": {
    "s": { "grid": "g", "potential": "fan", "omega": 6.0, "T": 0.5,
           "states": [ { "type": "random_band", "m_max": 2, "sigma": 1.0 } ] }
  },
  "experiments": {
    "symbol": [ { "a_values": [1.0], "pbar_values": [0.0, 1.0] } ],
    "limres1": [ { "grid": "g", "potential": "fan", "ell": 0, "state_mode": 1,
                   "zeta": 2.0, "omegas": [8.0, 16.0, 32.0, 64.0] } ],
    "resolvent": [ { "grid": "g", "potential": "fan", "ell": 0,
                     "omegas": [8.0, 32.0, 128.0], "phi_samples": 4 } ]
  }
})";

}  // namespace

TEST_CASE("embedded schema matches the shipped file") {
    const std::string shipped = slurp("schema/rotaprop-config.schema.json");
    CHECK(shipped == std::string(config_schema_json));
}

TEST_CASE("config validation") {
    const std::string good = write_temp("rp_good.json", kMinimalConfig);
    ExperimentConfig cfg = ExperimentConfig::load(good);
    CHECK(cfg.seed == 7);
    CHECK(cfg.config_hash.size() == 16);

    // not JSON
    CHECK_THROWS_AS(ExperimentConfig::load(write_temp("rp_bad1.json", "{nope")),
                    ConfigError);
    // schema violation: odd keys
    CHECK_THROWS_AS(
        ExperimentConfig::load(write_temp("rp_bad2.json", R"({"version": 1})")),
        ConfigError);
    // schema violation: wrong type deep inside
    std::string bad3 = kMinimalConfig;
    bad3.replace(bad3.find("\"n_r\": 40"), 9, "\"n_r\": \"x\"");
    CHECK_THROWS_AS(ExperimentConfig::load(write_temp("rp_bad3.json", bad3)),
                    ConfigError);
    // unresolvable scenario reference
    std::string bad4 = kMinimalConfig;
    bad4.replace(bad4.find("\"limres1\""), 9, "\"limres1_\"");  // breaks schema, not ref
    CHECK_THROWS_AS(ExperimentConfig::load(write_temp("rp_bad4.json", bad4)),
                    ConfigError);
    std::string bad5 = kMinimalConfig;
    const std::string needle = "\"potential\": \"fan\", \"ell\"";
    bad5.replace(bad5.find(needle), needle.size(), "\"potential\": \"nope\", \"ell\"");
    CHECK_THROWS_AS(ExperimentConfig::load(write_temp("rp_bad5.json", bad5)),
                    MissingReference);
}

TEST_CASE("random state construction is reproducible and documented") {
    const PolarGrid g = make_grid(40, 18, 8.0, 8.0);
    StateRng a(123), b(123);
    Field fa = random_band_limited(g, 3, 1.0, a);
    Field fb = random_band_limited(g, 3, 1.0, b);
    CHECK((fa.data - fb.data).cwiseAbs().maxCoeff() == 0.0);

    // pinned construction: first draw of mt19937_64(123) maps to the first
    // Box-Muller normal pair through u = (next >> 11) * 2^-53
    std::mt19937_64 gen(123);
    const double u1 = double(gen() >> 11) * (1.0 / 9007199254740992.0);
    const double u2 = double(gen() >> 11) * (1.0 / 9007199254740992.0);
    const double n1 = std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * pi_v * u2);
    StateRng c(123);
    CHECK(c.normal() == n1);
}

TEST_CASE("table emit and summary") {
    Table t;
    t.columns = {"x", "y", "tag"};
    t.slope_pairs = {{"x", "y"}};
    CHECK_THROWS_AS(emit(t, "/tmp/rp_empty.csv"), std::invalid_argument);

    // slope of y = x^-2 on a log-log fit
    for (double x : {1.0, 2.0, 4.0, 8.0})
        t.add_row({x, 1.0 / (x * x), std::string("r")});
    const std::string path =
        (std::filesystem::temp_directory_path() / "rp_table.csv").string();
    emit(t, path);
    const std::string text = slurp(path);
    CHECK(text.rfind("x,y,tag\n", 0) == 0);
    CHECK(text.find("0.0625") != std::string::npos);

    nlohmann::json summary = nlohmann::json::parse(
        slurp((std::filesystem::temp_directory_path() / "rp_table.summary.json")
                  .string()));
    CHECK(std::abs(summary["slopes"]["x->y"].get<double>() + 2.0) < 1e-12);
    CHECK(summary["columns"]["y"]["max"].get<double>() == 1.0);

    // 17-significant-digit float cells survive a round trip
    CHECK(format_cell(Cell{0.1}) == "0.10000000000000001");

    CHECK_THROWS_AS(emit(t, "/dev/null/t.csv"), std::exception);
}

TEST_CASE("runs are bit-identical across worker counts") {
    const std::string cfg_path = write_temp("rp_det.json", kMinimalConfig);
    auto run_once = [&](int workers, const std::string& out) {
        ExperimentConfig cfg = ExperimentConfig::load(cfg_path);
        auto outcomes = run_subcommand(cfg, "all", out, workers);
        write_manifest(out, cfg.config_hash, outcomes, exit_code_for(outcomes));
    };
    const std::string d1 = (std::filesystem::temp_directory_path() / "rp_w1").string();
    const std::string d2 = (std::filesystem::temp_directory_path() / "rp_w2").string();
    run_once(1, d1);
    run_once(2, d2);
    int compared = 0;
    for (const auto& entry : std::filesystem::directory_iterator(d1)) {
        if (entry.path().extension() != ".csv") continue;
        const std::string other = d2 + "/" + entry.path().filename().string();
        REQUIRE(std::filesystem::exists(other));
        CHECK(slurp(entry.path().string()) == slurp(other));
        ++compared;
    }
    CHECK(compared >= 3);
}

TEST_CASE("parallel_for covers every index exactly once") {
    std::vector<int> hits(257, 0);
    parallel_for(257, 3, [&](int i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
    // exceptions propagate
    CHECK_THROWS_AS(parallel_for(8, 2,
                                 [](int i) {
                                     if (i == 5) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
}
