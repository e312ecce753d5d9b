#pragma once

// Experiment configuration: JSON in, validated against the published schema
// before any computation starts. Grids, potentials and scenarios are built
// lazily after validation and cached; all cross-references are checked up
// front so a missing name aborts the run before work begins.

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rotaprop/config_schema.hpp"
#include "rotaprop/experiments.hpp"
#include "rotaprop/json_schema.hpp"

namespace rotaprop {

// schema violations and malformed JSON: exit code 64
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// unresolvable scenario/grid/potential names: exit code 65
struct MissingReference : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

class ExperimentConfig {
  public:
    nlohmann::json raw;
    std::string config_hash;  // fnv1a-64 of the config bytes, hex
    std::uint64_t seed = 20260809;
    int workers = 2;
    std::string out_dir = "out";

    static ExperimentConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        const std::string bytes = ss.str();

        ExperimentConfig cfg;
        {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%016llx",
                          (unsigned long long)fnv1a64(bytes));
            cfg.config_hash = buf;
        }
        try {
            cfg.raw = nlohmann::json::parse(bytes);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        nlohmann::json schema = nlohmann::json::parse(config_schema_json);
        auto errs = schema_validate(schema, cfg.raw);
        if (!errs.empty()) {
            std::string msg = "config violates the schema:";
            for (const auto& e : errs) msg += "\n  " + e.pointer + ": " + e.message;
            throw ConfigError(msg);
        }
        if (cfg.raw.contains("seed")) cfg.seed = cfg.raw["seed"].get<std::uint64_t>();
        if (cfg.raw.contains("workers")) cfg.workers = cfg.raw["workers"].get<int>();
        if (cfg.raw.contains("out_dir")) cfg.out_dir = cfg.raw["out_dir"].get<std::string>();
        cfg.check_references();
        return cfg;
    }

    const PolarGrid& grid(const std::string& name) {
        auto it = grids_.find(name);
        if (it != grids_.end()) return *it->second;
        const auto& g = raw["grids"].at(name);
        auto built = std::make_unique<PolarGrid>(
            make_grid(g["n_r"].get<int>(), g["n_phi"].get<int>(),
                      g["r_max"].get<double>(), g["p_max"].get<double>()));
        return *grids_.emplace(name, std::move(built)).first->second;
    }

    PotentialSpec potential_spec(const std::string& name) const {
        const auto& p = raw["potentials"].at(name);
        const std::string variant = p["variant"].get<std::string>();
        if (variant == "offset_gaussian")
            return PotentialSpec::offset_gaussian(p["amplitude"].get<double>(),
                                                  p["distance"].get<double>(),
                                                  p["width"].get<double>());
        if (variant == "fan")
            return PotentialSpec::fan(p["amplitude"].get<double>(),
                                      p["r0"].get<double>(), p["harmonic"].get<int>());
        // sampled: row i = radius index, column k = angle index; the shape is
        // checked against the scenario's grid at decomposition
        const auto& rows = p["values"];
        Eigen::MatrixXd values(rows.size(), rows[0].size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != rows[0].size())
                throw ConfigError("potential '" + name + "': ragged sample rows");
            for (std::size_t k = 0; k < rows[i].size(); ++k)
                values(i, k) = rows[i][k].get<double>();
        }
        return PotentialSpec::sampled(std::move(values));
    }

    const AngularPotential& angular_potential(const std::string& pot_name,
                                              const std::string& grid_name) {
        const std::string key = pot_name + "@" + grid_name;
        auto it = potentials_.find(key);
        if (it != potentials_.end()) return *it->second;
        auto built = std::make_unique<AngularPotential>(
            decompose_potential(potential_spec(pot_name), grid(grid_name)));
        return *potentials_.emplace(key, std::move(built)).first->second;
    }

    static KineticSpec kinetic_from(const nlohmann::json& j) {
        if (!j.is_object()) return KineticSpec::nonrelativistic(1.0);
        if (j["kind"].get<std::string>() == "nonrelativistic")
            return KineticSpec::nonrelativistic(j["mass"].get<double>());
        return KineticSpec::power_law(j["beta"].get<double>());
    }

    // State construction is part of the reproducibility contract: random_band
    // states draw from StateRng(seed + seed_offset) with seed_offset
    // defaulting to the state's position in the scenario list.
    Field build_state(const nlohmann::json& st, const PolarGrid& g,
                      int index_in_list) const {
        const std::string type = st["type"].get<std::string>();
        if (type == "mode_gaussian")
            return mode_gaussian(g, st["ell"].get<int>(), st["sigma"].get<double>());
        const std::uint64_t off = st.contains("seed_offset")
                                      ? st["seed_offset"].get<std::uint64_t>()
                                      : std::uint64_t(index_in_list);
        StateRng rng(seed + off);
        return random_band_limited(g, st["m_max"].get<int>(), st["sigma"].get<double>(),
                                   rng);
    }

    static std::string state_id(const nlohmann::json& st, int index) {
        const std::string type = st["type"].get<std::string>();
        if (type == "mode_gaussian")
            return "mode_gaussian_ell" + std::to_string(st["ell"].get<int>());
        return "random_band_" + std::to_string(index);
    }

    const Scenario& scenario(const std::string& name) {
        auto it = scenarios_.find(name);
        if (it != scenarios_.end()) return *it->second;
        if (!raw["scenarios"].contains(name))
            throw MissingReference("unknown scenario " + name);
        const auto& s = raw["scenarios"][name];
        auto sc = std::make_unique<Scenario>();
        sc->name = name;
        sc->grid = &grid(s["grid"].get<std::string>());
        sc->potential =
            &angular_potential(s["potential"].get<std::string>(), s["grid"].get<std::string>());
        sc->kinetic = kinetic_from(s.contains("kinetic") ? s["kinetic"] : nlohmann::json());
        sc->omega = s["omega"].get<double>();
        sc->T = s["T"].get<double>();
        sc->t0 = s.contains("t0") ? s["t0"].get<double>() : 0.0;
        int idx = 0;
        for (const auto& st : s["states"]) {
            sc->states.push_back(build_state(st, *sc->grid, idx));
            sc->state_ids.push_back(state_id(st, idx));
            ++idx;
        }
        return *scenarios_.emplace(name, std::move(sc)).first->second;
    }

  private:
    void check_references() const {
        auto need_scenario = [&](const nlohmann::json& e) {
            const std::string n = e["scenario"].get<std::string>();
            if (!raw["scenarios"].contains(n))
                throw MissingReference("experiment references unknown scenario '" + n +
                                       "'");
        };
        auto need_pair = [&](const nlohmann::json& e) {
            if (!raw["grids"].contains(e["grid"].get<std::string>()))
                throw MissingReference("experiment references unknown grid '" +
                                       e["grid"].get<std::string>() + "'");
            if (!raw["potentials"].contains(e["potential"].get<std::string>()))
                throw MissingReference("experiment references unknown potential '" +
                                       e["potential"].get<std::string>() + "'");
        };
        for (auto it = raw["scenarios"].begin(); it != raw["scenarios"].end(); ++it) {
            if (!raw["grids"].contains((*it)["grid"].get<std::string>()))
                throw MissingReference("scenario '" + it.key() +
                                       "' references unknown grid");
            if (!raw["potentials"].contains((*it)["potential"].get<std::string>()))
                throw MissingReference("scenario '" + it.key() +
                                       "' references unknown potential");
        }
        if (!raw.contains("experiments")) return;
        const auto& ex = raw["experiments"];
        for (const char* kind :
             {"propagate", "sweep_omega", "riemann_lebesgue", "sweep_n", "duhamel",
              "ident"})
            if (ex.contains(kind))
                for (const auto& e : ex[kind]) need_scenario(e);
        for (const char* kind : {"limres1", "resolvent"})
            if (ex.contains(kind))
                for (const auto& e : ex[kind]) need_pair(e);
    }

    std::map<std::string, std::unique_ptr<PolarGrid>> grids_;
    std::map<std::string, std::unique_ptr<AngularPotential>> potentials_;
    std::map<std::string, std::unique_ptr<Scenario>> scenarios_;
};

}  // namespace rotaprop
