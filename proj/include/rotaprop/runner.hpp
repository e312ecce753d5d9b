#pragma once

// Deterministic parallel execution: a pool of workers pulls task indices from
// an atomic counter, every task writes only its own slot, and aggregation is
// by task index. Results are therefore identical for any worker count.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "rotaprop/version.hpp"

namespace rotaprop {

inline void parallel_for(int n_tasks, int workers,
                         const std::function<void(int)>& task) {
    if (n_tasks <= 0) return;
    workers = std::max(1, std::min(workers, n_tasks));
    if (workers == 1) {
        for (int i = 0; i < n_tasks; ++i) task(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (int i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1))
                    task(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

enum class RunStatus { Pass, UnderResolved, Fail };

inline const char* status_name(RunStatus s) {
    switch (s) {
        case RunStatus::Pass: return "pass";
        case RunStatus::UnderResolved: return "under_resolved";
        default: return "fail";
    }
}

struct ExperimentOutcome {
    std::string name;
    RunStatus status = RunStatus::Pass;
    double wall_ms = 0.0;
    std::vector<std::string> outputs;
    std::string note;
};

struct StopWatch {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double ms() const {
        return std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - start)
            .count();
    }
};

// Manifest written atomically (temp file + rename) at the end of a run;
// every output CSV appears under its experiment.
inline void write_manifest(const std::string& out_dir, const std::string& config_hash,
                           const std::vector<ExperimentOutcome>& outcomes,
                           int exit_code) {
    nlohmann::json m;
    m["artifact_version"] = artifact_version;
    m["config_hash"] = config_hash;
    m["exit_code"] = exit_code;
    for (const auto& o : outcomes) {
        nlohmann::json e;
        e["name"] = o.name;
        e["status"] = status_name(o.status);
        e["wall_ms"] = o.wall_ms;
        e["outputs"] = o.outputs;
        if (!o.note.empty()) e["note"] = o.note;
        m["experiments"].push_back(e);
    }
    std::filesystem::create_directories(out_dir);
    const std::string tmp = out_dir + "/manifest.json.tmp";
    const std::string final_path = out_dir + "/manifest.json";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << m.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, final_path);
}

}  // namespace rotaprop
