#ifndef FEDMOA_SCENARIO_H
#define FEDMOA_SCENARIO_H

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedmoa/client.h"
#include "fedmoa/envs.h"
#include "fedmoa/policy.h"
#include "fedmoa/server.h"

namespace fedmoa {

enum class ScenarioKind { HomoHomo, HomoHeter, HeterHeter };

std::string to_string(ScenarioKind k);
ScenarioKind scenario_kind_from(const std::string& s);

struct TaskEntry {
    std::string name;
    std::string family;  // "math" | "code"
    std::string label;   // cluster identity; defaults to name
};

struct ClientEntry {
    std::string task;           // task name
    std::string reward_config;  // 'A' | 'B' | 'C'
};

// Everything a run needs. Parsed from a single JSON document; unknown keys
// are rejected.
struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::HomoHomo;
    int rounds = 3;
    int num_clients = 10;
    std::vector<TaskEntry> tasks;      // defaulted per kind when empty
    std::vector<ClientEntry> clients;  // generated when empty
    int local_steps = 50;
    int prompts_per_step = 8;
    int group_size = 16;
    double lr0 = 1.0;
    double lambda = 0.01;
    double epsilon = 1e-6;
    bool std_normalize = true;
    int hidden_dim = 32;
    int vocab_size = 16;
    int max_len = 8;
    int train_prompts = 64;
    int eval_prompts = 32;
    int answer_keys = 4;
    double length_target = 4.0;
    bool adaptive_weights = true;
    bool accuracy_aware_agg = true;
    ClusterBy cluster_by = ClusterBy::TaskLabel;
    std::uint64_t seed = 0;
    int workers = 1;  // does not affect results
    std::string output_dir = "runs/default";

    // Throws ConfigError.
    void validate() const;
};

// Defaults for the kind: tasks, client count and client reward assignment.
ScenarioConfig default_config(ScenarioKind kind);

ScenarioConfig parse_config(const nlohmann::json& j);
ScenarioConfig load_config(const std::filesystem::path& path);
// Fully expanded (tasks and clients listed explicitly).
nlohmann::ordered_json to_json(const ScenarioConfig& cfg);

struct Scenario {
    ScenarioConfig config;
    std::vector<std::shared_ptr<const TaskSpec>> tasks;
    std::vector<ClientConfig> clients;
    PolicyShape shape;

    const TaskSpec& task(const std::string& name) const;
};

// Expands the config: tasks with disjoint prompt-feature blocks, client prompt
// pools (train prompts of a task partitioned round-robin among its clients),
// and per-client reward components.
Scenario build_scenario(const ScenarioConfig& cfg);

}  // namespace fedmoa

#endif  // FEDMOA_SCENARIO_H
