#ifndef FEDMOA_ORCHESTRATOR_H
#define FEDMOA_ORCHESTRATOR_H

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedmoa/client.h"
#include "fedmoa/scenario.h"
#include "fedmoa/server.h"

namespace fedmoa {

struct EvalResult {
    double accuracy = 0.0;
    double reward = 0.0;  // unweighted mean over the scored components
    std::vector<std::pair<std::string, double>> components;
};

// Greedy decoding over every eval prompt of `task`, scored with `components`.
// Exact logit ties are broken by a private stream seeded with tie_seed, so
// training RNG state is never touched.
EvalResult evaluate(const PolicyParams& params, const TaskSpec& task,
                    std::span<const RewardComponentSpec> components, std::uint64_t tie_seed);

struct EvalRow {
    int round = 0;        // completed rounds; 0 = initial model
    std::string task;
    std::string model;    // "global" or "client_<id>"
    std::string metric;   // component name or "reward"
    double value = 0.0;
};

struct ClientFailure {
    int round = 0;
    int client_id = 0;
    std::string message;
};

struct RunResult {
    std::vector<PolicyParams> global_params;  // index = completed rounds
    std::vector<EvalRow> eval;
    std::vector<ClientFailure> failures;
    std::filesystem::path run_dir;
};

struct RunOptions {
    std::filesystem::path out_dir;  // empty: use config.output_dir
    bool write_files = true;
    std::function<void(const std::string&)> log;  // progress lines; may be empty
    // Test hook: run instead of run_local_round for every client.
    std::function<ClientRoundResult(const ClientConfig&, const PolicyParams&,
                                    const std::optional<std::map<std::string, double>>&, int,
                                    const std::optional<ObjectiveWeights>&)>
        client_runner;
};

// Broadcast cluster key a client will be aggregated under.
std::string client_cluster_key(const ClientConfig& c, ClusterBy by);

// Executes every round: broadcast, concurrent client rounds, clustering and
// aggregation, evaluation. Writes, under the run directory:
//   config.json, client_steps.jsonl, server_rounds.jsonl, eval.csv,
//   checkpoints/round_<r>.bin, summary.md
RunResult run_scenario(const ScenarioConfig& cfg, const RunOptions& opts = {});

// Deterministic shortest round-trip formatting shared by every CSV writer.
std::string format_double(double v);

}  // namespace fedmoa

#endif  // FEDMOA_ORCHESTRATOR_H
