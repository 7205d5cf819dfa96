#ifndef FEDMOA_CLIENT_H
#define FEDMOA_CLIENT_H

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fedmoa/adaptive_weights.h"
#include "fedmoa/envs.h"
#include "fedmoa/grpo.h"
#include "fedmoa/policy.h"

namespace fedmoa {

struct ClientConfig {
    int client_id = 0;
    std::shared_ptr<const TaskSpec> task;
    std::vector<RewardComponentSpec> components;
    std::string reward_config;  // registry variant label, informational
    std::vector<int> prompt_pool;  // local train prompts; N_m = pool size
    int local_steps = 50;
    int prompts_per_step = 8;
    double lr0 = 1.0;
    double lambda = 0.01;
    // Length of the whole run's cosine schedule, in local steps.
    int schedule_steps = 150;
    std::uint64_t seed = 0;
    GrpoOptions grpo;

    long sample_count() const { return static_cast<long>(prompt_pool.size()); }
    // Throws ConfigError.
    void validate() const;
};

struct ClientUpdate {
    int client_id = 0;
    PolicyParams params;
    ObjectiveWeights weights;
    std::string task_label;
    long n_samples = 0;
};

struct ClientRoundResult {
    ClientUpdate update;
    std::vector<StepReport> reports;
    std::vector<ObjectiveWeights> step_weights;  // weights used by each step
    ObjectiveWeights round_start_weights;
    bool broadcast_fallback = false;
};

// One communication round on a client: reset weights from the broadcast, run
// local_steps GRPO steps with a hypergradient weight update after each, and
// package the result. `previous_weights` is this client's end-of-last-round
// weight vector (absent in round 0).
ClientRoundResult run_local_round(const ClientConfig& cfg, const PolicyParams& global_params,
                                  const std::optional<std::map<std::string, double>>& broadcast_weights,
                                  int round_idx,
                                  const std::optional<ObjectiveWeights>& previous_weights = std::nullopt);

}  // namespace fedmoa

#endif  // FEDMOA_CLIENT_H
