#include "fedmoa/client.h"

#include <string>

#include "fedmoa/errors.h"

namespace fedmoa {

void ClientConfig::validate() const {
    const std::string who = "client " + std::to_string(client_id) + ": ";
    if (!task) throw ConfigError(who + "no task");
    validate_components(components);
    if (local_steps < 1) throw ConfigError(who + "local_steps must be >= 1");
    if (prompts_per_step < 1) throw ConfigError(who + "prompts_per_step must be >= 1");
    if (prompt_pool.empty()) throw ConfigError(who + "empty prompt pool");
    for (int p : prompt_pool) {
        if (p < 0 || p >= task->prompt_count()) throw ConfigError(who + "prompt id out of range");
    }
    if (!(lr0 > 0.0)) throw ConfigError(who + "lr0 must be positive");
    if (!(lambda >= 0.0)) throw ConfigError(who + "lambda must be >= 0");
    if (schedule_steps < 1) throw ConfigError(who + "schedule_steps must be >= 1");
    if (grpo.group_size < 2) throw ConfigError(who + "group_size must be >= 2");
}

ClientRoundResult run_local_round(const ClientConfig& cfg, const PolicyParams& global_params,
                                  const std::optional<std::map<std::string, double>>& broadcast_weights,
                                  int round_idx, const std::optional<ObjectiveWeights>& previous_weights) {
    cfg.validate();
    if (!global_params.all_finite()) {
        throw InvalidInput("run_local_round: non-finite global parameters");
    }

    ClientRoundResult out;
    ObjectiveWeights weights = reset_for_round(round_idx == 0 ? std::nullopt : broadcast_weights,
                                               cfg.components, previous_weights, &out.broadcast_fallback);
    out.round_start_weights = weights;

    HypergradState hyper;
    hyper.lambda = cfg.lambda;
    PolicyParams params = global_params;
    RngStream rng(cfg.seed, stream_id_for(static_cast<std::uint64_t>(cfg.client_id),
                                          static_cast<std::uint64_t>(round_idx)));

    std::vector<int> batch(static_cast<std::size_t>(cfg.prompts_per_step));
    for (int t = 0; t < cfg.local_steps; ++t) {
        for (auto& p : batch) {
            p = cfg.prompt_pool[rng.below(cfg.prompt_pool.size())];
        }
        const std::int64_t global_step = static_cast<std::int64_t>(round_idx) * cfg.local_steps + t;
        const double lr = cosine_lr(std::min<std::int64_t>(global_step, cfg.schedule_steps),
                                    cfg.schedule_steps, cfg.lr0);

        GrpoStepResult step = grpo_step(params, weights, *cfg.task, cfg.components, batch, rng, lr, cfg.grpo);
        step.report.step = t;
        if (!step.params.all_finite()) {
            throw InvalidInput("run_local_round: parameters diverged at step " + std::to_string(t));
        }
        params = std::move(step.params);
        out.step_weights.push_back(weights);

        WeightUpdate wu = update_weights(weights, hyper, step.report.objective_grads);
        weights = std::move(wu.weights);
        hyper = std::move(wu.state);
        out.reports.push_back(std::move(step.report));
    }

    out.update.client_id = cfg.client_id;
    out.update.params = std::move(params);
    out.update.weights = std::move(weights);
    out.update.task_label = cfg.task->task_label;
    out.update.n_samples = cfg.sample_count();
    return out;
}

}  // namespace fedmoa
