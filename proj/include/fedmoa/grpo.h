#ifndef FEDMOA_GRPO_H
#define FEDMOA_GRPO_H

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "fedmoa/adaptive_weights.h"
#include "fedmoa/envs.h"
#include "fedmoa/policy.h"

namespace fedmoa {

// G completions for one prompt. Rollouts live in the owning RolloutBatch;
// the group refers to [offset, offset + size).
struct RolloutGroup {
    int prompt_id = 0;
    std::size_t offset = 0;
    std::size_t size = 0;
    Eigen::MatrixXd reward_matrix;  // G x K
    Eigen::VectorXd scalarized;     // G
};

struct RolloutBatch {
    std::vector<Rollout> rollouts;
    std::vector<RolloutGroup> groups;

    std::span<const Rollout> group_rollouts(const RolloutGroup& g) const {
        return std::span<const Rollout>(rollouts).subspan(g.offset, g.size);
    }
};

struct StepReport {
    int step = 0;
    Eigen::VectorXd component_means;  // K
    double scalarized_mean = 0.0;
    double response_len = 0.0;        // mean count of non-pad tokens
    std::vector<HiddenGradient> objective_grads;  // K
    double grad_norm = 0.0;           // L2 norm of the surrogate parameter gradient
};

struct GrpoOptions {
    int group_size = 16;
    bool std_normalize = true;
    double adv_eps = 1e-8;
};

// (R_i - mean R) / (std R + eps), population std. With std_normalize off the
// rewards are only mean-centered.
Eigen::VectorXd group_advantages(std::span<const double> rewards, bool std_normalize = true,
                                 double adv_eps = 1e-8);

// reward_matrix * w.
Eigen::VectorXd scalarize(const Eigen::Ref<const Eigen::MatrixXd>& reward_matrix,
                          const Eigen::Ref<const Eigen::VectorXd>& weights);

// Samples G completions per prompt and scores every component.
RolloutBatch collect_rollouts(const PolicyParams& params, const TaskSpec& task,
                              std::span<const RewardComponentSpec> components,
                              std::span<const int> batch_prompts, RngStream& rng, int group_size);

// Per-completion advantages for the whole batch, computed group by group
// from reward column k (k >= 0) or from the scalarized rewards (k < 0).
std::vector<double> batch_advantages(const RolloutBatch& batch, int column, const GrpoOptions& opts);

struct GrpoStepResult {
    PolicyParams params;
    StepReport report;
};

// One on-policy GRPO update: sample, score, scalarize, normalize within
// groups, take one SGD step on the surrogate, and compute one hidden-layer
// gradient per objective from that objective's own advantages.
GrpoStepResult grpo_step(const PolicyParams& params, const ObjectiveWeights& weights,
                         const TaskSpec& task, std::span<const RewardComponentSpec> components,
                         std::span<const int> batch_prompts, RngStream& rng, double lr,
                         const GrpoOptions& opts = {});

}  // namespace fedmoa

#endif  // FEDMOA_GRPO_H
