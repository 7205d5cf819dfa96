#include "fedmoa/grpo.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedmoa/errors.h"

namespace fedmoa {

Eigen::VectorXd group_advantages(std::span<const double> rewards, bool std_normalize, double adv_eps) {
    const std::size_t g = rewards.size();
    if (g < 2) {
        throw InvalidInput("group_advantages: group size " + std::to_string(g) + " < 2");
    }
    Eigen::VectorXd adv = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g));
    const auto [lo, hi] = std::minmax_element(rewards.begin(), rewards.end());
    if (*lo == *hi) {
        return adv;
    }
    double sum = 0.0;
    for (double r : rewards) sum += r;
    const double mean = sum / static_cast<double>(g);
    double sq = 0.0;
    for (double r : rewards) sq += (r - mean) * (r - mean);
    const double denom = std_normalize ? std::sqrt(sq / static_cast<double>(g)) + adv_eps : 1.0;
    for (std::size_t i = 0; i < g; ++i) {
        adv(static_cast<Eigen::Index>(i)) = (rewards[i] - mean) / denom;
    }
    return adv;
}

Eigen::VectorXd scalarize(const Eigen::Ref<const Eigen::MatrixXd>& reward_matrix,
                          const Eigen::Ref<const Eigen::VectorXd>& weights) {
    if (reward_matrix.cols() != weights.size()) {
        throw InvalidInput("scalarize: " + std::to_string(weights.size()) + " weights for " +
                           std::to_string(reward_matrix.cols()) + " components");
    }
    Eigen::VectorXd out(reward_matrix.rows());
    for (Eigen::Index i = 0; i < reward_matrix.rows(); ++i) {
        double acc = 0.0;
        for (Eigen::Index k = 0; k < reward_matrix.cols(); ++k) {
            acc += weights(k) * reward_matrix(i, k);
        }
        out(i) = acc;
    }
    return out;
}

RolloutBatch collect_rollouts(const PolicyParams& params, const TaskSpec& task,
                              std::span<const RewardComponentSpec> components,
                              std::span<const int> batch_prompts, RngStream& rng, int group_size) {
    if (group_size < 2) {
        throw InvalidInput("collect_rollouts: group size must be >= 2");
    }
    if (batch_prompts.empty()) {
        throw InvalidInput("collect_rollouts: empty prompt batch");
    }
    RolloutBatch batch;
    batch.rollouts.reserve(batch_prompts.size() * static_cast<std::size_t>(group_size));
    const auto k = static_cast<Eigen::Index>(components.size());
    for (int prompt : batch_prompts) {
        RolloutGroup grp;
        grp.prompt_id = prompt;
        grp.offset = batch.rollouts.size();
        grp.size = static_cast<std::size_t>(group_size);
        grp.reward_matrix.resize(group_size, k);
        for (int i = 0; i < group_size; ++i) {
            batch.rollouts.push_back(sample(params, task, prompt, rng));
            grp.reward_matrix.row(i) = score_all(components, task, batch.rollouts.back().completion).transpose();
        }
        batch.groups.push_back(std::move(grp));
    }
    return batch;
}

std::vector<double> batch_advantages(const RolloutBatch& batch, int column, const GrpoOptions& opts) {
    std::vector<double> adv;
    adv.reserve(batch.rollouts.size());
    std::vector<double> rewards;
    for (const auto& g : batch.groups) {
        rewards.resize(g.size);
        for (std::size_t i = 0; i < g.size; ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            rewards[i] = column < 0 ? g.scalarized(row) : g.reward_matrix(row, column);
        }
        const Eigen::VectorXd a = group_advantages(rewards, opts.std_normalize, opts.adv_eps);
        adv.insert(adv.end(), a.data(), a.data() + a.size());
    }
    return adv;
}

GrpoStepResult grpo_step(const PolicyParams& params, const ObjectiveWeights& weights,
                         const TaskSpec& task, std::span<const RewardComponentSpec> components,
                         std::span<const int> batch_prompts, RngStream& rng, double lr,
                         const GrpoOptions& opts) {
    if (weights.size() != components.size()) {
        throw InvalidInput("grpo_step: " + std::to_string(weights.size()) + " weights for " +
                           std::to_string(components.size()) + " components");
    }
    for (std::size_t k = 0; k < components.size(); ++k) {
        if (weights.names[k] != components[k].name) {
            throw InvalidInput("grpo_step: weight '" + weights.names[k] + "' does not match component '" +
                               components[k].name + "'");
        }
    }
    if (!weights.on_simplex()) {
        throw InvalidInput("grpo_step: weights not on the simplex");
    }

    RolloutBatch batch = collect_rollouts(params, task, components, batch_prompts, rng, opts.group_size);
    for (auto& g : batch.groups) {
        g.scalarized = scalarize(g.reward_matrix, weights.values);
    }

    const std::vector<double> adv = batch_advantages(batch, -1, opts);
    SurrogateGradient sg = surrogate_gradient(params, batch.rollouts, adv);

    GrpoStepResult out{params, {}};
    const double grad_norm = flatten(sg.param_grad).norm();
    // Ascent on the surrogate = descent on L.
    sg.param_grad *= -lr;
    out.params += sg.param_grad;

    StepReport& rep = out.report;
    const auto k = static_cast<Eigen::Index>(components.size());
    rep.component_means = Eigen::VectorXd::Zero(k);
    double scalar_sum = 0.0;
    double len_sum = 0.0;
    for (const auto& g : batch.groups) {
        for (std::size_t i = 0; i < g.size; ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            rep.component_means += g.reward_matrix.row(row).transpose();
            scalar_sum += g.scalarized(row);
            const auto& toks = batch.rollouts[g.offset + i].completion.tokens;
            len_sum += static_cast<double>(
                std::count_if(toks.begin(), toks.end(), [&](Token t) { return t != task.special.pad; }));
        }
    }
    const double n = static_cast<double>(batch.rollouts.size());
    rep.component_means /= n;
    rep.scalarized_mean = scalar_sum / n;
    rep.response_len = len_sum / n;
    rep.grad_norm = grad_norm;

    rep.objective_grads.reserve(components.size());
    for (Eigen::Index c = 0; c < k; ++c) {
        const std::vector<double> adv_k = batch_advantages(batch, static_cast<int>(c), opts);
        rep.objective_grads.push_back(hidden_gradient(params, batch.rollouts, adv_k));
    }
    return out;
}

}  // namespace fedmoa
