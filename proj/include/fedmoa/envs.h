#ifndef FEDMOA_ENVS_H
#define FEDMOA_ENVS_H

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace fedmoa {

using Token = int;

struct SpecialTokens {
    Token pad = 0;
    Token open_tag = 1;
    Token close_tag = 2;
};

// A synthetic prompt/answer task.
//
// Prompt p carries a feature id (its "question type"); the correct answer
// token depends only on that feature, so eval prompts are answerable by a
// policy trained on disjoint train prompts of the same task.
struct TaskSpec {
    std::string name;
    std::string task_label;
    std::string family;  // reward registry family: "math" or "code"
    int vocab_size = 16;
    int max_len = 8;
    SpecialTokens special;
    // Width of the prompt one-hot block shared by every task in a scenario.
    int feature_dim = 0;
    std::vector<int> prompt_feature;  // prompt_id -> feature id in [0, feature_dim)
    std::vector<Token> target;        // prompt_id -> answer token
    std::vector<int> train_prompts;
    std::vector<int> eval_prompts;

    int prompt_count() const { return static_cast<int>(target.size()); }
    // Throws ConfigError when an invariant is violated.
    void validate() const;
};

struct TaskOptions {
    std::string name;
    std::string task_label;
    std::string family = "math";
    int vocab_size = 16;
    int max_len = 8;
    int train_prompts = 64;
    int eval_prompts = 32;
    int answer_keys = 4;
    int feature_offset = 0;
    int feature_dim = 8;
    std::uint64_t seed = 0;
};

TaskSpec make_task(const TaskOptions& opts);

enum class RewardKind { Accuracy, Format, TagCount, Length, RepetitionPenalty, CodeFormat };

struct RewardComponentSpec {
    std::string name;
    RewardKind kind = RewardKind::Accuracy;
    std::map<std::string, double> params;
};

// Builds a component from its registry name. Unknown names or parameters
// throw ConfigError; scoring never fails on a constructed spec.
RewardComponentSpec make_component(const std::string& name,
                                   const std::map<std::string, double>& params = {});

// Validates a client's component list: nonempty, accuracy first, no duplicates.
void validate_components(std::span<const RewardComponentSpec> components);

struct Completion {
    std::vector<Token> tokens;
    int prompt_id = 0;
};

// Position of the answer token, or -1 when the completion has none.
//
// With an open tag followed later by a close tag, the slot is the token right
// after that close tag; otherwise it is the final token.
int answer_slot(const TaskSpec& task, std::span<const Token> tokens);

double score_component(const RewardComponentSpec& spec, const TaskSpec& task, const Completion& c);

Eigen::VectorXd score_all(std::span<const RewardComponentSpec> components, const TaskSpec& task,
                          const Completion& c);

// Reward-configuration registry. Families: "math" (accuracy + format /
// tag_count variants) and "code" (accuracy + code_format + one of tag_count,
// length, repetition_penalty). Variant is 'A', 'B' or 'C'.
std::vector<RewardComponentSpec> reward_config(const std::string& family, char variant);

// Union of a family's A/B/C components in registry order; used for the
// unweighted multi-objective evaluation reward.
std::vector<RewardComponentSpec> canonical_components(const std::string& family);

}  // namespace fedmoa

#endif  // FEDMOA_ENVS_H
