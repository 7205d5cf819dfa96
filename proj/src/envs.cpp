#include "fedmoa/envs.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "fedmoa/errors.h"
#include "fedmoa/numeric.h"

namespace fedmoa {

namespace {

bool is_special(const SpecialTokens& s, Token t) {
    return t == s.pad || t == s.open_tag || t == s.close_tag;
}

struct ComponentInfo {
    const char* name;
    RewardKind kind;
    std::map<std::string, double> defaults;
};

const std::vector<ComponentInfo>& registry() {
    static const std::vector<ComponentInfo> table = {
        {"accuracy", RewardKind::Accuracy, {}},
        {"format", RewardKind::Format, {}},
        {"tag_count", RewardKind::TagCount, {}},
        {"length", RewardKind::Length, {{"target_len", 4.0}}},
        {"repetition_penalty", RewardKind::RepetitionPenalty, {}},
        {"code_format", RewardKind::CodeFormat, {}},
    };
    return table;
}

}  // namespace

void TaskSpec::validate() const {
    auto fail = [&](const std::string& what) {
        throw ConfigError("task '" + name + "': " + what);
    };
    if (vocab_size < 4) fail("vocab_size must be >= 4");
    if (max_len < 1) fail("max_len must be >= 1");
    for (Token t : {special.pad, special.open_tag, special.close_tag}) {
        if (t < 0 || t >= vocab_size) fail("special token outside vocabulary");
    }
    if (special.pad == special.open_tag || special.pad == special.close_tag ||
        special.open_tag == special.close_tag) {
        fail("special tokens must be distinct");
    }
    if (prompt_feature.size() != target.size()) fail("prompt_feature/target size mismatch");
    for (std::size_t p = 0; p < target.size(); ++p) {
        if (target[p] < 0 || target[p] >= vocab_size) fail("answer token outside vocabulary");
        if (prompt_feature[p] < 0 || prompt_feature[p] >= feature_dim) {
            fail("prompt feature outside feature_dim");
        }
    }
    if (eval_prompts.empty()) fail("no eval prompts");
    if (train_prompts.empty()) fail("no train prompts");
    std::set<int> seen;
    for (int p : train_prompts) {
        if (p < 0 || p >= prompt_count()) fail("train prompt id out of range");
        seen.insert(p);
    }
    for (int p : eval_prompts) {
        if (p < 0 || p >= prompt_count()) fail("eval prompt id out of range");
        if (seen.count(p)) fail("train and eval prompts overlap");
    }
}

TaskSpec make_task(const TaskOptions& opts) {
    if (opts.answer_keys < 1) throw ConfigError("answer_keys must be >= 1");
    if (opts.feature_offset < 0 || opts.feature_offset + opts.answer_keys > opts.feature_dim) {
        throw ConfigError("task '" + opts.name + "': answer keys do not fit in feature_dim");
    }
    if (opts.family != "math" && opts.family != "code") {
        throw ConfigError("task '" + opts.name + "': unknown family '" + opts.family + "'");
    }
    TaskSpec task;
    task.name = opts.name;
    task.task_label = opts.task_label.empty() ? opts.name : opts.task_label;
    task.family = opts.family;
    task.vocab_size = opts.vocab_size;
    task.max_len = opts.max_len;
    task.feature_dim = opts.feature_dim;

    std::vector<Token> answers;
    for (Token t = 0; t < opts.vocab_size; ++t) {
        if (!is_special(task.special, t)) answers.push_back(t);
    }
    if (answers.empty()) throw ConfigError("vocabulary has no answer tokens");

    RngStream rng(opts.seed, mix64(hash_string(opts.name)));
    std::vector<Token> key_answer(static_cast<std::size_t>(opts.answer_keys));
    for (auto& a : key_answer) {
        a = answers[rng.below(answers.size())];
    }

    const int total = opts.train_prompts + opts.eval_prompts;
    for (int p = 0; p < total; ++p) {
        const int key = p % opts.answer_keys;
        task.prompt_feature.push_back(opts.feature_offset + key);
        task.target.push_back(key_answer[static_cast<std::size_t>(key)]);
        if (p < opts.train_prompts) {
            task.train_prompts.push_back(p);
        } else {
            task.eval_prompts.push_back(p);
        }
    }
    task.validate();
    return task;
}

RewardComponentSpec make_component(const std::string& name,
                                   const std::map<std::string, double>& params) {
    for (const auto& info : registry()) {
        if (name != info.name) continue;
        RewardComponentSpec spec{name, info.kind, info.defaults};
        for (const auto& [key, value] : params) {
            if (!info.defaults.count(key)) {
                throw ConfigError("reward component '" + name + "' has no parameter '" + key + "'");
            }
            if (!std::isfinite(value)) {
                throw ConfigError("reward component '" + name + "': non-finite parameter");
            }
            spec.params[key] = value;
        }
        return spec;
    }
    throw ConfigError("unknown reward component '" + name + "'");
}

void validate_components(std::span<const RewardComponentSpec> components) {
    if (components.empty()) throw ConfigError("client has no reward components");
    if (components.front().kind != RewardKind::Accuracy || components.front().name != "accuracy") {
        throw ConfigError("first reward component must be 'accuracy'");
    }
    std::set<std::string> names;
    for (const auto& c : components) {
        if (!names.insert(c.name).second) {
            throw ConfigError("duplicate reward component '" + c.name + "'");
        }
    }
}

int answer_slot(const TaskSpec& task, std::span<const Token> tokens) {
    const int n = static_cast<int>(tokens.size());
    if (n == 0) return -1;
    const auto open = std::find(tokens.begin(), tokens.end(), task.special.open_tag);
    if (open != tokens.end()) {
        const auto close = std::find(open + 1, tokens.end(), task.special.close_tag);
        if (close != tokens.end()) {
            const int slot = static_cast<int>(close - tokens.begin()) + 1;
            return slot < n ? slot : -1;
        }
    }
    return n - 1;
}

double score_component(const RewardComponentSpec& spec, const TaskSpec& task, const Completion& c) {
    const auto& t = c.tokens;
    const int n = static_cast<int>(t.size());
    const auto& sp = task.special;
    switch (spec.kind) {
        case RewardKind::Accuracy: {
            const int slot = answer_slot(task, t);
            if (slot < 0) return 0.0;
            return t[static_cast<std::size_t>(slot)] == task.target.at(static_cast<std::size_t>(c.prompt_id))
                       ? 1.0
                       : 0.0;
        }
        case RewardKind::Format:
            return (n >= 2 && t.front() == sp.open_tag && t.back() == sp.close_tag) ? 1.0 : 0.0;
        case RewardKind::TagCount: {
            const bool has_open = std::find(t.begin(), t.end(), sp.open_tag) != t.end();
            const bool has_close = std::find(t.begin(), t.end(), sp.close_tag) != t.end();
            return (static_cast<double>(has_open) + static_cast<double>(has_close)) / 2.0;
        }
        case RewardKind::Length: {
            const double nonpad = static_cast<double>(std::count_if(
                t.begin(), t.end(), [&](Token x) { return x != sp.pad; }));
            const double target_len = spec.params.at("target_len");
            const double r = 1.0 - std::abs(nonpad - target_len) / static_cast<double>(task.max_len);
            return std::clamp(r, 0.0, 1.0);
        }
        case RewardKind::RepetitionPenalty: {
            if (n <= 1) return 1.0;
            int dup = 0;
            for (int i = 1; i < n; ++i) {
                if (t[static_cast<std::size_t>(i)] == t[static_cast<std::size_t>(i - 1)]) ++dup;
            }
            return 1.0 - static_cast<double>(dup) / static_cast<double>(n - 1);
        }
        case RewardKind::CodeFormat: {
            const auto n_open = std::count(t.begin(), t.end(), sp.open_tag);
            const auto n_close = std::count(t.begin(), t.end(), sp.close_tag);
            if (n_open != 1 || n_close != 1) return 0.0;
            const auto open = std::find(t.begin(), t.end(), sp.open_tag);
            const auto close = std::find(t.begin(), t.end(), sp.close_tag);
            return open < close ? 1.0 : 0.0;
        }
    }
    return 0.0;
}

Eigen::VectorXd score_all(std::span<const RewardComponentSpec> components, const TaskSpec& task,
                          const Completion& c) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(components.size()));
    for (std::size_t k = 0; k < components.size(); ++k) {
        r(static_cast<Eigen::Index>(k)) = score_component(components[k], task, c);
    }
    return r;
}

std::vector<RewardComponentSpec> reward_config(const std::string& family, char variant) {
    std::vector<std::string> names;
    if (family == "math") {
        switch (variant) {
            case 'A': names = {"accuracy", "format", "tag_count"}; break;
            case 'B': names = {"accuracy", "format"}; break;
            case 'C': names = {"accuracy", "tag_count"}; break;
            default: break;
        }
    } else if (family == "code") {
        switch (variant) {
            case 'A': names = {"accuracy", "code_format", "tag_count"}; break;
            case 'B': names = {"accuracy", "code_format", "length"}; break;
            case 'C': names = {"accuracy", "code_format", "repetition_penalty"}; break;
            default: break;
        }
    }
    if (names.empty()) {
        throw ConfigError("no reward config '" + std::string(1, variant) + "' for family '" + family + "'");
    }
    std::vector<RewardComponentSpec> out;
    for (const auto& n : names) out.push_back(make_component(n));
    return out;
}

std::vector<RewardComponentSpec> canonical_components(const std::string& family) {
    std::vector<RewardComponentSpec> out;
    std::set<std::string> seen;
    for (char v : {'A', 'B', 'C'}) {
        for (auto& c : reward_config(family, v)) {
            if (seen.insert(c.name).second) out.push_back(std::move(c));
        }
    }
    return out;
}

}  // namespace fedmoa
