#include <catch_amalgamated.hpp>

#include <random>
#include <set>

#include "fedmoa/envs.h"
#include "fedmoa/errors.h"

using namespace fedmoa;

namespace {

TaskSpec small_task(const std::string& family = "math") {
    TaskOptions o;
    o.name = "t";
    o.family = family;
    o.train_prompts = 8;
    o.eval_prompts = 4;
    o.answer_keys = 2;
    o.feature_dim = 2;
    o.seed = 3;
    return make_task(o);
}

Completion comp(std::vector<Token> tokens, int prompt = 0) { return {std::move(tokens), prompt}; }

constexpr Token kOpen = 1, kClose = 2, kPad = 0;

}  // namespace

TEST_CASE("task construction", "[envs]") {
    const TaskSpec t = small_task();
    CHECK(t.prompt_count() == 12);
    CHECK(t.train_prompts.size() == 8);
    CHECK(t.eval_prompts.size() == 4);
    std::set<int> train(t.train_prompts.begin(), t.train_prompts.end());
    for (int p : t.eval_prompts) CHECK(!train.count(p));
    for (int p = 0; p < t.prompt_count(); ++p) {
        const Token a = t.target[static_cast<std::size_t>(p)];
        CHECK(a >= 3);
        CHECK(a < t.vocab_size);
        // Prompts sharing a feature share an answer.
        CHECK(a == t.target[static_cast<std::size_t>(p % 2)]);
        CHECK(t.prompt_feature[static_cast<std::size_t>(p)] == p % 2);
    }
    const TaskSpec again = small_task();
    CHECK(again.target == t.target);
}

TEST_CASE("task validation", "[envs]") {
    TaskOptions o;
    o.name = "x";
    o.eval_prompts = 0;
    CHECK_THROWS_AS(make_task(o), ConfigError);
    o.eval_prompts = 4;
    o.answer_keys = 9;
    o.feature_dim = 8;
    CHECK_THROWS_AS(make_task(o), ConfigError);
    o.answer_keys = 4;
    o.family = "poetry";
    CHECK_THROWS_AS(make_task(o), ConfigError);

    TaskSpec t = small_task();
    t.eval_prompts.push_back(t.train_prompts.front());
    CHECK_THROWS_AS(t.validate(), ConfigError);
    t = small_task();
    t.target[0] = 99;
    CHECK_THROWS_AS(t.validate(), ConfigError);
}

TEST_CASE("answer slot", "[envs]") {
    const TaskSpec t = small_task();
    CHECK(answer_slot(t, std::vector<Token>{}) == -1);
    CHECK(answer_slot(t, std::vector<Token>{5, 6, 7}) == 2);
    CHECK(answer_slot(t, std::vector<Token>{kOpen, 5, kClose, 7, 8}) == 3);
    CHECK(answer_slot(t, std::vector<Token>{kOpen, kClose, 9, kClose}) == 2);
    CHECK(answer_slot(t, std::vector<Token>{kOpen, 5, kClose}) == -1);
    // A close tag before the first open tag does not form a pair.
    CHECK(answer_slot(t, std::vector<Token>{kClose, kOpen, 5, 6}) == 3);
}

TEST_CASE("component semantics", "[envs]") {
    const TaskSpec t = small_task();
    const Token ans = t.target[0];
    const auto acc = make_component("accuracy");
    const auto fmt = make_component("format");
    const auto tags = make_component("tag_count");
    const auto len = make_component("length");
    const auto rep = make_component("repetition_penalty");
    const auto code = make_component("code_format");

    CHECK(score_component(acc, t, comp({5, 6, ans})) == 1.0);
    CHECK(score_component(acc, t, comp({kOpen, kClose, ans, 5})) == 1.0);
    CHECK(score_component(acc, t, comp({kOpen, 5, kClose})) == 0.0);

    CHECK(score_component(fmt, t, comp({kOpen, 5, 6, kClose})) == 1.0);
    CHECK(score_component(fmt, t, comp({5, 6, kClose, 7})) == 0.0);
    CHECK(score_component(fmt, t, comp({kOpen})) == 0.0);

    CHECK(score_component(tags, t, comp({5, 6})) == 0.0);
    CHECK(score_component(tags, t, comp({kOpen, 5, kOpen})) == 0.5);
    CHECK(score_component(tags, t, comp({kClose, kOpen})) == 1.0);

    // 8 tokens, 2 of them pad: |6 - 4| / 8.
    CHECK(score_component(len, t, comp({5, 6, kPad, 7, 8, kPad, 9, 10})) == 0.75);
    CHECK(score_component(len, t, comp({5, 6, 7, 8})) == 1.0);
    const auto len_far = make_component("length", {{"target_len", 20.0}});
    CHECK(score_component(len_far, t, comp({5})) == 0.0);

    CHECK(score_component(rep, t, comp({5, 5, 6, 6})) == Catch::Approx(1.0 - 2.0 / 3.0).margin(1e-15));
    CHECK(score_component(rep, t, comp({5})) == 1.0);
    CHECK(score_component(rep, t, comp({})) == 1.0);

    CHECK(score_component(code, t, comp({5, kOpen, 6, kClose})) == 1.0);
    CHECK(score_component(code, t, comp({kClose, kOpen})) == 0.0);
    CHECK(score_component(code, t, comp({kOpen, kClose, kClose})) == 0.0);
}

TEST_CASE("score_all", "[envs]") {
    const TaskSpec t = small_task();
    const Token ans = t.target[0];
    const auto ab = std::vector<RewardComponentSpec>{make_component("accuracy"), make_component("format")};
    CHECK(score_all(ab, t, comp({kOpen, kClose, ans, kClose})) == Eigen::Vector2d(1.0, 1.0));
    CHECK(score_all(ab, t, comp({})) == Eigen::Vector2d(0.0, 0.0));

    // Half-tagged correct answer under config A.
    const auto a = reward_config("math", 'A');
    CHECK(score_all(a, t, comp({kOpen, 5, ans})) == Eigen::Vector3d(1.0, 0.0, 0.5));
}

TEST_CASE("every component stays in [0, 1]", "[envs]") {
    for (const char* family : {"math", "code"}) {
        const TaskSpec t = small_task(family);
        const auto comps = canonical_components(family);
        std::mt19937_64 gen(9);
        std::uniform_int_distribution<int> tok(0, t.vocab_size - 1), len(0, t.max_len);
        std::uniform_int_distribution<int> prompt(0, t.prompt_count() - 1);
        for (int i = 0; i < 10000; ++i) {
            Completion c;
            c.prompt_id = prompt(gen);
            const int n = len(gen);
            for (int j = 0; j < n; ++j) c.tokens.push_back(tok(gen));
            const Eigen::VectorXd r = score_all(comps, t, c);
            REQUIRE(r.size() == static_cast<Eigen::Index>(comps.size()));
            REQUIRE((r.array() >= 0.0).all());
            REQUIRE((r.array() <= 1.0).all());
            REQUIRE(score_all(comps, t, c) == r);
        }
    }
}

TEST_CASE("reward registry", "[envs]") {
    CHECK_THROWS_AS(make_component("brevity"), ConfigError);
    CHECK_THROWS_AS(make_component("format", {{"target_len", 3.0}}), ConfigError);
    CHECK_THROWS_AS(reward_config("math", 'D'), ConfigError);

    for (const char* family : {"math", "code"}) {
        for (char v : {'A', 'B', 'C'}) {
            const auto comps = reward_config(family, v);
            CHECK_NOTHROW(validate_components(comps));
            CHECK(comps.front().name == "accuracy");
        }
    }
    CHECK(reward_config("math", 'B').size() == 2);
    CHECK(reward_config("code", 'B')[2].name == "length");

    const std::vector<RewardComponentSpec> no_acc{make_component("format")};
    CHECK_THROWS_AS(validate_components(no_acc), ConfigError);
    const std::vector<RewardComponentSpec> dup{make_component("accuracy"), make_component("accuracy")};
    CHECK_THROWS_AS(validate_components(dup), ConfigError);

    std::vector<std::string> names;
    for (const auto& c : canonical_components("math")) names.push_back(c.name);
    CHECK(names == std::vector<std::string>{"accuracy", "format", "tag_count"});
}
