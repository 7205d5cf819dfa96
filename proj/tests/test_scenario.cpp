#include <catch_amalgamated.hpp>

#include <set>

#include "fedmoa/errors.h"
#include "fedmoa/scenario.h"

using namespace fedmoa;
using nlohmann::json;

TEST_CASE("scenario defaults", "[scenario]") {
    const ScenarioConfig hh = parse_config(json{{"scenario", "homo_homo"}});
    CHECK(hh.num_clients == 10);
    CHECK(hh.rounds == 3);
    CHECK(hh.local_steps == 50);
    CHECK(hh.group_size == 16);
    CHECK(hh.lambda == 0.01);
    CHECK(hh.epsilon == 1e-6);
    CHECK(hh.tasks.size() == 1);
    for (const auto& c : hh.clients) CHECK(c.reward_config == "A");

    const ScenarioConfig het = parse_config(json{{"scenario", "homo_heter"}});
    std::set<std::string> variants;
    for (const auto& c : het.clients) variants.insert(c.reward_config);
    CHECK(variants == std::set<std::string>{"A", "B", "C"});

    const ScenarioConfig hx = parse_config(json{{"scenario", "heter_heter"}});
    CHECK(hx.tasks.size() == 3);
    CHECK(hx.num_clients == 15);
    std::map<std::string, int> per_task;
    for (const auto& c : hx.clients) ++per_task[c.task];
    for (const auto& [_, n] : per_task) CHECK(n == 5);
}

TEST_CASE("config parsing rejects bad input", "[scenario]") {
    CHECK_THROWS_AS(parse_config(json{{"scenario", "homo_homo"}, {"roundz", 3}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json::object()), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"scenario", "mixed"}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"scenario", "homo_homo"}, {"rounds", "three"}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"scenario", "homo_homo"}, {"group_size", 1}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"scenario", "homo_homo"}, {"lr0", 0.0}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"scenario", "homo_homo"}, {"cluster_by", "colour"}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json::array()), ConfigError);
    const json bad_client = {{"scenario", "homo_homo"}, {"clients", {{{"task", "math"}, {"reward_config", "Z"}}}}};
    CHECK_THROWS_AS(parse_config(bad_client), ConfigError);
    const json ghost = {{"scenario", "homo_homo"}, {"clients", {{{"task", "nope"}, {"reward_config", "A"}}}}};
    CHECK_THROWS_AS(parse_config(ghost), ConfigError);
    const json extra = {{"scenario", "homo_homo"}, {"tasks", {{{"name", "m"}, {"colour", "red"}}}}};
    CHECK_THROWS_AS(parse_config(extra), ConfigError);
    const json comma = {{"scenario", "homo_homo"}, {"tasks", {{{"name", "a,b"}}}}};
    CHECK_THROWS_AS(parse_config(comma), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("config json round trip", "[scenario]") {
    const json in = {{"scenario", "heter_heter"}, {"rounds", 2}, {"seed", 9}, {"lambda", 0.0}};
    const ScenarioConfig a = parse_config(in);
    const ScenarioConfig b = parse_config(json::parse(to_json(a).dump()));
    CHECK(to_json(a) == to_json(b));
    CHECK(b.seed == 9);
    CHECK(b.rounds == 2);
}

TEST_CASE("built scenarios", "[scenario]") {
    ScenarioConfig cfg = parse_config(json{{"scenario", "heter_heter"}, {"seed", 5}});
    const Scenario sc = build_scenario(cfg);
    CHECK(sc.tasks.size() == 3);
    CHECK(sc.shape.feature_dim == 3 * cfg.answer_keys);

    // Tasks use disjoint feature blocks.
    std::set<int> seen;
    for (const auto& t : sc.tasks) {
        std::set<int> mine(t->prompt_feature.begin(), t->prompt_feature.end());
        for (int f : mine) CHECK(seen.insert(f).second);
    }

    // Client pools partition each task's train prompts.
    std::map<std::string, std::multiset<int>> pooled;
    for (const auto& c : sc.clients) {
        CHECK(!c.prompt_pool.empty());
        CHECK(c.schedule_steps == cfg.rounds * cfg.local_steps);
        for (int p : c.prompt_pool) pooled[c.task->name].insert(p);
    }
    for (const auto& t : sc.tasks) {
        CHECK(pooled[t->name] == std::multiset<int>(t->train_prompts.begin(), t->train_prompts.end()));
    }

    cfg.adaptive_weights = false;
    for (const auto& c : build_scenario(cfg).clients) CHECK(c.lambda == 0.0);

    CHECK_THROWS_AS(parse_config(json{{"scenario", "homo_homo"}, {"train_prompts", 4}}), ConfigError);
    ScenarioConfig tight = parse_config(json{{"scenario", "homo_homo"}});
    tight.train_prompts = 4;
    CHECK_THROWS_AS(build_scenario(tight), ConfigError);
}
