#include <catch_amalgamated.hpp>

#include <random>

#include "fedmoa/errors.h"
#include "fedmoa/grpo.h"

using namespace fedmoa;
using Catch::Approx;

namespace {

TaskSpec grpo_task() {
    TaskOptions o;
    o.name = "g";
    o.train_prompts = 16;
    o.eval_prompts = 4;
    o.answer_keys = 4;
    o.feature_dim = 4;
    return make_task(o);
}

PolicyParams start_params(const TaskSpec& t, std::uint64_t seed = 1) {
    RngStream rng(seed, 99);
    return init_policy(PolicyShape{t.feature_dim, t.vocab_size, 8}, rng);
}

}  // namespace

TEST_CASE("group advantages", "[grpo]") {
    const std::vector<double> r{1, 0, 1, 0};
    const Eigen::VectorXd a = group_advantages(r);
    for (int i = 0; i < 4; ++i) CHECK(a(i) == Approx(i % 2 == 0 ? 1.0 : -1.0).margin(1e-7));

    const std::vector<double> c{0.3, 0.3, 0.3, 0.3};
    CHECK(group_advantages(c).isZero(0.0));

    // Dyadic rewards and shift keep every intermediate exact.
    const std::vector<double> d{0.25, 0.5, 0.75, 0.0, 1.0, 0.5};
    std::vector<double> shifted;
    for (double x : d) shifted.push_back(x + 4.0);
    CHECK(group_advantages(d) == group_advantages(shifted));

    const Eigen::VectorXd mc = group_advantages(d, false);
    CHECK(mc(0) == 0.25 - 0.5);

    CHECK_THROWS_AS(group_advantages(std::vector<double>{1.0}), InvalidInput);
    CHECK_THROWS_AS(group_advantages(std::vector<double>{}), InvalidInput);
}

TEST_CASE("advantage invariances on random groups", "[grpo]") {
    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> u(0.0, 1.0), gamma(0.1, 10.0);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> r(16);
        for (auto& x : r) x = u(gen);
        const Eigen::VectorXd a = group_advantages(r);
        CHECK(std::abs(a.mean()) < 1e-9);

        const double g = gamma(gen);
        std::vector<double> scaled;
        for (double x : r) scaled.push_back(g * x);
        CHECK((group_advantages(scaled) - a).lpNorm<Eigen::Infinity>() < 1e-6);
    }
}

TEST_CASE("scalarization", "[grpo]") {
    Eigen::MatrixXd m(3, 2);
    m << 1, 0, 0.5, 0.5, 0, 1;
    CHECK(scalarize(m, Eigen::Vector2d(1, 0)) == m.col(0));
    CHECK(scalarize(m, Eigen::Vector2d(0.25, 0.75)) == Eigen::Vector3d(0.25, 0.5, 0.75));
    CHECK_THROWS_AS(scalarize(m, Eigen::Vector3d(1, 0, 0)), InvalidInput);

    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::MatrixXd r(16, 3);
        for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = u(gen);
        Eigen::Vector3d w1(u(gen), u(gen), u(gen)), w2(u(gen), u(gen), u(gen));
        w1 /= w1.sum();
        w2 /= w2.sum();
        const double a = u(gen);
        const Eigen::VectorXd lhs = scalarize(r, a * w1 + (1 - a) * w2);
        const Eigen::VectorXd rhs = a * scalarize(r, w1) + (1 - a) * scalarize(r, w2);
        CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
}

TEST_CASE("grpo step report", "[grpo]") {
    const TaskSpec t = grpo_task();
    const auto comps = reward_config("math", 'A');
    const PolicyParams p = start_params(t);
    const std::vector<int> prompts{0, 1, 2, 3};
    ObjectiveWeights w = ObjectiveWeights::from_components(comps);
    w.values << 0.5, 0.3, 0.2;

    RngStream r1(5, 5), r2(5, 5);
    const GrpoStepResult a = grpo_step(p, w, t, comps, prompts, r1, 0.5);
    const GrpoStepResult b = grpo_step(p, w, t, comps, prompts, r2, 0.5);
    CHECK(flatten(a.params) == flatten(b.params));
    CHECK(a.report.component_means == b.report.component_means);
    for (std::size_t k = 0; k < 3; ++k) CHECK(a.report.objective_grads[k] == b.report.objective_grads[k]);

    const StepReport& rep = a.report;
    CHECK(rep.component_means.size() == 3);
    CHECK(rep.objective_grads.size() == 3);
    for (const auto& g : rep.objective_grads) CHECK(g.size() == 8);
    CHECK(std::abs(rep.scalarized_mean - w.values.dot(rep.component_means)) <= 1e-12);
    CHECK(rep.response_len >= 0.0);
    CHECK(rep.response_len <= t.max_len);
    CHECK(rep.grad_norm > 0.0);

    // The applied update is -lr times the surrogate gradient of the sampled batch.
    RngStream r3(5, 5);
    RolloutBatch batch = collect_rollouts(p, t, comps, prompts, r3, 16);
    for (auto& g : batch.groups) g.scalarized = scalarize(g.reward_matrix, w.values);
    const auto adv = batch_advantages(batch, -1, GrpoOptions{});
    const Eigen::VectorXd grad = flatten(surrogate_gradient(p, batch.rollouts, adv).param_grad);
    CHECK((flatten(a.params) - (flatten(p) - 0.5 * grad)).lpNorm<Eigen::Infinity>() <= 1e-15);
}

TEST_CASE("degenerate weights select the accuracy column", "[grpo]") {
    const TaskSpec t = grpo_task();
    const auto comps = reward_config("math", 'A');
    const PolicyParams p = start_params(t);
    ObjectiveWeights w = ObjectiveWeights::from_components(comps);
    w.values << 1.0, 0.0, 0.0;
    RngStream rng(3, 3);
    const std::vector<int> prompts{0, 1};
    RolloutBatch batch = collect_rollouts(p, t, comps, prompts, rng, 16);
    for (auto& g : batch.groups) {
        g.scalarized = scalarize(g.reward_matrix, w.values);
        CHECK(g.scalarized == g.reward_matrix.col(0));
    }
}

TEST_CASE("single-objective gradient equals the main surrogate's", "[grpo]") {
    const TaskSpec t = grpo_task();
    const std::vector<RewardComponentSpec> comps{make_component("accuracy")};
    const PolicyParams p = start_params(t, 4);
    const ObjectiveWeights w = ObjectiveWeights::from_components(comps);
    const std::vector<int> prompts{0, 1, 2, 3, 4, 5, 6, 7};
    RngStream r1(8, 8), r2(8, 8);
    const GrpoStepResult res = grpo_step(p, w, t, comps, prompts, r1, 0.1);

    RolloutBatch batch = collect_rollouts(p, t, comps, prompts, r2, 16);
    for (auto& g : batch.groups) g.scalarized = scalarize(g.reward_matrix, w.values);
    const HiddenGradient main = surrogate_gradient(p, batch.rollouts, batch_advantages(batch, -1, {})).hidden_grad;
    REQUIRE(res.report.objective_grads.size() == 1);
    CHECK((res.report.objective_grads[0] - main).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("grpo step validates its inputs", "[grpo]") {
    const TaskSpec t = grpo_task();
    const auto comps = reward_config("math", 'A');
    const PolicyParams p = start_params(t);
    const std::vector<int> prompts{0};
    RngStream rng(1, 1);

    const ObjectiveWeights two = ObjectiveWeights::uniform({"accuracy", "format"});
    CHECK_THROWS_AS(grpo_step(p, two, t, comps, prompts, rng, 0.1), InvalidInput);

    ObjectiveWeights off = ObjectiveWeights::from_components(comps);
    off.values << 0.5, 0.5, 0.5;
    CHECK_THROWS_AS(grpo_step(p, off, t, comps, prompts, rng, 0.1), InvalidInput);

    const ObjectiveWeights renamed = ObjectiveWeights::uniform({"accuracy", "tag_count", "format"});
    CHECK_THROWS_AS(grpo_step(p, renamed, t, comps, prompts, rng, 0.1), InvalidInput);

    const ObjectiveWeights ok = ObjectiveWeights::from_components(comps);
    CHECK_THROWS_AS(grpo_step(p, ok, t, comps, std::vector<int>{}, rng, 0.1), InvalidInput);
    GrpoOptions g1;
    g1.group_size = 1;
    CHECK_THROWS_AS(grpo_step(p, ok, t, comps, prompts, rng, 0.1, g1), InvalidInput);
}
