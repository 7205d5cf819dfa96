#include "fedmoa/orchestrator.h"

#include <atomic>
#include <charconv>
#include <exception>
#include <fstream>
#include <map>
#include <optional>
#include <thread>

#include <json.hpp>

#include "fedmoa/analysis.h"
#include "fedmoa/checkpoint.h"
#include "fedmoa/errors.h"
#include "fedmoa/numeric.h"

namespace fedmoa {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

EvalResult evaluate(const PolicyParams& params, const TaskSpec& task,
                    std::span<const RewardComponentSpec> components, std::uint64_t tie_seed) {
    if (task.eval_prompts.empty()) {
        throw ConfigError("evaluate: task '" + task.name + "' has no eval prompts");
    }
    RngStream ties(tie_seed, hash_string(task.name));
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(components.size()));
    double acc_sum = 0.0;
    const RewardComponentSpec accuracy = make_component("accuracy");
    for (int p : task.eval_prompts) {
        const Completion c = greedy(params, task, p, ties);
        sums += score_all(components, task, c);
        acc_sum += score_component(accuracy, task, c);
    }
    const double n = static_cast<double>(task.eval_prompts.size());
    EvalResult out;
    out.accuracy = acc_sum / n;
    double reward = 0.0;
    for (std::size_t k = 0; k < components.size(); ++k) {
        const double mean = sums(static_cast<Eigen::Index>(k)) / n;
        out.components.emplace_back(components[k].name, mean);
        reward += mean;
    }
    out.reward = components.empty() ? 0.0 : reward / static_cast<double>(components.size());
    return out;
}

std::string client_cluster_key(const ClientConfig& c, ClusterBy by) {
    ClientUpdate probe;
    probe.task_label = c.task->task_label;
    probe.weights = ObjectiveWeights::from_components(c.components);
    return cluster_key(probe, by);
}

namespace {

std::uint64_t eval_seed(std::uint64_t master, int round, const std::string& model) {
    return mix64(master ^ hash_string("eval")) ^ mix64(static_cast<std::uint64_t>(round) * 0x9e37U) ^
           hash_string(model);
}

std::vector<RewardComponentSpec> eval_components(const TaskSpec& task, double length_target) {
    std::vector<RewardComponentSpec> comps = canonical_components(task.family);
    for (auto& c : comps) {
        if (c.kind == RewardKind::Length) c.params["target_len"] = length_target;
    }
    return comps;
}

void append_eval(std::vector<EvalRow>& rows, int round, const std::string& task, const std::string& model,
                 const EvalResult& r) {
    for (const auto& [name, value] : r.components) {
        rows.push_back({round, task, model, name, value});
    }
    rows.push_back({round, task, model, "reward", r.reward});
}

nlohmann::ordered_json vec_json(const Eigen::VectorXd& v) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& cfg, const RunOptions& opts) {
    const Scenario sc = build_scenario(cfg);
    auto log = [&](const std::string& m) {
        if (opts.log) opts.log(m);
    };

    RunResult result;
    result.run_dir = opts.out_dir.empty() ? std::filesystem::path(cfg.output_dir) : opts.out_dir;
    std::ofstream client_log, server_log;
    if (opts.write_files) {
        std::filesystem::create_directories(result.run_dir / "checkpoints");
        std::ofstream(result.run_dir / "config.json") << to_json(cfg).dump(2) << '\n';
        client_log.open(result.run_dir / "client_steps.jsonl", std::ios::trunc);
        server_log.open(result.run_dir / "server_rounds.jsonl", std::ios::trunc);
        if (!client_log || !server_log) {
            throw SchemaError("cannot write logs under " + result.run_dir.string());
        }
    }

    AggregationOptions agg_opts;
    agg_opts.epsilon = cfg.epsilon;
    agg_opts.accuracy_aware = cfg.accuracy_aware_agg;
    agg_opts.cluster_by = cfg.cluster_by;

    RngStream init_rng(cfg.seed, hash_string("policy-init"));
    PolicyParams global = init_policy(sc.shape, init_rng);
    result.global_params.push_back(global);

    auto checkpoint_name = [](int r) { return "checkpoints/round_" + std::to_string(r) + ".bin"; };
    auto evaluate_global = [&](int round) {
        for (const auto& task : sc.tasks) {
            const auto comps = eval_components(*task, cfg.length_target);
            append_eval(result.eval, round, task->name, "global",
                        evaluate(global, *task, comps, eval_seed(cfg.seed, round, "global")));
        }
    };
    if (opts.write_files) save_params(result.run_dir / checkpoint_name(0), global);
    evaluate_global(0);

    const std::size_t n_clients = sc.clients.size();
    std::optional<Broadcast> broadcast;
    std::vector<std::optional<ObjectiveWeights>> last_weights(n_clients);
    const int workers = std::max(1, std::min<int>(cfg.workers, static_cast<int>(n_clients)));

    for (int r = 0; r < cfg.rounds; ++r) {
        log("round " + std::to_string(r + 1) + "/" + std::to_string(cfg.rounds));
        std::vector<std::optional<ClientRoundResult>> outcomes(n_clients);
        std::vector<std::string> errors(n_clients);

        auto run_one = [&](std::size_t i) {
            const ClientConfig& c = sc.clients[i];
            std::optional<std::map<std::string, double>> bw;
            if (broadcast) bw = broadcast->weights_for(client_cluster_key(c, cfg.cluster_by));
            try {
                outcomes[i] = opts.client_runner ? opts.client_runner(c, global, bw, r, last_weights[i])
                                                 : run_local_round(c, global, bw, r, last_weights[i]);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        };
        if (workers == 1) {
            for (std::size_t i = 0; i < n_clients; ++i) run_one(i);
        } else {
            std::atomic<std::size_t> next{0};
            std::vector<std::thread> pool;
            for (int w = 0; w < workers; ++w) {
                pool.emplace_back([&] {
                    for (std::size_t i = next++; i < n_clients; i = next++) run_one(i);
                });
            }
            for (auto& t : pool) t.join();
        }

        std::vector<ClientUpdate> updates;
        for (std::size_t i = 0; i < n_clients; ++i) {
            if (!outcomes[i]) {
                result.failures.push_back({r + 1, sc.clients[i].client_id, errors[i]});
                log("client " + std::to_string(sc.clients[i].client_id) + " failed: " + errors[i]);
                continue;
            }
            const ClientRoundResult& res = *outcomes[i];
            if (res.broadcast_fallback) {
                log("warning: client " + std::to_string(res.update.client_id) +
                    " shares no component with its broadcast; using uniform weights");
            }
            if (opts.write_files) {
                for (std::size_t s = 0; s < res.reports.size(); ++s) {
                    const StepReport& rep = res.reports[s];
                    nlohmann::ordered_json rec;
                    rec["round"] = r + 1;
                    rec["client_id"] = res.update.client_id;
                    rec["step"] = rep.step;
                    rec["component_rewards"] = vec_json(rep.component_means);
                    rec["scalarized"] = rep.scalarized_mean;
                    rec["weights"] = vec_json(res.step_weights[s].values);
                    rec["response_len"] = rep.response_len;
                    client_log << rec.dump() << '\n';
                }
            }
            updates.push_back(res.update);
            last_weights[i] = res.update.weights;
        }
        if (updates.empty()) {
            throw ProtocolError("round " + std::to_string(r + 1) + ": every client failed");
        }

        AggregationResult agg = aggregate_round(updates, agg_opts);
        global = agg.broadcast.global_params;
        broadcast = std::move(agg.broadcast);
        result.global_params.push_back(global);

        if (opts.write_files) {
            save_params(result.run_dir / checkpoint_name(r + 1), global);
            nlohmann::ordered_json rec;
            rec["round"] = r + 1;
            rec["clusters"] = nlohmann::ordered_json::array();
            for (const auto& c : agg.clusters) {
                nlohmann::ordered_json sw = nlohmann::ordered_json::object();
                for (const auto& [name, w] : c.shared_weights) sw[name] = w;
                rec["clusters"].push_back({{"key", c.key},
                                           {"members", c.members},
                                           {"alpha", vec_json(c.alpha)},
                                           {"shared_weights", sw}});
            }
            rec["global_checkpoint_path"] = checkpoint_name(r + 1);
            nlohmann::ordered_json failed = nlohmann::ordered_json::array();
            for (const auto& f : result.failures) {
                if (f.round == r + 1) failed.push_back(f.client_id);
            }
            rec["failed_clients"] = failed;
            server_log << rec.dump() << '\n';
        }

        evaluate_global(r + 1);
        for (const auto& u : updates) {
            const ClientConfig& c = sc.clients[static_cast<std::size_t>(u.client_id)];
            const std::string model = "client_" + std::to_string(u.client_id);
            append_eval(result.eval, r + 1, c.task->name, model,
                        evaluate(u.params, *c.task, eval_components(*c.task, cfg.length_target),
                                 eval_seed(cfg.seed, r + 1, model)));
        }
    }

    if (opts.write_files) {
        write_eval_csv(result.run_dir / "eval.csv", result.eval);
        std::ofstream(result.run_dir / "summary.md") << render_summary(cfg, result.eval, result.failures.size());
    }
    return result;
}

}  // namespace fedmoa
