#include "fedmoa/scenario.h"

#include <fstream>
#include <map>
#include <set>

#include "fedmoa/errors.h"
#include "fedmoa/numeric.h"

namespace fedmoa {

namespace {

const char* kVariants = "ABC";

std::vector<ClientEntry> generate_clients(ScenarioKind kind, const std::vector<TaskEntry>& tasks, int n) {
    std::vector<ClientEntry> out;
    if (tasks.empty() || n < 1) return out;
    for (int i = 0; i < n; ++i) {
        switch (kind) {
            case ScenarioKind::HomoHomo:
                out.push_back({tasks.front().name, "A"});
                break;
            case ScenarioKind::HomoHeter:
                out.push_back({tasks.front().name, std::string(1, kVariants[i % 3])});
                break;
            case ScenarioKind::HeterHeter: {
                const int t = i % static_cast<int>(tasks.size());
                const int within = i / static_cast<int>(tasks.size());
                out.push_back({tasks[static_cast<std::size_t>(t)].name, std::string(1, kVariants[within % 3])});
                break;
            }
        }
    }
    return out;
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& dst) {
    if (!j.contains(key)) return;
    try {
        dst = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

}  // namespace

std::string to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::HomoHomo: return "homo_homo";
        case ScenarioKind::HomoHeter: return "homo_heter";
        case ScenarioKind::HeterHeter: return "heter_heter";
    }
    return "homo_homo";
}

ScenarioKind scenario_kind_from(const std::string& s) {
    if (s == "homo_homo") return ScenarioKind::HomoHomo;
    if (s == "homo_heter") return ScenarioKind::HomoHeter;
    if (s == "heter_heter") return ScenarioKind::HeterHeter;
    throw ConfigError("unknown scenario '" + s + "' (expected homo_homo, homo_heter or heter_heter)");
}

ScenarioConfig default_config(ScenarioKind kind) {
    ScenarioConfig cfg;
    cfg.kind = kind;
    if (kind == ScenarioKind::HeterHeter) {
        cfg.tasks = {{"math", "math", "math"}, {"gsm", "math", "gsm"}, {"code", "code", "code"}};
        cfg.num_clients = 15;
    } else {
        cfg.tasks = {{"math", "math", "math"}};
        cfg.num_clients = 10;
    }
    cfg.clients = generate_clients(kind, cfg.tasks, cfg.num_clients);
    return cfg;
}

void ScenarioConfig::validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (rounds < 0) fail("rounds must be >= 0");
    if (tasks.empty()) fail("no tasks");
    std::set<std::string> task_names;
    for (const auto& t : tasks) {
        if (t.name.empty()) fail("task with empty name");
        if (t.name.find_first_of(",\n\"") != std::string::npos) fail("task name '" + t.name + "' contains , or quotes");
        if (!task_names.insert(t.name).second) fail("duplicate task '" + t.name + "'");
        if (t.family != "math" && t.family != "code") fail("task '" + t.name + "': unknown family '" + t.family + "'");
    }
    if (num_clients < 1) fail("num_clients must be >= 1");
    if (static_cast<int>(clients.size()) != num_clients) fail("num_clients does not match the clients list");
    std::map<std::string, int> per_task;
    for (const auto& c : clients) {
        if (!task_names.count(c.task)) fail("client refers to unknown task '" + c.task + "'");
        if (c.reward_config.size() != 1 || std::string(kVariants).find(c.reward_config) == std::string::npos) {
            fail("reward_config must be A, B or C (got '" + c.reward_config + "')");
        }
        ++per_task[c.task];
    }
    if (kind != ScenarioKind::HeterHeter && per_task.size() > 1) {
        fail(to_string(kind) + " requires every client to share one task");
    }
    if (local_steps < 1) fail("local_steps must be >= 1");
    if (prompts_per_step < 1) fail("prompts_per_step must be >= 1");
    if (group_size < 2) fail("group_size must be >= 2");
    if (!(lr0 > 0.0)) fail("lr0 must be positive");
    if (!(lambda >= 0.0)) fail("lambda must be >= 0");
    if (!(epsilon > 0.0)) fail("epsilon must be positive");
    if (hidden_dim < 1) fail("hidden_dim must be >= 1");
    if (vocab_size < 4) fail("vocab_size must be >= 4");
    if (max_len < 1) fail("max_len must be >= 1");
    if (eval_prompts < 1) fail("eval_prompts must be >= 1");
    if (answer_keys < 1) fail("answer_keys must be >= 1");
    for (const auto& [task, n] : per_task) {
        if (train_prompts < n) fail("task '" + task + "' has fewer train prompts than clients");
    }
    if (workers < 1) fail("workers must be >= 1");
}

ScenarioConfig parse_config(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    static const std::set<std::string> known = {
        "scenario", "rounds", "num_clients", "tasks", "clients", "local_steps", "prompts_per_step",
        "group_size", "lr0", "lambda", "epsilon", "std_normalize", "hidden_dim", "vocab_size", "max_len",
        "train_prompts", "eval_prompts", "answer_keys", "length_target", "adaptive_weights",
        "accuracy_aware_agg", "cluster_by", "seed", "workers", "output_dir"};
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
    }
    if (!j.contains("scenario")) throw ConfigError("config key 'scenario' is required");

    std::string kind_name;
    read(j, "scenario", kind_name);
    ScenarioConfig cfg = default_config(scenario_kind_from(kind_name));

    if (j.contains("tasks")) {
        if (!j["tasks"].is_array()) throw ConfigError("'tasks' must be an array");
        cfg.tasks.clear();
        for (const auto& t : j["tasks"]) {
            for (const auto& [key, _] : t.items()) {
                if (key != "name" && key != "family" && key != "label") {
                    throw ConfigError("unknown task key '" + key + "'");
                }
            }
            TaskEntry e;
            read(t, "name", e.name);
            e.family = "math";
            read(t, "family", e.family);
            read(t, "label", e.label);
            if (e.label.empty()) e.label = e.name;
            cfg.tasks.push_back(e);
        }
    }
    read(j, "num_clients", cfg.num_clients);
    if (j.contains("clients")) {
        if (!j["clients"].is_array()) throw ConfigError("'clients' must be an array");
        cfg.clients.clear();
        for (const auto& c : j["clients"]) {
            for (const auto& [key, _] : c.items()) {
                if (key != "task" && key != "reward_config") throw ConfigError("unknown client key '" + key + "'");
            }
            ClientEntry e;
            read(c, "task", e.task);
            read(c, "reward_config", e.reward_config);
            cfg.clients.push_back(e);
        }
        if (!j.contains("num_clients")) cfg.num_clients = static_cast<int>(cfg.clients.size());
    } else {
        cfg.clients = generate_clients(cfg.kind, cfg.tasks, cfg.num_clients);
    }

    read(j, "rounds", cfg.rounds);
    read(j, "local_steps", cfg.local_steps);
    read(j, "prompts_per_step", cfg.prompts_per_step);
    read(j, "group_size", cfg.group_size);
    read(j, "lr0", cfg.lr0);
    read(j, "lambda", cfg.lambda);
    read(j, "epsilon", cfg.epsilon);
    read(j, "std_normalize", cfg.std_normalize);
    read(j, "hidden_dim", cfg.hidden_dim);
    read(j, "vocab_size", cfg.vocab_size);
    read(j, "max_len", cfg.max_len);
    read(j, "train_prompts", cfg.train_prompts);
    read(j, "eval_prompts", cfg.eval_prompts);
    read(j, "answer_keys", cfg.answer_keys);
    read(j, "length_target", cfg.length_target);
    read(j, "adaptive_weights", cfg.adaptive_weights);
    read(j, "accuracy_aware_agg", cfg.accuracy_aware_agg);
    read(j, "seed", cfg.seed);
    read(j, "workers", cfg.workers);
    read(j, "output_dir", cfg.output_dir);
    if (j.contains("cluster_by")) {
        std::string by;
        read(j, "cluster_by", by);
        if (by == "task_label") {
            cfg.cluster_by = ClusterBy::TaskLabel;
        } else if (by == "reward_names") {
            cfg.cluster_by = ClusterBy::RewardNames;
        } else {
            throw ConfigError("cluster_by must be task_label or reward_names");
        }
    }
    cfg.validate();
    return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

nlohmann::ordered_json to_json(const ScenarioConfig& cfg) {
    nlohmann::ordered_json j;
    j["scenario"] = to_string(cfg.kind);
    j["rounds"] = cfg.rounds;
    j["num_clients"] = cfg.num_clients;
    j["tasks"] = nlohmann::ordered_json::array();
    for (const auto& t : cfg.tasks) {
        j["tasks"].push_back({{"name", t.name}, {"family", t.family}, {"label", t.label}});
    }
    j["clients"] = nlohmann::ordered_json::array();
    for (const auto& c : cfg.clients) {
        j["clients"].push_back({{"task", c.task}, {"reward_config", c.reward_config}});
    }
    j["local_steps"] = cfg.local_steps;
    j["prompts_per_step"] = cfg.prompts_per_step;
    j["group_size"] = cfg.group_size;
    j["lr0"] = cfg.lr0;
    j["lambda"] = cfg.lambda;
    j["epsilon"] = cfg.epsilon;
    j["std_normalize"] = cfg.std_normalize;
    j["hidden_dim"] = cfg.hidden_dim;
    j["vocab_size"] = cfg.vocab_size;
    j["max_len"] = cfg.max_len;
    j["train_prompts"] = cfg.train_prompts;
    j["eval_prompts"] = cfg.eval_prompts;
    j["answer_keys"] = cfg.answer_keys;
    j["length_target"] = cfg.length_target;
    j["adaptive_weights"] = cfg.adaptive_weights;
    j["accuracy_aware_agg"] = cfg.accuracy_aware_agg;
    j["cluster_by"] = cfg.cluster_by == ClusterBy::TaskLabel ? "task_label" : "reward_names";
    j["seed"] = cfg.seed;
    j["workers"] = cfg.workers;
    j["output_dir"] = cfg.output_dir;
    return j;
}

const TaskSpec& Scenario::task(const std::string& name) const {
    for (const auto& t : tasks) {
        if (t->name == name) return *t;
    }
    throw ConfigError("unknown task '" + name + "'");
}

Scenario build_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    Scenario sc;
    sc.config = cfg;
    const int feature_dim = static_cast<int>(cfg.tasks.size()) * cfg.answer_keys;
    for (std::size_t i = 0; i < cfg.tasks.size(); ++i) {
        TaskOptions opts;
        opts.name = cfg.tasks[i].name;
        opts.task_label = cfg.tasks[i].label;
        opts.family = cfg.tasks[i].family;
        opts.vocab_size = cfg.vocab_size;
        opts.max_len = cfg.max_len;
        opts.train_prompts = cfg.train_prompts;
        opts.eval_prompts = cfg.eval_prompts;
        opts.answer_keys = cfg.answer_keys;
        opts.feature_offset = static_cast<int>(i) * cfg.answer_keys;
        opts.feature_dim = feature_dim;
        opts.seed = cfg.seed;
        sc.tasks.push_back(std::make_shared<const TaskSpec>(make_task(opts)));
    }
    sc.shape = PolicyShape{feature_dim, cfg.vocab_size, cfg.hidden_dim};

    // Round-robin partition of each task's train prompts among its clients.
    std::map<std::string, std::vector<int>> members;
    for (int i = 0; i < cfg.num_clients; ++i) {
        members[cfg.clients[static_cast<std::size_t>(i)].task].push_back(i);
    }
    std::vector<std::vector<int>> pools(static_cast<std::size_t>(cfg.num_clients));
    for (const auto& [task_name, ids] : members) {
        const TaskSpec& task = sc.task(task_name);
        for (std::size_t p = 0; p < task.train_prompts.size(); ++p) {
            pools[static_cast<std::size_t>(ids[p % ids.size()])].push_back(task.train_prompts[p]);
        }
    }

    const int schedule = std::max(1, cfg.rounds * cfg.local_steps);
    for (int i = 0; i < cfg.num_clients; ++i) {
        const ClientEntry& e = cfg.clients[static_cast<std::size_t>(i)];
        ClientConfig c;
        c.client_id = i;
        for (const auto& t : sc.tasks) {
            if (t->name == e.task) c.task = t;
        }
        c.components = reward_config(c.task->family, e.reward_config.front());
        for (auto& comp : c.components) {
            if (comp.kind == RewardKind::Length) comp.params["target_len"] = cfg.length_target;
        }
        c.reward_config = e.reward_config;
        c.prompt_pool = std::move(pools[static_cast<std::size_t>(i)]);
        c.local_steps = cfg.local_steps;
        c.prompts_per_step = cfg.prompts_per_step;
        c.lr0 = cfg.lr0;
        c.lambda = cfg.adaptive_weights ? cfg.lambda : 0.0;
        c.schedule_steps = schedule;
        c.seed = cfg.seed;
        c.grpo.group_size = cfg.group_size;
        c.grpo.std_normalize = cfg.std_normalize;
        c.validate();
        sc.clients.push_back(std::move(c));
    }
    return sc;
}

}  // namespace fedmoa
