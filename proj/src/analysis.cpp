#include "fedmoa/analysis.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fedmoa/errors.h"

namespace fedmoa {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::string fixed(double v, int digits) {
    if (std::isnan(v)) return "-";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw SchemaError("cannot read " + p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return kNaN;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

// ---- eval.csv ---------------------------------------------------------------

void write_eval_csv(const std::filesystem::path& path, const std::vector<EvalRow>& rows) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw SchemaError("cannot write " + path.string());
    f << "round,task,model,metric,value\n";
    for (const auto& r : rows) {
        f << r.round << ',' << r.task << ',' << r.model << ',' << r.metric << ',' << format_double(r.value) << '\n';
    }
}

std::vector<EvalRow> read_eval_csv(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line) || line != "round,task,model,metric,value") {
        throw SchemaError(path.string() + ": unexpected eval.csv header");
    }
    std::vector<EvalRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 5) throw SchemaError(path.string() + ": malformed row '" + line + "'");
        try {
            rows.push_back({std::stoi(f[0]), f[1], f[2], f[3], std::stod(f[4])});
        } catch (const std::exception&) {
            throw SchemaError(path.string() + ": malformed row '" + line + "'");
        }
    }
    return rows;
}

std::map<std::string, std::vector<RoundMetrics>> summarize_eval(const std::vector<EvalRow>& rows) {
    struct Acc {
        double g_acc = kNaN, g_rew = kNaN;
        std::vector<double> l_acc, l_rew;
    };
    std::map<std::string, std::map<int, Acc>> by_task;
    for (const auto& r : rows) {
        Acc& a = by_task[r.task][r.round];
        const bool global = r.model == "global";
        if (r.metric == "accuracy") {
            if (global) a.g_acc = r.value; else a.l_acc.push_back(r.value);
        } else if (r.metric == "reward") {
            if (global) a.g_rew = r.value; else a.l_rew.push_back(r.value);
        }
    }
    std::map<std::string, std::vector<RoundMetrics>> out;
    for (const auto& [task, rounds] : by_task) {
        for (const auto& [round, a] : rounds) {
            out[task].push_back({round, a.g_acc, a.g_rew, mean_of(a.l_acc), mean_of(a.l_rew)});
        }
    }
    return out;
}

std::string render_summary(const ScenarioConfig& cfg, const std::vector<EvalRow>& rows, std::size_t failures) {
    std::ostringstream md;
    md << "# Run summary\n\n";
    md << "- scenario: " << to_string(cfg.kind) << "\n";
    md << "- clients: " << cfg.num_clients << ", rounds: " << cfg.rounds << ", local steps: " << cfg.local_steps
       << "\n";
    md << "- seed: " << cfg.seed << "\n";
    md << "- adaptive weights (lambda): " << (cfg.adaptive_weights ? "ON" : "OFF") << " ("
       << format_double(cfg.adaptive_weights ? cfg.lambda : 0.0) << ")\n";
    md << "- accuracy-aware aggregation (alpha): " << (cfg.accuracy_aware_agg ? "ON" : "OFF") << "\n";
    md << "- client failures: " << failures << "\n\n";
    md << "Accuracy and reward are greedy-decoding means over each task's eval prompts. "
          "Local = mean over that task's client models after the round.\n";

    for (const auto& [task, rounds] : summarize_eval(rows)) {
        md << "\n## " << task << "\n\n";
        md << "| round | global acc | global reward | local acc | local reward |\n";
        md << "|---:|---:|---:|---:|---:|\n";
        for (const auto& m : rounds) {
            md << "| " << m.round << " | " << fixed(m.global_accuracy, 4) << " | " << fixed(m.global_reward, 4)
               << " | " << fixed(m.local_accuracy, 4) << " | " << fixed(m.local_reward, 4) << " |\n";
        }
        const RoundMetrics& last = rounds.back();
        const auto best = std::max_element(rounds.begin(), rounds.end(), [](const auto& a, const auto& b) {
            return a.global_accuracy < b.global_accuracy;
        });
        md << "\n- final round (" << last.round << "): global acc " << fixed(last.global_accuracy, 4)
           << ", global reward " << fixed(last.global_reward, 4) << "\n";
        md << "- best round by global eval accuracy (" << best->round << "): global acc "
           << fixed(best->global_accuracy, 4) << ", global reward " << fixed(best->global_reward, 4) << "\n";
    }
    return md.str();
}

// ---- Pareto -----------------------------------------------------------------

std::vector<std::size_t> pareto_frontier(const std::vector<std::pair<double, double>>& points) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < points.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < points.size() && !dominated; ++j) {
            if (i == j) continue;
            const auto& p = points[i];
            const auto& q = points[j];
            dominated = q.first >= p.first && q.second >= p.second && (q.first > p.first || q.second > p.second);
        }
        if (!dominated) keep.push_back(i);
    }
    return keep;
}

std::string ParetoResult::csv() const {
    std::ostringstream out;
    out << "kind,round,task,model,x,y\n";
    auto row = [&](const ParetoPoint& p, const std::string& kind) {
        out << kind << ',' << p.round << ',' << p.task << ',' << p.model << ',' << format_double(p.x) << ','
            << format_double(p.y) << '\n';
    };
    for (const auto& p : points) row(p, p.kind);
    for (const auto& p : frontier) row(p, "frontier");
    return out.str();
}

ParetoResult pareto_extract(const std::filesystem::path& run_dir, const std::string& axis_x,
                            const std::string& axis_y) {
    const auto rows = read_eval_csv(run_dir / "eval.csv");
    std::set<std::string> metrics;
    for (const auto& r : rows) metrics.insert(r.metric);
    for (const auto& axis : {axis_x, axis_y}) {
        if (!metrics.count(axis)) {
            std::string known;
            for (const auto& m : metrics) known += (known.empty() ? "" : ", ") + m;
            throw SchemaError("unknown axis '" + axis + "' (available: " + known + ")");
        }
    }
    using Key = std::tuple<int, std::string, std::string>;
    std::map<Key, std::pair<double, double>> xy;
    std::map<Key, int> seen;
    for (const auto& r : rows) {
        const Key k{r.round, r.task, r.model};
        if (r.metric == axis_x) { xy[k].first = r.value; seen[k] |= 1; }
        if (r.metric == axis_y) { xy[k].second = r.value; seen[k] |= 2; }
    }
    ParetoResult res;
    std::vector<ParetoPoint> clients;
    for (const auto& [k, v] : xy) {
        if (seen[k] != 3) continue;
        const auto& [round, task, model] = k;
        ParetoPoint p{model == "global" ? "server" : "client", round, task, model, v.first, v.second};
        (model == "global" ? res.points : clients).push_back(p);
    }
    std::stable_sort(res.points.begin(), res.points.end(),
                     [](const auto& a, const auto& b) { return std::tie(a.task, a.round) < std::tie(b.task, b.round); });
    res.points.insert(res.points.end(), clients.begin(), clients.end());

    std::vector<std::pair<double, double>> raw;
    for (const auto& p : res.points) raw.emplace_back(p.x, p.y);
    for (std::size_t i : pareto_frontier(raw)) res.frontier.push_back(res.points[i]);
    return res;
}

// ---- Comparison -------------------------------------------------------------

double sign_test_p_value(int wins, int losses) {
    const int n = wins + losses;
    if (n == 0) return 1.0;
    const int k = std::min(wins, losses);
    // P(X <= k) for X ~ Binomial(n, 1/2), doubled and capped at 1.
    double tail = 0.0;
    double coef = 1.0;  // C(n, i)
    for (int i = 0; i <= k; ++i) {
        if (i > 0) coef = coef * static_cast<double>(n - i + 1) / static_cast<double>(i);
        tail += coef;
    }
    tail *= std::pow(0.5, n);
    return std::min(1.0, 2.0 * tail);
}

namespace {

struct FinalMetrics {
    double g_acc, g_rew, l_acc, l_rew;
};

std::map<std::string, FinalMetrics> final_metrics(const std::filesystem::path& run) {
    std::map<std::string, FinalMetrics> out;
    for (const auto& [task, rounds] : summarize_eval(read_eval_csv(run / "eval.csv"))) {
        const RoundMetrics& m = rounds.back();
        out[task] = {m.global_accuracy, m.global_reward, m.local_accuracy, m.local_reward};
    }
    return out;
}

std::map<std::string, std::filesystem::path> seed_dirs(const std::filesystem::path& dir) {
    std::map<std::string, std::filesystem::path> out;
    if (!std::filesystem::is_directory(dir)) return out;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (e.is_directory() && name.rfind("seed_", 0) == 0 && std::filesystem::exists(e.path() / "eval.csv")) {
            out[name] = e.path();
        }
    }
    return out;
}

void check_same_tasks(const std::map<std::string, FinalMetrics>& a, const std::map<std::string, FinalMetrics>& b,
                      const std::string& where) {
    std::vector<std::string> only_a, only_b;
    for (const auto& [t, _] : a) if (!b.count(t)) only_a.push_back(t);
    for (const auto& [t, _] : b) if (!a.count(t)) only_b.push_back(t);
    if (only_a.empty() && only_b.empty()) return;
    std::string msg = "task sets differ" + where + ":";
    for (const auto& t : only_a) msg += " only in a: " + t + ";";
    for (const auto& t : only_b) msg += " only in b: " + t + ";";
    throw SchemaError(msg);
}

}  // namespace

Comparison compare_runs(const std::filesystem::path& a, const std::filesystem::path& b) {
    Comparison cmp;
    const auto seeds_a = seed_dirs(a);
    const auto seeds_b = seed_dirs(b);
    std::ostringstream md, csv;

    if (seeds_a.empty() != seeds_b.empty()) {
        throw SchemaError("cannot compare a seed sweep with a single run");
    }
    if (seeds_a.empty()) {
        const auto fa = final_metrics(a);
        const auto fb = final_metrics(b);
        check_same_tasks(fa, fb, "");
        md << "| task | metric | a | b | delta (b - a) |\n|---|---|---:|---:|---:|\n";
        csv << "task,metric,a,b,delta\n";
        for (const auto& [task, ma] : fa) {
            const FinalMetrics& mb = fb.at(task);
            const std::pair<const char*, std::pair<double, double>> metrics[] = {
                {"global_accuracy", {ma.g_acc, mb.g_acc}},
                {"global_reward", {ma.g_rew, mb.g_rew}},
                {"local_accuracy", {ma.l_acc, mb.l_acc}},
                {"local_reward", {ma.l_rew, mb.l_rew}},
            };
            for (const auto& [name, v] : metrics) {
                md << "| " << task << " | " << name << " | " << fixed(v.first, 4) << " | " << fixed(v.second, 4)
                   << " | " << fixed(v.second - v.first, 4) << " |\n";
                csv << task << ',' << name << ',' << format_double(v.first) << ',' << format_double(v.second) << ','
                    << format_double(v.second - v.first) << '\n';
            }
        }
        cmp.markdown = md.str();
        cmp.csv = csv.str();
        return cmp;
    }

    cmp.sweep = true;
    std::vector<std::string> missing;
    for (const auto& [s, _] : seeds_a) if (!seeds_b.count(s)) missing.push_back(s + " (only in a)");
    for (const auto& [s, _] : seeds_b) if (!seeds_a.count(s)) missing.push_back(s + " (only in b)");
    if (!missing.empty()) {
        std::string msg = "seed sets differ:";
        for (const auto& m : missing) msg += " " + m;
        throw SchemaError(msg);
    }

    md << "| seed | task | a acc | b acc | delta acc | a reward | b reward | delta reward |\n"
       << "|---|---|---:|---:|---:|---:|---:|---:|\n";
    csv << "seed,task,a_accuracy,b_accuracy,delta_accuracy,a_reward,b_reward,delta_reward\n";
    for (const auto& [seed, dir_a] : seeds_a) {
        const auto fa = final_metrics(dir_a);
        const auto fb = final_metrics(seeds_b.at(seed));
        check_same_tasks(fa, fb, " for " + seed);
        for (const auto& [task, ma] : fa) {
            const FinalMetrics& mb = fb.at(task);
            const double da = mb.g_acc - ma.g_acc;
            const double dr = mb.g_rew - ma.g_rew;
            SweepStats& st = cmp.accuracy_stats[task];
            if (da > 0) ++st.wins; else if (da < 0) ++st.losses; else ++st.ties;
            md << "| " << seed << " | " << task << " | " << fixed(ma.g_acc, 4) << " | " << fixed(mb.g_acc, 4) << " | "
               << fixed(da, 4) << " | " << fixed(ma.g_rew, 4) << " | " << fixed(mb.g_rew, 4) << " | "
               << fixed(dr, 4) << " |\n";
            csv << seed << ',' << task << ',' << format_double(ma.g_acc) << ',' << format_double(mb.g_acc) << ','
                << format_double(da) << ',' << format_double(ma.g_rew) << ',' << format_double(mb.g_rew) << ','
                << format_double(dr) << '\n';
        }
    }
    md << "\n| task | b wins | ties | b losses | sign-test p |\n|---|---:|---:|---:|---:|\n";
    for (auto& [task, st] : cmp.accuracy_stats) {
        st.sign_test_p = sign_test_p_value(st.wins, st.losses);
        md << "| " << task << " | " << st.wins << " | " << st.ties << " | " << st.losses << " | "
           << fixed(st.sign_test_p, 4) << " |\n";
    }
    cmp.markdown = md.str();
    cmp.csv = csv.str();
    return cmp;
}

// ---- Ablation ---------------------------------------------------------------

std::string AblationArm::dir_name() const {
    return std::string("lambda_") + (adaptive_weights ? "on" : "off") + "_alpha_" + (accuracy_aware_agg ? "on" : "off");
}

std::vector<AblationArm> ablation_arms() {
    return {{false, false}, {false, true}, {true, true}};
}

AblationResult run_ablation(const ScenarioConfig& cfg, int seeds, const std::filesystem::path& out_dir,
                            const std::function<void(const std::string&)>& log) {
    if (seeds < 1) throw ConfigError("ablate: seeds must be >= 1");
    AblationResult res;
    res.out_dir = out_dir;
    std::filesystem::create_directories(out_dir);

    struct Cell {
        std::vector<double> g_acc, l_acc, g_rew, l_rew;
    };
    std::vector<std::map<std::string, Cell>> table;
    std::set<std::string> tasks;
    for (const auto& arm : ablation_arms()) {
        std::map<std::string, Cell> cells;
        for (int s = 0; s < seeds; ++s) {
            ScenarioConfig c = cfg;
            c.seed = cfg.seed + static_cast<std::uint64_t>(s);
            c.adaptive_weights = arm.adaptive_weights;
            c.accuracy_aware_agg = arm.accuracy_aware_agg;
            const auto dir = out_dir / arm.dir_name() / ("seed_" + std::to_string(c.seed));
            c.output_dir = dir.string();
            if (log) log(arm.dir_name() + " seed " + std::to_string(c.seed));
            RunOptions ro;
            ro.out_dir = dir;
            ro.log = log;
            const RunResult run = run_scenario(c, ro);
            for (const auto& [task, rounds] : summarize_eval(run.eval)) {
                const RoundMetrics& m = rounds.back();
                Cell& cell = cells[task];
                cell.g_acc.push_back(m.global_accuracy);
                cell.l_acc.push_back(m.local_accuracy);
                cell.g_rew.push_back(m.global_reward);
                cell.l_rew.push_back(m.local_reward);
                tasks.insert(task);
            }
        }
        table.push_back(std::move(cells));
    }

    std::ostringstream md, csv;
    md << "Ablation (" << to_string(cfg.kind) << ", " << seeds << " seed" << (seeds > 1 ? "s" : "")
       << "). Accuracy in %, global(local); reward global(local). First row is FedGRPO.\n\n";
    md << "| lambda | alpha |";
    for (const auto& t : tasks) md << ' ' << t << " Acc | " << t << " Reward |";
    md << "\n|:---:|:---:|";
    for (std::size_t i = 0; i < tasks.size(); ++i) md << "---:|---:|";
    md << '\n';
    csv << "lambda,alpha,task,global_accuracy,local_accuracy,global_reward,local_reward\n";
    const auto arms = ablation_arms();
    for (std::size_t a = 0; a < arms.size(); ++a) {
        const char* lam = arms[a].adaptive_weights ? "ON" : "OFF";
        const char* alp = arms[a].accuracy_aware_agg ? "ON" : "OFF";
        md << "| " << lam << " | " << alp << " |";
        for (const auto& t : tasks) {
            const Cell& c = table[a].at(t);
            md << ' ' << fixed(100.0 * mean_of(c.g_acc), 1) << '(' << fixed(100.0 * mean_of(c.l_acc), 2) << ") | "
               << fixed(mean_of(c.g_rew), 3) << '(' << fixed(mean_of(c.l_rew), 3) << ") |";
            csv << lam << ',' << alp << ',' << t << ',' << format_double(mean_of(c.g_acc)) << ','
                << format_double(mean_of(c.l_acc)) << ',' << format_double(mean_of(c.g_rew)) << ','
                << format_double(mean_of(c.l_rew)) << '\n';
        }
        md << '\n';
    }
    res.markdown = md.str();
    res.csv = csv.str();
    std::ofstream(out_dir / "ablation.md") << res.markdown;
    std::ofstream(out_dir / "ablation.csv") << res.csv;
    return res;
}

// ---- Step logs ----------------------------------------------------------------

std::vector<StepRecord> read_client_steps(const std::filesystem::path& run_dir) {
    std::istringstream in(read_file(run_dir / "client_steps.jsonl"));
    std::vector<StepRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            StepRecord r;
            r.round = j.at("round").get<int>();
            r.client_id = j.at("client_id").get<int>();
            r.step = j.at("step").get<int>();
            r.component_rewards = j.at("component_rewards").get<std::vector<double>>();
            r.scalarized = j.at("scalarized").get<double>();
            r.weights = j.at("weights").get<std::vector<double>>();
            r.response_len = j.at("response_len").get<double>();
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError("client_steps.jsonl: " + std::string(e.what()));
        }
    }
    return out;
}

std::map<std::string, std::vector<double>> step_curves(const std::filesystem::path& run_dir,
                                                       const std::function<bool(const TaskSpec&)>& task_filter) {
    const Scenario sc = build_scenario(load_config(run_dir / "config.json"));
    const auto records = read_client_steps(run_dir);
    const int steps_per_round = sc.config.local_steps;
    const int total = sc.config.rounds * steps_per_round;

    std::map<std::string, std::vector<double>> sums, counts;
    auto add = [&](const std::string& key, int idx, double v) {
        auto& s = sums[key];
        auto& c = counts[key];
        if (s.empty()) {
            s.assign(static_cast<std::size_t>(total), 0.0);
            c.assign(static_cast<std::size_t>(total), 0.0);
        }
        s[static_cast<std::size_t>(idx)] += v;
        c[static_cast<std::size_t>(idx)] += 1.0;
    };
    for (const auto& r : records) {
        if (r.client_id < 0 || r.client_id >= static_cast<int>(sc.clients.size())) {
            throw SchemaError("client_steps.jsonl: unknown client id " + std::to_string(r.client_id));
        }
        const ClientConfig& c = sc.clients[static_cast<std::size_t>(r.client_id)];
        if (task_filter && !task_filter(*c.task)) continue;
        const int idx = (r.round - 1) * steps_per_round + r.step;
        if (idx < 0 || idx >= total || r.component_rewards.size() != c.components.size()) {
            throw SchemaError("client_steps.jsonl: record does not match config");
        }
        for (std::size_t k = 0; k < c.components.size(); ++k) {
            add(c.components[k].name, idx, r.component_rewards[k]);
            add("weight:" + c.components[k].name, idx, r.weights[k]);
        }
        add("response_len", idx, r.response_len);
    }
    std::map<std::string, std::vector<double>> out;
    for (auto& [key, s] : sums) {
        const auto& c = counts[key];
        std::vector<double> v(s.size(), kNaN);
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (c[i] > 0) v[i] = s[i] / c[i];
        }
        out[key] = std::move(v);
    }
    return out;
}

// ---- Export -------------------------------------------------------------------

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

}  // namespace

std::string render_svg_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                             const std::vector<SvgSeries>& series) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};
    const double width = 720, height = 420, left = 70, right = 180, top = 40, bottom = 50;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            xmin = std::min(xmin, x); xmax = std::max(xmax, x);
            ymin = std::min(ymin, y); ymax = std::max(ymax, y);
        }
    }
    if (!std::isfinite(xmin)) { xmin = 0; xmax = 1; ymin = 0; ymax = 1; }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    const double pw = width - left - right, ph = height - top - bottom;
    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return top + ph - (y - ymin) / (ymax - ymin) * ph; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
        << xml_escape(title) << "</text>\n";
    svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fy = ymin + (ymax - ymin) * i / 4.0;
        const double fx = xmin + (xmax - xmin) * i / 4.0;
        svg << "<text x=\"" << left - 6 << "\" y=\"" << py(fy) + 4 << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
            << "font-size=\"11\">" << fixed(fy, 3) << "</text>\n";
        svg << "<text x=\"" << px(fx) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\" "
            << "font-family=\"sans-serif\" font-size=\"11\">" << fixed(fx, 2) << "</text>\n";
    }
    svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(x_label) << "</text>\n";
    svg << "<text x=\"16\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 16 " << top + ph / 2
        << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(y_label)
        << "</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const char* color = palette[i % std::size(palette)];
        if (s.markers_only) {
            for (const auto& [x, y] : s.points) {
                if (!std::isfinite(x) || !std::isfinite(y)) continue;
                svg << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\"" << color
                    << "\" fill-opacity=\"0.6\"/>\n";
            }
        } else {
            svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (const auto& [x, y] : s.points) {
                if (std::isfinite(x) && std::isfinite(y)) svg << px(x) << ',' << py(y) << ' ';
            }
            svg << "\"/>\n";
        }
        svg << "<text x=\"" << left + pw + 12 << "\" y=\"" << top + 16 + 18 * static_cast<double>(i)
            << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << color << "\">" << xml_escape(s.label)
            << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

std::vector<std::filesystem::path> export_run(const std::filesystem::path& run_dir, const std::string& format) {
    std::vector<std::filesystem::path> written;
    if (format == "csv") {
        const Scenario sc = build_scenario(load_config(run_dir / "config.json"));
        const auto records = read_client_steps(run_dir);
        const auto path = run_dir / "steps.csv";
        std::ofstream f(path, std::ios::trunc);
        f << "round,client_id,task,step,global_step,metric,value\n";
        for (const auto& r : records) {
            const ClientConfig& c = sc.clients.at(static_cast<std::size_t>(r.client_id));
            const int gs = (r.round - 1) * sc.config.local_steps + r.step;
            auto row = [&](const std::string& metric, double v) {
                f << r.round << ',' << r.client_id << ',' << c.task->name << ',' << r.step << ',' << gs << ','
                  << metric << ',' << format_double(v) << '\n';
            };
            for (std::size_t k = 0; k < c.components.size(); ++k) {
                row("reward:" + c.components[k].name, r.component_rewards[k]);
                row("weight:" + c.components[k].name, r.weights[k]);
            }
            row("scalarized", r.scalarized);
            row("response_len", r.response_len);
        }
        written.push_back(path);
        return written;
    }
    if (format != "svg") {
        throw SchemaError("unknown export format '" + format + "' (expected csv or svg)");
    }

    const auto curves = step_curves(run_dir);
    std::vector<SvgSeries> rewards, weights;
    for (const auto& [key, v] : curves) {
        SvgSeries s;
        const bool is_weight = key.rfind("weight:", 0) == 0;
        s.label = is_weight ? key.substr(7) : key;
        for (std::size_t i = 0; i < v.size(); ++i) s.points.emplace_back(static_cast<double>(i), v[i]);
        if (is_weight) {
            weights.push_back(std::move(s));
        } else if (key != "response_len") {
            rewards.push_back(std::move(s));
        }
    }
    const auto reward_path = run_dir / "reward_curves.svg";
    std::ofstream(reward_path) << render_svg_chart("Client reward components (mean over clients)", "local step",
                                                   "reward", rewards);
    written.push_back(reward_path);
    const auto weight_path = run_dir / "weights.svg";
    std::ofstream(weight_path) << render_svg_chart("Objective weights (mean over clients)", "local step", "weight",
                                                   weights);
    written.push_back(weight_path);

    const auto rows = read_eval_csv(run_dir / "eval.csv");
    std::set<std::string> metrics;
    for (const auto& r : rows) metrics.insert(r.metric);
    for (const auto& other : metrics) {
        if (other == "accuracy" || other == "reward") continue;
        const ParetoResult pr = pareto_extract(run_dir, other, "accuracy");
        std::map<std::string, SvgSeries> server;
        SvgSeries clients{"client checkpoints", {}, true};
        SvgSeries front{"frontier", {}, true};
        for (const auto& p : pr.points) {
            if (p.kind == "server") {
                auto& s = server[p.task];
                s.label = "server " + p.task;
                s.points.emplace_back(p.x, p.y);
            } else {
                clients.points.emplace_back(p.x, p.y);
            }
        }
        for (const auto& p : pr.frontier) front.points.emplace_back(p.x, p.y);
        std::vector<SvgSeries> series{clients};
        for (auto& [_, s] : server) series.push_back(s);
        series.push_back(front);
        const auto path = run_dir / ("pareto_accuracy_" + other + ".svg");
        std::ofstream(path) << render_svg_chart("Pareto: " + other + " vs accuracy", other, "accuracy", series);
        written.push_back(path);
    }
    return written;
}

}  // namespace fedmoa
