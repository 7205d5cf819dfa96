#ifndef FEDMOA_ANALYSIS_H
#define FEDMOA_ANALYSIS_H

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fedmoa/orchestrator.h"
#include "fedmoa/scenario.h"

namespace fedmoa {

// eval.csv: header "round,task,model,metric,value", one row per EvalRow.
void write_eval_csv(const std::filesystem::path& path, const std::vector<EvalRow>& rows);
std::vector<EvalRow> read_eval_csv(const std::filesystem::path& path);

struct RoundMetrics {
    int round = 0;
    double global_accuracy = 0.0;
    double global_reward = 0.0;
    // Means over the task's client models; NaN when no client model exists (round 0).
    double local_accuracy = 0.0;
    double local_reward = 0.0;
};

// task -> per-round metrics, ordered by round.
std::map<std::string, std::vector<RoundMetrics>> summarize_eval(const std::vector<EvalRow>& rows);

std::string render_summary(const ScenarioConfig& cfg, const std::vector<EvalRow>& rows, std::size_t failures);

// ---- Pareto ----------------------------------------------------------------

struct ParetoPoint {
    std::string kind;   // "server" or "client"
    int round = 0;
    std::string task;
    std::string model;
    double x = 0.0;
    double y = 0.0;
};

// Indices of the points not dominated in (x, y), both maximized.
std::vector<std::size_t> pareto_frontier(const std::vector<std::pair<double, double>>& points);

struct ParetoResult {
    std::vector<ParetoPoint> points;    // server trajectory first, then clients
    std::vector<ParetoPoint> frontier;  // non-dominated subset of points
    std::string csv() const;
};

ParetoResult pareto_extract(const std::filesystem::path& run_dir, const std::string& axis_x,
                            const std::string& axis_y);

// ---- Run comparison -------------------------------------------------------

struct SweepStats {
    int wins = 0;    // b > a
    int ties = 0;
    int losses = 0;
    double sign_test_p = 1.0;  // two-sided exact binomial, ties dropped
};

struct Comparison {
    std::string markdown;
    std::string csv;
    bool sweep = false;
    std::map<std::string, SweepStats> accuracy_stats;  // per task, sweeps only
};

// Final-round metrics of run b against run a. Directories holding seed_<n>
// subdirectories are compared as seed sweeps, paired by seed.
Comparison compare_runs(const std::filesystem::path& a, const std::filesystem::path& b);

double sign_test_p_value(int wins, int losses);

// ---- Ablation -------------------------------------------------------------

struct AblationArm {
    bool adaptive_weights = false;
    bool accuracy_aware_agg = false;
    std::string dir_name() const;
};

// The three arms: (lambda, alpha) = OFF/OFF, OFF/ON, ON/ON.
std::vector<AblationArm> ablation_arms();

struct AblationResult {
    std::string markdown;
    std::string csv;
    std::filesystem::path out_dir;
};

// Runs every arm for seeds cfg.seed .. cfg.seed + seeds - 1 under
// out_dir/<arm>/seed_<n>, then tabulates final-round global(local) accuracy
// and reward per task, averaged over seeds.
AblationResult run_ablation(const ScenarioConfig& cfg, int seeds, const std::filesystem::path& out_dir,
                            const std::function<void(const std::string&)>& log = {});

// ---- Step logs and export -------------------------------------------------

struct StepRecord {
    int round = 0;
    int client_id = 0;
    int step = 0;
    std::vector<double> component_rewards;
    double scalarized = 0.0;
    std::vector<double> weights;
    double response_len = 0.0;
};

std::vector<StepRecord> read_client_steps(const std::filesystem::path& run_dir);

// Per-step curves averaged over clients: key -> value per global step
// (round-major, step-minor). Keys are component names for rewards,
// "weight:<name>" for weights, plus "response_len". Only clients whose task
// passes `task_filter` (all when empty) contribute; a component's curve
// averages over the clients that carry it.
std::map<std::string, std::vector<double>> step_curves(const std::filesystem::path& run_dir,
                                                       const std::function<bool(const TaskSpec&)>& task_filter = {});

// Writes steps.csv (csv) or reward_curves.svg, weights.svg, pareto_accuracy_*.svg
// (svg) into the run directory; returns the paths written.
std::vector<std::filesystem::path> export_run(const std::filesystem::path& run_dir, const std::string& format);

struct SvgSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
    bool markers_only = false;
};

std::string render_svg_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                             const std::vector<SvgSeries>& series);

}  // namespace fedmoa

#endif  // FEDMOA_ANALYSIS_H
