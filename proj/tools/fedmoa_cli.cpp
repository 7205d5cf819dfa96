// fedmoa: run scenarios, ablations and post-hoc analysis of run directories.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedmoa/analysis.h"
#include "fedmoa/errors.h"
#include "fedmoa/orchestrator.h"
#include "fedmoa/scenario.h"

namespace {

int fail(const std::string& kind, const std::string& message, int code) {
    nlohmann::ordered_json rec;
    rec["status"] = "error";
    rec["kind"] = kind;
    rec["message"] = message;
    std::cerr << rec.dump() << '\n';
    return code;
}

void log_line(const std::string& m) { std::cerr << m << '\n'; }

}  // namespace

int main(int argc, char** argv) {
    using namespace fedmoa;
    CLI::App app{"Federated multi-objective GRPO laboratory"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir, run_dir, axis_x, axis_y, dir_a, dir_b, format;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    bool no_adaptive = false, uniform_agg = false, quiet = false;
    int seeds = 1;

    app.add_flag("-q,--quiet", quiet, "Suppress progress lines on stderr");

    auto* run = app.add_subcommand("run", "Run one scenario");
    run->add_option("--config", config_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", seed, "Override the master seed");
    run->add_flag("--no-adaptive", no_adaptive, "Freeze objective weights (lambda = 0)");
    run->add_flag("--uniform-agg", uniform_agg, "Uniform alpha within clusters");
    run->add_option("--out", out_dir, "Run directory (default: config output_dir)");
    run->add_option("--workers", workers, "Concurrent client workers");

    auto* ablate = app.add_subcommand("ablate", "Run the three ablation arms over k seeds");
    ablate->add_option("--config", config_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    ablate->add_option("--seeds", seeds, "Number of seeds")->required()->check(CLI::PositiveNumber);
    ablate->add_option("--out", out_dir, "Output directory (default: <output_dir>/ablation)");
    ablate->add_option("--workers", workers, "Concurrent client workers");

    auto* pareto = app.add_subcommand("pareto", "Pareto frontier of two eval metrics");
    pareto->add_option("--run", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
    pareto->add_option("--x", axis_x, "Metric for the x axis")->required();
    pareto->add_option("--y", axis_y, "Metric for the y axis")->required();

    auto* compare = app.add_subcommand("compare", "Compare two runs or two seed sweeps");
    compare->add_option("--a", dir_a, "Baseline run directory")->required()->check(CLI::ExistingDirectory);
    compare->add_option("--b", dir_b, "Candidate run directory")->required()->check(CLI::ExistingDirectory);
    compare->add_option("--csv", out_dir, "Also write the table as CSV to this file");

    auto* exp = app.add_subcommand("export", "Export step logs as CSV or SVG charts");
    exp->add_option("--run", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
    exp->add_option("--format", format, "csv or svg")->required()->check(CLI::IsMember({"csv", "svg"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), 2);
    }

    std::function<void(const std::string&)> log;
    if (!quiet) log = log_line;

    try {
        if (*run || *ablate) {
            ScenarioConfig cfg = load_config(config_path);
            if (seed) cfg.seed = *seed;
            if (workers) cfg.workers = *workers;
            if (no_adaptive) cfg.adaptive_weights = false;
            if (uniform_agg) cfg.accuracy_aware_agg = false;
            cfg.validate();
            if (*run) {
                RunOptions opts;
                opts.out_dir = out_dir.empty() ? std::filesystem::path(cfg.output_dir) : std::filesystem::path(out_dir);
                opts.log = log;
                const RunResult res = run_scenario(cfg, opts);
                std::cout << render_summary(cfg, res.eval, res.failures.size());
                std::cout << "\nrun directory: " << res.run_dir.string() << '\n';
            } else {
                const auto dir = out_dir.empty() ? std::filesystem::path(cfg.output_dir) / "ablation"
                                                 : std::filesystem::path(out_dir);
                const AblationResult res = run_ablation(cfg, seeds, dir, log);
                std::cout << res.markdown << "\nwritten: " << (dir / "ablation.md").string() << ", "
                          << (dir / "ablation.csv").string() << '\n';
            }
        } else if (*pareto) {
            std::cout << pareto_extract(run_dir, axis_x, axis_y).csv();
        } else if (*compare) {
            const Comparison cmp = compare_runs(dir_a, dir_b);
            std::cout << cmp.markdown;
            if (!out_dir.empty()) std::ofstream(out_dir) << cmp.csv;
        } else if (*exp) {
            for (const auto& p : export_run(run_dir, format)) std::cout << p.string() << '\n';
        }
    } catch (const ConfigError& e) {
        return fail("config", e.what(), 3);
    } catch (const SchemaError& e) {
        return fail("schema", e.what(), 4);
    } catch (const ProtocolError& e) {
        return fail("protocol", e.what(), 5);
    } catch (const InvalidInput& e) {
        return fail("invalid_input", e.what(), 6);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), 1);
    }
    return 0;
}
