#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "concat/concat.hpp"

namespace {

struct CliOverrides {
    std::string config_path;
    std::string dataset;
    std::string kind;
    std::string method;
    std::string backend;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int repetitions = 0;
};

concat::ExperimentConfig resolve_config(const CliOverrides& cli) {
    concat::ExperimentConfig cfg;
    if (!cli.config_path.empty()) cfg = concat::load_experiment_config(cli.config_path);
    if (!cli.dataset.empty()) cfg.dataset = cli.dataset;
    if (!cli.kind.empty()) cfg.kind = concat::task_kind_from_string(cli.kind);
    if (!cli.method.empty()) cfg.method = cli.method;
    if (!cli.backend.empty()) cfg.backend = cli.backend;
    if (!cli.out.empty()) cfg.out_dir = cli.out;
    if (cli.seed_set) cfg.run.seed = cli.seed;
    if (cli.repetitions > 0) cfg.repetitions = cli.repetitions;
    concat::apply_env_overrides(cfg);
    return cfg;
}

void add_override_flags(CLI::App* cmd, CliOverrides& cli) {
    cmd->add_option("--config", cli.config_path, "Experiment config JSON");
    cmd->add_option("--dataset", cli.dataset, "Dataset JSONL path");
    cmd->add_option("--kind", cli.kind, "Task kind: choice | numeric | code");
    cmd->add_option("--method", cli.method,
                    "concat | llm_debate | vanilla:<topology> | cot | sc_cot");
    cmd->add_option("--backend", cli.backend, "sim[:<profile.json>] | http:<endpoint>");
    cmd->add_option("--out", cli.out, "Output directory");
    cmd->add_option("--seed", cli.seed, "Base seed (repetition r runs at seed+r)")
        ->each([&cli](const std::string&) { cli.seed_set = true; });
    cmd->add_option("--repetitions", cli.repetitions, "Repetitions (default 3)");
}

int cmd_run(const CliOverrides& cli) {
    concat::ExperimentConfig cfg = resolve_config(cli);
    concat::RunSummary result = concat::run_experiment(cfg);
    std::cout << result.summary.dump(2) << "\n";
    if (!result.ok) {
        std::cerr << "error: " << result.failures << " of " << result.records
                  << " task runs failed (>10%)\n";
        return 1;
    }
    return 0;
}

int cmd_report(const std::string& results, const std::string& out) {
    nlohmann::json report = concat::emit_report(results, out);
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_validate(const std::string& config_path) {
    concat::ExperimentConfig cfg = concat::load_experiment_config(config_path);
    concat::validate_experiment_config(cfg);
    std::cout << "ok\n";
    return 0;
}

int cmd_bench_math() {
    bool all_pass = true;
    for (const concat::PropResult& r : concat::run_benefit_property_grid()) {
        std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name;
        if (!r.pass) std::cout << "  [" << r.detail << "]";
        std::cout << "\n";
        all_pass = all_pass && r.pass;
    }
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Consensus- and confidence-driven multi-agent collaboration engine"};
    app.require_subcommand(1);

    CliOverrides run_cli;
    CLI::App* run = app.add_subcommand("run", "Execute an experiment");
    add_override_flags(run, run_cli);

    std::string report_results, report_out = "report";
    CLI::App* report = app.add_subcommand("report", "Analyze a results file");
    report->add_option("--results", report_results, "results.jsonl path")->required();
    report->add_option("--out", report_out, "Report output directory");

    std::string validate_path;
    CLI::App* validate = app.add_subcommand("validate-config", "Check a config file");
    validate->add_option("--config", validate_path, "Experiment config JSON")->required();

    app.add_subcommand("bench-math", "Run the benefit-model property grid");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(run_cli);
        if (report->parsed()) return cmd_report(report_results, report_out);
        if (validate->parsed()) return cmd_validate(validate_path);
        return cmd_bench_math();
    } catch (const concat::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 3;
    }
}
