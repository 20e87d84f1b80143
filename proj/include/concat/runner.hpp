#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "concat/analysis.hpp"
#include "concat/config.hpp"
#include "concat/dataset.hpp"
#include "concat/executor.hpp"
#include "concat/orchestrator.hpp"
#include "concat/record_json.hpp"

namespace concat {

namespace detail {

// Shortest round-trip decimal form, stable across runs and platforms.
inline std::string fmt_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

}  // namespace detail

// Run one task under the configured method.
inline ExperimentRecord run_method(const Task& task, const std::string& method,
                                   const RunConfig& cfg, AgentBackend& backend,
                                   const PromptLibrary& lib) {
    if (method == "concat") return run_concat(task, cfg, backend, lib);
    if (method == "llm_debate") return run_llm_debate(task, cfg, backend, lib);
    if (method == "cot") return run_cot(task, cfg, backend, lib);
    if (method == "sc_cot") return run_sc_cot(task, cfg, backend, lib);
    if (method.rfind("vanilla:", 0) == 0)
        return run_vanilla_mas(task, topology_kind_from_string(method.substr(8)), cfg, backend,
                               lib);
    throw SchemaError("unknown method: " + method);
}

struct RunSummary {
    nlohmann::json summary;
    long records = 0;
    long failures = 0;
    bool ok = true;  // false when more than 10% of task runs failed
};

// Execute the configured method over all tasks for every repetition, writing
// config.json, results.jsonl, metrics.csv, and summary.json into out_dir.
// Repetition r runs with seed base+r; outputs are byte-deterministic on the
// sim backend.
inline RunSummary run_experiment(const ExperimentConfig& cfg) {
    validate_experiment_config(cfg);
    std::vector<Task> tasks = load_dataset(cfg.dataset, cfg.kind);
    std::unique_ptr<AgentBackend> backend = make_backend(cfg);
    PromptLibrary lib =
        cfg.prompt_dir.empty() ? PromptLibrary::defaults() : PromptLibrary::from_directory(cfg.prompt_dir);

    std::filesystem::create_directories(cfg.out_dir);
    std::filesystem::path out_dir(cfg.out_dir);
    save_experiment_config(cfg, (out_dir / "config.json").string());

    std::ofstream results = detail::open_out(out_dir / "results.jsonl");
    std::ofstream metrics = detail::open_out(out_dir / "metrics.csv");
    metrics << "repetition,seed,method,tasks,correct,failed,accuracy_pct,mean_latency_s,"
               "mean_calls,prompt_tokens,completion_tokens,efficiency\n";

    RunSummary out;
    nlohmann::json reps = nlohmann::json::array();
    double acc_sum = 0.0, lat_sum = 0.0;
    long grand_prompt = 0, grand_completion = 0;

    for (int rep = 0; rep < cfg.repetitions; ++rep) {
        RunConfig run_cfg = cfg.run;
        run_cfg.seed = cfg.run.seed + static_cast<std::uint64_t>(rep);

        std::vector<ExperimentRecord> records =
            parallel_map(static_cast<int>(tasks.size()), cfg.task_parallelism, [&](int i) {
                return run_method(tasks[static_cast<std::size_t>(i)], cfg.method, run_cfg,
                                  *backend, lib);
            });
        for (const ExperimentRecord& rec : records)
            results << record_to_json(rec).dump() << "\n";

        std::map<std::string, MethodSummary> by_method = summarize_by_method(records);
        const MethodSummary& m = by_method.at(cfg.method);
        out.records += m.records;
        out.failures += m.failed;
        acc_sum += m.accuracy_pct;
        lat_sum += m.mean_latency;
        grand_prompt += m.prompt_tokens;
        grand_completion += m.completion_tokens;

        metrics << rep << "," << run_cfg.seed << "," << cfg.method << "," << m.records << ","
                << m.correct << "," << m.failed << "," << detail::fmt_double(m.accuracy_pct)
                << "," << detail::fmt_double(m.mean_latency) << ","
                << detail::fmt_double(m.mean_calls) << "," << m.prompt_tokens << ","
                << m.completion_tokens << ","
                << (m.eff ? detail::fmt_double(*m.eff) : std::string{}) << "\n";

        nlohmann::json rj{
            {"repetition", rep},
            {"seed", run_cfg.seed},
            {"tasks", m.records},
            {"correct", m.correct},
            {"failed", m.failed},
            {"accuracy_pct", m.accuracy_pct},
            {"mean_latency_s", m.mean_latency},
            {"mean_calls", m.mean_calls},
            {"prompt_tokens", m.prompt_tokens},
            {"completion_tokens", m.completion_tokens},
        };
        if (m.eff)
            rj["efficiency"] = *m.eff;
        else
            rj["efficiency"] = nullptr;
        reps.push_back(std::move(rj));
    }

    double mean_acc = acc_sum / cfg.repetitions;
    double mean_lat = lat_sum / cfg.repetitions;
    nlohmann::json summary{
        {"schema_version", kRecordSchemaVersion},
        {"method", cfg.method},
        {"kind", to_string(cfg.kind)},
        {"backend", backend->name()},
        {"synthetic_latency", backend->synthetic_latency()},
        {"dataset", cfg.dataset},
        {"tasks", static_cast<long>(tasks.size())},
        {"repetitions", cfg.repetitions},
        {"per_repetition", reps},
        {"mean_accuracy_pct", mean_acc},
        {"mean_latency_s", mean_lat},
        {"total_prompt_tokens", grand_prompt},
        {"total_completion_tokens", grand_completion},
        {"failures", out.failures},
    };
    if (mean_lat > 0.0)
        summary["efficiency"] = efficiency(mean_acc, mean_lat);
    else
        summary["efficiency"] = nullptr;

    out.ok = out.failures * 10 <= out.records;
    summary["ok"] = out.ok;

    std::ofstream sfile = detail::open_out(out_dir / "summary.json");
    sfile << summary.dump(2) << "\n";
    out.summary = std::move(summary);
    return out;
}

// Read back a results JSONL file; SchemaError on malformed lines or schema
// version mismatches.
inline std::vector<ExperimentRecord> read_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open results: " + path);
    std::vector<ExperimentRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw SchemaError(path + " line " + std::to_string(line_no) + ": not valid JSON");
        records.push_back(record_from_json(j));
    }
    return records;
}

// Analysis artifacts over a results file: transition histograms (per bucket
// and per in-degree), dissent AUC, and the per-method efficiency table, as
// CSV plus a combined report.json.
inline nlohmann::json emit_report(const std::string& results_path, const std::string& out_dir) {
    std::vector<ExperimentRecord> records = read_records(results_path);
    std::filesystem::create_directories(out_dir);
    std::filesystem::path dir(out_dir);

    static constexpr TransitionLabel kLabels[] = {
        TransitionLabel::WrongToCorrect, TransitionLabel::CorrectToCorrect,
        TransitionLabel::WrongToWrong, TransitionLabel::CorrectToWrong};

    // Transition histogram per (method, n_agents, round).
    std::map<TransitionBucket, TransitionHistogram> hist = transition_histogram(records);
    std::ofstream tfile = detail::open_out(dir / "transitions.csv");
    tfile << "method,n_agents,round,label,count,proportion\n";
    nlohmann::json jhist = nlohmann::json::array();
    for (const auto& [bucket, h] : hist) {
        const auto& [method, n_agents, round] = bucket;
        nlohmann::json jb{{"method", method}, {"n_agents", n_agents}, {"round", round},
                          {"total", h.total}};
        for (TransitionLabel label : kLabels) {
            tfile << method << "," << n_agents << "," << round << "," << to_string(label) << ","
                  << h.counts[static_cast<std::size_t>(label)] << ","
                  << detail::fmt_double(h.proportion(label)) << "\n";
            jb[to_string(label)] = h.proportion(label);
        }
        jb["helpful_fraction"] = h.helpful_fraction();
        jhist.push_back(std::move(jb));
    }

    // The same events bucketed by how many references the agent saw.
    std::vector<TransitionEvent> events = collect_transitions(records);
    std::map<std::tuple<std::string, int, int>, TransitionHistogram> by_degree;
    for (const TransitionEvent& ev : events)
        by_degree[{ev.method, ev.round, ev.in_degree}].add(ev.label);
    std::ofstream dfile = detail::open_out(dir / "transitions_by_indegree.csv");
    dfile << "method,round,in_degree,label,count,proportion\n";
    for (const auto& [bucket, h] : by_degree) {
        const auto& [method, round, degree] = bucket;
        for (TransitionLabel label : kLabels)
            dfile << method << "," << round << "," << degree << "," << to_string(label) << ","
                  << h.counts[static_cast<std::size_t>(label)] << ","
                  << detail::fmt_double(h.proportion(label)) << "\n";
    }

    // Dissent AUC per method.
    std::vector<DissentPair> all_pairs = collect_dissent_pairs(records);
    std::map<std::string, std::vector<DissentPair>> pairs_by_method;
    for (const DissentPair& dp : all_pairs) pairs_by_method[dp.method].push_back(dp);
    std::ofstream afile = detail::open_out(dir / "dissent.csv");
    afile << "method,pairs,helpful_pairs,auc\n";
    nlohmann::json jdissent = nlohmann::json::array();
    for (const auto& [method, pairs] : pairs_by_method) {
        long helpful_pairs = 0;
        for (const DissentPair& dp : pairs) helpful_pairs += dp.helpful ? 1 : 0;
        std::optional<double> auc;
        try {
            auc = dissent_auc(pairs);
        } catch (const DegenerateLabels&) {
        }
        afile << method << "," << pairs.size() << "," << helpful_pairs << ","
              << (auc ? detail::fmt_double(*auc) : std::string{}) << "\n";
        nlohmann::json jd{{"method", method},
                          {"pairs", static_cast<long>(pairs.size())},
                          {"helpful_pairs", helpful_pairs}};
        if (auc)
            jd["auc"] = *auc;
        else
            jd["auc"] = nullptr;
        jdissent.push_back(std::move(jd));
    }

    // Efficiency table per method.
    std::map<std::string, MethodSummary> by_method = summarize_by_method(records);
    std::ofstream efile = detail::open_out(dir / "efficiency.csv");
    efile << "method,records,accuracy_pct,mean_latency_s,mean_calls,prompt_tokens,"
             "completion_tokens,efficiency\n";
    nlohmann::json jeff = nlohmann::json::array();
    for (const auto& [method, m] : by_method) {
        efile << method << "," << m.records << "," << detail::fmt_double(m.accuracy_pct) << ","
              << detail::fmt_double(m.mean_latency) << "," << detail::fmt_double(m.mean_calls)
              << "," << m.prompt_tokens << "," << m.completion_tokens << ","
              << (m.eff ? detail::fmt_double(*m.eff) : std::string{}) << "\n";
        nlohmann::json jm{{"method", method},
                          {"records", m.records},
                          {"accuracy_pct", m.accuracy_pct},
                          {"mean_latency_s", m.mean_latency},
                          {"mean_calls", m.mean_calls},
                          {"prompt_tokens", m.prompt_tokens},
                          {"completion_tokens", m.completion_tokens}};
        if (m.eff)
            jm["efficiency"] = *m.eff;
        else
            jm["efficiency"] = nullptr;
        jeff.push_back(std::move(jm));
    }

    nlohmann::json report{
        {"schema_version", kRecordSchemaVersion},
        {"records", static_cast<long>(records.size())},
        {"transitions", jhist},
        {"dissent", jdissent},
        {"efficiency", jeff},
    };
    std::ofstream rfile = detail::open_out(dir / "report.json");
    rfile << report.dump(2) << "\n";
    return report;
}

}  // namespace concat
