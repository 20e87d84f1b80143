#pragma once

// JSON (de)serialization of run configs and experiment records. nlohmann's
// default object ordering (sorted keys) plus shortest-round-trip doubles keep
// the bytes stable across runs, which the determinism checks rely on.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "concat/core.hpp"
#include "concat/errors.hpp"
#include "concat/orchestrator.hpp"
#include "concat/topology.hpp"

namespace concat {

inline nlohmann::json run_config_to_json(const RunConfig& cfg) {
    return nlohmann::json{
        {"n_agents", cfg.n_agents},
        {"refinement_rounds", cfg.refinement_rounds},
        {"alpha", cfg.alpha},
        {"retention_rate", cfg.retention_rate},
        {"tau_min", cfg.tau_min},
        {"theta_sim", cfg.theta_sim},
        {"code_cluster_threshold", cfg.code_cluster_threshold},
        {"temperature", cfg.temperature},
        {"top_p", cfg.top_p},
        {"max_tokens", cfg.max_tokens},
        {"seed", cfg.seed},
        {"random_density", cfg.random_density},
        {"max_parallel_calls", cfg.max_parallel_calls},
        {"skip_empty_refinement", cfg.skip_empty_refinement},
        {"exact_benefit", cfg.exact_benefit},
        {"sc_cot_samples", cfg.sc_cot_samples},
    };
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig cfg;
    try {
        cfg.n_agents = j.value("n_agents", cfg.n_agents);
        cfg.refinement_rounds = j.value("refinement_rounds", cfg.refinement_rounds);
        cfg.alpha = j.value("alpha", cfg.alpha);
        cfg.retention_rate = j.value("retention_rate", cfg.retention_rate);
        cfg.tau_min = j.value("tau_min", cfg.tau_min);
        cfg.theta_sim = j.value("theta_sim", cfg.theta_sim);
        cfg.code_cluster_threshold = j.value("code_cluster_threshold", cfg.code_cluster_threshold);
        cfg.temperature = j.value("temperature", cfg.temperature);
        cfg.top_p = j.value("top_p", cfg.top_p);
        cfg.max_tokens = j.value("max_tokens", cfg.max_tokens);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.random_density = j.value("random_density", cfg.random_density);
        cfg.max_parallel_calls = j.value("max_parallel_calls", cfg.max_parallel_calls);
        cfg.skip_empty_refinement = j.value("skip_empty_refinement", cfg.skip_empty_refinement);
        cfg.exact_benefit = j.value("exact_benefit", cfg.exact_benefit);
        cfg.sc_cot_samples = j.value("sc_cot_samples", cfg.sc_cot_samples);
    } catch (const nlohmann::json::exception& ex) {
        throw SchemaError(std::string("bad run config: ") + ex.what());
    }
    return cfg;
}

namespace detail {

inline nlohmann::json state_to_json(const AgentState& st) {
    nlohmann::json j{
        {"agent", st.agent},
        {"answer", st.answer},
        {"confidence", st.confidence},
        {"round", st.round},
    };
    if (st.normalized_answer)
        j["normalized_answer"] = *st.normalized_answer;
    else
        j["normalized_answer"] = nullptr;
    return j;
}

inline AgentState state_from_json(const nlohmann::json& j) {
    AgentState st;
    st.agent = j.at("agent").get<AgentId>();
    st.answer = j.at("answer").get<std::string>();
    st.confidence = j.at("confidence").get<double>();
    st.round = j.at("round").get<int>();
    if (j.contains("normalized_answer") && !j["normalized_answer"].is_null())
        st.normalized_answer = j["normalized_answer"].get<std::string>();
    return st;
}

inline nlohmann::json states_to_json(const std::vector<AgentState>& states) {
    nlohmann::json arr = nlohmann::json::array();
    for (const AgentState& st : states) arr.push_back(state_to_json(st));
    return arr;
}

inline std::vector<AgentState> states_from_json(const nlohmann::json& arr) {
    std::vector<AgentState> out;
    for (const auto& j : arr) out.push_back(state_from_json(j));
    return out;
}

inline nlohmann::json phase_to_json(const PhaseTrace& p) {
    return nlohmann::json{
        {"calls", p.calls},
        {"latency_critical", p.latency_critical},
        {"latency_serial", p.latency_serial},
        {"prompt_tokens", p.prompt_tokens},
        {"completion_tokens", p.completion_tokens},
    };
}

inline PhaseTrace phase_from_json(const nlohmann::json& j) {
    PhaseTrace p;
    p.calls = j.value("calls", 0);
    p.latency_critical = j.value("latency_critical", 0.0);
    p.latency_serial = j.value("latency_serial", 0.0);
    p.prompt_tokens = j.value("prompt_tokens", 0L);
    p.completion_tokens = j.value("completion_tokens", 0L);
    return p;
}

inline nlohmann::json round_to_json(const RoundTrace& rt) {
    nlohmann::json clusters = nlohmann::json::array();
    for (const ConsensusCluster& c : rt.clusters) {
        nlohmann::json jc{{"members", c.members}};
        if (c.representative_answer)
            jc["representative_answer"] = *c.representative_answer;
        else
            jc["representative_answer"] = nullptr;
        clusters.push_back(std::move(jc));
    }
    nlohmann::json benefits = nlohmann::json::array();
    for (const auto& [edge, b] : rt.benefits.entries)
        benefits.push_back({edge.first, edge.second, b});
    nlohmann::json dropped = nlohmann::json::array();
    for (const auto& [src, dst] : rt.prune.dropped) dropped.push_back({src, dst});
    return nlohmann::json{
        {"round", rt.round},
        {"clusters", clusters},
        {"leaders", rt.leaders.leaders},
        {"benefits", benefits},
        {"prune",
         {{"threshold", rt.prune.threshold},
          {"kept", topology_to_json(rt.prune.kept)},
          {"dropped", dropped}}},
        {"topology", topology_to_json(rt.topology)},
        {"states_after", states_to_json(rt.states_after)},
        {"calls_made", rt.calls_made},
        {"round_latency", rt.round_latency},
        {"round_latency_serial", rt.round_latency_serial},
        {"prompt_tokens", rt.prompt_tokens},
        {"completion_tokens", rt.completion_tokens},
    };
}

inline RoundTrace round_from_json(const nlohmann::json& j) {
    RoundTrace rt;
    rt.round = j.at("round").get<int>();
    for (const auto& jc : j.at("clusters")) {
        ConsensusCluster c;
        c.members = jc.at("members").get<std::vector<AgentId>>();
        if (jc.contains("representative_answer") && !jc["representative_answer"].is_null())
            c.representative_answer = jc["representative_answer"].get<std::string>();
        rt.clusters.push_back(std::move(c));
    }
    rt.leaders.leaders = j.at("leaders").get<std::vector<AgentId>>();
    for (const auto& jb : j.at("benefits"))
        rt.benefits.entries[{jb.at(0).get<AgentId>(), jb.at(1).get<AgentId>()}] =
            jb.at(2).get<double>();
    rt.prune.threshold = j.at("prune").at("threshold").get<double>();
    rt.prune.kept = topology_from_json(j.at("prune").at("kept"));
    for (const auto& jd : j.at("prune").at("dropped"))
        rt.prune.dropped.emplace_back(jd.at(0).get<AgentId>(), jd.at(1).get<AgentId>());
    rt.topology = topology_from_json(j.at("topology"));
    rt.states_after = states_from_json(j.at("states_after"));
    rt.calls_made = j.at("calls_made").get<int>();
    rt.round_latency = j.value("round_latency", 0.0);
    rt.round_latency_serial = j.value("round_latency_serial", 0.0);
    rt.prompt_tokens = j.value("prompt_tokens", 0L);
    rt.completion_tokens = j.value("completion_tokens", 0L);
    return rt;
}

}  // namespace detail

inline nlohmann::json record_to_json(const ExperimentRecord& rec) {
    nlohmann::json rounds = nlohmann::json::array();
    for (const RoundTrace& rt : rec.rounds) rounds.push_back(detail::round_to_json(rt));
    nlohmann::json j{
        {"schema_version", rec.schema_version},
        {"task_id", rec.task_id},
        {"method", rec.method},
        {"config", run_config_to_json(rec.config)},
        {"kind", to_string(rec.kind)},
        {"reference_answer", rec.reference_answer},
        {"init_states", detail::states_to_json(rec.init_states)},
        {"init", detail::phase_to_json(rec.init)},
        {"rounds", rounds},
        {"final_answer_raw", rec.final_answer_raw},
        {"aggregation_fallback", rec.aggregation_fallback},
        {"correct", rec.correct},
        {"total_latency", rec.total_latency},
        {"total_prompt_tokens", rec.total_prompt_tokens},
        {"total_completion_tokens", rec.total_completion_tokens},
        {"total_calls", rec.total_calls},
        {"status", rec.status},
        {"synthetic_latency", rec.synthetic_latency},
    };
    if (rec.final_answer)
        j["final_answer"] = *rec.final_answer;
    else
        j["final_answer"] = nullptr;
    return j;
}

inline ExperimentRecord record_from_json(const nlohmann::json& j) {
    ExperimentRecord rec;
    try {
        rec.schema_version = j.at("schema_version").get<int>();
        if (rec.schema_version != kRecordSchemaVersion)
            throw SchemaError("unsupported record schema_version " +
                              std::to_string(rec.schema_version) + " (expected " +
                              std::to_string(kRecordSchemaVersion) + ")");
        rec.task_id = j.at("task_id").get<std::string>();
        rec.method = j.at("method").get<std::string>();
        rec.config = run_config_from_json(j.at("config"));
        rec.kind = task_kind_from_string(j.at("kind").get<std::string>());
        rec.reference_answer = j.at("reference_answer").get<std::string>();
        rec.init_states = detail::states_from_json(j.at("init_states"));
        rec.init = detail::phase_from_json(j.at("init"));
        for (const auto& jr : j.at("rounds")) rec.rounds.push_back(detail::round_from_json(jr));
        if (j.contains("final_answer") && !j["final_answer"].is_null())
            rec.final_answer = j["final_answer"].get<std::string>();
        rec.final_answer_raw = j.value("final_answer_raw", std::string{});
        rec.aggregation_fallback = j.value("aggregation_fallback", false);
        rec.correct = j.at("correct").get<bool>();
        rec.total_latency = j.at("total_latency").get<double>();
        rec.total_prompt_tokens = j.value("total_prompt_tokens", 0L);
        rec.total_completion_tokens = j.value("total_completion_tokens", 0L);
        rec.total_calls = j.at("total_calls").get<int>();
        rec.status = j.value("status", std::string{"ok"});
        rec.synthetic_latency = j.value("synthetic_latency", false);
    } catch (const nlohmann::json::exception& ex) {
        throw SchemaError(std::string("bad experiment record: ") + ex.what());
    }
    return rec;
}

}  // namespace concat
