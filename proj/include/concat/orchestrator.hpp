#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "concat/backends.hpp"
#include "concat/benefit.hpp"
#include "concat/clustering.hpp"
#include "concat/core.hpp"
#include "concat/executor.hpp"
#include "concat/prompts.hpp"
#include "concat/topology.hpp"

namespace concat {

struct PhaseTrace {
    int calls = 0;
    double latency_critical = 0.0;  // longest single call (concurrent fan-out)
    double latency_serial = 0.0;    // sum of call latencies
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

struct RoundTrace {
    int round = 0;
    std::vector<ConsensusCluster> clusters;
    LeaderSet leaders;
    BenefitMatrix benefits;
    PruneResult prune;
    Topology topology;  // edges whose answers actually flowed this round
    std::vector<AgentState> states_after;
    int calls_made = 0;
    double round_latency = 0.0;         // critical path
    double round_latency_serial = 0.0;  // sum
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

inline constexpr int kRecordSchemaVersion = 1;

struct ExperimentRecord {
    int schema_version = kRecordSchemaVersion;
    std::string task_id;
    std::string method;
    RunConfig config;
    TaskKind kind = TaskKind::choice;
    std::string reference_answer;
    std::vector<AgentState> init_states;
    PhaseTrace init;
    std::vector<RoundTrace> rounds;
    std::optional<std::string> final_answer;  // normalized
    std::string final_answer_raw;
    bool aggregation_fallback = false;
    bool correct = false;
    double total_latency = 0.0;  // sum of per-phase critical paths
    long total_prompt_tokens = 0;
    long total_completion_tokens = 0;
    int total_calls = 0;
    std::string status = "ok";
    bool synthetic_latency = false;
};

namespace detail {

struct CallOutcome {
    AgentState state;
    GenerationResult result;
};

inline CallOutcome invoke_agent(const Task& task, AgentId agent, int round, bool aggregation,
                                std::vector<Reference> refs, const RunConfig& cfg,
                                AgentBackend& backend, const PromptLibrary& lib) {
    AgentCall call;
    call.task = &task;
    call.agent = agent;
    call.round = round;
    call.aggregation = aggregation;
    call.references = std::move(refs);
    call.seed = cfg.seed;
    call.request.system_prompt =
        aggregation ? aggregation_system_prompt(task.kind) : lib.role_for(task.kind);
    call.request.user_prompt = aggregation
                                   ? build_aggregation_user_prompt(task, call.references, lib)
                                   : build_task_prompt(task, call.references, lib);
    call.request.temperature = cfg.temperature;
    call.request.top_p = cfg.top_p;
    call.request.max_tokens = cfg.max_tokens;

    CallOutcome out;
    out.result = backend.generate(call);
    out.state.agent = agent;
    out.state.answer = out.result.text;
    out.state.normalized_answer = try_normalize_answer(out.result.text, task.kind);
    out.state.confidence = mean_token_probability(out.result.token_probabilities);
    out.state.round = round;
    return out;
}

inline Reference to_reference(const AgentState& st) {
    return Reference{st.agent, st.answer, st.normalized_answer, st.confidence, std::nullopt};
}

inline void absorb(PhaseTrace& phase, const GenerationResult& r) {
    phase.calls += 1;
    phase.latency_critical = std::max(phase.latency_critical, r.wall_latency);
    phase.latency_serial += r.wall_latency;
    phase.prompt_tokens += r.prompt_tokens;
    phase.completion_tokens += r.completion_tokens;
}

inline std::string truth_of(const Task& task) {
    if (auto t = try_normalize_answer(task.reference_answer, task.kind)) return *t;
    return trim(task.reference_answer);
}

// Majority vote over normalized answers: most supporters, then highest mean
// confidence, then the answer whose earliest supporter has the lowest id.
inline std::optional<std::string> majority_vote(const std::vector<AgentState>& states) {
    struct Bucket {
        int votes = 0;
        double conf_sum = 0.0;
        AgentId first = 0;
    };
    std::map<std::string, Bucket> buckets;
    for (const AgentState& st : states) {
        if (!st.normalized_answer) continue;
        auto [it, fresh] = buckets.try_emplace(*st.normalized_answer);
        if (fresh) it->second.first = st.agent;
        it->second.votes += 1;
        it->second.conf_sum += st.confidence;
        it->second.first = std::min(it->second.first, st.agent);
    }
    const std::string* best = nullptr;
    const Bucket* best_b = nullptr;
    for (const auto& [answer, b] : buckets) {
        if (best == nullptr) {
            best = &answer;
            best_b = &b;
            continue;
        }
        double mean = b.conf_sum / b.votes;
        double best_mean = best_b->conf_sum / best_b->votes;
        bool wins = b.votes > best_b->votes ||
                    (b.votes == best_b->votes &&
                     (mean > best_mean || (mean == best_mean && b.first < best_b->first)));
        if (wins) {
            best = &answer;
            best_b = &b;
        }
    }
    if (best == nullptr) return std::nullopt;
    return *best;
}

inline void finish_totals(ExperimentRecord& rec) {
    rec.total_calls = rec.init.calls;
    rec.total_latency = rec.init.latency_critical;
    rec.total_prompt_tokens = rec.init.prompt_tokens;
    rec.total_completion_tokens = rec.init.completion_tokens;
    for (const RoundTrace& rt : rec.rounds) {
        rec.total_calls += rt.calls_made;
        rec.total_latency += rt.round_latency;
        rec.total_prompt_tokens += rt.prompt_tokens;
        rec.total_completion_tokens += rt.completion_tokens;
    }
}

}  // namespace detail

// Independent answer generation: every agent answers the bare task once.
inline std::vector<AgentState> run_initialization(const Task& task, const RunConfig& cfg,
                                                  AgentBackend& backend,
                                                  const PromptLibrary& lib,
                                                  PhaseTrace* phase = nullptr) {
    auto outcomes = parallel_map(cfg.n_agents, cfg.max_parallel_calls, [&](int i) {
        try {
            return detail::invoke_agent(task, i, 0, false, {}, cfg, backend, lib);
        } catch (const Error& e) {
            throw Error("agent " + std::to_string(i) + " init: " + e.what());
        }
    });
    std::vector<AgentState> states;
    states.reserve(outcomes.size());
    for (detail::CallOutcome& o : outcomes) {
        if (phase != nullptr) detail::absorb(*phase, o.result);
        states.push_back(std::move(o.state));
    }
    return states;
}

// One collaboration round: cluster, pick leaders, predict pairwise benefits,
// prune, re-invoke each leader on its curated references. Non-leaders carry
// their previous state forward untouched.
inline RoundTrace run_concat_round(const std::vector<AgentState>& states, const Task& task,
                                   const RunConfig& cfg, AgentBackend& backend,
                                   const PromptLibrary& lib, int round,
                                   const SyntaxProvider& provider = default_syntax_provider()) {
    RoundTrace trace;
    trace.round = round;
    trace.clusters = cluster_by_similarity(states, task.kind, cfg.code_cluster_threshold,
                                           provider);
    trace.leaders = select_leaders(trace.clusters, states);
    trace.benefits = predict_benefits(states, trace.leaders.leaders, task.kind, cfg, provider);
    trace.prune = prune_edges(trace.benefits, cfg.retention_rate, cfg.tau_min, cfg.n_agents);
    trace.topology = trace.prune.kept;

    const std::vector<AgentId>& leaders = trace.leaders.leaders;
    std::vector<std::vector<Reference>> ref_sets(leaders.size());
    std::vector<bool> invoke(leaders.size(), true);
    for (std::size_t i = 0; i < leaders.size(); ++i) {
        for (AgentId src : trace.prune.kept.sources_into(leaders[i]))
            ref_sets[i].push_back(detail::to_reference(states[src]));
        if (cfg.skip_empty_refinement && ref_sets[i].empty()) invoke[i] = false;
    }

    std::vector<std::optional<detail::CallOutcome>> outcomes =
        parallel_map(static_cast<int>(leaders.size()), cfg.max_parallel_calls,
                     [&](int i) -> std::optional<detail::CallOutcome> {
                         if (!invoke[static_cast<std::size_t>(i)]) return std::nullopt;
                         try {
                             return detail::invoke_agent(
                                 task, leaders[static_cast<std::size_t>(i)], round, false,
                                 ref_sets[static_cast<std::size_t>(i)], cfg, backend, lib);
                         } catch (const Error& e) {
                             throw Error("agent " +
                                         std::to_string(leaders[static_cast<std::size_t>(i)]) +
                                         " round " + std::to_string(round) + ": " + e.what());
                         }
                     });

    trace.states_after = states;
    PhaseTrace phase;
    for (std::size_t i = 0; i < leaders.size(); ++i) {
        if (!outcomes[i]) continue;
        detail::absorb(phase, outcomes[i]->result);
        trace.states_after[static_cast<std::size_t>(leaders[i])] = std::move(outcomes[i]->state);
    }
    trace.calls_made = phase.calls;
    trace.round_latency = phase.latency_critical;
    trace.round_latency_serial = phase.latency_serial;
    trace.prompt_tokens = phase.prompt_tokens;
    trace.completion_tokens = phase.completion_tokens;
    return trace;
}

// Full protocol: init, refinement rounds, final aggregation.
inline ExperimentRecord run_concat(const Task& task, const RunConfig& cfg, AgentBackend& backend,
                                   const PromptLibrary& lib = PromptLibrary::defaults(),
                                   const SyntaxProvider& provider = default_syntax_provider());

// Aggregation outcome, shared by all aggregate-at-the-end methods.
struct AggregationOutcome {
    std::string raw;
    std::optional<std::string> normalized;
    bool fallback = false;
    PhaseTrace phase;
};

// Final decision over all agents' answers via one aggregation call; on call
// failure (or an unreadable reply) falls back to majority vote.
inline AggregationOutcome aggregate_final(const std::vector<AgentState>& states, const Task& task,
                                          const RunConfig& cfg, AgentBackend& backend,
                                          const PromptLibrary& lib, int round) {
    AggregationOutcome out;
    std::vector<Reference> refs;
    refs.reserve(states.size());
    for (const AgentState& st : states) refs.push_back(detail::to_reference(st));
    try {
        detail::CallOutcome call =
            detail::invoke_agent(task, 0, round, true, std::move(refs), cfg, backend, lib);
        detail::absorb(out.phase, call.result);
        out.raw = call.result.text;
        out.normalized = call.state.normalized_answer;
        if (!out.normalized) {
            out.fallback = true;
            out.normalized = detail::majority_vote(states);
        }
    } catch (const Error&) {
        out.phase.calls += 1;  // the attempt was made and paid for
        out.fallback = true;
        out.normalized = detail::majority_vote(states);
        out.raw.clear();
    }
    return out;
}

namespace detail {

inline void apply_aggregation(ExperimentRecord& rec, const AggregationOutcome& agg,
                              const Task& task) {
    rec.final_answer = agg.normalized;
    rec.final_answer_raw = agg.raw;
    rec.aggregation_fallback = agg.fallback;
    rec.total_calls += agg.phase.calls;
    rec.total_latency += agg.phase.latency_critical;
    rec.total_prompt_tokens += agg.phase.prompt_tokens;
    rec.total_completion_tokens += agg.phase.completion_tokens;
    rec.correct = rec.final_answer && *rec.final_answer == truth_of(task);
}

inline ExperimentRecord start_record(const Task& task, const RunConfig& cfg,
                                     const std::string& method, AgentBackend& backend) {
    ExperimentRecord rec;
    rec.task_id = task.id;
    rec.method = method;
    rec.config = cfg;
    rec.kind = task.kind;
    rec.reference_answer = task.reference_answer;
    rec.synthetic_latency = backend.synthetic_latency();
    return rec;
}

// Debate-style refinement shared by llm_debate and vanilla_mas: a fixed
// topology, every agent with in-edges re-answers referencing its in-neighbors.
inline RoundTrace run_fixed_topology_round(const std::vector<AgentState>& states,
                                           const Task& task, const RunConfig& cfg,
                                           AgentBackend& backend, const PromptLibrary& lib,
                                           int round, const Topology& topo) {
    RoundTrace trace;
    trace.round = round;
    trace.topology = topo;
    trace.prune.threshold = cfg.tau_min;
    trace.prune.kept.n = topo.n;

    std::vector<std::vector<Reference>> ref_sets(states.size());
    std::vector<AgentId> refreshed;
    for (AgentId dst = 0; dst < static_cast<AgentId>(states.size()); ++dst) {
        std::vector<AgentId> sources = topo.sources_into(dst);
        if (sources.empty()) continue;
        std::sort(sources.begin(), sources.end());
        for (AgentId src : sources)
            ref_sets[static_cast<std::size_t>(dst)].push_back(to_reference(states[src]));
        refreshed.push_back(dst);
    }

    auto outcomes = parallel_map(
        static_cast<int>(refreshed.size()), cfg.max_parallel_calls, [&](int i) {
            AgentId agent = refreshed[static_cast<std::size_t>(i)];
            try {
                return invoke_agent(task, agent, round, false,
                                    ref_sets[static_cast<std::size_t>(agent)], cfg, backend, lib);
            } catch (const Error& e) {
                throw Error("agent " + std::to_string(agent) + " round " +
                            std::to_string(round) + ": " + e.what());
            }
        });

    trace.states_after = states;
    PhaseTrace phase;
    for (std::size_t i = 0; i < refreshed.size(); ++i) {
        absorb(phase, outcomes[i].result);
        trace.states_after[static_cast<std::size_t>(refreshed[i])] = std::move(outcomes[i].state);
    }
    trace.calls_made = phase.calls;
    trace.round_latency = phase.latency_critical;
    trace.round_latency_serial = phase.latency_serial;
    trace.prompt_tokens = phase.prompt_tokens;
    trace.completion_tokens = phase.completion_tokens;
    return trace;
}

}  // namespace detail

inline ExperimentRecord run_concat(const Task& task, const RunConfig& cfg, AgentBackend& backend,
                                   const PromptLibrary& lib, const SyntaxProvider& provider) {
    ExperimentRecord rec = detail::start_record(task, cfg, "concat", backend);
    try {
        std::vector<AgentState> states =
            run_initialization(task, cfg, backend, lib, &rec.init);
        rec.init_states = states;
        for (int t = 1; t <= cfg.refinement_rounds; ++t) {
            RoundTrace trace = run_concat_round(states, task, cfg, backend, lib, t, provider);
            states = trace.states_after;
            rec.rounds.push_back(std::move(trace));
        }
        detail::finish_totals(rec);
        AggregationOutcome agg =
            aggregate_final(states, task, cfg, backend, lib, cfg.refinement_rounds + 1);
        detail::apply_aggregation(rec, agg, task);
    } catch (const Error& e) {
        detail::finish_totals(rec);
        rec.status = std::string("error: ") + e.what();
    }
    return rec;
}

inline ExperimentRecord run_llm_debate(const Task& task, const RunConfig& cfg,
                                       AgentBackend& backend,
                                       const PromptLibrary& lib = PromptLibrary::defaults()) {
    ExperimentRecord rec = detail::start_record(task, cfg, "llm_debate", backend);
    Topology topo = build_baseline_topology(TopologyKind::debate, cfg.n_agents);
    try {
        std::vector<AgentState> states =
            run_initialization(task, cfg, backend, lib, &rec.init);
        rec.init_states = states;
        for (int t = 1; t <= cfg.refinement_rounds; ++t) {
            RoundTrace trace =
                detail::run_fixed_topology_round(states, task, cfg, backend, lib, t, topo);
            states = trace.states_after;
            rec.rounds.push_back(std::move(trace));
        }
        detail::finish_totals(rec);
        AggregationOutcome agg =
            aggregate_final(states, task, cfg, backend, lib, cfg.refinement_rounds + 1);
        detail::apply_aggregation(rec, agg, task);
    } catch (const Error& e) {
        detail::finish_totals(rec);
        rec.status = std::string("error: ") + e.what();
    }
    return rec;
}

inline ExperimentRecord run_vanilla_mas(const Task& task, TopologyKind topology_kind,
                                        const RunConfig& cfg, AgentBackend& backend,
                                        const PromptLibrary& lib = PromptLibrary::defaults()) {
    ExperimentRecord rec =
        detail::start_record(task, cfg, "vanilla:" + to_string(topology_kind), backend);
    Topology topo =
        build_baseline_topology(topology_kind, cfg.n_agents, cfg.seed, cfg.random_density);
    try {
        std::vector<AgentState> states =
            run_initialization(task, cfg, backend, lib, &rec.init);
        rec.init_states = states;
        for (int t = 1; t <= cfg.refinement_rounds; ++t) {
            RoundTrace trace =
                detail::run_fixed_topology_round(states, task, cfg, backend, lib, t, topo);
            states = trace.states_after;
            rec.rounds.push_back(std::move(trace));
        }
        detail::finish_totals(rec);
        AggregationOutcome agg =
            aggregate_final(states, task, cfg, backend, lib, cfg.refinement_rounds + 1);
        detail::apply_aggregation(rec, agg, task);
    } catch (const Error& e) {
        detail::finish_totals(rec);
        rec.status = std::string("error: ") + e.what();
    }
    return rec;
}

// Single chain-of-thought call; the lone answer is the final answer.
inline ExperimentRecord run_cot(const Task& task, const RunConfig& cfg, AgentBackend& backend,
                                const PromptLibrary& lib = PromptLibrary::defaults()) {
    ExperimentRecord rec = detail::start_record(task, cfg, "cot", backend);
    try {
        detail::CallOutcome call = detail::invoke_agent(task, 0, 0, false, {}, cfg, backend, lib);
        detail::absorb(rec.init, call.result);
        rec.init_states.push_back(call.state);
        detail::finish_totals(rec);
        rec.final_answer = call.state.normalized_answer;
        rec.final_answer_raw = call.result.text;
        rec.correct = rec.final_answer && *rec.final_answer == detail::truth_of(task);
    } catch (const Error& e) {
        detail::finish_totals(rec);
        rec.status = std::string("error: ") + e.what();
    }
    return rec;
}

// Self-consistency: `samples` independent calls, majority vote on the
// normalized answers (ties: higher mean confidence, then earliest sample).
inline ExperimentRecord run_sc_cot(const Task& task, const RunConfig& cfg, AgentBackend& backend,
                                   const PromptLibrary& lib = PromptLibrary::defaults(),
                                   int samples = 0) {
    if (samples <= 0) samples = cfg.sc_cot_samples;
    ExperimentRecord rec = detail::start_record(task, cfg, "sc_cot", backend);
    try {
        auto outcomes = parallel_map(samples, cfg.max_parallel_calls, [&](int i) {
            try {
                return detail::invoke_agent(task, i, 0, false, {}, cfg, backend, lib);
            } catch (const Error& e) {
                throw Error("sample " + std::to_string(i) + ": " + e.what());
            }
        });
        for (detail::CallOutcome& o : outcomes) {
            detail::absorb(rec.init, o.result);
            rec.init_states.push_back(std::move(o.state));
        }
        detail::finish_totals(rec);
        rec.final_answer = detail::majority_vote(rec.init_states);
        rec.correct = rec.final_answer && *rec.final_answer == detail::truth_of(task);
    } catch (const Error& e) {
        detail::finish_totals(rec);
        rec.status = std::string("error: ") + e.what();
    }
    return rec;
}

}  // namespace concat
