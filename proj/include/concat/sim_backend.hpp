#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "concat/backends.hpp"
#include "concat/core.hpp"
#include "concat/errors.hpp"

namespace concat {

// Behavioral knobs of one simulated agent. skill: chance of answering
// correctly on its own. calibration: how tightly confidence tracks
// correctness. conformity: how strongly referenced answers pull the agent
// toward the peer-weighted consensus.
struct SimAgentProfile {
    double skill = 0.6;
    double calibration = 0.9;
    double conformity = 0.3;
    double base_latency = 0.35;       // seconds
    double per_token_latency = 0.01;  // seconds per completion token

    void validate() const {
        auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
        if (!in01(skill) || !in01(calibration) || !in01(conformity))
            throw SchemaError("sim profile: skill/calibration/conformity must be in [0,1]");
        if (base_latency < 0.0 || per_token_latency < 0.0)
            throw SchemaError("sim profile: latencies must be nonnegative");
    }
};

struct SimPopulation {
    std::vector<SimAgentProfile> agents;  // cycled by agent id when shorter than N
    int answer_pool_size = 4;             // true answer + distractors
    double aggregator_conformity = 1.0;   // final call: weight-majority vs own skill

    void validate() const {
        if (agents.empty()) throw SchemaError("sim population: at least one agent profile");
        for (const SimAgentProfile& p : agents) p.validate();
        if (answer_pool_size < 2) throw SchemaError("sim population: answer pool needs >= 2");
        if (aggregator_conformity < 0.0 || aggregator_conformity > 1.0)
            throw SchemaError("sim population: aggregator_conformity must be in [0,1]");
    }

    const SimAgentProfile& profile_for(AgentId agent) const {
        return agents[static_cast<std::size_t>(agent) % agents.size()];
    }
};

inline SimPopulation sim_population_from_json(const nlohmann::json& j) {
    SimPopulation pop;
    try {
        for (const auto& a : j.at("agents")) {
            SimAgentProfile p;
            p.skill = a.value("skill", p.skill);
            p.calibration = a.value("calibration", p.calibration);
            p.conformity = a.value("conformity", p.conformity);
            p.base_latency = a.value("base_latency", p.base_latency);
            p.per_token_latency = a.value("per_token_latency", p.per_token_latency);
            pop.agents.push_back(p);
        }
        pop.answer_pool_size = j.value("answer_pool_size", pop.answer_pool_size);
        pop.aggregator_conformity = j.value("aggregator_conformity", pop.aggregator_conformity);
    } catch (const nlohmann::json::exception& ex) {
        throw SchemaError(std::string("bad sim profile json: ") + ex.what());
    }
    pop.validate();
    return pop;
}

// Deterministic simulated backend. Every generate() draws from a private RNG
// seeded by (experiment seed, agent, round, request digest), so identical
// calls replay byte-identically and any prompt change reshuffles the draws.
class SimBackend final : public AgentBackend {
  public:
    explicit SimBackend(SimPopulation population) : pop_(std::move(population)) {
        pop_.validate();
    }

    std::string name() const override { return "sim"; }
    bool synthetic_latency() const override { return true; }

    GenerationResult generate(const AgentCall& call) override {
        if (call.task == nullptr) throw Error("sim backend: call without task");
        const Task& task = *call.task;
        const SimAgentProfile& prof = pop_.profile_for(call.agent);
        std::mt19937_64 rng(detail::call_seed(call));

        std::optional<std::string> truth = try_normalize_answer(task.reference_answer, task.kind);
        std::string truth_text = truth.value_or(detail::trim(task.reference_answer));
        std::vector<std::string> pool = answer_pool(task, truth_text);

        std::string chosen;
        bool correct = false;
        if (call.aggregation) {
            chosen = aggregate_choice(call, truth_text, pool, prof, rng);
        } else {
            double p_correct = prof.skill;
            double total_weight = 0.0, correct_weight = 0.0;
            for (const Reference& ref : call.references) {
                if (!ref.normalized) continue;
                total_weight += ref.confidence;
                if (*ref.normalized == truth_text) correct_weight += ref.confidence;
            }
            if (total_weight > 0.0)
                p_correct = (1.0 - prof.conformity) * prof.skill +
                            prof.conformity * (correct_weight / total_weight);
            if (draw(rng) < p_correct) {
                chosen = truth_text;
            } else {
                chosen = wrong_answer(call, truth_text, pool, rng);
            }
        }
        correct = (chosen == truth_text);

        double band = correct ? 0.70 + 0.25 * draw(rng) : 0.35 + 0.30 * draw(rng);
        double confidence = prof.calibration * band + (1.0 - prof.calibration) * draw(rng);
        confidence = std::clamp(confidence, 0.0, 1.0);

        GenerationResult out;
        out.text = render(task.kind, chosen);
        out.token_probabilities.assign(4, confidence);
        out.completion_tokens = 24 + static_cast<int>(rng() % 32) +
                                static_cast<int>(out.text.size() / 8);
        out.prompt_tokens = static_cast<int>(
            (call.request.system_prompt.size() + call.request.user_prompt.size()) / 4);
        out.wall_latency = prof.base_latency + prof.per_token_latency * out.completion_tokens;
        return out;
    }

    const SimPopulation& population() const { return pop_; }

  private:
    static double draw(std::mt19937_64& rng) {
        return static_cast<double>(rng() >> 11) * 0x1.0p-53;
    }

    // Finite per-task answer pool: the truth plus seeded-by-task distractors.
    std::vector<std::string> answer_pool(const Task& task, const std::string& truth) const {
        std::vector<std::string> pool = {truth};
        int want = pop_.answer_pool_size;
        switch (task.kind) {
            case TaskKind::choice:
                for (char c = 'A'; c <= 'D' && static_cast<int>(pool.size()) < want; ++c) {
                    std::string s(1, c);
                    if (s != truth) pool.push_back(s);
                }
                break;
            case TaskKind::numeric: {
                std::mt19937_64 rng(detail::mix64(detail::fnv1a(task.id) ^ 0x5ca1ab1eull));
                double base = 0.0;
                try {
                    base = std::stod(truth);
                } catch (...) {
                    base = static_cast<double>(rng() % 1000);
                }
                while (static_cast<int>(pool.size()) < want) {
                    long long delta = 1 + static_cast<long long>(rng() % 17);
                    if (rng() & 1) delta = -delta;
                    long long candidate = static_cast<long long>(std::llround(base)) + delta;
                    std::string s = detail::canonicalize_number(std::to_string(candidate));
                    if (std::find(pool.begin(), pool.end(), s) == pool.end()) pool.push_back(s);
                }
                break;
            }
            case TaskKind::code: {
                static const char* variants[] = {
                    "def solve(data):\n    result = 0\n    for item in data:\n        result += "
                    "item\n    return result",
                    "def solve(data):\n    if not data:\n        return None\n    return "
                    "sorted(data)[0]",
                    "def solve(data):\n    return [item * 2 for item in data if item > 0]",
                    "def solve(data):\n    seen = {}\n    for item in data:\n        seen[item] "
                    "= seen.get(item, 0) + 1\n    return seen",
                };
                for (const char* v : variants) {
                    if (static_cast<int>(pool.size()) >= want) break;
                    if (v != truth) pool.emplace_back(v);
                }
                break;
            }
        }
        return pool;
    }

    // A wrong answer: adopt the most confident wrong referenced answer when
    // one exists (conformity pulls toward concrete peer content), otherwise a
    // seeded distractor.
    std::string wrong_answer(const AgentCall& call, const std::string& truth,
                             const std::vector<std::string>& pool, std::mt19937_64& rng) const {
        const Reference* best = nullptr;
        for (const Reference& ref : call.references) {
            if (!ref.normalized || *ref.normalized == truth) continue;
            if (best == nullptr || ref.confidence > best->confidence ||
                (ref.confidence == best->confidence && ref.agent < best->agent))
                best = &ref;
        }
        if (best != nullptr) return *best->normalized;
        if (pool.size() <= 1) return truth;
        return pool[1 + rng() % (pool.size() - 1)];
    }

    // Final-decision model: confidence-weighted vote over the referenced
    // answers, with (1 - aggregator_conformity) chance of an independent
    // skill-based answer instead.
    std::string aggregate_choice(const AgentCall& call, const std::string& truth,
                                 const std::vector<std::string>& pool,
                                 const SimAgentProfile& prof, std::mt19937_64& rng) const {
        double u = draw(rng);
        std::map<std::string, double> weight;
        std::map<std::string, AgentId> first_agent;
        for (const Reference& ref : call.references) {
            if (!ref.normalized) continue;
            weight[*ref.normalized] += ref.confidence;
            auto [it, fresh] = first_agent.try_emplace(*ref.normalized, ref.agent);
            if (!fresh && ref.agent < it->second) it->second = ref.agent;
        }
        if (u < pop_.aggregator_conformity && !weight.empty()) {
            const std::string* best = nullptr;
            double best_w = -1.0;
            for (const auto& [answer, w] : weight) {
                if (w > best_w ||
                    (w == best_w && first_agent[answer] < first_agent[*best])) {
                    best = &answer;
                    best_w = w;
                }
            }
            return *best;
        }
        if (draw(rng) < prof.skill || pool.size() <= 1) return truth;
        return pool[1 + rng() % (pool.size() - 1)];
    }

    static std::string render(TaskKind kind, const std::string& answer) {
        switch (kind) {
            case TaskKind::choice:
                return "After weighing the options, the correct option is " + answer + ".";
            case TaskKind::numeric:
                return "Working through the problem step by step.\nThe answer is " + answer;
            case TaskKind::code:
                return "```python\n" + answer + "\n```";
        }
        return answer;
    }

    SimPopulation pop_;
};

}  // namespace concat
