#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "concat/errors.hpp"
#include "concat/orchestrator.hpp"

namespace concat {

enum class TransitionLabel { WrongToCorrect, CorrectToCorrect, WrongToWrong, CorrectToWrong };

inline std::string to_string(TransitionLabel label) {
    switch (label) {
        case TransitionLabel::WrongToCorrect: return "wrong_to_correct";
        case TransitionLabel::CorrectToCorrect: return "correct_to_correct";
        case TransitionLabel::WrongToWrong: return "wrong_to_wrong";
        case TransitionLabel::CorrectToWrong: return "correct_to_wrong";
    }
    return "unknown";
}

// Only a wrong answer turning correct counts as collaboration helping.
inline bool helpful(TransitionLabel label) { return label == TransitionLabel::WrongToCorrect; }

inline TransitionLabel label_transition(bool before_correct, bool after_correct) {
    if (before_correct) {
        return after_correct ? TransitionLabel::CorrectToCorrect : TransitionLabel::CorrectToWrong;
    }
    return after_correct ? TransitionLabel::WrongToCorrect : TransitionLabel::WrongToWrong;
}

// Dissent carried by a source toward a focal agent: its mean confidence, zeroed
// out entirely when the two agree.
inline double dissent_strength(double mean_source_confidence, bool agree) {
    return agree ? 0.0 : mean_source_confidence;
}

// Probability a random positive outscores a random negative, ties at half
// credit. Average-rank formulation; the tests cross-check it against
// brute-force pairwise counting.
inline double roc_auc(const std::vector<double>& scores, const std::vector<bool>& labels) {
    if (scores.size() != labels.size())
        throw Error("roc_auc: scores and labels must have equal length");
    std::size_t n = scores.size();
    std::size_t positives = 0;
    for (bool l : labels) positives += l ? 1 : 0;
    std::size_t negatives = n - positives;
    if (positives == 0 || negatives == 0)
        throw DegenerateLabels("roc_auc needs both classes present");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks over tie groups, then sum the positives' ranks.
    double positive_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]]) positive_rank_sum += avg_rank;
        i = j;
    }
    double p = static_cast<double>(positives), q = static_cast<double>(negatives);
    return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

// Headline metric: average accuracy (percent) per second of latency.
inline double efficiency(double avg_accuracy, double avg_latency) {
    if (avg_latency <= 0.0) throw ZeroLatency("efficiency undefined at zero latency");
    return avg_accuracy / avg_latency;
}

namespace detail {

inline std::string record_truth(const ExperimentRecord& rec) {
    if (auto t = try_normalize_answer(rec.reference_answer, rec.kind)) return *t;
    return trim(rec.reference_answer);
}

inline bool state_correct(const AgentState& st, const std::string& truth) {
    return st.normalized_answer && *st.normalized_answer == truth;
}

// States the round started from: init for round 1, else the previous trace.
inline const std::vector<AgentState>& states_before(const ExperimentRecord& rec,
                                                    std::size_t round_index) {
    return round_index == 0 ? rec.init_states : rec.rounds[round_index - 1].states_after;
}

}  // namespace detail

// One refreshed agent in one round of one record, with everything the
// observational statistics need about it.
struct TransitionEvent {
    std::string method;
    int n_agents = 0;
    int round = 0;
    std::string task_id;
    AgentId agent = 0;
    int in_degree = 0;  // references actually shown to the agent
    TransitionLabel label = TransitionLabel::WrongToWrong;
};

inline std::vector<TransitionEvent> collect_transitions(
    const std::vector<ExperimentRecord>& records) {
    std::vector<TransitionEvent> events;
    for (const ExperimentRecord& rec : records) {
        std::string truth = detail::record_truth(rec);
        for (std::size_t ri = 0; ri < rec.rounds.size(); ++ri) {
            const RoundTrace& rt = rec.rounds[ri];
            const std::vector<AgentState>& before = detail::states_before(rec, ri);
            for (const AgentState& after : rt.states_after) {
                if (after.round != rt.round) continue;  // carried forward, no call
                const AgentState& prev = before[static_cast<std::size_t>(after.agent)];
                TransitionEvent ev;
                ev.method = rec.method;
                ev.n_agents = rec.config.n_agents;
                ev.round = rt.round;
                ev.task_id = rec.task_id;
                ev.agent = after.agent;
                ev.in_degree = static_cast<int>(rt.topology.sources_into(after.agent).size());
                ev.label = label_transition(detail::state_correct(prev, truth),
                                            detail::state_correct(after, truth));
                events.push_back(std::move(ev));
            }
        }
    }
    return events;
}

struct TransitionHistogram {
    std::array<long, 4> counts{};  // indexed by TransitionLabel order
    long total = 0;

    void add(TransitionLabel label) {
        counts[static_cast<std::size_t>(label)] += 1;
        total += 1;
    }
    double proportion(TransitionLabel label) const {
        return total == 0 ? 0.0
                          : static_cast<double>(counts[static_cast<std::size_t>(label)]) /
                                static_cast<double>(total);
    }
    double helpful_fraction() const { return proportion(TransitionLabel::WrongToCorrect); }
    double non_helpful_fraction() const { return 1.0 - helpful_fraction(); }
};

using TransitionBucket = std::tuple<std::string, int, int>;  // method, n_agents, round

inline std::map<TransitionBucket, TransitionHistogram> transition_histogram(
    const std::vector<ExperimentRecord>& records) {
    std::map<TransitionBucket, TransitionHistogram> out;
    for (const TransitionEvent& ev : collect_transitions(records))
        out[{ev.method, ev.n_agents, ev.round}].add(ev.label);
    return out;
}

// One answer flowing across one kept edge in one round: the raw material of
// the dissent statistic.
struct DissentPair {
    std::string method;
    int n_agents = 0;
    int round = 0;
    std::string task_id;
    AgentId source = 0;
    AgentId focal = 0;
    double source_confidence = 0.0;  // before the round
    bool agree = false;              // answers matched before the round
    bool helpful = false;            // focal went wrong -> correct
};

inline std::vector<DissentPair> collect_dissent_pairs(
    const std::vector<ExperimentRecord>& records) {
    std::vector<DissentPair> pairs;
    for (const ExperimentRecord& rec : records) {
        std::string truth = detail::record_truth(rec);
        for (std::size_t ri = 0; ri < rec.rounds.size(); ++ri) {
            const RoundTrace& rt = rec.rounds[ri];
            const std::vector<AgentState>& before = detail::states_before(rec, ri);
            for (const AgentState& after : rt.states_after) {
                if (after.round != rt.round) continue;
                const AgentState& prev = before[static_cast<std::size_t>(after.agent)];
                bool was_correct = detail::state_correct(prev, truth);
                bool now_correct = detail::state_correct(after, truth);
                for (AgentId src : rt.topology.sources_into(after.agent)) {
                    const AgentState& source = before[static_cast<std::size_t>(src)];
                    DissentPair dp;
                    dp.method = rec.method;
                    dp.n_agents = rec.config.n_agents;
                    dp.round = rt.round;
                    dp.task_id = rec.task_id;
                    dp.source = src;
                    dp.focal = after.agent;
                    dp.source_confidence = source.confidence;
                    dp.agree = source.normalized_answer && prev.normalized_answer &&
                               *source.normalized_answer == *prev.normalized_answer;
                    dp.helpful = !was_correct && now_correct;
                    pairs.push_back(std::move(dp));
                }
            }
        }
    }
    return pairs;
}

// Dissent scores with the source confidence averaged per source agent within
// each (method, n_agents, round) bucket, as the statistic is defined.
inline std::vector<double> dissent_scores(const std::vector<DissentPair>& pairs) {
    std::map<std::tuple<std::string, int, int, AgentId>, std::pair<double, long>> sums;
    for (const DissentPair& dp : pairs) {
        auto& [sum, count] = sums[{dp.method, dp.n_agents, dp.round, dp.source}];
        sum += dp.source_confidence;
        count += 1;
    }
    std::vector<double> scores;
    scores.reserve(pairs.size());
    for (const DissentPair& dp : pairs) {
        const auto& [sum, count] = sums.at({dp.method, dp.n_agents, dp.round, dp.source});
        double mean_conf = sum / static_cast<double>(count);
        scores.push_back(dissent_strength(mean_conf, dp.agree));
    }
    return scores;
}

// AUC of dissent strength as a predictor of helpfulness over all pairs.
// Throws DegenerateLabels when every pair has the same outcome.
inline double dissent_auc(const std::vector<DissentPair>& pairs) {
    std::vector<double> scores = dissent_scores(pairs);
    std::vector<bool> labels;
    labels.reserve(pairs.size());
    for (const DissentPair& dp : pairs) labels.push_back(dp.helpful);
    return roc_auc(scores, labels);
}

struct MethodSummary {
    long records = 0;
    long correct = 0;
    long failed = 0;  // status != ok
    double accuracy_pct = 0.0;
    double mean_latency = 0.0;
    double mean_calls = 0.0;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    std::optional<double> eff;  // accuracy per latency; absent at zero latency
};

inline std::map<std::string, MethodSummary> summarize_by_method(
    const std::vector<ExperimentRecord>& records) {
    std::map<std::string, MethodSummary> out;
    std::map<std::string, double> latency_sum;
    std::map<std::string, long> call_sum;
    for (const ExperimentRecord& rec : records) {
        MethodSummary& m = out[rec.method];
        m.records += 1;
        if (rec.correct) m.correct += 1;
        if (rec.status != "ok") m.failed += 1;
        latency_sum[rec.method] += rec.total_latency;
        call_sum[rec.method] += rec.total_calls;
        m.prompt_tokens += rec.total_prompt_tokens;
        m.completion_tokens += rec.total_completion_tokens;
    }
    for (auto& [method, m] : out) {
        m.accuracy_pct = 100.0 * static_cast<double>(m.correct) / static_cast<double>(m.records);
        m.mean_latency = latency_sum[method] / static_cast<double>(m.records);
        m.mean_calls =
            static_cast<double>(call_sum[method]) / static_cast<double>(m.records);
        try {
            m.eff = efficiency(m.accuracy_pct, m.mean_latency);
        } catch (const ZeroLatency&) {
            m.eff = std::nullopt;
        }
    }
    return out;
}

}  // namespace concat
