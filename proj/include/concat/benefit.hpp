#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "concat/core.hpp"
#include "concat/errors.hpp"
#include "concat/similarity.hpp"

namespace concat {

enum class Relation { Supporter, Challenger };

// A source whose answer is at least theta-similar to the target's supports it.
inline Relation classify_relation(double s_jk, double theta_sim) {
    return s_jk >= theta_sim ? Relation::Supporter : Relation::Challenger;
}

// Effective signal strength of source j as seen by target k: confidence scaled
// by how much of it bears on the target's answer (supporters by agreement,
// challengers by disagreement).
inline double effective_signal(double c_j, double s_jk, Relation rel) {
    return rel == Relation::Supporter ? c_j * s_jk : c_j * (1.0 - s_jk);
}

// Probability that the target keeps its answer when challenged, from a
// posterior-mean model with one pseudo-observation per belief unit.
inline double p_stay(double c_k, double c_hat_j) {
    return (1.0 + 2.0 * c_k) / (2.0 + 2.0 * c_k + 2.0 * c_hat_j);
}

// Predicted benefit of a challenging reference: correction gain minus the
// inertia discount plus epistemic openness, both weighted by alpha.
inline double benefit_challenger(double c_k, double c_hat_j, double alpha) {
    return 4.0 * c_k * (1.0 - c_k) * c_hat_j - alpha * p_stay(c_k, c_hat_j) +
           alpha * (1.0 - c_k);
}

// Predicted benefit of a supporting reference: confidence reinforcement.
inline double benefit_supporter(double c_k, double c_hat_j, double alpha) {
    return alpha * (c_hat_j - c_k);
}

// Exact expected utility of correction under the Bayesian two-hypothesis
// model: posterior probability that the challenger is right, minus the
// target's prior. Used as the verification oracle for the heuristic above and
// available as an alternative predictor.
inline double exact_euc(double c_k, double c_hat_j) {
    double z = c_k * (1.0 - c_hat_j) + (1.0 - c_k) * c_hat_j;
    if (z <= 0.0)
        throw DegenerateBelief("posterior normalizer vanishes at c_k=" + std::to_string(c_k) +
                               ", c_hat_j=" + std::to_string(c_hat_j));
    return (1.0 - c_k) * c_hat_j / z - c_k;
}

// Signal level at which correction starts to pay off for a target at c_k.
inline double correction_threshold(double c_k) {
    return c_k * c_k / (1.0 - 2.0 * c_k + 2.0 * c_k * c_k);
}

// First-order expansion of the exact utility around c_hat_j = 0.5.
inline double taylor_benefit(double c_k, double c_hat_j) {
    return (1.0 - 2.0 * c_k) + 4.0 * c_k * (1.0 - c_k) * (c_hat_j - 0.5);
}

// Exact-model variant of the challenger benefit: swaps the polynomial
// correction-gain surrogate for the exact expected utility, keeping the
// inertia and openness terms.
inline double benefit_challenger_exact(double c_k, double c_hat_j, double alpha) {
    return exact_euc(c_k, c_hat_j) - alpha * p_stay(c_k, c_hat_j) + alpha * (1.0 - c_k);
}

using StateSimilarity = std::function<double(const AgentState&, const AgentState&)>;

// Answer similarity between two agent states under a task kind. States whose
// answers could not be normalized are maximally dissimilar to everything.
inline double state_similarity(const AgentState& a, const AgentState& b, TaskKind kind,
                               const SyntaxProvider& provider = default_syntax_provider()) {
    if (!a.normalized_answer || !b.normalized_answer) return 0.0;
    if (kind == TaskKind::code)
        return ast_jaccard(*a.normalized_answer, *b.normalized_answer, provider);
    return exact_similarity(*a.normalized_answer, *b.normalized_answer);
}

// Predicted benefit of source flowing into target: classify the relation,
// compute the effective signal, then apply the matching benefit formula.
inline double tom_predict(const AgentState& target, const AgentState& source,
                          const RunConfig& cfg, const StateSimilarity& sim) {
    double s = sim(source, target);
    Relation rel = classify_relation(s, cfg.theta_sim);
    double c_hat = effective_signal(source.confidence, s, rel);
    if (rel == Relation::Supporter) return benefit_supporter(target.confidence, c_hat, cfg.alpha);
    if (cfg.exact_benefit) return benefit_challenger_exact(target.confidence, c_hat, cfg.alpha);
    return benefit_challenger(target.confidence, c_hat, cfg.alpha);
}

inline double tom_predict(const AgentState& target, const AgentState& source,
                          const RunConfig& cfg, TaskKind kind,
                          const SyntaxProvider& provider = default_syntax_provider()) {
    return tom_predict(target, source, cfg, [&](const AgentState& a, const AgentState& b) {
        return state_similarity(a, b, kind, provider);
    });
}

// Benefits for every ordered pair of leaders, keyed (source, target).
struct BenefitMatrix {
    std::map<std::pair<AgentId, AgentId>, double> entries;

    double at(AgentId src, AgentId dst) const { return entries.at({src, dst}); }
};

inline BenefitMatrix predict_benefits(const std::vector<AgentState>& states,
                                      const std::vector<AgentId>& leaders, TaskKind kind,
                                      const RunConfig& cfg,
                                      const SyntaxProvider& provider = default_syntax_provider()) {
    std::vector<AgentId> ordered = leaders;
    std::sort(ordered.begin(), ordered.end());
    BenefitMatrix out;
    for (AgentId j : ordered) {
        for (AgentId k : ordered) {
            if (j == k) continue;
            out.entries[{j, k}] = tom_predict(states[k], states[j], cfg, kind, provider);
        }
    }
    return out;
}

}  // namespace concat
