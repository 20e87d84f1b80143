#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "concat/core.hpp"
#include "concat/similarity.hpp"

namespace concat {

struct ConsensusCluster {
    std::vector<AgentId> members;  // sorted ascending, never empty
    std::optional<std::string> representative_answer;  // leader's normalized answer
};

struct LeaderSet {
    std::vector<AgentId> leaders;  // one per cluster, in cluster order
};

namespace detail {

// Highest-confidence member, ties to the lowest id. Members must be sorted.
inline AgentId best_member(const std::vector<AgentId>& members,
                           const std::vector<AgentState>& states) {
    AgentId best = members.front();
    for (AgentId m : members)
        if (states[m].confidence > states[best].confidence) best = m;
    return best;
}

inline void finalize_clusters(std::vector<ConsensusCluster>& clusters,
                              const std::vector<AgentState>& states) {
    for (ConsensusCluster& c : clusters) {
        std::sort(c.members.begin(), c.members.end());
        c.representative_answer = states[best_member(c.members, states)].normalized_answer;
    }
    std::sort(clusters.begin(), clusters.end(),
              [](const ConsensusCluster& a, const ConsensusCluster& b) {
                  return a.members.front() < b.members.front();
              });
}

}  // namespace detail

// Partition agents by answer agreement. Exact grouping for choice/numeric;
// average-linkage agglomerative merging for code, joining while the best
// cross-cluster mean similarity stays at or above code_threshold. Agents whose
// answers could not be normalized always stand alone.
inline std::vector<ConsensusCluster> cluster_by_similarity(
    const std::vector<AgentState>& states, TaskKind kind, double code_threshold,
    const SyntaxProvider& provider = default_syntax_provider()) {
    std::vector<ConsensusCluster> clusters;

    if (kind != TaskKind::code) {
        std::map<std::string, std::size_t> index;
        for (const AgentState& st : states) {
            if (!st.normalized_answer) {
                clusters.push_back({{st.agent}, std::nullopt});
                continue;
            }
            auto [it, fresh] = index.try_emplace(*st.normalized_answer, clusters.size());
            if (fresh)
                clusters.push_back({{st.agent}, st.normalized_answer});
            else
                clusters[it->second].members.push_back(st.agent);
        }
        detail::finalize_clusters(clusters, states);
        return clusters;
    }

    // Code: pairwise similarity matrix over the parseable answers.
    std::vector<AgentId> pool;
    for (const AgentState& st : states) {
        if (st.normalized_answer)
            pool.push_back(st.agent);
        else
            clusters.push_back({{st.agent}, std::nullopt});
    }
    std::map<std::pair<AgentId, AgentId>, double> sim;
    for (std::size_t i = 0; i < pool.size(); ++i)
        for (std::size_t j = i + 1; j < pool.size(); ++j) {
            AgentId a = pool[i], b = pool[j];
            sim[{a, b}] = ast_jaccard(*states[a].normalized_answer, *states[b].normalized_answer,
                                      provider);
        }
    auto pair_sim = [&](AgentId a, AgentId b) { return a < b ? sim[{a, b}] : sim[{b, a}]; };

    std::vector<std::vector<AgentId>> groups;
    for (AgentId a : pool) groups.push_back({a});

    while (groups.size() > 1) {
        double best = -1.0;
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < groups.size(); ++i) {
            for (std::size_t j = i + 1; j < groups.size(); ++j) {
                double total = 0.0;
                for (AgentId a : groups[i])
                    for (AgentId b : groups[j]) total += pair_sim(a, b);
                double avg = total / static_cast<double>(groups[i].size() * groups[j].size());
                // Groups are kept ordered by lowest member, so the first
                // maximum encountered is the lexicographically smallest pair.
                if (avg > best) {
                    best = avg;
                    bi = i;
                    bj = j;
                }
            }
        }
        if (best < code_threshold) break;
        groups[bi].insert(groups[bi].end(), groups[bj].begin(), groups[bj].end());
        std::sort(groups[bi].begin(), groups[bi].end());
        groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(bj));
        std::sort(groups.begin(), groups.end(),
                  [](const auto& a, const auto& b) { return a.front() < b.front(); });
    }

    for (auto& g : groups) clusters.push_back({std::move(g), std::nullopt});
    detail::finalize_clusters(clusters, states);
    return clusters;
}

// One leader per cluster: the confidence maximizer, ties to the lowest id.
inline LeaderSet select_leaders(const std::vector<ConsensusCluster>& clusters,
                                const std::vector<AgentState>& states) {
    LeaderSet out;
    out.leaders.reserve(clusters.size());
    for (const ConsensusCluster& c : clusters)
        out.leaders.push_back(detail::best_member(c.members, states));
    return out;
}

}  // namespace concat
