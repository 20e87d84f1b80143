#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "concat/benefit.hpp"
#include "concat/core.hpp"
#include "concat/errors.hpp"

namespace concat {

// Nearest-rank percentile: the value at 1-based rank ceil((q/100)*n) of the
// ascending sort, clamped to the ends.
inline double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw EmptyInput("percentile of empty list");
    std::sort(values.begin(), values.end());
    auto n = static_cast<double>(values.size());
    auto rank = static_cast<long>(std::ceil(q / 100.0 * n));
    rank = std::clamp(rank, 1L, static_cast<long>(values.size()));
    return values[static_cast<std::size_t>(rank - 1)];
}

struct PruneResult {
    double threshold = 0.0;
    Topology kept;
    std::vector<std::pair<AgentId, AgentId>> dropped;
};

// Keep the edges whose benefit clears the percentile threshold implied by the
// retention rate, never below the tau_min floor. An empty matrix (single
// leader) keeps nothing and reports the floor as its threshold.
inline PruneResult prune_edges(const BenefitMatrix& benefits, double retention_rate,
                               double tau_min, int n_agents) {
    PruneResult out;
    out.kept.n = n_agents;
    if (benefits.entries.empty()) {
        out.threshold = tau_min;
        return out;
    }
    std::vector<double> values;
    values.reserve(benefits.entries.size());
    for (const auto& [edge, b] : benefits.entries) values.push_back(b);
    out.threshold = std::max(percentile(values, (1.0 - retention_rate) * 100.0), tau_min);
    for (const auto& [edge, b] : benefits.entries) {
        if (b >= out.threshold)
            out.kept.add_edge(edge.first, edge.second);
        else
            out.dropped.push_back(edge);
    }
    out.kept.sort_edges();
    std::sort(out.dropped.begin(), out.dropped.end());
    return out;
}

enum class TopologyKind { star, chain, random_graph, layered, full, debate };

inline std::string to_string(TopologyKind kind) {
    switch (kind) {
        case TopologyKind::star: return "star";
        case TopologyKind::chain: return "chain";
        case TopologyKind::random_graph: return "random";
        case TopologyKind::layered: return "layered";
        case TopologyKind::full: return "full";
        case TopologyKind::debate: return "debate";
    }
    return "unknown";
}

inline TopologyKind topology_kind_from_string(const std::string& s) {
    if (s == "star") return TopologyKind::star;
    if (s == "chain") return TopologyKind::chain;
    if (s == "random") return TopologyKind::random_graph;
    if (s == "layered") return TopologyKind::layered;
    if (s == "full") return TopologyKind::full;
    if (s == "debate") return TopologyKind::debate;
    throw SchemaError("unknown topology kind: " + s);
}

// Fixed baseline graphs. Star: agent 0 is the hub, linked both ways to every
// spoke. Chain: i feeds i+1. Random: each ordered pair drawn independently at
// `density` from the seeded generator, pairs visited in lexicographic order.
// Layered: the first ceil(n/2) agents all feed the rest. Full and debate: all
// ordered pairs. Edges come out sorted.
inline Topology build_baseline_topology(TopologyKind kind, int n, std::uint64_t seed = 0,
                                        double density = 0.5) {
    Topology topo;
    topo.n = n;
    switch (kind) {
        case TopologyKind::star:
            for (AgentId i = 1; i < n; ++i) {
                topo.add_edge(0, i);
                topo.add_edge(i, 0);
            }
            break;
        case TopologyKind::chain:
            for (AgentId i = 0; i + 1 < n; ++i) topo.add_edge(i, i + 1);
            break;
        case TopologyKind::random_graph: {
            std::mt19937_64 rng(seed);
            for (AgentId src = 0; src < n; ++src) {
                for (AgentId dst = 0; dst < n; ++dst) {
                    if (src == dst) continue;
                    // Top-53-bit uniform draw: identical on every platform,
                    // unlike distribution objects.
                    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
                    if (u < density) topo.add_edge(src, dst);
                }
            }
            break;
        }
        case TopologyKind::layered: {
            AgentId split = (n + 1) / 2;
            for (AgentId src = 0; src < split; ++src)
                for (AgentId dst = split; dst < n; ++dst) topo.add_edge(src, dst);
            break;
        }
        case TopologyKind::full:
        case TopologyKind::debate:
            for (AgentId src = 0; src < n; ++src)
                for (AgentId dst = 0; dst < n; ++dst)
                    if (src != dst) topo.add_edge(src, dst);
            break;
    }
    topo.sort_edges();
    return topo;
}

inline nlohmann::json topology_to_json(const Topology& topo) {
    Topology sorted = topo;
    sorted.sort_edges();
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [src, dst] : sorted.edges) edges.push_back({src, dst});
    return nlohmann::json{{"n", topo.n}, {"edges", edges}};
}

inline Topology topology_from_json(const nlohmann::json& j) {
    Topology topo;
    try {
        topo.n = j.at("n").get<int>();
        for (const auto& e : j.at("edges")) {
            if (!e.is_array() || e.size() != 2) throw SchemaError("edge must be a [src,dst] pair");
            topo.add_edge(e[0].get<AgentId>(), e[1].get<AgentId>());
        }
    } catch (const nlohmann::json::exception& ex) {
        throw SchemaError(std::string("bad topology json: ") + ex.what());
    }
    return topo;
}

}  // namespace concat
