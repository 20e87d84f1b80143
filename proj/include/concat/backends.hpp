#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "concat/core.hpp"
#include "concat/errors.hpp"
#include "concat/prompts.hpp"

namespace concat {

struct GenerationRequest {
    std::string system_prompt;
    std::string user_prompt;
    double temperature = 0.7;
    double top_p = 0.8;
    int max_tokens = 32768;
    bool want_logprobs = true;
};

struct GenerationResult {
    std::string text;
    std::vector<double> token_probabilities;  // empty = endpoint sent none
    int prompt_tokens = 0;
    int completion_tokens = 0;
    double wall_latency = 0.0;  // seconds; synthetic on simulated backends
};

// Confidence signal: arithmetic mean of per-token probabilities.
inline double mean_token_probability(const std::vector<double>& probs) {
    if (probs.empty()) throw MissingLogprobs("no token probabilities to average");
    double sum = std::accumulate(probs.begin(), probs.end(), 0.0);
    return sum / static_cast<double>(probs.size());
}

// One model invocation, carrying both the rendered prompts (what a live
// endpoint consumes) and the structured context (what a simulation consumes).
struct AgentCall {
    const Task* task = nullptr;
    AgentId agent = 0;
    int round = 0;                     // 0 = independent answer, then 1,2,...
    bool aggregation = false;          // final-decision call
    std::vector<Reference> references;
    GenerationRequest request;
    std::uint64_t seed = 0;            // experiment seed, not per-call
};

struct AgentBackend {
    virtual ~AgentBackend() = default;
    virtual GenerationResult generate(const AgentCall& call) = 0;
    virtual std::string name() const = 0;
    // True when wall_latency is modeled rather than measured.
    virtual bool synthetic_latency() const { return false; }
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 14695981039346656037ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdull;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ull;
    x ^= x >> 33;
    return x;
}

// Stable per-call RNG seed: experiment seed, caller identity, and the exact
// request bytes all feed in, so any change to the prompt changes the draw.
inline std::uint64_t call_seed(const AgentCall& call) {
    std::uint64_t digest = fnv1a(call.request.system_prompt);
    digest = fnv1a(std::string(1, '\x1f'), digest);
    digest = fnv1a(call.request.user_prompt, digest);
    std::uint64_t h = mix64(call.seed ^ 0x9e3779b97f4a7c15ull);
    h = mix64(h ^ static_cast<std::uint64_t>(call.agent));
    h = mix64(h ^ static_cast<std::uint64_t>(call.round + 1));
    h = mix64(h ^ (call.aggregation ? 0xa5a5a5a5a5a5a5a5ull : 0));
    h = mix64(h ^ digest);
    return h;
}

}  // namespace detail

}  // namespace concat
