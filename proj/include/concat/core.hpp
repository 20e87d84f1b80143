#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "concat/errors.hpp"

namespace concat {

using AgentId = int;

enum class TaskKind { choice, numeric, code };

inline std::string to_string(TaskKind kind) {
    switch (kind) {
        case TaskKind::choice: return "choice";
        case TaskKind::numeric: return "numeric";
        case TaskKind::code: return "code";
    }
    return "unknown";
}

inline TaskKind task_kind_from_string(const std::string& s) {
    if (s == "choice") return TaskKind::choice;
    if (s == "numeric") return TaskKind::numeric;
    if (s == "code") return TaskKind::code;
    throw SchemaError("unknown task kind: " + s);
}

struct Task {
    std::string id;
    std::string question;
    std::string reference_answer;
    TaskKind kind = TaskKind::choice;
    std::string entry_point;  // code tasks: function under test, carried through
    std::string tests;        // code tasks: opaque test text, carried through
};

struct AgentState {
    AgentId agent = 0;
    std::string answer;                         // raw model output
    std::optional<std::string> normalized_answer;  // extracted decision, if any
    double confidence = 0.0;                    // in [0, 1]
    int round = 0;                              // round that produced this state
};

// Directed collaboration graph on agents 0..n-1. Edges are ordered (src, dst),
// self-loops are rejected.
struct Topology {
    int n = 0;
    std::vector<std::pair<AgentId, AgentId>> edges;

    void add_edge(AgentId src, AgentId dst) {
        if (src == dst) throw Error("self-loop rejected: " + std::to_string(src));
        if (src < 0 || src >= n || dst < 0 || dst >= n)
            throw Error("edge endpoint out of range: " + std::to_string(src) + "->" +
                        std::to_string(dst));
        edges.emplace_back(src, dst);
    }

    bool has_edge(AgentId src, AgentId dst) const {
        return std::find(edges.begin(), edges.end(), std::make_pair(src, dst)) != edges.end();
    }

    // In-neighbors of dst, in edge-insertion order.
    std::vector<AgentId> sources_into(AgentId dst) const {
        std::vector<AgentId> out;
        for (const auto& [s, d] : edges)
            if (d == dst) out.push_back(s);
        return out;
    }

    void sort_edges() { std::sort(edges.begin(), edges.end()); }
};

struct RunConfig {
    int n_agents = 5;
    int refinement_rounds = 2;      // total collaboration rounds, incl. the init round
    double alpha = 0.20;            // weight of inertia/openness in the benefit model
    double retention_rate = 0.70;   // fraction of candidate edges kept by pruning
    double tau_min = 0.0;           // benefit floor for pruning
    double theta_sim = 0.5;         // supporter/challenger similarity boundary
    double code_cluster_threshold = 0.45;  // agglomerative merge threshold for code
    double temperature = 0.7;
    double top_p = 0.8;
    int max_tokens = 32768;
    std::uint64_t seed = 0;
    double random_density = 0.5;    // edge probability for the random baseline
    int max_parallel_calls = 4;
    bool skip_empty_refinement = false;  // if set, leaders with no kept in-edges are not re-invoked
    bool exact_benefit = false;          // swap the heuristic correction gain for the exact model
    int sc_cot_samples = 5;
};

namespace detail {

inline bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// Last standalone occurrence of a single letter A-D (neighbors must not be word chars).
inline std::optional<std::string> extract_choice(const std::string& text) {
    for (std::size_t i = text.size(); i-- > 0;) {
        char c = text[i];
        if (c < 'A' || c > 'D') continue;
        bool left_ok = (i == 0) || !is_word_char(text[i - 1]);
        bool right_ok = (i + 1 == text.size()) || !is_word_char(text[i + 1]);
        if (left_ok && right_ok) return std::string(1, c);
    }
    return std::nullopt;
}

// Canonical numeric form: strip $ , % and trailing ".", drop redundant zeros,
// normalize "-0" to "0".
inline std::string canonicalize_number(std::string s) {
    std::string cleaned;
    cleaned.reserve(s.size());
    for (char c : s)
        if (c != ',' && c != '$' && c != '%') cleaned.push_back(c);
    s = std::move(cleaned);
    if (!s.empty() && s.back() == '.') s.pop_back();

    bool neg = !s.empty() && s.front() == '-';
    if (neg) s.erase(s.begin());

    std::string intpart = s, frac;
    if (auto dot = s.find('.'); dot != std::string::npos) {
        intpart = s.substr(0, dot);
        frac = s.substr(dot + 1);
    }
    std::size_t nz = 0;
    while (nz + 1 < intpart.size() && intpart[nz] == '0') ++nz;
    intpart.erase(0, nz);
    if (intpart.empty()) intpart = "0";
    while (!frac.empty() && frac.back() == '0') frac.pop_back();

    std::string out = intpart;
    if (!frac.empty()) out += "." + frac;
    if (out == "0") neg = false;
    return neg ? "-" + out : out;
}

// Scan for numbers like -1,234.5 ; returns the last one in the string, if any.
inline std::optional<std::string> last_number(const std::string& text) {
    std::optional<std::string> best;
    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        bool starts = std::isdigit(static_cast<unsigned char>(c)) ||
                      ((c == '-' || c == '.') && i + 1 < text.size() &&
                       std::isdigit(static_cast<unsigned char>(text[i + 1])));
        if (!starts) {
            ++i;
            continue;
        }
        std::size_t j = i;
        if (text[j] == '-') ++j;
        bool seen_dot = false;
        bool seen_digit = false;
        while (j < text.size()) {
            char d = text[j];
            if (std::isdigit(static_cast<unsigned char>(d))) {
                seen_digit = true;
                ++j;
            } else if (d == '.' && !seen_dot && j + 1 < text.size() &&
                       std::isdigit(static_cast<unsigned char>(text[j + 1]))) {
                seen_dot = true;
                ++j;
            } else if (d == ',' && j + 3 < text.size() + 1 &&
                       std::isdigit(static_cast<unsigned char>(text[j + 1]))) {
                ++j;
            } else {
                break;
            }
        }
        if (seen_digit) best = canonicalize_number(text.substr(i, j - i));
        i = j > i ? j : i + 1;
    }
    return best;
}

inline std::optional<std::string> extract_numeric(const std::string& text) {
    const std::string marker = "the answer is";
    std::string lower = to_lower(text);
    if (auto pos = lower.rfind(marker); pos != std::string::npos) {
        if (auto num = last_number(text.substr(pos + marker.size()))) return num;
    }
    // Fall back to the last number on the last non-empty line.
    std::size_t end = text.size();
    while (end > 0) {
        std::size_t start = text.rfind('\n', end - 1);
        std::size_t line_begin = (start == std::string::npos) ? 0 : start + 1;
        std::string line = text.substr(line_begin, end - line_begin);
        if (!trim(line).empty()) {
            if (auto num = last_number(line)) return num;
            return std::nullopt;
        }
        if (start == std::string::npos) break;
        end = start;
    }
    return std::nullopt;
}

// Contents of the last ``` fenced block; the language tag on the opening line
// is dropped. Without fences the trimmed raw text is the answer.
inline std::optional<std::string> extract_code(const std::string& text) {
    const std::string fence = "```";
    std::size_t close = text.rfind(fence);
    if (close == std::string::npos) {
        std::string t = trim(text);
        if (t.empty()) return std::nullopt;
        return t;
    }
    std::size_t open = close == 0 ? std::string::npos : text.rfind(fence, close - 1);
    std::string body;
    if (open == std::string::npos) {
        // A single fence: treat everything after it as the block.
        body = text.substr(close + fence.size());
    } else {
        body = text.substr(open + fence.size(), close - open - fence.size());
    }
    // Drop the language tag line if present.
    if (auto nl = body.find('\n'); nl != std::string::npos) {
        std::string tag = trim(body.substr(0, nl));
        bool tag_like = !tag.empty() && tag.find(' ') == std::string::npos &&
                        tag.find('(') == std::string::npos && tag.find('=') == std::string::npos;
        if (tag.empty() || tag_like) body = body.substr(nl + 1);
    } else {
        body.clear();
    }
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
    // Nested fences inside the extracted block would break idempotence; fall
    // back to the trimmed raw text in that rare case.
    if (body.find(fence) != std::string::npos) {
        std::string t = trim(text);
        if (t.empty()) return std::nullopt;
        return t;
    }
    std::string t = body;
    // Trim leading blank lines but keep indentation of real code.
    std::size_t b = 0;
    while (b < t.size() && (t[b] == '\n' || t[b] == '\r')) ++b;
    t.erase(0, b);
    if (trim(t).empty()) return std::nullopt;
    return t;
}

}  // namespace detail

// Extract the decision carried by a raw model answer. Throws NoAnswerFound
// when no decision can be read out of the text.
inline std::string normalize_answer(const std::string& raw, TaskKind kind) {
    std::optional<std::string> out;
    switch (kind) {
        case TaskKind::choice: out = detail::extract_choice(raw); break;
        case TaskKind::numeric: out = detail::extract_numeric(raw); break;
        case TaskKind::code: out = detail::extract_code(raw); break;
    }
    if (!out) throw NoAnswerFound("no usable answer in output for kind " + to_string(kind));
    return *out;
}

// Nothrow variant: nullopt when the answer cannot be normalized.
inline std::optional<std::string> try_normalize_answer(const std::string& raw, TaskKind kind) {
    try {
        return normalize_answer(raw, kind);
    } catch (const NoAnswerFound&) {
        return std::nullopt;
    }
}

}  // namespace concat
