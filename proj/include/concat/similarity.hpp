#pragma once

#include <set>
#include <string>

#include "concat/errors.hpp"
#include "concat/pyparse.hpp"

namespace concat {

// Pluggable source of node-type sets. Must be deterministic and stateless.
struct SyntaxProvider {
    virtual ~SyntaxProvider() = default;
    virtual std::set<std::string> node_types(const std::string& code) const = 0;
};

// Reference provider backed by the bundled recursive-descent grammar.
struct PySyntaxProvider final : SyntaxProvider {
    std::set<std::string> node_types(const std::string& code) const override {
        return pyparse::node_type_set(code);
    }
};

inline const SyntaxProvider& default_syntax_provider() {
    static const PySyntaxProvider provider;
    return provider;
}

// Exact-match similarity over normalized answers.
inline double exact_similarity(const std::string& a, const std::string& b) {
    return a == b ? 1.0 : 0.0;
}

// Node-type set of `code`, via the provider. On ParseFailure falls back to
// token classes, which only fail on blank input.
inline std::set<std::string> extract_node_types(
    const std::string& code, const SyntaxProvider& provider = default_syntax_provider()) {
    try {
        return provider.node_types(code);
    } catch (const ParseFailure&) {
        return pyparse::token_class_set(code);
    }
}

// Jaccard index over node-type sets; both-empty counts as identical.
inline double ast_jaccard(const std::string& code_a, const std::string& code_b,
                          const SyntaxProvider& provider = default_syntax_provider()) {
    std::set<std::string> a = extract_node_types(code_a, provider);
    std::set<std::string> b = extract_node_types(code_b, provider);
    std::size_t inter = 0;
    for (const std::string& t : a) inter += b.count(t);
    std::size_t uni = a.size() + b.size() - inter;
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace concat
