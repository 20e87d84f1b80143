#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "concat/benefit.hpp"

namespace concat {

struct PropResult {
    std::string name;
    bool pass = true;
    std::string detail;  // first counterexample, when failing
};

namespace detail {

inline void record_failure(PropResult& r, const std::string& what) {
    if (!r.pass) return;
    r.pass = false;
    r.detail = what;
}

inline std::string point(double c, double chat) {
    std::ostringstream s;
    s << "(c_k=" << c << ", c_hat_j=" << chat << ")";
    return s.str();
}

}  // namespace detail

// The full verification grid over the exact-utility model: sign agreement
// with the correction threshold, monotonicity in both arguments, the zero at
// the threshold, the threshold's own identities, and the fidelity of the
// first-order approximation near 0.5.
inline std::vector<PropResult> run_benefit_property_grid() {
    std::vector<PropResult> results;
    const int grid_n = 99;
    auto grid = [](int i) { return (i + 1) * 0.01; };

    // Sign of the exact utility flips exactly at the correction threshold.
    PropResult sign{"sign matches correction threshold", true, ""};
    for (int i = 0; i < grid_n; ++i) {
        double c = grid(i);
        double threshold = correction_threshold(c);
        for (int j = 0; j < grid_n; ++j) {
            double chat = grid(j);
            double value = exact_euc(c, chat);
            if (std::abs(chat - threshold) <= 1e-12) {
                if (std::abs(value) > 1e-9)
                    detail::record_failure(sign, "nonzero on threshold at " +
                                                     detail::point(c, chat));
            } else if ((value > 0.0) != (chat > threshold)) {
                detail::record_failure(sign, "sign mismatch at " + detail::point(c, chat));
            }
        }
    }
    results.push_back(sign);

    // Nondecreasing along rows (in c_hat_j), nonincreasing down columns (in c_k).
    PropResult mono{"monotone in both arguments", true, ""};
    for (int i = 0; i < grid_n; ++i) {
        double c = grid(i);
        for (int j = 0; j + 1 < grid_n; ++j) {
            if (exact_euc(c, grid(j + 1)) < exact_euc(c, grid(j)) - 1e-12)
                detail::record_failure(mono, "decreasing in c_hat_j at " +
                                                 detail::point(c, grid(j)));
        }
    }
    for (int j = 0; j < grid_n; ++j) {
        double chat = grid(j);
        for (int i = 0; i + 1 < grid_n; ++i) {
            if (exact_euc(grid(i + 1), chat) > exact_euc(grid(i), chat) + 1e-12)
                detail::record_failure(mono, "increasing in c_k at " +
                                                 detail::point(grid(i), chat));
        }
    }
    results.push_back(mono);

    // Exact zero at the threshold.
    PropResult zero{"utility vanishes at the threshold", true, ""};
    for (int i = 1; i <= 19; ++i) {
        double c = i * 0.05;
        double value = exact_euc(c, correction_threshold(c));
        if (std::abs(value) > 1e-9)
            detail::record_failure(zero, "residual " + std::to_string(value) + " at c_k=" +
                                             std::to_string(c));
    }
    results.push_back(zero);

    // Threshold identities: fixed point at 0.5, reflection symmetry, monotone.
    PropResult ident{"threshold identities", true, ""};
    if (correction_threshold(0.5) != 0.5)
        detail::record_failure(ident, "threshold(0.5) != 0.5");
    for (int i = 0; i < grid_n; ++i) {
        double c = grid(i);
        if (std::abs(correction_threshold(c) + correction_threshold(1.0 - c) - 1.0) > 1e-12)
            detail::record_failure(ident, "reflection identity fails at c_k=" +
                                              std::to_string(c));
    }
    for (int i = 0; i + 1 < grid_n; ++i) {
        if (correction_threshold(grid(i + 1)) <= correction_threshold(grid(i)))
            detail::record_failure(ident, "threshold not increasing at c_k=" +
                                              std::to_string(grid(i)));
    }
    results.push_back(ident);

    // First-order expansion stays within 0.02 near c_hat_j = 0.5 for central c_k.
    PropResult taylor{"first-order fidelity near 0.5", true, ""};
    for (int i = 0; i < grid_n; ++i) {
        double c = grid(i);
        if (c < 0.2 - 1e-12 || c > 0.8 + 1e-12) continue;
        for (int j = 0; j < grid_n; ++j) {
            double chat = grid(j);
            if (std::abs(chat - 0.5) > 0.05 + 1e-12) continue;
            double diff = std::abs(exact_euc(c, chat) - taylor_benefit(c, chat));
            if (diff > 0.02)
                detail::record_failure(taylor, "gap " + std::to_string(diff) + " at " +
                                                   detail::point(c, chat));
        }
    }
    results.push_back(taylor);

    return results;
}

}  // namespace concat
