#pragma once

#include <atomic>
#include <exception>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

namespace concat {

// Run fn(0..count-1) on up to max_workers threads and return results in index
// order. Completion order never shows: results merge by index, and if any
// calls threw, the exception of the lowest failing index is rethrown.
template <typename Fn>
auto parallel_map(int count, int max_workers, Fn&& fn)
    -> std::vector<decltype(fn(0))> {
    using Result = decltype(fn(0));
    std::vector<std::optional<Result>> slots(static_cast<std::size_t>(count));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));

    if (count <= 0) return {};
    int workers = std::min(count, std::max(1, max_workers));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) slots[static_cast<std::size_t>(i)] = fn(i);
    } else {
        std::atomic<int> next{0};
        auto worker = [&] {
            while (true) {
                int i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    slots[static_cast<std::size_t>(i)] = fn(i);
                } catch (...) {
                    errors[static_cast<std::size_t>(i)] = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
        for (const std::exception_ptr& e : errors)
            if (e) std::rethrow_exception(e);
    }

    std::vector<Result> out;
    out.reserve(static_cast<std::size_t>(count));
    for (auto& slot : slots) out.push_back(std::move(*slot));
    return out;
}

}  // namespace concat
