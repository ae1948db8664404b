#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace moeda {
namespace detail {

// Runs fn(i) for every i in [0, count) across up to jobs threads.  Callers
// write results into per-index slots, so the outcome does not depend on
// scheduling; the lowest-index exception (if any) is rethrown.
template <typename Fn>
void parallel_for_index(std::uint32_t count, std::uint32_t jobs, Fn&& fn) {
    if (jobs <= 1 || count <= 1) {
        for (std::uint32_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const std::uint32_t workers = std::min(jobs, count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::uint32_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::uint32_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::uint32_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& err : errors)
        if (err) std::rethrow_exception(err);
}

}  // namespace detail
}  // namespace moeda
