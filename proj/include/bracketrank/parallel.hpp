#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bracketrank {

// Runs body(0), ..., body(count-1) with at most max_parallel worker threads
// and waits for all of them. Callers write results into index-addressed
// slots, so assembly never depends on completion order. The first exception
// thrown by any body is rethrown after the join.
template <typename Body>
void parallel_for_indexed(std::size_t count, int max_parallel, Body&& body) {
    if (count == 0) return;
    const std::size_t workers =
        std::min(count, static_cast<std::size_t>(std::max(1, max_parallel)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&body, &next, &first_error, &error_mutex, count] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace bracketrank
