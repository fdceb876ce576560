#ifndef TEMPANCHOR_PARALLEL_HPP
#define TEMPANCHOR_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace tempanchor {

/// Runs fn(i) for i in [0, count) on at most `jobs` threads and returns the
/// results in index order, so the output never depends on scheduling. The
/// first exception thrown by any job is rethrown after all threads join.
template <class Result>
std::vector<Result> parallel_map(std::size_t count, std::size_t jobs,
                                 const std::function<Result(std::size_t)>& fn) {
    std::vector<Result> results(count);
    jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) results[i] = fn(i);
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> workers;
        workers.reserve(jobs);
        for (std::size_t w = 0; w < jobs; ++w) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        results[i] = fn(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
    return results;
}

} // namespace tempanchor

#endif // TEMPANCHOR_PARALLEL_HPP
