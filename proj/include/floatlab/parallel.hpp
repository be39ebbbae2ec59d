#pragma once

// Index-parallel loops with a fixed result layout: every index writes its
// own slot, so results do not depend on the number of workers.

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace floatlab {

/// Worker count: FLOATLAB_THREADS if set and positive, otherwise the
/// hardware concurrency (0 in the variable means "auto").
inline unsigned worker_count()
{
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("FLOATLAB_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0)
                return static_cast<unsigned>(v);
        } catch (const std::exception&) {
            // malformed values fall back to auto
        }
    }
    return hw;
}

/// Calls f(i) for i in [0, n). Indices are dealt out in contiguous blocks.
/// The exception from the lowest failing index is rethrown after all
/// workers finish.
template <class F>
void parallel_for(std::size_t n, F&& f, unsigned workers = worker_count())
{
    if (n == 0)
        return;
    workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i)
            f(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::size_t> first_bad(workers, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            const std::size_t lo = n * w / workers;
            const std::size_t hi = n * (w + 1) / workers;
            for (std::size_t i = lo; i < hi; ++i) {
                try {
                    f(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                    first_bad[w] = i;
                    return;
                }
            }
        });
    }
    for (auto& t : pool)
        t.join();
    for (unsigned w = 0; w < workers; ++w)
        if (errors[w])
            std::rethrow_exception(errors[w]);
}

} // namespace floatlab
