#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace strokelab {

/// Worker count for parallel sections: STROKELAB_THREADS caps it,
/// otherwise hardware concurrency. Always >= 1.
inline unsigned thread_count() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("STROKELAB_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1 && static_cast<unsigned>(v) < hw) return static_cast<unsigned>(v);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    return hw;
}

namespace detail {
inline thread_local bool in_parallel_section = false;
}

/// Runs body(i) for i in [0, n). Work items must be independent and write
/// only to their own output slot; results are then identical for any
/// thread count. Nested calls run serially instead of oversubscribing.
/// Exceptions from workers are rethrown in the caller.
template <typename Body>
void parallel_for(std::size_t n, const Body& body) {
    const unsigned workers = thread_count();
    if (n == 0) return;
    if (workers <= 1 || n == 1 || detail::in_parallel_section) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    auto run = [&] {
        detail::in_parallel_section = true;
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load(std::memory_order_relaxed)) break;
            try {
                body(i);
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
                break;
            }
        }
        detail::in_parallel_section = false;
    };
    std::vector<std::thread> pool;
    const unsigned spawn = static_cast<unsigned>(std::min<std::size_t>(workers, n)) - 1;
    pool.reserve(spawn);
    for (unsigned t = 0; t < spawn; ++t) pool.emplace_back(run);
    run();
    for (auto& th : pool) th.join();
    if (failed && error) std::rethrow_exception(error);
}

} // namespace strokelab
