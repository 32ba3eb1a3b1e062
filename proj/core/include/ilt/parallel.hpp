#ifndef ILT_PARALLEL_HPP
#define ILT_PARALLEL_HPP

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace ilt {

/// Runs fn(task_index) for task_index in [0, n_tasks) on `workers` threads.
/// Tasks must write only to their own result slots; under that contract the
/// outcome is independent of scheduling and worker count. The first exception
/// thrown by any task is rethrown on the calling thread.
inline void parallel_tasks(std::size_t n_tasks, int workers,
                           const std::function<void(std::size_t)>& fn) {
    if (workers < 1) workers = 1;
    if (workers == 1 || n_tasks <= 1) {
        for (std::size_t i = 0; i < n_tasks; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_tasks) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace ilt

#endif
