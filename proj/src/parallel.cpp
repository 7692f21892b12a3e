#include "snap/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace snap {

void run_stripes(std::size_t n_stripes, int threads,
                 const std::function<void(std::size_t)>& fn) {
    if (n_stripes == 0) return;
    std::size_t workers = threads <= 0 ? std::thread::hardware_concurrency()
                                       : static_cast<std::size_t>(threads);
    if (workers == 0) workers = 1;
    workers = std::min(workers, n_stripes);

    if (workers == 1) {
        for (std::size_t s = 0; s < n_stripes; ++s) fn(s);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex err_mutex;

    auto work = [&] {
        while (true) {
            const std::size_t s = next.fetch_add(1);
            if (s >= n_stripes) return;
            try {
                fn(s);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace snap
