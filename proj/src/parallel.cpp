#include "hyperdrum/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hyperdrum {

unsigned default_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (threads == 0) {
        threads = default_threads();
    }
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    std::size_t error_index = n;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) {
                return;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (i < error_index) {
                    error_index = i;
                    error = std::current_exception();
                }
            }
        }
    };
    const auto count = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    std::vector<std::jthread> pool;
    pool.reserve(count);
    for (unsigned t = 0; t < count; ++t) {
        pool.emplace_back(worker);
    }
    pool.clear();
    if (error) {
        std::rethrow_exception(error);
    }
}

}  // namespace hyperdrum
