#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace air {

// Set by the CLI's SIGINT handler; long stages drain between items.
std::atomic<bool>& interrupt_flag();

struct InterruptedError : std::runtime_error {
    InterruptedError() : std::runtime_error("interrupted") {}
};

// Applies fn to every item with up to `workers` threads. Results keep input
// order. The first exception thrown by fn is rethrown after all workers
// finish their current item.
template <class In, class Out>
std::vector<Out> parallel_map(const std::vector<In>& items, int workers,
                              const std::function<Out(const In&)>& fn) {
    std::vector<Out> results(items.size());
    if (items.empty()) return results;
    if (workers < 1) workers = 1;
    workers = static_cast<int>(std::min<std::size_t>(workers, items.size()));

    if (workers == 1) {
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (interrupt_flag().load()) throw InterruptedError();
            results[i] = fn(items[i]);
        }
        return results;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            if (failed.load() || interrupt_flag().load()) return;
            std::size_t i = next.fetch_add(1);
            if (i >= items.size()) return;
            try {
                results[i] = fn(items[i]);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();

    if (error) std::rethrow_exception(error);
    if (interrupt_flag().load()) throw InterruptedError();
    return results;
}

}  // namespace air
