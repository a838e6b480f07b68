#pragma once

#include <atomic>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "satqb/errors.hpp"

namespace satqb::sweep {

/// Result slot for one sweep point: either a value or the error that
/// killed that point. Failures stay isolated per point.
template <typename T>
struct Outcome {
    bool ok = false;
    std::string error;
    T value{};
};

inline int resolve_jobs(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Run fn(i) for i in [0, count) on a small worker pool. Results land in
/// index order; exceptions are captured per point, never propagated across
/// points. Output writing stays with the caller (single collector).
template <typename T>
std::vector<Outcome<T>> run(std::size_t count, int jobs,
                            const std::function<T(std::size_t)>& fn) {
    std::vector<Outcome<T>> results(count);
    if (count == 0) return results;
    const int workers = std::min<std::size_t>(resolve_jobs(jobs), count);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                results[i].value = fn(i);
                results[i].ok = true;
            } catch (const std::exception& e) {
                results[i].ok = false;
                results[i].error = e.what();
            }
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return results;
}

} // namespace satqb::sweep
