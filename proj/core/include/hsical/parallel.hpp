#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace hsical {

/// Worker count used by data-parallel loops. 0 selects hardware concurrency.
/// Results never depend on this value: loops write disjoint outputs and
/// reductions combine fixed-size blocks in index order.
void set_thread_count(unsigned threads);
unsigned thread_count();

/// Runs fn(begin, end) over contiguous blocks of [0, n).
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t min_block = 1) {
    if (n == 0) return;
    const std::size_t workers =
        std::min<std::size_t>(thread_count(), std::max<std::size_t>(1, n / std::max<std::size_t>(1, min_block)));
    if (workers <= 1) {
        fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t b = w * chunk;
        const std::size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&, w, b, e] {
            try {
                fn(b, e);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// Deterministic blocked reduction: partial(begin, end) -> T is evaluated on
/// fixed blocks of `block` items independent of the worker count, then the
/// partials are folded left to right with combine(acc, part).
template <typename T, typename Partial, typename Combine>
T parallel_reduce(std::size_t n, std::size_t block, T init, Partial&& partial, Combine&& combine) {
    const std::size_t blocks = (n + block - 1) / block;
    std::vector<T> parts(blocks, init);
    parallel_for(blocks, [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b) parts[b] = partial(b * block, std::min(n, (b + 1) * block));
    });
    T acc = init;
    for (auto& p : parts) combine(acc, p);
    return acc;
}

}  // namespace hsical
