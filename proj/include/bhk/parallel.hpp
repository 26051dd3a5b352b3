#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace bhk {

void set_num_threads(int n);
int num_threads();

// Static block partition of [0, n). Each index is handled by exactly one thread,
// so any per-index output is independent of the thread count.
template <class F>
void parallel_for(int n, F&& f) {
    const int t = std::min(num_threads(), n);
    if (t <= 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(t);
    for (int w = 0; w < t; ++w) {
        pool.emplace_back([&, w] {
            try {
                int lo = static_cast<int>(static_cast<long long>(n) * w / t);
                int hi = static_cast<int>(static_cast<long long>(n) * (w + 1) / t);
                for (int i = lo; i < hi; ++i) f(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace bhk
