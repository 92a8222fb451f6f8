#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>

namespace sigbsde {

/// Pairwise (cascade) summation. The split points depend only on the length,
/// so the result is independent of how the caller scheduled the work.
template <typename Scalar>
Scalar pairwise_sum(std::span<const Scalar> x) {
    constexpr std::size_t kBlock = 64;
    if (x.size() <= kBlock) {
        Scalar s{0};
        for (const Scalar v : x) s += v;
        return s;
    }
    const std::size_t half = x.size() / 2;
    return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

template <typename Derived>
typename Derived::Scalar pairwise_sum(const Eigen::DenseBase<Derived>& x) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Array<Scalar, Eigen::Dynamic, 1> tmp = x.derived();
    return pairwise_sum(std::span<const Scalar>(tmp.data(), static_cast<std::size_t>(tmp.size())));
}

template <typename Derived>
typename Derived::Scalar pairwise_mean(const Eigen::DenseBase<Derived>& x) {
    return pairwise_sum(x) / static_cast<typename Derived::Scalar>(x.size());
}

/// Worker count: SIGBSDE_THREADS if set, else the hardware concurrency.
inline unsigned worker_count() {
    if (const char* env = std::getenv("SIGBSDE_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0) return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Static block partition of [0, n) over the worker pool. `fn(begin, end)`
/// must only write to slots inside its own range.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(worker_count(), std::max<std::size_t>(n, 1));
    if (workers <= 1 || n < 1024) {
        fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t b = w * chunk;
            const std::size_t e = std::min(n, b + chunk);
            if (b >= e) break;
            pool.emplace_back([&fn, &errors, w, b, e] {
                try {
                    fn(b, e);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (const auto& err : errors) {
        if (err) std::rethrow_exception(err);
    }
}

}  // namespace sigbsde
