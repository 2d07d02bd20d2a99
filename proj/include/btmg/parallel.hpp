#pragma once

#include <cstdint>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace btmg::par {

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Data-parallel loop over [0, n).  Each index must write only its own slots;
// results are then independent of the thread count.  schedule(static) suits
// the uniform per-index work of the kernel loops.  Exceptions thrown by the
// body are captured and rethrown for the lowest index after the region, so
// error reporting stays deterministic as well.
template <class F>
void parallel_for(std::int64_t n, F&& body) {
    if (n <= 0) return;
    std::exception_ptr error = nullptr;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            body(i);
        } catch (...) {
#ifdef _OPENMP
#pragma omp critical(btmg_parallel_for_error)
#endif
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
}

// Variant for uneven per-index work (optimizer restarts, experiment jobs).
// num_threads <= 0 means the OpenMP default.  Exceptions are collected per
// index and the one with the lowest index is rethrown, independent of
// scheduling order.
template <class F>
void parallel_for_jobs(std::int64_t n, int num_threads, F&& body) {
    if (n <= 0) return;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n), nullptr);
#ifdef _OPENMP
    if (num_threads > 0) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(num_threads)
        for (std::int64_t i = 0; i < n; ++i) {
            try {
                body(i);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    } else {
#pragma omp parallel for schedule(dynamic, 1)
        for (std::int64_t i = 0; i < n; ++i) {
            try {
                body(i);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    }
#else
    (void)num_threads;
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            body(i);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
#endif
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace btmg::par
