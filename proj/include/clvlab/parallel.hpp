#pragma once

#include <cstddef>
#include <exception>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace clvlab {

inline int hardware_jobs() {
#if defined(_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Runs fn(0..count-1). jobs <= 1 is the serial reference path; jobs > 1 fans
// out over OpenMP threads. Tasks must only write their own output slots, so
// results are identical regardless of jobs. The first exception thrown by a
// task is rethrown after the loop finishes.
template <class Fn>
void for_each_index(std::size_t count, int jobs, Fn&& fn) {
    if (jobs <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
#if defined(_OPENMP)
    std::exception_ptr first_error = nullptr;
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
    for (long long i = 0; i < static_cast<long long>(count); ++i) {
        try {
            fn(static_cast<std::size_t>(i));
        } catch (...) {
#pragma omp critical(clvlab_for_each_index)
            if (!first_error) first_error = std::current_exception();
        }
    }
    if (first_error) std::rethrow_exception(first_error);
#else
    for (std::size_t i = 0; i < count; ++i) fn(i);
#endif
}

}  // namespace clvlab
