#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mixboost {

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

/// Set the global compute-thread budget (0 leaves the runtime default).
inline void set_thread_budget(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

/// Parallel loop over [0, n). Work is split into static chunks so the
/// iteration-to-chunk mapping is independent of the thread count; bodies must
/// not reduce into shared floating-point state (accumulate per index and
/// combine in index order instead).
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) fn(static_cast<std::size_t>(i));
#else
    for (std::size_t i = 0; i < n; ++i) fn(i);
#endif
}

} // namespace mixboost
