#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fedloc {

// Global switch between the OpenMP kernels and the serial reference
// path. Results must be bit-identical either way: every parallel loop
// writes to disjoint, index-addressed slots and reductions are summed
// in index order afterwards.
bool parallel_enabled();
void set_parallel_enabled(bool on);

template <typename Fn>
void parallel_for(std::ptrdiff_t n, Fn&& fn) {
#ifdef _OPENMP
    if (parallel_enabled()) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
        return;
    }
#endif
    for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
}

}  // namespace fedloc
