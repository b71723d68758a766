#pragma once

#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rtwin {

constexpr std::size_t kReduceBlock = 4096;

// Deterministic blocked reduction. Work is split into fixed-size blocks;
// per-block accumulators are combined serially in block order, so the
// result does not depend on the thread count (bit-identical for
// parallel=true and parallel=false).
//
// BlockFn: Acc(std::size_t begin, std::size_t end)
// CombineFn: void(Acc& into, const Acc& part)
template <class Acc, class BlockFn, class CombineFn>
Acc blocked_reduce(std::size_t n, Acc init, BlockFn block_fn, CombineFn combine,
                   bool parallel = true, std::size_t block = kReduceBlock) {
  const std::size_t n_blocks = n == 0 ? 0 : (n + block - 1) / block;
  std::vector<Acc> parts(n_blocks, init);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(n_blocks); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * block;
    const std::size_t hi = lo + block < n ? lo + block : n;
    parts[static_cast<std::size_t>(b)] = block_fn(lo, hi);
  }
  Acc out = init;
  for (const Acc& p : parts) combine(out, p);
  return out;
}

// Same blocking for pure per-element writes (disjoint outputs).
template <class BlockFn>
void blocked_for(std::size_t n, BlockFn block_fn, bool parallel = true,
                 std::size_t block = kReduceBlock) {
  const std::size_t n_blocks = n == 0 ? 0 : (n + block - 1) / block;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(n_blocks); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * block;
    const std::size_t hi = lo + block < n ? lo + block : n;
    block_fn(lo, hi);
  }
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace rtwin
