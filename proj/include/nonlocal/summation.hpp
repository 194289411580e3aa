#pragma once

#include <algorithm>
#include <atomic>
#include <span>
#include <thread>
#include <vector>

#include "nonlocal/core.hpp"

namespace nonlocal {

/// Pairwise (cascade) summation with a fixed tree shape: the result depends
/// only on the values and their order, never on how the caller produced them.
double pairwise_sum(std::span<const double> values);

/// Runs body(b) for every block b in [0, n_blocks) on up to `workers` threads.
/// Blocks are claimed dynamically; body must only write to state owned by b.
template <class Body>
void parallel_blocks(Index n_blocks, int workers, Body&& body) {
  const int n_threads = static_cast<int>(
      std::clamp<Index>(workers, 1, std::max<Index>(1, n_blocks)));
  if (n_threads == 1) {
    for (Index b = 0; b < n_blocks; ++b) body(b);
    return;
  }
  std::atomic<Index> next{0};
  auto run = [&] {
    for (Index b = next.fetch_add(1); b < n_blocks; b = next.fetch_add(1)) body(b);
  };
  std::vector<std::jthread> pool;
  pool.reserve(n_threads - 1);
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(run);
  run();
}

/// Deterministic parallel reduction of term(k) over k in [0, n).
///
/// Terms are grouped into fixed blocks of `block` consecutive indices; each
/// block is reduced with pairwise_sum and the block partials are reduced with
/// pairwise_sum again. The tree depends on n and block only, so the result is
/// bit-identical for every worker count.
template <class Term>
double deterministic_sum(Index n, int workers, Term&& term, Index block = 64) {
  if (n <= 0) return 0.0;
  const Index n_blocks = (n + block - 1) / block;
  std::vector<double> partial(static_cast<std::size_t>(n_blocks), 0.0);
  parallel_blocks(n_blocks, workers, [&](Index b) {
    const Index lo = b * block;
    const Index hi = std::min(n, lo + block);
    std::vector<double> terms(static_cast<std::size_t>(hi - lo));
    for (Index k = lo; k < hi; ++k) terms[static_cast<std::size_t>(k - lo)] = term(k);
    partial[static_cast<std::size_t>(b)] = pairwise_sum(terms);
  });
  return pairwise_sum(partial);
}

}  // namespace nonlocal
