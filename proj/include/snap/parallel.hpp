#pragma once

#include <cstddef>
#include <functional>

namespace snap {

// Fixed-stripe work partition: fn(s) is called once for each stripe
// s in [0, n_stripes) on up to `threads` workers. Callers that reduce
// per-stripe results must combine them in stripe order; because the stripe
// count is chosen by the caller (not the thread count), results are then
// identical for any --threads value.
//
// The first exception thrown by any stripe is rethrown after all workers
// join.
void run_stripes(std::size_t n_stripes, int threads,
                 const std::function<void(std::size_t)>& fn);

// Stripe count used for batch/evaluation partitioning throughout the repo.
inline constexpr std::size_t kGradStripes = 8;

} // namespace snap
