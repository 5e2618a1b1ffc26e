#ifndef TOMFLOW_THREADING_HPP
#define TOMFLOW_THREADING_HPP

#include <cstddef>
#include <functional>

namespace tomflow {

/// Process-wide worker budget for the embarrassingly parallel loops (FV flux
/// sweeps, batch sampling). 1 by default; results are identical for any
/// value because every index writes only its own slot.
void set_threads(int n);
int threads();

/// Runs fn(i) for i in [0, n), split across the configured workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace tomflow

#endif
