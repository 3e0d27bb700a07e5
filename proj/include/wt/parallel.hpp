#pragma once

#include <functional>

namespace wt {

/// Worker cap: min(hardware threads, WT_THREADS env var when set).
int max_threads();

/// Force serial execution (reproducibility mode).
void set_serial_mode(bool serial);
bool serial_mode();

/// Run fn(i) for i in [0, n). Splits into contiguous chunks across threads;
/// callers must only write disjoint per-i outputs, so results never depend on
/// the schedule. Falls back to a plain loop when serial or n is small.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace wt
