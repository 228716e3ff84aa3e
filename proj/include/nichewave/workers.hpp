#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <optional>

namespace nichewave {

// Pool size: NICHEWAVE_WORKERS if set, else the configured value, else the
// hardware concurrency (at least 1).
std::size_t worker_count(std::optional<std::size_t> configured = std::nullopt);

// Runs job(i) for i in [0, n) on up to `workers` threads. Results are written
// by index, so output order never depends on scheduling. The first exception
// (by index) is rethrown after all jobs finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& job,
                  std::size_t workers);

}  // namespace nichewave
