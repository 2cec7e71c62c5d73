#pragma once

#include <cstddef>
#include <functional>

namespace saekit {

/// Process-wide worker count used by the data-parallel kernels. Work is always
/// split over independent output ranges, so results are identical for any
/// setting; the knob only trades wall time.
void set_num_threads(unsigned n);
unsigned num_threads();

/// Calls body(begin, end) over contiguous chunks of [0, n).
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 1);

}  // namespace saekit
