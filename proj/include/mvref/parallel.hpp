#pragma once

#include <functional>

namespace mvref {

// Worker count: MVREF_THREADS if set to a positive integer, else hardware concurrency.
int max_threads();

// Runs body(i) for i in [0, n) across up to max_threads() threads in contiguous
// chunks. body must only write state owned by index i.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace mvref
