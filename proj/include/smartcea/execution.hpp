#pragma once

namespace smartcea {

// Selects between the OpenMP kernel and the plain serial loop kept as the
// reference implementation. Both paths consume identical random substreams.
enum class Execution { Serial, Parallel };

// Caps the OpenMP team size; n <= 0 restores the runtime default.
void set_thread_limit(int n);
int thread_limit();

}  // namespace smartcea
