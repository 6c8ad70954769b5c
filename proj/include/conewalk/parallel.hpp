#pragma once

namespace conewalk {

// Thread count from CONEWALK_THREADS; 1 when unset or invalid. Results never depend on it.
int configured_threads();
void apply_thread_config();
void set_threads(int n);
int current_threads();

}  // namespace conewalk
