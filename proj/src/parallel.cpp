#include "conewalk/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace conewalk {

int configured_threads() {
    const char* v = std::getenv("CONEWALK_THREADS");
    if (!v) return 1;
    try {
        int n = std::stoi(v);
        return n > 0 ? n : 1;
    } catch (const std::exception&) {
        return 1;
    }
}

void set_threads(int n) {
#ifdef _OPENMP
    omp_set_num_threads(n > 0 ? n : 1);
#else
    (void)n;
#endif
}

void apply_thread_config() { set_threads(configured_threads()); }

int current_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace conewalk
