#include "mrlft/parallel.hpp"

#include <cstdlib>
#include <string>

namespace mrlft {

int default_jobs(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("MRLFT_JOBS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace mrlft
