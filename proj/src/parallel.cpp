#include "mixlab/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>

namespace mixlab {

unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("MIXLAB_THREADS")) {
        try {
            const auto v = std::stoul(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
            // fall through to the hardware count
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace mixlab
