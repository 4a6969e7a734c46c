#include "hpl/parallel.hpp"

#include <cstdlib>
#include <string>

namespace hpl {

unsigned resolve_threads(unsigned requested)
{
    if (requested > 0) {
        return requested;
    }
    if (char const* env = std::getenv("HPL_THREADS")) {
        try {
            long const v = std::stol(env);
            if (v > 0) {
                return static_cast<unsigned>(v);
            }
        } catch (...) {
            // ignore malformed values
        }
    }
    return 1;
}

}  // namespace hpl
