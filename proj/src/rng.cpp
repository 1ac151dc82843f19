#include "orbitsim/rng.hpp"

#include <limits>
#include <stdexcept>

namespace orbitsim {

std::uint64_t Rng::index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::index requires n > 0");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t r;
    do {
        r = engine_();
    } while (r >= limit);
    return r % n;
}

} // namespace orbitsim
