#include "phasespace/rng.hpp"

#include <stdexcept>

namespace phasespace {

std::uint64_t mix_seed(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) : engine_(mix_seed(seed)) {}

Rng Rng::stream(std::uint64_t seed, std::uint64_t index)
{
    return Rng(mix_seed(seed) ^ mix_seed(index + 0x5851f42d4c957f2dULL));
}

double Rng::uniform()
{
    // Older libstdc++ can round generate_canonical up to exactly 1.
    double u = std::generate_canonical<double, 53>(engine_);
    return u < 1.0 ? u : 0x1.fffffffffffffp-1;
}

double Rng::uniform(double lo, double hi)
{
    return lo + (hi - lo) * uniform();
}

double Rng::normal()
{
    return normal_(engine_);
}

double Rng::gamma(double shape)
{
    if (!(shape > 0.0)) {
        throw std::invalid_argument("gamma shape must be positive");
    }
    std::gamma_distribution<double> dist(shape, 1.0);
    return dist(engine_);
}

} // namespace phasespace
