#pragma once

#include <cstdint>
#include <random>

namespace phasespace {

// Seeded random stream. One instance per trajectory; streams derived from a
// (seed, index) pair are independent of how trajectories are scheduled.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    // Stream `index` of a seeded family.
    static Rng stream(std::uint64_t seed, std::uint64_t index);

    double uniform();                    // [0, 1)
    double uniform(double lo, double hi); // [lo, hi)
    double normal();                     // N(0, 1)
    double gamma(double shape);          // unit scale

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

// SplitMix64 finaliser, used to decorrelate stream seeds.
std::uint64_t mix_seed(std::uint64_t value);

} // namespace phasespace
