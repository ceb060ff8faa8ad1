#ifndef PERTRL_RNG_HPP
#define PERTRL_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace pertrl::rng {

/// splitmix64 finalizer; used to derive decorrelated child seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derive a child seed from a master seed and a path of indices (experiment,
/// time step, replication, ...). Counter-based, so adding replications never
/// reshuffles the streams of earlier ones.
inline std::uint64_t derive(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = mix64(master);
    for (std::uint64_t w : path) s = mix64(s ^ mix64(w));
    return s;
}

/// Stream name-space tags so different uses of the same (t, replication)
/// coordinates do not collide.
enum class Stream : std::uint64_t {
    BatchDraws = 1,
    ObsNoise = 2,
    DynNoise = 3,
    McPath = 4,
    Replication = 5,
};

inline std::uint64_t derive(std::uint64_t master, Stream tag,
                            std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = mix64(master ^ mix64(static_cast<std::uint64_t>(tag)));
    for (std::uint64_t w : path) s = mix64(s ^ mix64(w));
    return s;
}

/// Deterministic standard-normal stream. The engine (mt19937_64) is fully
/// specified by the standard and Box-Muller is spelled out here, so a stream
/// is reproducible bit-for-bit from its seed alone.
class NormalStream {
  public:
    explicit NormalStream(std::uint64_t seed) : eng_(seed) {}

    /// Uniform on (0, 1]; never returns 0 so log() below is safe.
    double uniform() {
        const std::uint64_t bits = eng_() >> 11;  // 53 random bits
        return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    double normal(double sigma) { return sigma * normal(); }

  private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace pertrl::rng

#endif
