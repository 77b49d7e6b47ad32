#ifndef PARSGD_RNG_HPP
#define PARSGD_RNG_HPP

#include <cmath>
#include <cstdint>

namespace parsgd {

/*
 * Counter-keyed deterministic RNG. Every (seed, a, b) triple opens an
 * independent stream, so a draw never depends on how many draws other
 * workers/epochs made before it. This is what makes corruption, delays and
 * batch selection reproducible under any evaluation order or parallelism.
 */
class KeyedRng {
public:
    explicit KeyedRng(std::uint64_t state) : state_(state) {}

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    static KeyedRng for_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
        std::uint64_t h = mix(seed);
        h = mix(h ^ mix(a + 0x517cc1b727220a95ull));
        h = mix(h ^ mix(b + 0x2545f4914f6cdd1dull));
        return KeyedRng(h);
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // strictly inside (0,1); never 0, so log() below is safe
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller with spare caching; one stream yields one fixed sequence
    double normal(double mean, double sigma) {
        if (has_spare_) {
            has_spare_ = false;
            return mean + sigma * spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return mean + sigma * r * std::cos(theta);
    }

    double exponential(double mean) { return -mean * std::log(uniform01()); }

    // index in [0, n)
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

private:
    std::uint64_t state_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace parsgd

#endif
