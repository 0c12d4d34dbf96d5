#pragma once

// Small deterministic RNG (splitmix64). Self-contained so that seeded
// runs reproduce bit-for-bit regardless of standard library internals.

#include <cmath>
#include <cstdint>
#include <vector>

namespace fractorus {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller (no state carried between calls so
    // sequences stay easy to reason about).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Uniform point on the unit sphere S^p in R^{p+1}.
    std::vector<double> sphere(int p) {
        std::vector<double> a(p + 1);
        double nrm = 0.0;
        do {
            nrm = 0.0;
            for (auto& x : a) {
                x = normal();
                nrm += x * x;
            }
        } while (nrm == 0.0);
        nrm = std::sqrt(nrm);
        for (auto& x : a) x /= nrm;
        return a;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = next_u64() % i;
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

} // namespace fractorus
