#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tempshift {

/// Independent stream seed for a named consumer (clip id, parameter name, ...).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

/// Seeded generator with distribution code of our own so streams are
/// identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    /// Uniform integer in [lo, hi].
    int between(int lo, int hi);
    double normal();

    template <typename It>
    void shuffle(It first, It last) {
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            const auto j = below(i);
            std::swap(first[i - 1], first[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace tempshift
