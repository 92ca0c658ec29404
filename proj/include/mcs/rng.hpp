#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace mcs {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent substream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Order-sensitive combination of seed components. Stable across platforms.
class SeedBuilder {
public:
    explicit SeedBuilder(std::uint64_t seed) : state_(mix64(seed)) {}

    SeedBuilder& add(std::uint64_t v) {
        state_ = mix64(state_ ^ mix64(v + 0x632be59bd9b4e019ULL));
        return *this;
    }
    SeedBuilder& add(std::string_view s) { return add(fnv1a64(s)); }
    // Rates are hashed at 1e-9 resolution so 0.1 and 0.1000000000001 share a stream.
    SeedBuilder& add_rate(double rate);

    std::uint64_t value() const noexcept { return state_; }
    Rng rng() const { return Rng(state_); }

private:
    std::uint64_t state_;
};

// The standard distributions are implementation-defined; these are not, so
// perturbed bundles and permutation p-values are reproducible across toolchains.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);
double uniform_unit(Rng& rng); // [0, 1)
double uniform_real(Rng& rng, double lo, double hi);
double standard_normal(Rng& rng);

// k distinct indices from [0, n), uniformly, returned in ascending order.
std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t k);

void shuffle_indices(Rng& rng, std::vector<std::size_t>& v);

} // namespace mcs
