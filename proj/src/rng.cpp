#include "mcs/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mcs {

SeedBuilder& SeedBuilder::add_rate(double rate) {
    const auto scaled = static_cast<std::int64_t>(std::llround(rate * 1e9));
    return add(static_cast<std::uint64_t>(scaled));
}

std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    if (n <= 1) return 0;
    // Rejection sampling on the top of the range removes modulo bias.
    const std::uint64_t limit = Rng::max() - (Rng::max() % n);
    std::uint64_t draw;
    do {
        draw = rng();
    } while (draw >= limit);
    return draw % n;
}

double uniform_unit(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform_real(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform_unit(rng);
}

double standard_normal(Rng& rng) {
    // Box-Muller; the paired variate is discarded to keep the stream stateless.
    double u1 = uniform_unit(rng);
    while (u1 <= 0.0) u1 = uniform_unit(rng);
    const double u2 = uniform_unit(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t k) {
    if (k > n) k = n;
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    // Partial Fisher-Yates: the first k slots are a uniform k-subset.
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_index(rng, n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

void shuffle_indices(Rng& rng, std::vector<std::size_t>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_index(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace mcs
