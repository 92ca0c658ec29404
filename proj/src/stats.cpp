#include "mcs/stats.hpp"

#include "mcs/error.hpp"
#include "mcs/parallel.hpp"
#include "mcs/rng.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mcs::stats {

namespace {

void require_finite(std::span<const double> values) {
    for (double v : values) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "statistics input contains NaN or infinity");
    }
}

bool is_constant(std::span<const double> v) {
    return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
}

} // namespace

std::vector<double> rank_with_ties(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorCode::InsufficientData, "cannot rank an empty sample");
    require_finite(values);
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && values[order[j]] == values[order[i]]) ++j;
        // Positions i..j-1 (0-based) share rank mean((i+1)..j) = (i + j + 1) / 2.
        const double shared = 0.5 * static_cast<double>(i + j + 1);
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = shared;
        i = j;
    }
    return ranks;
}

RankedSample RankedSample::from(std::span<const double> values) {
    return {std::vector<double>(values.begin(), values.end()), rank_with_ties(values)};
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "samples differ in length");
    const std::size_t n = x.size();
    if (n < 2) throw Error(ErrorCode::InsufficientData, "correlation needs at least 2 pairs");
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::ConstantInput, "correlation undefined for a constant sample");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "samples differ in length");
    if (x.size() < 3) throw Error(ErrorCode::InsufficientData, "spearman needs at least 3 pairs");
    require_finite(x);
    require_finite(y);
    if (is_constant(x) || is_constant(y)) {
        throw Error(ErrorCode::ConstantInput, "spearman undefined for a constant sample");
    }
    const auto rx = rank_with_ties(x);
    const auto ry = rank_with_ties(y);
    return pearson(rx, ry);
}

SpearmanTest spearman_test(std::span<const double> x, std::span<const double> y, PValueMethod method,
                           std::size_t n_perm, std::uint64_t seed, unsigned width) {
    SpearmanTest out;
    out.rho = spearman(x, y);
    const auto n = static_cast<double>(x.size());

    if (method == PValueMethod::TApprox) {
        if (std::abs(out.rho) >= 1.0) {
            out.p = 0.0;
            return out;
        }
        const double t = out.rho * std::sqrt((n - 2.0) / (1.0 - out.rho * out.rho));
        out.p = student_t_two_sided(t, n - 2.0);
        return out;
    }

    if (n_perm < 1000) throw Error(ErrorCode::InvalidArgument, "permutation test needs n_perm >= 1000");
    const auto rx = rank_with_ties(x);
    const auto ry = rank_with_ties(y);
    // Exact-tie permutations reproduce |rho| only up to rounding.
    const double threshold = std::abs(out.rho) - 1e-12;
    std::vector<unsigned char> extreme(n_perm, 0);
    parallel_for(n_perm, width, [&](std::size_t i) {
        auto rng = SeedBuilder(seed).add(i).rng();
        std::vector<std::size_t> idx(ry.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        shuffle_indices(rng, idx);
        std::vector<double> permuted(ry.size());
        for (std::size_t k = 0; k < idx.size(); ++k) permuted[k] = ry[idx[k]];
        extreme[i] = std::abs(pearson(rx, permuted)) >= threshold ? 1 : 0;
    });
    const auto hits = static_cast<double>(std::count(extreme.begin(), extreme.end(), 1));
    out.p = (1.0 + hits) / (static_cast<double>(n_perm) + 1.0);
    return out;
}

double spearman_pvalue(std::span<const double> x, std::span<const double> y, PValueMethod method,
                       std::size_t n_perm, std::uint64_t seed, unsigned width) {
    return spearman_test(x, y, method, n_perm, seed, width).p;
}

KruskalWallisResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw Error(ErrorCode::InsufficientData, "kruskal-wallis needs at least 2 groups");
    KruskalWallisResult out;
    std::vector<double> pooled;
    for (const auto& g : groups) {
        if (g.size() < 2) throw Error(ErrorCode::InsufficientData, "every group needs at least 2 values");
        require_finite(g);
        out.counts.push_back(g.size());
        pooled.insert(pooled.end(), g.begin(), g.end());
    }
    const auto n = static_cast<double>(pooled.size());
    const auto ranks = rank_with_ties(pooled);

    double sum_term = 0.0;
    std::size_t offset = 0;
    for (const auto& g : groups) {
        double rank_sum = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) rank_sum += ranks[offset + i];
        sum_term += rank_sum * rank_sum / static_cast<double>(g.size());
        offset += g.size();
    }
    const double h_raw = 12.0 / (n * (n + 1.0)) * sum_term - 3.0 * (n + 1.0);

    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    double tie_sum = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i + 1;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const auto t = static_cast<double>(j - i);
        tie_sum += t * t * t - t;
        i = j;
    }
    const double divisor = 1.0 - tie_sum / (n * n * n - n);
    if (divisor <= 0.0) throw Error(ErrorCode::AllTied, "every pooled value is tied; H is undefined");

    out.h = std::max(0.0, h_raw / divisor);
    out.p = chi_square_sf(out.h, static_cast<int>(groups.size()) - 1);
    return out;
}

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 100000;

// Series expansion of P(a, x); converges quickly for x < a + 1.
double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < kMaxIter; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * kEps) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) (modified Lentz); used for x >= a + 1.
double gamma_q_fraction(double a, double x) {
    constexpr double tiny = std::numeric_limits<double>::min() / kEps;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

} // namespace

double gamma_p(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma_p needs a > 0 and x >= 0");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_fraction(a, x);
}

double gamma_q(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma_q needs a > 0 and x >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_fraction(a, x);
}

double chi_square_sf(double x, int df) {
    if (df < 1) throw Error(ErrorCode::InvalidArgument, "chi-square needs df >= 1");
    if (std::isnan(x)) throw Error(ErrorCode::NonFiniteInput, "chi-square statistic is NaN");
    if (x <= 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    return std::clamp(gamma_q(0.5 * df, 0.5 * x), 0.0, 1.0);
}

double student_t_two_sided(double t, double df) {
    if (!(df > 0.0)) throw Error(ErrorCode::InvalidArgument, "student t needs df > 0");
    if (std::isinf(t)) return 0.0;
    const boost::math::students_t dist(df);
    return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
}

} // namespace mcs::stats
