#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mcs::stats {

// Ascending average ranks (1-based); tied values share the mean of their
// positions. Throws Error{NonFiniteInput} on NaN/inf, Error{InsufficientData}
// on empty input.
std::vector<double> rank_with_ties(std::span<const double> values);

struct RankedSample {
    std::vector<double> values;
    std::vector<double> ranks;

    static RankedSample from(std::span<const double> values);
};

double pearson(std::span<const double> x, std::span<const double> y);

// Pearson correlation of average ranks. Throws LengthMismatch when sizes
// differ, InsufficientData when n < 3, ConstantInput when either side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

enum class PValueMethod { Permutation, TApprox };

struct SpearmanTest {
    double rho = 0.0;
    double p = 1.0;
};

// Two-sided p-value for Spearman's rho. Permutation shuffles y with one
// seeded substream per permutation, so the result does not depend on `width`.
SpearmanTest spearman_test(std::span<const double> x, std::span<const double> y, PValueMethod method,
                           std::size_t n_perm = 10000, std::uint64_t seed = 0, unsigned width = 1);

double spearman_pvalue(std::span<const double> x, std::span<const double> y, PValueMethod method,
                       std::size_t n_perm = 10000, std::uint64_t seed = 0, unsigned width = 1);

struct KruskalWallisResult {
    double h = 0.0;
    double p = 1.0;
    std::vector<std::size_t> counts;
};

// Tie-corrected H over pooled average ranks; p from chi-square with k-1 df.
// Throws InsufficientData (< 2 groups or a group with < 2 values),
// NonFiniteInput, AllTied (every pooled value equal).
KruskalWallisResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

// Regularized lower/upper incomplete gamma P(a, x), Q(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Chi-square survival function 1 - F(x; df).
double chi_square_sf(double x, int df);

// Two-sided tail probability of Student's t with df degrees of freedom.
double student_t_two_sided(double t, double df);

} // namespace mcs::stats
