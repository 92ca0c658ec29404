#include "oracles.hpp"

#include "mcs/error.hpp"
#include "mcs/rng.hpp"
#include "mcs/stats.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <doctest.h>

#include <cmath>

using namespace mcs;
using namespace mcs::stats;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Io; // sentinel: nothing thrown
}

// Every vector over {0, .., levels-1} of length n, in odometer order.
std::vector<std::vector<double>> all_vectors(std::size_t n, int levels) {
    std::vector<std::vector<double>> out;
    std::vector<double> v(n, 0.0);
    for (;;) {
        out.push_back(v);
        std::size_t i = 0;
        while (i < n && v[i] == levels - 1) v[i++] = 0.0;
        if (i == n) return out;
        v[i] += 1.0;
    }
}

bool constant(const std::vector<double>& v) { return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end(); }

} // namespace

TEST_CASE("rank_with_ties") {
    const std::vector<double> v{3, 1, 4, 1};
    CHECK(rank_with_ties(v) == std::vector<double>{3, 1.5, 4, 1.5});
    const std::vector<double> same{2, 2, 2};
    CHECK(rank_with_ties(same) == std::vector<double>{2, 2, 2});
    CHECK(code_of([] { rank_with_ties(std::vector<double>{}); }) == ErrorCode::InsufficientData);
    CHECK(code_of([] { rank_with_ties(std::vector<double>{1, NAN}); }) == ErrorCode::NonFiniteInput);

    Rng rng(4);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> x(1 + uniform_index(rng, 12));
        for (auto& e : x) e = static_cast<double>(uniform_index(rng, 5));
        CHECK(rank_with_ties(x) == oracle::ranks(x));
        const auto r = RankedSample::from(x);
        CHECK(r.values == x);
    }
}

TEST_CASE("spearman worked example") {
    const std::vector<double> x{1, 2, 3, 4, 5}, y{5, 6, 7, 8, 7};
    CHECK(spearman(x, y) == doctest::Approx(oracle::spearman(x, y)).epsilon(1e-12));
    CHECK(spearman(x, y) == doctest::Approx(0.8207826816681233));
}

TEST_CASE("spearman matches the rank-definition oracle on every small tied input") {
    // x ranges over all vectors of length 3..8 on 3 levels (every tie pattern
    // of up to three distinct values); y over a seeded family with ties.
    Rng rng(2024);
    std::size_t compared = 0;
    double worst = 0.0;
    for (std::size_t n = 3; n <= 8; ++n) {
        std::vector<std::vector<double>> ys;
        for (int k = 0; k < 4; ++k) {
            std::vector<double> y(n);
            for (auto& e : y) e = static_cast<double>(uniform_index(rng, k + 2)) * 0.5;
            if (!constant(y)) ys.push_back(y);
        }
        for (const auto& x : all_vectors(n, 3)) {
            if (constant(x)) continue;
            for (const auto& y : ys) {
                worst = std::max(worst, std::abs(spearman(x, y) - oracle::spearman(x, y)));
                ++compared;
            }
        }
    }
    CHECK(compared > 20000);
    CHECK(worst <= 1e-12);
}

TEST_CASE("spearman errors") {
    const std::vector<double> a{1, 2, 3}, b{1, 2}, c{4, 4, 4};
    CHECK(code_of([&] { spearman(a, b); }) == ErrorCode::LengthMismatch);
    CHECK(code_of([&] { spearman(b, b); }) == ErrorCode::InsufficientData);
    CHECK(code_of([&] { spearman(a, c); }) == ErrorCode::ConstantInput);
    const std::vector<double> bad{1, INFINITY, 3};
    CHECK(code_of([&] { spearman(a, bad); }) == ErrorCode::NonFiniteInput);
    CHECK(spearman(a, std::vector<double>{3, 2, 1}) == -1.0);
}

TEST_CASE("permutation p-values") {
    Rng rng(17);
    std::vector<double> x(200), y(200);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = standard_normal(rng);
        y[i] = 0.15 * x[i] + standard_normal(rng);
    }
    const auto perm = spearman_test(x, y, PValueMethod::Permutation, 10000, 5, 1);
    const auto t = spearman_test(x, y, PValueMethod::TApprox);
    CHECK(perm.rho == t.rho);
    CHECK(std::abs(perm.rho) < 0.3);
    CHECK(std::abs(perm.p - t.p) < 0.02);

    SUBCASE("independent of width and reproducible") {
        CHECK(spearman_test(x, y, PValueMethod::Permutation, 2000, 5, 8).p ==
              spearman_test(x, y, PValueMethod::Permutation, 2000, 5, 1).p);
    }
    SUBCASE("never zero and at least 1 / (n_perm + 1)") {
        std::vector<double> z(x);
        const auto p = spearman_test(x, z, PValueMethod::Permutation, 1000, 1).p;
        CHECK(p == doctest::Approx(1.0 / 1001.0));
    }
    SUBCASE("n_perm floor") {
        CHECK(code_of([&] { spearman_test(x, y, PValueMethod::Permutation, 999); }) == ErrorCode::InvalidArgument);
    }
}

TEST_CASE("permutation p-values are roughly uniform under the null") {
    std::vector<double> ps;
    for (std::uint64_t s = 0; s < 100; ++s) {
        Rng rng(SeedBuilder(77).add(s).value());
        std::vector<double> x(200), y(200);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = standard_normal(rng);
            y[i] = standard_normal(rng);
        }
        ps.push_back(spearman_pvalue(x, y, PValueMethod::Permutation, 1000, s, 0));
    }
    std::sort(ps.begin(), ps.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const double n = static_cast<double>(ps.size());
        ks = std::max({ks, std::abs(ps[i] - static_cast<double>(i) / n), std::abs(ps[i] - static_cast<double>(i + 1) / n)});
    }
    CHECK(ks < 0.15);
}

TEST_CASE("kruskal-wallis hand arithmetic") {
    const auto r = kruskal_wallis({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
    CHECK(std::abs(r.h - 7.2) <= 1e-12);
    CHECK(r.p == doctest::Approx(std::exp(-3.6)).epsilon(1e-10));
    CHECK(r.counts == std::vector<std::size_t>{3, 3, 3});
}

TEST_CASE("kruskal-wallis matches the pooled-rank oracle on tied fixtures") {
    Rng rng(50);
    for (int t = 0; t < 50; ++t) {
        const auto k = 2 + uniform_index(rng, 3);
        std::vector<std::vector<double>> groups(k);
        for (auto& g : groups) {
            g.resize(2 + uniform_index(rng, 2)); // N <= 12
            for (auto& v : g) v = static_cast<double>(uniform_index(rng, 4));
        }
        std::vector<double> pooled;
        for (const auto& g : groups) pooled.insert(pooled.end(), g.begin(), g.end());
        if (constant(pooled)) continue;
        const auto r = kruskal_wallis(groups);
        CHECK(r.h == doctest::Approx(oracle::kruskal_wallis_h(groups)).epsilon(1e-10));
        CHECK(r.p == doctest::Approx(boost::math::gamma_q(0.5 * double(k - 1), 0.5 * r.h)).epsilon(1e-10));
    }
}

TEST_CASE("kruskal-wallis errors") {
    CHECK(code_of([] { kruskal_wallis({{1, 2, 3}}); }) == ErrorCode::InsufficientData);
    CHECK(code_of([] { kruskal_wallis({{1, 2}, {3}}); }) == ErrorCode::InsufficientData);
    CHECK(code_of([] { kruskal_wallis({{1, 1}, {1, 1}}); }) == ErrorCode::AllTied);
    CHECK(code_of([] { kruskal_wallis({{1, NAN}, {1, 2}}); }) == ErrorCode::NonFiniteInput);
    // Identical groups give H = 0.
    CHECK(kruskal_wallis({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}}).h == doctest::Approx(0.0));
}

TEST_CASE("chi-square survival closed forms") {
    CHECK(std::abs(chi_square_sf(2.0 * std::log(2.0), 2) - 0.5) <= 1e-10);
    for (double x : {0.1, 1.0, 5.0, 40.0}) CHECK(chi_square_sf(x, 2) == doctest::Approx(std::exp(-x / 2)).epsilon(1e-12));
    // df = 1 relates to the standard normal: P(chi2 > x) = 2 (1 - Phi(sqrt x)).
    const boost::math::normal z;
    CHECK(std::abs(chi_square_sf(3.841, 1) - 0.05) <= 0.001);
    CHECK(chi_square_sf(3.841, 1) ==
          doctest::Approx(2.0 * boost::math::cdf(boost::math::complement(z, std::sqrt(3.841)))).epsilon(1e-10));
    CHECK(chi_square_sf(0.0, 3) == 1.0);
    CHECK(chi_square_sf(INFINITY, 3) == 0.0);
    CHECK(code_of([] { chi_square_sf(1.0, 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("incomplete gamma agrees with boost across both branches") {
    for (double a : {0.5, 1.0, 1.5, 2.0, 7.5, 30.0}) {
        for (double x : {0.01, 0.5, 1.0, 2.5, 8.0, 31.0, 80.0}) {
            CHECK(gamma_q(a, x) == doctest::Approx(boost::math::gamma_q(a, x)).epsilon(1e-10));
            CHECK(gamma_p(a, x) == doctest::Approx(boost::math::gamma_p(a, x)).epsilon(1e-10));
        }
    }
}

TEST_CASE("student t tail") {
    CHECK(student_t_two_sided(0.0, 5) == doctest::Approx(1.0));
    // df = 1 is Cauchy: P(|T| > 1) = 0.5.
    CHECK(student_t_two_sided(1.0, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(student_t_two_sided(-2.0, 1e6) == doctest::Approx(0.0455).epsilon(0.01));
}
