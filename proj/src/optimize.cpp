#include "mcs/optimize.hpp"

#include "mcs/error.hpp"
#include "mcs/parallel.hpp"
#include "mcs/rng.hpp"
#include "mcs/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mcs {

void NelderMeadOptions::validate() const {
    if (!(reflection > 0.0) || !(expansion > 1.0) || !(contraction > 0.0 && contraction < 1.0) ||
        !(shrink > 0.0 && shrink < 1.0)) {
        throw Error(ErrorCode::InvalidArgument,
                    "nelder-mead needs reflection > 0, expansion > 1, contraction and shrink in (0, 1)");
    }
    if (!(initial_step > 0.0)) throw Error(ErrorCode::InvalidArgument, "initial_step must be positive");
    if (restarts < 1) throw Error(ErrorCode::InvalidArgument, "restarts must be >= 1");
}

namespace {

struct Vertex {
    Point2 x;
    double f;
};

Point2 affine(const Point2& base, const Point2& toward, double t) {
    // base + t * (toward - base)
    return {base[0] + t * (toward[0] - base[0]), base[1] + t * (toward[1] - base[1])};
}

double distance(const Point2& a, const Point2& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

} // namespace

NelderMeadResult nelder_mead(const Objective2& objective, const Point2& init, const NelderMeadOptions& opts) {
    opts.validate();
    std::array<Vertex, 3> s;
    s[0].x = init;
    s[1].x = {init[0] + opts.initial_step, init[1]};
    s[2].x = {init[0], init[1] + opts.initial_step};
    for (auto& v : s) v.f = objective(v.x);

    // Stable sort keeps the earlier vertex first on ties.
    auto order = [&] { std::stable_sort(s.begin(), s.end(), [](const Vertex& a, const Vertex& b) { return a.f < b.f; }); };

    NelderMeadResult result;
    std::size_t iter = 0;
    for (; iter < opts.max_iters; ++iter) {
        order();
        const double diameter = std::max(distance(s[0].x, s[1].x), distance(s[0].x, s[2].x));
        const double spread = s[2].f - s[0].f;
        if (diameter < opts.diameter_tol || spread < opts.spread_tol) {
            result.converged = true;
            break;
        }

        const Point2 centroid{0.5 * (s[0].x[0] + s[1].x[0]), 0.5 * (s[0].x[1] + s[1].x[1])};
        const Point2 xr = affine(centroid, s[2].x, -opts.reflection);
        const double fr = objective(xr);

        if (fr < s[0].f) {
            const Point2 xe = affine(centroid, s[2].x, -opts.reflection * opts.expansion);
            const double fe = objective(xe);
            s[2] = fe < fr ? Vertex{xe, fe} : Vertex{xr, fr};
            continue;
        }
        if (fr < s[1].f) {
            s[2] = {xr, fr};
            continue;
        }
        // Contraction: outside when the reflection improved on the worst, inside otherwise.
        const bool outside = fr < s[2].f;
        const Point2 xc = outside ? affine(centroid, xr, opts.contraction) : affine(centroid, s[2].x, opts.contraction);
        const double fc = objective(xc);
        if (fc < (outside ? fr : s[2].f)) {
            s[2] = {xc, fc};
            continue;
        }
        for (std::size_t i = 1; i < 3; ++i) {
            s[i].x = affine(s[0].x, s[i].x, opts.shrink);
            s[i].f = objective(s[i].x);
        }
    }
    order();
    result.iterations = iter;
    result.point = s[0].x;
    result.value = s[0].f;

    // On a plateau every vertex ties; report the centroid, which is the most
    // central point of the flat region the simplex settled on.
    const Point2 centroid{(s[0].x[0] + s[1].x[0] + s[2].x[0]) / 3.0, (s[0].x[1] + s[1].x[1] + s[2].x[1]) / 3.0};
    const double fc = objective(centroid);
    if (fc <= result.value) {
        result.point = centroid;
        result.value = fc;
    }
    return result;
}

std::array<double, 3> project_to_simplex(const std::array<double, 3>& v) {
    std::array<double, 3> u = v;
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        cumulative += u[i];
        const double t = (cumulative - 1.0) / static_cast<double>(i + 1);
        if (u[i] - t > 0.0) theta = t;
    }
    std::array<double, 3> w{};
    for (std::size_t i = 0; i < 3; ++i) w[i] = std::max(v[i] - theta, 0.0);
    // Absorb rounding so the result sums to 1 within a few ulps.
    const double sum = w[0] + w[1] + w[2];
    for (auto& x : w) x /= sum;
    return w;
}

std::array<double, 3> weights_from_free(const Point2& free) {
    const std::array<double, 3> v{free[0], free[1], 1.0 - free[0] - free[1]};
    if (v[0] >= 0.0 && v[1] >= 0.0 && v[2] >= 0.0) return v;
    return project_to_simplex(v);
}

double composite_spearman(const std::vector<std::array<double, 3>>& dims, const std::vector<double>& dc,
                          const std::array<double, 3>& w) {
    std::vector<double> c(dims.size());
    for (std::size_t i = 0; i < dims.size(); ++i) c[i] = w[0] * dims[i][0] + w[1] * dims[i][1] + w[2] * dims[i][2];
    if (std::adjacent_find(c.begin(), c.end(), std::not_equal_to<>()) == c.end()) return 0.0;
    return stats::spearman(c, dc);
}

LearnedWeights learn_weights(const std::vector<EventScores>& per_event, const NelderMeadOptions& opts) {
    opts.validate();
    std::vector<std::array<double, 3>> dims;
    std::vector<double> dc;
    for (const auto& s : per_event) {
        if (s.ic && s.spc && s.sc && s.dc) {
            dims.push_back({*s.ic, *s.spc, *s.sc});
            dc.push_back(*s.dc);
        }
    }
    if (dims.size() < kMinLearningEvents) {
        throw Error(ErrorCode::InsufficientData, "weight learning needs at least " + std::to_string(kMinLearningEvents) +
                                                     " events with IC, SpC, SC and DC; got " +
                                                     std::to_string(dims.size()));
    }
    if (std::adjacent_find(dc.begin(), dc.end(), std::not_equal_to<>()) == dc.end()) {
        throw Error(ErrorCode::DegenerateTarget, "DC is constant across events; Spearman is undefined");
    }

    const Objective2 objective = [&](const Point2& p) { return -composite_spearman(dims, dc, weights_from_free(p)); };

    std::vector<Point2> starts(opts.restarts);
    starts[0] = {1.0 / 3.0, 1.0 / 3.0};
    for (std::size_t i = 1; i < opts.restarts; ++i) {
        // Uniform interior point of the simplex (flat Dirichlet), stratified so
        // restart i favors vertex i % 3.
        auto rng = SeedBuilder(opts.seed).add("restart").add(i).rng();
        std::array<double, 3> e{};
        for (auto& x : e) x = -std::log(1.0 - uniform_unit(rng));
        e[i % 3] += 1.0;
        const double sum = e[0] + e[1] + e[2];
        starts[i] = {e[0] / sum, e[1] / sum};
    }

    std::vector<NelderMeadResult> runs(starts.size());
    parallel_for(starts.size(), opts.width, [&](std::size_t i) { runs[i] = nelder_mead(objective, starts[i], opts); });

    std::vector<std::array<double, 3>> candidates;
    for (const auto& r : runs) candidates.push_back(weights_from_free(r.point));
    candidates.push_back({1.0, 0.0, 0.0});
    candidates.push_back({0.0, 1.0, 0.0});
    candidates.push_back({0.0, 0.0, 1.0});
    candidates.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});

    constexpr double kTie = 1e-12;
    auto to_uniform = [](const std::array<double, 3>& w) {
        double d = 0.0;
        for (double x : w) d += (x - 1.0 / 3.0) * (x - 1.0 / 3.0);
        return d;
    };
    std::size_t best = 0;
    std::vector<double> rhos(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        rhos[i] = composite_spearman(dims, dc, candidates[i]);
        if (i == 0) continue;
        if (rhos[i] > rhos[best] + kTie ||
            (std::abs(rhos[i] - rhos[best]) <= kTie && to_uniform(candidates[i]) < to_uniform(candidates[best]))) {
            best = i;
        }
    }

    LearnedWeights out;
    const auto& w = candidates[best];
    out.weights = WeightVector::make(w[0], w[1], w[2]);
    out.rho = rhos[best];
    out.n_events = dims.size();
    for (std::size_t d = 0; d < 3; ++d) {
        std::vector<double> single(dims.size());
        for (std::size_t i = 0; i < dims.size(); ++i) single[i] = dims[i][d];
        if (std::adjacent_find(single.begin(), single.end(), std::not_equal_to<>()) != single.end()) {
            out.single_rho[d] = stats::spearman(single, dc);
        }
    }
    return out;
}

} // namespace mcs
