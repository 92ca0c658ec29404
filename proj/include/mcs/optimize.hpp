#pragma once

#include "mcs/metrics.hpp"
#include "mcs/weights.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace mcs {

struct NelderMeadOptions {
    std::size_t max_iters = 500;
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    double shrink = 0.5;
    double diameter_tol = 1e-6;
    double spread_tol = 1e-9;
    std::size_t restarts = 8;
    double initial_step = 0.1;
    std::uint64_t seed = 0;
    unsigned width = 1; // restarts evaluated in parallel

    void validate() const;
};

using Point2 = std::array<double, 2>;
using Objective2 = std::function<double(const Point2&)>;

struct NelderMeadResult {
    Point2 point{};
    double value = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

// Minimizes objective from an axis-aligned initial simplex of size
// opts.initial_step around init. Never throws on non-convergence.
NelderMeadResult nelder_mead(const Objective2& objective, const Point2& init, const NelderMeadOptions& opts);

// Euclidean projection onto {w >= 0, sum w = 1}.
std::array<double, 3> project_to_simplex(const std::array<double, 3>& v);

// Free coordinates (a, b) -> (a, b, 1 - a - b), projected when infeasible.
std::array<double, 3> weights_from_free(const Point2& free);

struct LearnedWeights {
    WeightVector weights = WeightVector::equal();
    double rho = 0.0;
    std::size_t n_events = 0;
    // rho of the vertex weightings (1,0,0), (0,1,0), (0,0,1); nullopt when
    // that dimension is constant.
    std::array<std::optional<double>, 3> single_rho{};
};

// Spearman(composite, dc) for weights; 0 when the composite is constant.
double composite_spearman(const std::vector<std::array<double, 3>>& dims, const std::vector<double>& dc,
                          const std::array<double, 3>& w);

inline constexpr std::size_t kMinLearningEvents = 10;

// Maximizes Spearman between the (IC, SpC, SC) composite and DC over events
// with all four present. Throws InsufficientData (< 10 such events) and
// DegenerateTarget (constant DC).
LearnedWeights learn_weights(const std::vector<EventScores>& per_event, const NelderMeadOptions& opts = {});

} // namespace mcs
