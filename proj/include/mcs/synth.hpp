#pragma once

#include "mcs/bundle.hpp"

#include <cstddef>
#include <cstdint>

namespace mcs {

struct CountRange {
    std::size_t min = 1;
    std::size_t max = 1;
};

struct PlantedLevels {
    double ic = 1.0;
    double spc = 1.0;
    double sc = 1.0;
    double dc = 1.0;
};

struct SynthSpec {
    std::size_t n_events = 200;
    CountRange objects_per_event{4, 10};
    CountRange regions_per_event{20, 40};
    CountRange qa_per_event{3, 3};
    std::size_t embedding_dim = 128;
    PlantedLevels planted;
    // Per-event levels are drawn uniformly from [level - spread, level + spread].
    double level_spread = 0.0;
    // When set, each event's DC level is gain * (its jittered SC level) plus
    // uniform noise in [-noise, noise], clamped to [0, 1]; planted.dc is ignored.
    bool dc_tracks_sc = false;
    double dc_track_gain = 1.0;
    double dc_track_noise = 0.0;
    // Squared cosine every image embedding shares with a common direction.
    double shared_image_component = 0.7;
    // Fraction of regions whose text embedding leans away from the common
    // direction; such regions are dissimilar to every other image.
    double idiosyncratic_region_fraction = 0.07;
    double image_width = 640.0;
    double image_height = 480.0;
    std::uint64_t seed = 0;

    // Throws Error{InvalidArgument}.
    void validate() const;
};

// Detections are the truth side; annotations, region embeddings and answers
// are built relative to them so each dimension hits its planted level.
EventBundle generate_bundle(const SynthSpec& spec, unsigned width = 1);

struct ExpectedScore {
    double expected = 0.0;
    // The bundle mean is guaranteed to lie in [lower, upper].
    double lower = 0.0;
    double upper = 0.0;
};

struct PlantedExpectation {
    ExpectedScore ic, spc, sc, dc;
};

// Closed-form expectation of each dimension's bundle mean under the
// construction with the default MetricConfig.
PlantedExpectation planted_score_oracle(const SynthSpec& spec);

} // namespace mcs
