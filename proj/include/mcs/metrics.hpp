#pragma once

#include "mcs/bundle.hpp"
#include "mcs/weights.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mcs {

enum class SpatialMatching { BestIou, IndexPaired };

struct MetricConfig {
    double conf_threshold = 0.7;
    SpatialMatching spc_matching = SpatialMatching::BestIou;
    bool sc_clamp_negative = false;
    std::size_t dc_max_qa = 3;

    // Throws Error{InvalidArgument}.
    void validate() const;
};

inline constexpr std::string_view kFlagVacuousIc = "VACUOUS_IC";

struct EventScores {
    std::string event_id;
    std::optional<double> ic;
    std::optional<double> spc;
    std::optional<double> sc;
    std::optional<double> dc;
    std::optional<double> mcs;
    std::vector<std::string> flags;

    bool has_flag(std::string_view flag) const;
};

double iou(const BoundingBox& a, const BoundingBox& b);

double jaccard(const LabelSet& a, const LabelSet& b);

// Jaccard of annotated vs detected entity sets. Both empty gives 1.0;
// score_event marks that case VACUOUS_IC.
double identity_coherence(const MultimodalEvent& event, const LabelMap& map, const MetricConfig& cfg);

// nullopt when there are no annotated boxes or no qualifying detections.
std::optional<double> spatial_coherence(const MultimodalEvent& event, const MetricConfig& cfg);

// Minimum image-to-region cosine; nullopt when there are no regions.
std::optional<double> semantic_coherence(const MultimodalEvent& event, const MetricConfig& cfg);

std::string normalize_answer(std::string_view text);

// Fraction correct over the first dc_max_qa QA records; nullopt without QA.
std::optional<double> decision_coherence(const MultimodalEvent& event, const MetricConfig& cfg);

double dot(const std::vector<double>& a, const std::vector<double>& b);

// w_ic*IC + w_spc*SpC + w_sc*SC (+ w_dc*DC when w_dc > 0). nullopt when a
// weighted dimension is missing.
std::optional<double> composite(const EventScores& scores, const WeightVector& weights);

EventScores score_event(const MultimodalEvent& event, const LabelMap& map, const MetricConfig& cfg,
                        const WeightVector& weights);

struct DimensionAggregate {
    std::optional<double> mean;
    std::size_t count = 0;
};

struct BundleAggregates {
    DimensionAggregate ic, spc, sc, dc, mcs;
};

struct BundleScores {
    std::vector<EventScores> events;
    BundleAggregates aggregates;
};

BundleAggregates aggregate(const std::vector<EventScores>& events);

// Scores every event (in parallel when width != 1); output is in bundle order
// and independent of the width.
BundleScores score_bundle(const EventBundle& bundle, const MetricConfig& cfg, const WeightVector& weights,
                          unsigned width = 1);

// Shortest round-trip decimal rendering used by every text export.
std::string format_real(double value);

// `event_id,ic,spc,sc,dc,mcs,flags` rows; missing values are empty fields.
void write_scores_csv(const std::vector<EventScores>& scores, std::ostream& out);

} // namespace mcs
