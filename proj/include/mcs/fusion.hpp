#pragma once

#include "mcs/bundle.hpp"
#include "mcs/metrics.hpp"
#include "mcs/stats.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mcs {

struct FusionThresholds {
    double contract_iou_min = 0.1;
    double contract_cos_min = 0.3;
    double foundation_cos_min = 0.5;
    std::size_t foundation_word_min_len = 4; // question words of length > 3

    void validate() const;
};

enum class Architecture { Naive, Contract, Foundation };

inline constexpr std::array<Architecture, 3> kAllArchitectures = {Architecture::Naive, Architecture::Contract,
                                                                  Architecture::Foundation};

std::string_view architecture_name(Architecture arch);
std::optional<Architecture> parse_architecture(std::string_view name);

MultimodalEvent apply_naive(const MultimodalEvent& event);

// Keeps objects with IoU >= contract_iou_min against at least one detection
// (any confidence), regions with image cosine >= contract_cos_min, and
// triplets whose endpoints both survive.
MultimodalEvent apply_contract(const MultimodalEvent& event, const FusionThresholds& thresholds);

// Keeps regions with image cosine >= foundation_cos_min, objects whose
// canonical label occurs as whole words in a surviving region text, QA whose
// question shares a long-enough word with that text, and intact triplets.
MultimodalEvent apply_foundation(const MultimodalEvent& event, const FusionThresholds& thresholds,
                                 const LabelMap& map = {});

MultimodalEvent apply_architecture(Architecture arch, const MultimodalEvent& event,
                                   const FusionThresholds& thresholds, const LabelMap& map);

EventBundle transform_bundle(Architecture arch, const EventBundle& bundle, const FusionThresholds& thresholds);

// Lowercased alphanumeric runs.
std::vector<std::string> word_tokens(std::string_view text);

enum class Dimension { Ic, Spc, Sc, Dc, Mcs };

inline constexpr std::array<Dimension, 5> kComparedDimensions = {Dimension::Ic, Dimension::Spc, Dimension::Sc,
                                                                 Dimension::Dc, Dimension::Mcs};

std::string_view dimension_name(Dimension dim);
std::optional<double> dimension_value(const EventScores& scores, Dimension dim);

struct DimensionTest {
    Dimension dimension;
    double h = 0.0;
    double p = 1.0;
    std::array<std::size_t, 3> n_per_group{};
    // Every pooled score was identical; reported as H = 0, p = 1.
    bool all_tied = false;
};

struct ArchitectureComparison {
    std::array<BundleScores, 3> scores; // indexed like kAllArchitectures
    std::vector<DimensionTest> tests;

    const BundleAggregates& aggregates(Architecture arch) const;
};

inline constexpr std::size_t kMinScoresPerGroup = 5;

// Throws InsufficientData for an empty bundle or when an architecture has
// fewer than kMinScoresPerGroup scores for a compared dimension.
ArchitectureComparison compare_architectures(const EventBundle& bundle, const MetricConfig& cfg,
                                             const FusionThresholds& thresholds, const WeightVector& weights,
                                             unsigned width = 1);

void write_comparison_json(const ArchitectureComparison& cmp, std::ostream& out);
void write_comparison_table(const ArchitectureComparison& cmp, std::ostream& out);

} // namespace mcs
