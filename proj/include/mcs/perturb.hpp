#pragma once

#include "mcs/bundle.hpp"
#include "mcs/metrics.hpp"
#include "mcs/rng.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mcs {

enum class PerturbationKind { ObjectSwap, BboxShuffle, CaptionSwap, Compound };

inline constexpr std::array<PerturbationKind, 4> kAllPerturbations = {
    PerturbationKind::ObjectSwap, PerturbationKind::BboxShuffle, PerturbationKind::CaptionSwap,
    PerturbationKind::Compound};

inline constexpr std::array<double, 3> kProtocolRates = {0.1, 0.2, 0.5};

std::string_view perturbation_name(PerturbationKind kind);

struct PerturbationSpec {
    PerturbationKind kind = PerturbationKind::ObjectSwap;
    double rate = 0.1;
    std::uint64_t seed = 0;
};

inline constexpr std::string_view kFlagClampLimited = "CLAMP_LIMITED";

// Indices (into the event's lists) touched by a perturbation.
struct PerturbationRecord {
    std::vector<std::size_t> objects_relabeled;
    std::vector<std::size_t> boxes_moved;
    std::vector<std::size_t> regions_replaced;
    // Boxes whose best candidate still overlapped the original by IoU > 0.1.
    std::vector<std::size_t> clamp_limited;
};

struct PerturbedEvent {
    MultimodalEvent event;
    PerturbationRecord record;
};

// ceil(rate * n), guarded against floating error (0.1 * 30 selects 3, not 4).
std::size_t selection_count(double rate, std::size_t n);

// Relabels ceil(rate * #objects) objects (chosen without replacement) with
// labels drawn with replacement from donor.objects. Throws NoDonorObjects.
PerturbedEvent swap_objects(const MultimodalEvent& event, double rate, const MultimodalEvent& donor, Rng& rng);

inline constexpr double kShuffleMaxIou = 0.1;
inline constexpr int kShuffleResamples = 10;

// Offsets ceil(rate * #objects) object boxes by 1-2x their size per axis in a
// random direction, clamped to the image; keeps the lowest-overlap candidate.
PerturbedEvent shuffle_bboxes(const MultimodalEvent& event, double rate, Rng& rng);

// Replaces text and embedding of ceil(rate * #regions) regions with those of
// donor regions (drawn with replacement). Throws NoDonorRegions.
PerturbedEvent swap_captions(const MultimodalEvent& event, double rate, const MultimodalEvent& donor, Rng& rng);

// The three generator streams compound draws from; each equals the stream the
// matching single perturbation would use, so selections coincide.
struct CompoundStreams {
    Rng objects;
    Rng boxes;
    Rng captions;
};

struct CompoundDonors {
    const MultimodalEvent& objects;
    const MultimodalEvent& captions;
};

PerturbedEvent compound(const MultimodalEvent& event, double rate, const CompoundDonors& donors,
                        CompoundStreams& streams);

// Per-event substream for (seed, event_id, kind, rate); `purpose` separates
// donor choice from record selection.
Rng perturbation_stream(std::uint64_t seed, std::string_view event_id, PerturbationKind kind, double rate,
                        std::string_view purpose);

// Perturbs one event of a bundle per the suite rules: donor is a uniformly
// chosen different event, drawn from the seeded stream. Requires >= 2 events.
PerturbedEvent perturb_bundle_event(const EventBundle& bundle, std::size_t index, PerturbationKind kind, double rate,
                                    std::uint64_t seed);

EventBundle perturb_bundle(const EventBundle& bundle, const PerturbationSpec& spec, unsigned width = 1);

struct DimensionMeans {
    std::optional<double> ic, spc, sc, mcs;
};

enum class Verdict { Pass, Fail };

struct ImpactCell {
    PerturbationKind kind;
    double rate;
    DimensionMeans before;
    DimensionMeans after;
    // Relative change (after - before) / before; nullopt when before is not > 0.
    std::optional<double> d_ic, d_spc, d_sc, d_mcs;
    std::size_t events_clamp_limited = 0;
};

struct PerturbationImpactMatrix {
    std::uint64_t seed = 0;
    std::size_t n_events = 0;
    std::vector<ImpactCell> cells;

    const ImpactCell* find(PerturbationKind kind, double rate) const;
};

struct SuiteOptions {
    std::vector<double> rates{kProtocolRates.begin(), kProtocolRates.end()};
    std::vector<PerturbationKind> kinds{kAllPerturbations.begin(), kAllPerturbations.end()};
    std::uint64_t seed = 0;
    MetricConfig metric;
    unsigned width = 1;
};

// Throws InsufficientData for fewer than 2 events. Rates must lie in [0, 1];
// rate 0 is a control run.
PerturbationImpactMatrix run_perturbation_suite(const EventBundle& bundle, const SuiteOptions& options);

struct CrosstalkVerdict {
    PerturbationKind kind;
    double rate;
    Verdict verdict;
    std::string reason;
};

// PASS iff |d_target| > target_drop_min and every non-target |d| <
// nontarget_max; compound needs all three dimensions beyond target_drop_min.
CrosstalkVerdict crosstalk_verdict(const ImpactCell& cell, double target_drop_min = 0.20,
                                   double nontarget_max = 0.05);
std::vector<CrosstalkVerdict> crosstalk_check(const PerturbationImpactMatrix& matrix, double target_drop_min = 0.20,
                                              double nontarget_max = 0.05);

void write_impact_json(const PerturbationImpactMatrix& matrix, const std::vector<CrosstalkVerdict>& verdicts,
                       std::ostream& out);
void write_impact_table(const PerturbationImpactMatrix& matrix, const std::vector<CrosstalkVerdict>& verdicts,
                        std::ostream& out);

} // namespace mcs
