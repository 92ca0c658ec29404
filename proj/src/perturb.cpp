#include "mcs/perturb.hpp"

#include "mcs/error.hpp"
#include "mcs/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace mcs {

std::string_view perturbation_name(PerturbationKind kind) {
    switch (kind) {
    case PerturbationKind::ObjectSwap: return "object_swap";
    case PerturbationKind::BboxShuffle: return "bbox_shuffle";
    case PerturbationKind::CaptionSwap: return "caption_swap";
    case PerturbationKind::Compound: return "compound";
    }
    return "unknown";
}

std::size_t selection_count(double rate, std::size_t n) {
    if (!(rate > 0.0) || n == 0) return 0;
    const double x = rate * static_cast<double>(n);
    const auto k = static_cast<std::size_t>(std::ceil(x - x * 1e-12));
    return std::min(k, n);
}

namespace {

void check_rate(double rate) {
    if (!(rate >= 0.0 && rate <= 1.0)) throw Error(ErrorCode::InvalidArgument, "perturbation rate must lie in [0, 1]");
}

BoundingBox place_within(BoundingBox b, double width, double height) {
    if (b.w >= width) {
        b.x = 0.0;
        b.w = width;
    } else {
        b.x = std::clamp(b.x, 0.0, width - b.w);
    }
    if (b.h >= height) {
        b.y = 0.0;
        b.h = height;
    } else {
        b.y = std::clamp(b.y, 0.0, height - b.h);
    }
    return b;
}

double random_sign(Rng& rng) { return uniform_index(rng, 2) == 0 ? -1.0 : 1.0; }

} // namespace

PerturbedEvent swap_objects(const MultimodalEvent& event, double rate, const MultimodalEvent& donor, Rng& rng) {
    check_rate(rate);
    PerturbedEvent out{event, {}};
    const auto k = selection_count(rate, event.objects.size());
    if (k == 0) return out;
    if (donor.objects.empty()) {
        throw Error(ErrorCode::NoDonorObjects, "donor event '" + donor.event_id + "' has no objects");
    }
    out.record.objects_relabeled = sample_without_replacement(rng, event.objects.size(), k);
    for (auto i : out.record.objects_relabeled) {
        out.event.objects[i].label = donor.objects[uniform_index(rng, donor.objects.size())].label;
    }
    return out;
}

PerturbedEvent shuffle_bboxes(const MultimodalEvent& event, double rate, Rng& rng) {
    check_rate(rate);
    PerturbedEvent out{event, {}};
    const auto k = selection_count(rate, event.objects.size());
    if (k == 0) return out;
    out.record.boxes_moved = sample_without_replacement(rng, event.objects.size(), k);
    for (auto i : out.record.boxes_moved) {
        const BoundingBox original = event.objects[i].bbox;
        BoundingBox best = original;
        double best_iou = 2.0;
        for (int attempt = 0; attempt <= kShuffleResamples; ++attempt) {
            const double sx = random_sign(rng);
            const double mx = uniform_real(rng, 1.0, 2.0);
            const double sy = random_sign(rng);
            const double my = uniform_real(rng, 1.0, 2.0);
            BoundingBox candidate{original.x + sx * mx * original.w, original.y + sy * my * original.h, original.w,
                                  original.h};
            candidate = place_within(candidate, event.image_width, event.image_height);
            const double overlap = iou(candidate, original);
            if (overlap < best_iou) {
                best = candidate;
                best_iou = overlap;
            }
            if (best_iou <= kShuffleMaxIou) break;
        }
        if (best_iou > kShuffleMaxIou) out.record.clamp_limited.push_back(i);
        out.event.objects[i].bbox = best;
    }
    return out;
}

PerturbedEvent swap_captions(const MultimodalEvent& event, double rate, const MultimodalEvent& donor, Rng& rng) {
    check_rate(rate);
    PerturbedEvent out{event, {}};
    const auto k = selection_count(rate, event.regions.size());
    if (k == 0) return out;
    if (donor.regions.empty()) {
        throw Error(ErrorCode::NoDonorRegions, "donor event '" + donor.event_id + "' has no regions");
    }
    out.record.regions_replaced = sample_without_replacement(rng, event.regions.size(), k);
    for (auto i : out.record.regions_replaced) {
        const auto& source = donor.regions[uniform_index(rng, donor.regions.size())];
        out.event.regions[i].text = source.text;
        out.event.regions[i].embedding = source.embedding;
    }
    return out;
}

PerturbedEvent compound(const MultimodalEvent& event, double rate, const CompoundDonors& donors,
                        CompoundStreams& streams) {
    auto step1 = swap_objects(event, rate, donors.objects, streams.objects);
    auto step2 = shuffle_bboxes(step1.event, rate, streams.boxes);
    auto step3 = swap_captions(step2.event, rate, donors.captions, streams.captions);
    PerturbedEvent out{std::move(step3.event), {}};
    out.record.objects_relabeled = std::move(step1.record.objects_relabeled);
    out.record.boxes_moved = std::move(step2.record.boxes_moved);
    out.record.clamp_limited = std::move(step2.record.clamp_limited);
    out.record.regions_replaced = std::move(step3.record.regions_replaced);
    return out;
}

Rng perturbation_stream(std::uint64_t seed, std::string_view event_id, PerturbationKind kind, double rate,
                        std::string_view purpose) {
    return SeedBuilder(seed)
        .add(event_id)
        .add(static_cast<std::uint64_t>(kind))
        .add_rate(rate)
        .add(purpose)
        .rng();
}

namespace {

std::size_t choose_donor(const EventBundle& bundle, std::size_t index, PerturbationKind kind, double rate,
                         std::uint64_t seed) {
    auto rng = perturbation_stream(seed, bundle.events[index].event_id, kind, rate, "donor");
    auto j = static_cast<std::size_t>(uniform_index(rng, bundle.events.size() - 1));
    if (j >= index) ++j;
    return j;
}

} // namespace

PerturbedEvent perturb_bundle_event(const EventBundle& bundle, std::size_t index, PerturbationKind kind, double rate,
                                    std::uint64_t seed) {
    if (bundle.events.size() < 2) {
        throw Error(ErrorCode::InsufficientData, "perturbation needs at least 2 events for donor selection");
    }
    const auto& ev = bundle.events.at(index);
    auto select = [&](PerturbationKind k) { return perturbation_stream(seed, ev.event_id, k, rate, "select"); };
    auto donor = [&](PerturbationKind k) -> const MultimodalEvent& {
        return bundle.events[choose_donor(bundle, index, k, rate, seed)];
    };

    switch (kind) {
    case PerturbationKind::ObjectSwap: {
        auto rng = select(kind);
        return swap_objects(ev, rate, donor(kind), rng);
    }
    case PerturbationKind::BboxShuffle: {
        auto rng = select(kind);
        return shuffle_bboxes(ev, rate, rng);
    }
    case PerturbationKind::CaptionSwap: {
        auto rng = select(kind);
        return swap_captions(ev, rate, donor(kind), rng);
    }
    case PerturbationKind::Compound: {
        CompoundStreams streams{select(PerturbationKind::ObjectSwap), select(PerturbationKind::BboxShuffle),
                                select(PerturbationKind::CaptionSwap)};
        CompoundDonors donors{donor(PerturbationKind::ObjectSwap), donor(PerturbationKind::CaptionSwap)};
        return compound(ev, rate, donors, streams);
    }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown perturbation kind");
}

EventBundle perturb_bundle(const EventBundle& bundle, const PerturbationSpec& spec, unsigned width) {
    EventBundle out;
    out.embedding_dim = bundle.embedding_dim;
    out.label_map = bundle.label_map;
    out.events.resize(bundle.events.size());
    parallel_for(bundle.events.size(), width, [&](std::size_t i) {
        out.events[i] = perturb_bundle_event(bundle, i, spec.kind, spec.rate, spec.seed).event;
    });
    return out;
}

const ImpactCell* PerturbationImpactMatrix::find(PerturbationKind kind, double rate) const {
    for (const auto& c : cells) {
        if (c.kind == kind && std::abs(c.rate - rate) < 1e-12) return &c;
    }
    return nullptr;
}

namespace {

DimensionMeans means_of(const std::vector<EventScores>& scores) {
    const auto agg = aggregate(scores);
    return {agg.ic.mean, agg.spc.mean, agg.sc.mean, agg.mcs.mean};
}

std::optional<double> relative(const std::optional<double>& before, const std::optional<double>& after) {
    if (!before || !after || !(*before > 0.0)) return std::nullopt;
    return (*after - *before) / *before;
}

} // namespace

PerturbationImpactMatrix run_perturbation_suite(const EventBundle& bundle, const SuiteOptions& options) {
    if (bundle.events.size() < 2) {
        throw Error(ErrorCode::InsufficientData, "perturbation suite needs at least 2 events");
    }
    for (double r : options.rates) check_rate(r);
    options.metric.validate();

    const auto weights = WeightVector::equal();
    const auto baseline = score_bundle(bundle, options.metric, weights, options.width);
    const auto before = means_of(baseline.events);

    PerturbationImpactMatrix matrix;
    matrix.seed = options.seed;
    matrix.n_events = bundle.events.size();
    for (auto kind : options.kinds) {
        for (double rate : options.rates) {
            std::vector<EventScores> after(bundle.events.size());
            std::vector<unsigned char> limited(bundle.events.size(), 0);
            parallel_for(bundle.events.size(), options.width, [&](std::size_t i) {
                const auto p = perturb_bundle_event(bundle, i, kind, rate, options.seed);
                after[i] = score_event(p.event, bundle.label_map, options.metric, weights);
                limited[i] = p.record.clamp_limited.empty() ? 0 : 1;
            });
            ImpactCell cell{kind, rate, before, means_of(after), {}, {}, {}, {}, 0};
            cell.d_ic = relative(cell.before.ic, cell.after.ic);
            cell.d_spc = relative(cell.before.spc, cell.after.spc);
            cell.d_sc = relative(cell.before.sc, cell.after.sc);
            cell.d_mcs = relative(cell.before.mcs, cell.after.mcs);
            cell.events_clamp_limited = static_cast<std::size_t>(std::count(limited.begin(), limited.end(), 1));
            matrix.cells.push_back(cell);
        }
    }
    return matrix;
}

CrosstalkVerdict crosstalk_verdict(const ImpactCell& cell, double target_drop_min, double nontarget_max) {
    CrosstalkVerdict v{cell.kind, cell.rate, Verdict::Fail, {}};
    const std::array<std::pair<const char*, std::optional<double>>, 3> dims = {
        {{"ic", cell.d_ic}, {"spc", cell.d_spc}, {"sc", cell.d_sc}}};
    int target = -1;
    switch (cell.kind) {
    case PerturbationKind::ObjectSwap: target = 0; break;
    case PerturbationKind::BboxShuffle: target = 1; break;
    case PerturbationKind::CaptionSwap: target = 2; break;
    case PerturbationKind::Compound: target = -1; break;
    }

    char buf[160];
    for (int d = 0; d < 3; ++d) {
        const auto& [name, delta] = dims[static_cast<std::size_t>(d)];
        if (!delta) {
            v.reason = std::string("delta ") + name + " undefined (baseline mean not positive)";
            return v;
        }
        const bool targeted = target < 0 || d == target;
        if (targeted && !(std::abs(*delta) > target_drop_min)) {
            std::snprintf(buf, sizeof(buf), "target %s changed %.2f%%, needs > %.2f%%", name, 100.0 * std::abs(*delta),
                          100.0 * target_drop_min);
            v.reason = buf;
            return v;
        }
        if (!targeted && !(std::abs(*delta) < nontarget_max)) {
            std::snprintf(buf, sizeof(buf), "cross-talk on %s: %.2f%%, limit %.2f%%", name, 100.0 * std::abs(*delta),
                          100.0 * nontarget_max);
            v.reason = buf;
            return v;
        }
    }
    v.verdict = Verdict::Pass;
    return v;
}

std::vector<CrosstalkVerdict> crosstalk_check(const PerturbationImpactMatrix& matrix, double target_drop_min,
                                              double nontarget_max) {
    std::vector<CrosstalkVerdict> out;
    out.reserve(matrix.cells.size());
    for (const auto& c : matrix.cells) out.push_back(crosstalk_verdict(c, target_drop_min, nontarget_max));
    return out;
}

namespace {

nlohmann::ordered_json opt(const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json means_json(const DimensionMeans& m) {
    return {{"ic", opt(m.ic)}, {"spc", opt(m.spc)}, {"sc", opt(m.sc)}, {"mcs", opt(m.mcs)}};
}

std::string pct(const std::optional<double>& v) {
    if (!v) return "       -";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%+7.1f%%", 100.0 * *v);
    return buf;
}

} // namespace

void write_impact_json(const PerturbationImpactMatrix& matrix, const std::vector<CrosstalkVerdict>& verdicts,
                       std::ostream& out) {
    nlohmann::ordered_json doc;
    doc["seed"] = matrix.seed;
    doc["n_events"] = matrix.n_events;
    doc["mcs_weights"] = "equal";
    auto& cells = doc["cells"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < matrix.cells.size(); ++i) {
        const auto& c = matrix.cells[i];
        nlohmann::ordered_json j;
        j["kind"] = perturbation_name(c.kind);
        j["rate"] = c.rate;
        j["delta"] = {{"ic", opt(c.d_ic)}, {"spc", opt(c.d_spc)}, {"sc", opt(c.d_sc)}, {"mcs", opt(c.d_mcs)}};
        j["before"] = means_json(c.before);
        j["after"] = means_json(c.after);
        j["events_clamp_limited"] = c.events_clamp_limited;
        if (i < verdicts.size()) {
            j["verdict"] = verdicts[i].verdict == Verdict::Pass ? "PASS" : "FAIL";
            j["reason"] = verdicts[i].reason;
        }
        cells.push_back(std::move(j));
    }
    out << doc.dump(2) << '\n';
}

void write_impact_table(const PerturbationImpactMatrix& matrix, const std::vector<CrosstalkVerdict>& verdicts,
                        std::ostream& out) {
    out << "Perturbation    Rate      dIC     dSpC      dSC     dMCS  Verdict\n";
    for (std::size_t i = 0; i < matrix.cells.size(); ++i) {
        const auto& c = matrix.cells[i];
        char head[48];
        std::snprintf(head, sizeof(head), "%-13s %5.0f%% ", std::string(perturbation_name(c.kind)).c_str(),
                      100.0 * c.rate);
        out << head << pct(c.d_ic) << ' ' << pct(c.d_spc) << ' ' << pct(c.d_sc) << ' ' << pct(c.d_mcs);
        if (i < verdicts.size()) out << "  " << (verdicts[i].verdict == Verdict::Pass ? "PASS" : "FAIL");
        out << '\n';
    }
}

} // namespace mcs
