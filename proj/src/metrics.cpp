#include "mcs/metrics.hpp"

#include "mcs/error.hpp"
#include "mcs/parallel.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <ostream>

namespace mcs {

void MetricConfig::validate() const {
    if (!(conf_threshold >= 0.0 && conf_threshold <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "conf_threshold must lie in [0, 1]");
    }
    if (dc_max_qa < 1) throw Error(ErrorCode::InvalidArgument, "dc_max_qa must be >= 1");
}

bool EventScores::has_flag(std::string_view flag) const {
    return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

double iou(const BoundingBox& a, const BoundingBox& b) {
    const double ix = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
    const double iy = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    // Identical boxes score exactly 1 despite rounding in the edge arithmetic.
    if (a == b) return 1.0;
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

double jaccard(const LabelSet& a, const LabelSet& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t common = 0;
    for (const auto& label : a) common += b.count(label);
    const std::size_t uni = a.size() + b.size() - common;
    return static_cast<double>(common) / static_cast<double>(uni);
}

double identity_coherence(const MultimodalEvent& event, const LabelMap& map, const MetricConfig& cfg) {
    return jaccard(entity_set(event, map), detected_set(event, map, cfg.conf_threshold));
}

std::optional<double> spatial_coherence(const MultimodalEvent& event, const MetricConfig& cfg) {
    std::vector<const BoundingBox*> detected;
    for (const auto& det : event.detections) {
        if (det.confidence >= cfg.conf_threshold) detected.push_back(&det.bbox);
    }
    if (event.objects.empty() || detected.empty()) return std::nullopt;

    double sum = 0.0;
    std::size_t pairs = 0;
    if (cfg.spc_matching == SpatialMatching::BestIou) {
        for (const auto& obj : event.objects) {
            double best = 0.0;
            for (const auto* box : detected) best = std::max(best, iou(obj.bbox, *box));
            sum += best;
        }
        pairs = event.objects.size();
    } else {
        pairs = std::min(event.objects.size(), detected.size());
        for (std::size_t i = 0; i < pairs; ++i) sum += iou(event.objects[i].bbox, *detected[i]);
    }
    return sum / static_cast<double>(pairs);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "dot product of " + std::to_string(a.size()) + "- and " + std::to_string(b.size()) + "-vectors");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

std::optional<double> semantic_coherence(const MultimodalEvent& event, const MetricConfig& cfg) {
    if (event.regions.empty()) return std::nullopt;
    double lowest = 1.0;
    bool first = true;
    for (const auto& region : event.regions) {
        const double c = dot(event.image_embedding, region.embedding);
        if (first || c < lowest) lowest = c;
        first = false;
    }
    if (cfg.sc_clamp_negative && lowest < 0.0) lowest = 0.0;
    return lowest;
}

std::string normalize_answer(std::string_view text) {
    std::vector<std::string> words;
    std::string current;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            if (!current.empty()) words.push_back(std::move(current));
            current.clear();
        } else if (!std::ispunct(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    if (!current.empty()) words.push_back(std::move(current));

    std::size_t start = 0;
    if (words.size() > 1 && (words[0] == "a" || words[0] == "an" || words[0] == "the")) start = 1;

    std::string out;
    for (std::size_t i = start; i < words.size(); ++i) {
        if (!out.empty()) out.push_back(' ');
        out += words[i];
    }
    return out;
}

std::optional<double> decision_coherence(const MultimodalEvent& event, const MetricConfig& cfg) {
    if (event.qa.empty()) return std::nullopt;
    const std::size_t k = std::min(event.qa.size(), cfg.dc_max_qa);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const auto& qa = event.qa[i];
        if (normalize_answer(qa.predicted_answer) == normalize_answer(qa.gold_answer)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(k);
}

std::optional<double> composite(const EventScores& s, const WeightVector& w) {
    if (!s.ic || !s.spc || !s.sc) return std::nullopt;
    double total = w.ic() * *s.ic + w.spc() * *s.spc + w.sc() * *s.sc;
    if (w.dc() > 0.0) {
        if (!s.dc) return std::nullopt;
        total += w.dc() * *s.dc;
    }
    return total;
}

EventScores score_event(const MultimodalEvent& event, const LabelMap& map, const MetricConfig& cfg,
                        const WeightVector& weights) {
    EventScores s;
    s.event_id = event.event_id;
    const auto annotated = entity_set(event, map);
    const auto detected = detected_set(event, map, cfg.conf_threshold);
    s.ic = jaccard(annotated, detected);
    if (annotated.empty() && detected.empty()) s.flags.emplace_back(kFlagVacuousIc);
    s.spc = spatial_coherence(event, cfg);
    s.sc = semantic_coherence(event, cfg);
    s.dc = decision_coherence(event, cfg);
    s.mcs = composite(s, weights);
    return s;
}

namespace {

template <typename Get>
DimensionAggregate aggregate_one(const std::vector<EventScores>& events, Get get) {
    DimensionAggregate agg;
    double sum = 0.0;
    for (const auto& e : events) {
        if (const auto& v = get(e)) {
            sum += *v;
            ++agg.count;
        }
    }
    if (agg.count > 0) agg.mean = sum / static_cast<double>(agg.count);
    return agg;
}

} // namespace

BundleAggregates aggregate(const std::vector<EventScores>& events) {
    BundleAggregates a;
    a.ic = aggregate_one(events, [](const EventScores& e) { return e.ic; });
    a.spc = aggregate_one(events, [](const EventScores& e) { return e.spc; });
    a.sc = aggregate_one(events, [](const EventScores& e) { return e.sc; });
    a.dc = aggregate_one(events, [](const EventScores& e) { return e.dc; });
    a.mcs = aggregate_one(events, [](const EventScores& e) { return e.mcs; });
    return a;
}

BundleScores score_bundle(const EventBundle& bundle, const MetricConfig& cfg, const WeightVector& weights,
                          unsigned width) {
    cfg.validate();
    BundleScores out;
    out.events.resize(bundle.events.size());
    parallel_for(bundle.events.size(), width, [&](std::size_t i) {
        out.events[i] = score_event(bundle.events[i], bundle.label_map, cfg, weights);
    });
    out.aggregates = aggregate(out.events);
    return out;
}

std::string format_real(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

namespace {

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string opt_field(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

} // namespace

void write_scores_csv(const std::vector<EventScores>& scores, std::ostream& out) {
    out << "event_id,ic,spc,sc,dc,mcs,flags\n";
    for (const auto& s : scores) {
        std::string flags;
        for (const auto& f : s.flags) {
            if (!flags.empty()) flags.push_back(';');
            flags += f;
        }
        out << csv_field(s.event_id) << ',' << opt_field(s.ic) << ',' << opt_field(s.spc) << ','
            << opt_field(s.sc) << ',' << opt_field(s.dc) << ',' << opt_field(s.mcs) << ',' << csv_field(flags)
            << '\n';
    }
}

} // namespace mcs
