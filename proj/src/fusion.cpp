#include "mcs/fusion.hpp"

#include "mcs/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <ostream>
#include <unordered_set>

namespace mcs {

void FusionThresholds::validate() const {
    if (!(contract_iou_min >= 0.0 && contract_iou_min <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "contract_iou_min must lie in [0, 1]");
    }
    for (double c : {contract_cos_min, foundation_cos_min}) {
        if (!(c >= -1.0 && c <= 1.0)) throw Error(ErrorCode::InvalidArgument, "cosine thresholds must lie in [-1, 1]");
    }
}

std::string_view architecture_name(Architecture arch) {
    switch (arch) {
    case Architecture::Naive: return "naive";
    case Architecture::Contract: return "contract";
    case Architecture::Foundation: return "foundation";
    }
    return "unknown";
}

std::optional<Architecture> parse_architecture(std::string_view name) {
    for (auto arch : kAllArchitectures) {
        if (architecture_name(arch) == name) return arch;
    }
    return std::nullopt;
}

std::vector<std::string> word_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

namespace {

bool contains_phrase(const std::vector<std::string>& haystack, const std::vector<std::string>& phrase) {
    if (phrase.empty() || phrase.size() > haystack.size()) return false;
    return std::search(haystack.begin(), haystack.end(), phrase.begin(), phrase.end()) != haystack.end();
}

void drop_dangling_triplets(MultimodalEvent& ev) {
    std::unordered_set<std::string> ids;
    for (const auto& o : ev.objects) ids.insert(o.id);
    std::erase_if(ev.relationships, [&](const RelationshipTriplet& r) {
        return !ids.contains(r.subject_id) || !ids.contains(r.object_id);
    });
}

void keep_regions_above(MultimodalEvent& ev, double cos_min) {
    std::erase_if(ev.regions, [&](const RegionDescription& r) { return dot(ev.image_embedding, r.embedding) < cos_min; });
}

} // namespace

MultimodalEvent apply_naive(const MultimodalEvent& event) { return event; }

MultimodalEvent apply_contract(const MultimodalEvent& event, const FusionThresholds& thresholds) {
    MultimodalEvent out = event;
    std::erase_if(out.objects, [&](const ObjectAnnotation& o) {
        return std::none_of(event.detections.begin(), event.detections.end(), [&](const Detection& d) {
            return iou(o.bbox, d.bbox) >= thresholds.contract_iou_min;
        });
    });
    keep_regions_above(out, thresholds.contract_cos_min);
    drop_dangling_triplets(out);
    return out;
}

MultimodalEvent apply_foundation(const MultimodalEvent& event, const FusionThresholds& thresholds,
                                 const LabelMap& map) {
    MultimodalEvent out = event;
    keep_regions_above(out, thresholds.foundation_cos_min);

    std::vector<std::vector<std::string>> region_words;
    std::unordered_set<std::string> vocabulary;
    for (const auto& r : out.regions) {
        region_words.push_back(word_tokens(r.text));
        vocabulary.insert(region_words.back().begin(), region_words.back().end());
    }

    std::erase_if(out.objects, [&](const ObjectAnnotation& o) {
        const auto label_words = word_tokens(map.canonical(o.label));
        return std::none_of(region_words.begin(), region_words.end(),
                            [&](const auto& words) { return contains_phrase(words, label_words); });
    });
    std::erase_if(out.qa, [&](const QaRecord& q) {
        for (const auto& w : word_tokens(q.question)) {
            if (w.size() >= thresholds.foundation_word_min_len && vocabulary.contains(w)) return false;
        }
        return true;
    });
    drop_dangling_triplets(out);
    return out;
}

MultimodalEvent apply_architecture(Architecture arch, const MultimodalEvent& event,
                                   const FusionThresholds& thresholds, const LabelMap& map) {
    switch (arch) {
    case Architecture::Naive: return apply_naive(event);
    case Architecture::Contract: return apply_contract(event, thresholds);
    case Architecture::Foundation: return apply_foundation(event, thresholds, map);
    }
    return event;
}

EventBundle transform_bundle(Architecture arch, const EventBundle& bundle, const FusionThresholds& thresholds) {
    EventBundle out;
    out.embedding_dim = bundle.embedding_dim;
    out.label_map = bundle.label_map;
    out.events.reserve(bundle.events.size());
    for (const auto& ev : bundle.events) out.events.push_back(apply_architecture(arch, ev, thresholds, bundle.label_map));
    return out;
}

std::string_view dimension_name(Dimension dim) {
    switch (dim) {
    case Dimension::Ic: return "ic";
    case Dimension::Spc: return "spc";
    case Dimension::Sc: return "sc";
    case Dimension::Dc: return "dc";
    case Dimension::Mcs: return "mcs";
    }
    return "unknown";
}

std::optional<double> dimension_value(const EventScores& s, Dimension dim) {
    switch (dim) {
    case Dimension::Ic: return s.ic;
    case Dimension::Spc: return s.spc;
    case Dimension::Sc: return s.sc;
    case Dimension::Dc: return s.dc;
    case Dimension::Mcs: return s.mcs;
    }
    return std::nullopt;
}

const BundleAggregates& ArchitectureComparison::aggregates(Architecture arch) const {
    return scores[static_cast<std::size_t>(arch)].aggregates;
}

ArchitectureComparison compare_architectures(const EventBundle& bundle, const MetricConfig& cfg,
                                             const FusionThresholds& thresholds, const WeightVector& weights,
                                             unsigned width) {
    if (bundle.events.empty()) throw Error(ErrorCode::InsufficientData, "cannot compare architectures on an empty bundle");
    thresholds.validate();
    ArchitectureComparison out;
    for (auto arch : kAllArchitectures) {
        out.scores[static_cast<std::size_t>(arch)] =
            score_bundle(transform_bundle(arch, bundle, thresholds), cfg, weights, width);
    }

    for (auto dim : kComparedDimensions) {
        DimensionTest test;
        test.dimension = dim;
        std::vector<std::vector<double>> groups;
        for (auto arch : kAllArchitectures) {
            std::vector<double> sample;
            for (const auto& s : out.scores[static_cast<std::size_t>(arch)].events) {
                if (auto v = dimension_value(s, dim)) sample.push_back(*v);
            }
            if (sample.size() < kMinScoresPerGroup) {
                throw Error(ErrorCode::InsufficientData,
                            std::string(architecture_name(arch)) + " has " + std::to_string(sample.size()) + " " +
                                std::string(dimension_name(dim)) + " scores; need at least " +
                                std::to_string(kMinScoresPerGroup));
            }
            test.n_per_group[static_cast<std::size_t>(arch)] = sample.size();
            groups.push_back(std::move(sample));
        }
        try {
            const auto kw = stats::kruskal_wallis(groups);
            test.h = kw.h;
            test.p = kw.p;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::AllTied) throw;
            test.all_tied = true;
        }
        out.tests.push_back(test);
    }
    return out;
}

namespace {

nlohmann::ordered_json agg_json(const DimensionAggregate& a) {
    nlohmann::ordered_json j;
    j["mean"] = a.mean ? nlohmann::ordered_json(*a.mean) : nlohmann::ordered_json(nullptr);
    j["count"] = a.count;
    return j;
}

std::string cell(const DimensionAggregate& a) {
    if (!a.mean) return "      -";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%7.3f", *a.mean);
    return buf;
}

} // namespace

void write_comparison_json(const ArchitectureComparison& cmp, std::ostream& out) {
    nlohmann::ordered_json doc;
    auto& archs = doc["architectures"] = nlohmann::ordered_json::object();
    for (auto arch : kAllArchitectures) {
        const auto& a = cmp.aggregates(arch);
        archs[std::string(architecture_name(arch))] = {
            {"ic", agg_json(a.ic)}, {"spc", agg_json(a.spc)}, {"sc", agg_json(a.sc)},
            {"dc", agg_json(a.dc)}, {"mcs", agg_json(a.mcs)}};
    }
    auto& tests = doc["kruskal_wallis"] = nlohmann::ordered_json::object();
    for (const auto& t : cmp.tests) {
        nlohmann::ordered_json n = nlohmann::ordered_json::object();
        for (auto arch : kAllArchitectures) {
            n[std::string(architecture_name(arch))] = t.n_per_group[static_cast<std::size_t>(arch)];
        }
        tests[std::string(dimension_name(t.dimension))] = {
            {"H", t.h}, {"p", t.p}, {"n_per_group", n}, {"all_tied", t.all_tied}};
    }
    out << doc.dump(2) << '\n';
}

void write_comparison_table(const ArchitectureComparison& cmp, std::ostream& out) {
    out << "Architecture       IC     SpC      SC      DC     MCS\n";
    for (auto arch : kAllArchitectures) {
        const auto& a = cmp.aggregates(arch);
        char name[32];
        std::snprintf(name, sizeof(name), "%-12s", std::string(architecture_name(arch)).c_str());
        out << name << cell(a.ic) << ' ' << cell(a.spc) << ' ' << cell(a.sc) << ' ' << cell(a.dc) << ' '
            << cell(a.mcs) << '\n';
    }
    out << "Kruskal-Wallis:\n";
    for (const auto& t : cmp.tests) {
        char line[128];
        std::snprintf(line, sizeof(line), "  %-4s H = %10.4f  p = %.4g%s\n", std::string(dimension_name(t.dimension)).c_str(),
                      t.h, t.p, t.all_tied ? "  (all tied)" : "");
        out << line;
    }
}

} // namespace mcs
