#include "mcs/bundle.hpp"

#include "mcs/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <ostream>
#include <unordered_set>

namespace mcs {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

double l2_norm(const std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) sum += x * x;
    return std::sqrt(sum);
}

} // namespace

// ---------------------------------------------------------------------------
// Labels

std::string fold_label(std::string_view raw) {
    const auto t = trim(raw);
    std::string out(t);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

LabelMap::LabelMap(const std::map<std::string, std::string>& raw_entries) {
    std::map<std::string, std::string> folded;
    for (const auto& [k, v] : raw_entries) {
        auto key = fold_label(k);
        auto value = fold_label(v);
        if (key.empty() || value.empty()) {
            throw Error(ErrorCode::Schema, "label map entries must be non-empty (key '" + k + "')");
        }
        folded[key] = value;
    }
    // Resolve chains (a->b, b->c becomes a->c); a cycle has no canonical form.
    for (const auto& [key, value] : folded) {
        std::string target = value;
        std::size_t hops = 0;
        for (auto it = folded.find(target); it != folded.end() && it->second != target;
             it = folded.find(target)) {
            target = it->second;
            if (++hops > folded.size()) {
                throw Error(ErrorCode::Schema, "label map contains a cycle through '" + key + "'");
            }
        }
        entries_[key] = target;
    }
}

std::string LabelMap::canonical(std::string_view raw) const {
    auto folded = fold_label(raw);
    if (auto it = entries_.find(folded); it != entries_.end()) return it->second;
    return folded;
}

std::string normalize_label(std::string_view raw, const LabelMap& map) {
    return map.canonical(raw);
}

LabelSet entity_set(const MultimodalEvent& event, const LabelMap& map) {
    LabelSet out;
    for (const auto& obj : event.objects) out.insert(map.canonical(obj.label));
    return out;
}

LabelSet detected_set(const MultimodalEvent& event, const LabelMap& map, double conf_threshold) {
    LabelSet out;
    for (const auto& det : event.detections) {
        if (det.confidence >= conf_threshold) out.insert(map.canonical(det.label));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Validation

std::string_view violation_code_name(ViolationCode code) {
    switch (code) {
    case ViolationCode::EmptyEventId: return "EMPTY_EVENT_ID";
    case ViolationCode::NonPositiveImageSize: return "NON_POSITIVE_IMAGE_SIZE";
    case ViolationCode::DegenerateBbox: return "DEGENERATE_BBOX";
    case ViolationCode::BboxOutOfBounds: return "BBOX_OUT_OF_BOUNDS";
    case ViolationCode::DuplicateObjectId: return "DUPLICATE_OBJECT_ID";
    case ViolationCode::EmptyLabel: return "EMPTY_LABEL";
    case ViolationCode::DanglingReference: return "DANGLING_REFERENCE";
    case ViolationCode::EmptyRegionText: return "EMPTY_REGION_TEXT";
    case ViolationCode::NonUnitEmbedding: return "NON_UNIT_EMBEDDING";
    case ViolationCode::EmbeddingDimMismatch: return "EMBEDDING_DIM_MISMATCH";
    case ViolationCode::EmptyQuestion: return "EMPTY_QUESTION";
    case ViolationCode::EmptyGoldAnswer: return "EMPTY_GOLD_ANSWER";
    case ViolationCode::ConfidenceOutOfRange: return "CONFIDENCE_OUT_OF_RANGE";
    }
    return "UNKNOWN";
}

bool ValidationReport::contains(ViolationCode code) const {
    return std::any_of(violations.begin(), violations.end(),
                       [code](const Violation& v) { return v.code == code; });
}

namespace {

class Checker {
public:
    Checker(const MultimodalEvent& event, std::size_t dim) : event_(event), dim_(dim) {}

    void box(const BoundingBox& b, const std::string& path) {
        if (!(b.w > 0.0) || !(b.h > 0.0) || !std::isfinite(b.x) || !std::isfinite(b.y)) {
            add(ViolationCode::DegenerateBbox, path, "box must have finite origin and w, h > 0");
            return;
        }
        if (!(event_.image_width > 0.0) || !(event_.image_height > 0.0)) return;
        const double slack = 1e-9 * std::max(event_.image_width, event_.image_height);
        if (b.x < 0.0 || b.y < 0.0 || b.x + b.w > event_.image_width + slack ||
            b.y + b.h > event_.image_height + slack) {
            add(ViolationCode::BboxOutOfBounds, path, "box extends outside the image");
        }
    }

    void embedding(const std::vector<double>& e, const std::string& path) {
        if (e.size() != dim_) {
            add(ViolationCode::EmbeddingDimMismatch, path,
                "embedding dimension " + std::to_string(e.size()) + " != " + std::to_string(dim_));
            return;
        }
        const double norm = l2_norm(e);
        if (!(std::abs(norm - 1.0) <= kUnitNormTolerance)) {
            add(ViolationCode::NonUnitEmbedding, path,
                "embedding not unit-norm (norm " + std::to_string(norm) + ")");
        }
    }

    void add(ViolationCode code, std::string path, std::string message) {
        report_.violations.push_back({code, std::move(path), std::move(message)});
    }

    ValidationReport take() { return std::move(report_); }

private:
    const MultimodalEvent& event_;
    std::size_t dim_;
    ValidationReport report_;
};

std::string indexed(const char* list, std::size_t i) {
    return std::string(list) + "[" + std::to_string(i) + "]";
}

} // namespace

ValidationReport validate_event(const MultimodalEvent& event, std::optional<std::size_t> expected_dim) {
    const std::size_t dim = expected_dim.value_or(event.image_embedding.size());
    Checker check(event, dim);

    if (trim(event.event_id).empty()) check.add(ViolationCode::EmptyEventId, "event_id", "event_id is empty");
    if (!(event.image_width > 0.0) || !(event.image_height > 0.0) || !std::isfinite(event.image_width) ||
        !std::isfinite(event.image_height)) {
        check.add(ViolationCode::NonPositiveImageSize, "image", "image width and height must be > 0");
    }
    check.embedding(event.image_embedding, "image.embedding");

    std::unordered_set<std::string> ids;
    for (std::size_t i = 0; i < event.objects.size(); ++i) {
        const auto& obj = event.objects[i];
        const auto path = indexed("objects", i);
        if (!ids.insert(obj.id).second) {
            check.add(ViolationCode::DuplicateObjectId, path + ".id", "duplicate object id '" + obj.id + "'");
        }
        if (trim(obj.label).empty()) check.add(ViolationCode::EmptyLabel, path + ".label", "label is empty");
        check.box(obj.bbox, path + ".bbox");
    }
    for (std::size_t i = 0; i < event.relationships.size(); ++i) {
        const auto& rel = event.relationships[i];
        const auto path = indexed("relationships", i);
        if (!ids.contains(rel.subject_id)) {
            check.add(ViolationCode::DanglingReference, path + ".subject_id",
                      "unknown object id '" + rel.subject_id + "'");
        }
        if (!ids.contains(rel.object_id)) {
            check.add(ViolationCode::DanglingReference, path + ".object_id",
                      "unknown object id '" + rel.object_id + "'");
        }
    }
    for (std::size_t i = 0; i < event.regions.size(); ++i) {
        const auto& region = event.regions[i];
        const auto path = indexed("regions", i);
        if (trim(region.text).empty()) check.add(ViolationCode::EmptyRegionText, path + ".text", "text is empty");
        check.box(region.bbox, path + ".bbox");
        check.embedding(region.embedding, path + ".embedding");
    }
    for (std::size_t i = 0; i < event.qa.size(); ++i) {
        const auto& qa = event.qa[i];
        const auto path = indexed("qa", i);
        if (trim(qa.question).empty()) check.add(ViolationCode::EmptyQuestion, path + ".question", "question is empty");
        if (trim(qa.gold_answer).empty()) {
            check.add(ViolationCode::EmptyGoldAnswer, path + ".gold_answer", "gold answer is empty");
        }
    }
    for (std::size_t i = 0; i < event.detections.size(); ++i) {
        const auto& det = event.detections[i];
        const auto path = indexed("detections", i);
        if (trim(det.label).empty()) check.add(ViolationCode::EmptyLabel, path + ".label", "label is empty");
        check.box(det.bbox, path + ".bbox");
        if (!(det.confidence >= 0.0 && det.confidence <= 1.0)) {
            check.add(ViolationCode::ConfidenceOutOfRange, path + ".confidence", "confidence outside [0, 1]");
        }
    }
    return check.take();
}

// ---------------------------------------------------------------------------
// Decoding

BoundingBox clamp_to_image(const BoundingBox& box, double width, double height) {
    if (!(box.w > 0.0) || !(box.h > 0.0) || !(width > 0.0) || !(height > 0.0)) return box;
    BoundingBox out = box;
    // Only touch an axis that actually overflows, so in-bounds boxes round-trip bit-exactly.
    if (out.x < 0.0 || out.x + out.w > width) {
        const double left = std::max(0.0, out.x);
        const double right = std::min(out.x + out.w, width);
        out.x = left;
        out.w = right - left;
    }
    if (out.y < 0.0 || out.y + out.h > height) {
        const double top = std::max(0.0, out.y);
        const double bottom = std::min(out.y + out.h, height);
        out.y = top;
        out.h = bottom - top;
    }
    return out;
}

namespace {

class Decoder {
public:
    explicit Decoder(std::size_t line) : line_(line) {}

    [[noreturn]] void fail(const std::string& what) const { throw Error(ErrorCode::Schema, what, line_); }

    const json& field(const json& obj, const char* key, const std::string& ctx) const {
        auto it = obj.find(key);
        if (it == obj.end()) fail("missing field '" + ctx + key + "'");
        return *it;
    }

    std::string str(const json& obj, const char* key, const std::string& ctx) const {
        const auto& v = field(obj, key, ctx);
        if (!v.is_string()) fail("field '" + ctx + key + "' must be a string");
        return v.get<std::string>();
    }

    // Identifiers may be written as strings or integers; both become strings.
    std::string ident(const json& obj, const char* key, const std::string& ctx) const {
        const auto& v = field(obj, key, ctx);
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number_integer()) return std::to_string(v.get<long long>());
        fail("field '" + ctx + key + "' must be a string or integer identifier");
    }

    double num(const json& obj, const char* key, const std::string& ctx) const {
        const auto& v = field(obj, key, ctx);
        if (!v.is_number()) fail("field '" + ctx + key + "' must be a number");
        return v.get<double>();
    }

    const json& array(const json& obj, const char* key, const std::string& ctx) const {
        const auto& v = field(obj, key, ctx);
        if (!v.is_array()) fail("field '" + ctx + key + "' must be an array");
        return v;
    }

    const json& object(const json& v, const std::string& ctx) const {
        if (!v.is_object()) fail("'" + ctx + "' must be an object");
        return v;
    }

    std::vector<double> reals(const json& obj, const char* key, const std::string& ctx) const {
        const auto& arr = array(obj, key, ctx);
        std::vector<double> out;
        out.reserve(arr.size());
        for (const auto& x : arr) {
            if (!x.is_number()) fail("field '" + ctx + key + "' must contain only numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }

    BoundingBox box(const json& obj, const std::string& ctx) const {
        const auto v = reals(obj, "bbox", ctx);
        if (v.size() != 4) fail("field '" + ctx + "bbox' must be [x, y, w, h]");
        return {v[0], v[1], v[2], v[3]};
    }

private:
    std::size_t line_;
};

} // namespace

MultimodalEvent decode_event(std::string_view line_text, std::size_t line_no) {
    Decoder d(line_no);
    json doc;
    try {
        doc = json::parse(line_text);
    } catch (const json::parse_error& e) {
        d.fail(std::string("malformed record: ") + e.what());
    }
    d.object(doc, "record");

    MultimodalEvent ev;
    ev.event_id = d.ident(doc, "event_id", "");
    const auto& image = d.object(d.field(doc, "image", ""), "image");
    ev.image_width = d.num(image, "width", "image.");
    ev.image_height = d.num(image, "height", "image.");
    ev.image_embedding = d.reals(image, "embedding", "image.");

    const auto& objects = d.array(doc, "objects", "");
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const auto ctx = indexed("objects", i) + ".";
        const auto& o = d.object(objects[i], ctx);
        ev.objects.push_back({d.ident(o, "id", ctx), d.str(o, "label", ctx), d.box(o, ctx)});
    }
    const auto& rels = d.array(doc, "relationships", "");
    for (std::size_t i = 0; i < rels.size(); ++i) {
        const auto ctx = indexed("relationships", i) + ".";
        const auto& r = d.object(rels[i], ctx);
        ev.relationships.push_back(
            {d.ident(r, "subject_id", ctx), d.str(r, "predicate", ctx), d.ident(r, "object_id", ctx)});
    }
    const auto& regions = d.array(doc, "regions", "");
    for (std::size_t i = 0; i < regions.size(); ++i) {
        const auto ctx = indexed("regions", i) + ".";
        const auto& r = d.object(regions[i], ctx);
        ev.regions.push_back({d.str(r, "text", ctx), d.box(r, ctx), d.reals(r, "embedding", ctx)});
    }
    const auto& qa = d.array(doc, "qa", "");
    for (std::size_t i = 0; i < qa.size(); ++i) {
        const auto ctx = indexed("qa", i) + ".";
        const auto& q = d.object(qa[i], ctx);
        ev.qa.push_back({d.str(q, "question", ctx), d.str(q, "gold_answer", ctx), d.str(q, "predicted_answer", ctx)});
    }
    const auto& dets = d.array(doc, "detections", "");
    for (std::size_t i = 0; i < dets.size(); ++i) {
        const auto ctx = indexed("detections", i) + ".";
        const auto& o = d.object(dets[i], ctx);
        ev.detections.push_back({d.str(o, "label", ctx), d.box(o, ctx), d.num(o, "confidence", ctx)});
    }

    for (auto& o : ev.objects) o.bbox = clamp_to_image(o.bbox, ev.image_width, ev.image_height);
    for (auto& r : ev.regions) r.bbox = clamp_to_image(r.bbox, ev.image_width, ev.image_height);
    for (auto& det : ev.detections) det.bbox = clamp_to_image(det.bbox, ev.image_width, ev.image_height);
    return ev;
}

namespace {

// Reads the header line; returns the number of lines consumed.
std::size_t read_header(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != kBundleSchemaVersion) {
        throw Error(ErrorCode::Schema,
                    "first line must be the schema version '" + std::string(kBundleSchemaVersion) + "'", 1);
    }
    return 1;
}

ErrorCode error_for(ViolationCode code) {
    switch (code) {
    case ViolationCode::DanglingReference: return ErrorCode::DanglingReference;
    case ViolationCode::EmbeddingDimMismatch: return ErrorCode::DimensionMismatch;
    default: return ErrorCode::Schema;
    }
}

// Walks the record lines, calling on_event(line_no, event) for decodable
// records and on_error(line_no, error) for undecodable ones.
template <typename OnEvent, typename OnError>
void for_each_record(std::istream& in, OnEvent&& on_event, OnError&& on_error) {
    std::size_t line_no = read_header(in);
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        MultimodalEvent ev;
        try {
            ev = decode_event(line, line_no);
        } catch (const Error& e) {
            on_error(line_no, e);
            continue;
        }
        on_event(line_no, std::move(ev));
    }
}

} // namespace

ParseResult parse_bundle(std::istream& in, const LabelMap& map, ParseMode mode) {
    ParseResult result;
    result.bundle.label_map = map;
    std::optional<std::size_t> dim;
    std::unordered_set<std::string> seen;

    auto reject = [&](std::size_t line_no, const std::string& event_id, ErrorCode code, std::string_view code_name,
                      const std::string& message) {
        if (mode == ParseMode::Strict) throw Error(code, message, line_no);
        result.skipped.push_back({line_no, event_id, std::string(code_name), message});
    };

    for_each_record(
        in,
        [&](std::size_t line_no, MultimodalEvent ev) {
            const auto report = validate_event(ev, dim);
            if (!report.ok()) {
                const auto& first = report.violations.front();
                reject(line_no, ev.event_id, error_for(first.code), violation_code_name(first.code),
                       "event '" + ev.event_id + "' " + first.path + ": " + first.message);
                return;
            }
            if (seen.contains(ev.event_id)) {
                reject(line_no, ev.event_id, ErrorCode::Schema, "DUPLICATE_EVENT_ID",
                       "duplicate event_id '" + ev.event_id + "'");
                return;
            }
            seen.insert(ev.event_id);
            if (!dim) dim = ev.image_embedding.size();
            result.bundle.events.push_back(std::move(ev));
        },
        [&](std::size_t line_no, const Error& e) {
            reject(line_no, "", e.code(), error_code_name(e.code()), e.detail());
        });

    result.bundle.embedding_dim = dim.value_or(0);
    return result;
}

std::vector<ParseDiagnostic> audit_bundle(std::istream& in) {
    std::vector<ParseDiagnostic> out;
    std::optional<std::size_t> dim;
    std::unordered_set<std::string> seen;
    for_each_record(
        in,
        [&](std::size_t line_no, MultimodalEvent ev) {
            const auto report = validate_event(ev, dim);
            for (const auto& v : report.violations) {
                out.push_back({line_no, ev.event_id, std::string(violation_code_name(v.code)),
                               v.path + ": " + v.message});
            }
            if (!seen.insert(ev.event_id).second) {
                out.push_back({line_no, ev.event_id, "DUPLICATE_EVENT_ID", "duplicate event_id"});
            }
            if (!dim && report.ok()) dim = ev.image_embedding.size();
        },
        [&](std::size_t line_no, const Error& e) {
            out.push_back({line_no, "", std::string(error_code_name(e.code())), e.detail()});
        });
    return out;
}

// ---------------------------------------------------------------------------
// Encoding

namespace {

ordered_json box_json(const BoundingBox& b) { return ordered_json::array({b.x, b.y, b.w, b.h}); }

} // namespace

std::string encode_event(const MultimodalEvent& ev) {
    ordered_json doc;
    doc["event_id"] = ev.event_id;
    doc["image"] = {{"width", ev.image_width}, {"height", ev.image_height}, {"embedding", ev.image_embedding}};
    auto& objects = doc["objects"] = ordered_json::array();
    for (const auto& o : ev.objects) {
        objects.push_back({{"id", o.id}, {"label", o.label}, {"bbox", box_json(o.bbox)}});
    }
    auto& rels = doc["relationships"] = ordered_json::array();
    for (const auto& r : ev.relationships) {
        rels.push_back({{"subject_id", r.subject_id}, {"predicate", r.predicate}, {"object_id", r.object_id}});
    }
    auto& regions = doc["regions"] = ordered_json::array();
    for (const auto& r : ev.regions) {
        regions.push_back({{"text", r.text}, {"bbox", box_json(r.bbox)}, {"embedding", r.embedding}});
    }
    auto& qa = doc["qa"] = ordered_json::array();
    for (const auto& q : ev.qa) {
        qa.push_back({{"question", q.question}, {"gold_answer", q.gold_answer}, {"predicted_answer", q.predicted_answer}});
    }
    auto& dets = doc["detections"] = ordered_json::array();
    for (const auto& det : ev.detections) {
        dets.push_back({{"label", det.label}, {"bbox", box_json(det.bbox)}, {"confidence", det.confidence}});
    }
    return doc.dump();
}

void serialize_bundle(const EventBundle& bundle, std::ostream& out) {
    out << kBundleSchemaVersion << '\n';
    for (const auto& ev : bundle.events) out << encode_event(ev) << '\n';
}

LabelMap load_label_map(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Schema, std::string("malformed label map: ") + e.what());
    }
    if (!doc.is_object()) throw Error(ErrorCode::Schema, "label map must be a JSON object");
    std::map<std::string, std::string> raw;
    for (const auto& [k, v] : doc.items()) {
        if (!v.is_string()) throw Error(ErrorCode::Schema, "label map value for '" + k + "' must be a string");
        raw[k] = v.get<std::string>();
    }
    return LabelMap(raw);
}

void write_label_map(const LabelMap& map, std::ostream& out) {
    json doc = json::object();
    for (const auto& [k, v] : map.entries()) doc[k] = v;
    out << doc.dump(2) << '\n';
}

} // namespace mcs
