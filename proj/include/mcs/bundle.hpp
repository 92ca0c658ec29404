#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mcs {

inline constexpr std::string_view kBundleSchemaVersion = "mcs-bundle/1";
inline constexpr double kUnitNormTolerance = 1e-4;

// Absolute pixel coordinates, top-left origin.
struct BoundingBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double area() const noexcept { return w * h; }
    bool operator==(const BoundingBox&) const = default;
};

struct ObjectAnnotation {
    std::string id;
    std::string label;
    BoundingBox bbox;
    bool operator==(const ObjectAnnotation&) const = default;
};

struct RelationshipTriplet {
    std::string subject_id;
    std::string predicate;
    std::string object_id;
    bool operator==(const RelationshipTriplet&) const = default;
};

struct RegionDescription {
    std::string text;
    BoundingBox bbox;
    std::vector<double> embedding;
    bool operator==(const RegionDescription&) const = default;
};

struct QaRecord {
    std::string question;
    std::string gold_answer;
    std::string predicted_answer; // empty when the model abstained
    bool operator==(const QaRecord&) const = default;
};

struct Detection {
    std::string label;
    BoundingBox bbox;
    double confidence = 0.0;
    bool operator==(const Detection&) const = default;
};

struct MultimodalEvent {
    std::string event_id;
    double image_width = 0.0;
    double image_height = 0.0;
    std::vector<double> image_embedding;
    std::vector<ObjectAnnotation> objects;
    std::vector<RelationshipTriplet> relationships;
    std::vector<RegionDescription> regions;
    std::vector<QaRecord> qa;
    std::vector<Detection> detections;
    bool operator==(const MultimodalEvent&) const = default;
};

// Raw label -> canonical label. Keys and values are stored normalized
// (lowercased, trimmed) and chains are resolved at construction, so lookup
// is idempotent: canonical(canonical(x)) == canonical(x).
class LabelMap {
public:
    LabelMap() = default;
    // Throws Error{Schema} on a mapping cycle or an empty key/value.
    explicit LabelMap(const std::map<std::string, std::string>& raw_entries);

    std::string canonical(std::string_view raw) const;
    const std::map<std::string, std::string>& entries() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_.empty(); }

private:
    std::map<std::string, std::string> entries_;
};

struct EventBundle {
    std::vector<MultimodalEvent> events;
    std::size_t embedding_dim = 0;
    LabelMap label_map;
};

using LabelSet = std::set<std::string>;

// ASCII lowercase + whitespace trim; the pre-lookup half of normalize_label.
std::string fold_label(std::string_view raw);
std::string normalize_label(std::string_view raw, const LabelMap& map);

LabelSet entity_set(const MultimodalEvent& event, const LabelMap& map);
LabelSet detected_set(const MultimodalEvent& event, const LabelMap& map, double conf_threshold);

// ---------------------------------------------------------------------------
// Validation

enum class ViolationCode {
    EmptyEventId,
    NonPositiveImageSize,
    DegenerateBbox,
    BboxOutOfBounds,
    DuplicateObjectId,
    EmptyLabel,
    DanglingReference,
    EmptyRegionText,
    NonUnitEmbedding,
    EmbeddingDimMismatch,
    EmptyQuestion,
    EmptyGoldAnswer,
    ConfidenceOutOfRange,
};

inline constexpr ViolationCode kAllViolationCodes[] = {
    ViolationCode::EmptyEventId,        ViolationCode::NonPositiveImageSize,
    ViolationCode::DegenerateBbox,      ViolationCode::BboxOutOfBounds,
    ViolationCode::DuplicateObjectId,   ViolationCode::EmptyLabel,
    ViolationCode::DanglingReference,   ViolationCode::EmptyRegionText,
    ViolationCode::NonUnitEmbedding,    ViolationCode::EmbeddingDimMismatch,
    ViolationCode::EmptyQuestion,       ViolationCode::EmptyGoldAnswer,
    ViolationCode::ConfidenceOutOfRange,
};

// Machine-readable name, e.g. "DEGENERATE_BBOX".
std::string_view violation_code_name(ViolationCode code);

struct Violation {
    ViolationCode code;
    std::string path;    // e.g. "objects[2].bbox"
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const noexcept { return violations.empty(); }
    bool contains(ViolationCode code) const;
};

// Lists every violated invariant. expected_dim, when given, is the bundle's
// embedding dimension; otherwise the image embedding's own size is used.
ValidationReport validate_event(const MultimodalEvent& event,
                                std::optional<std::size_t> expected_dim = std::nullopt);

// ---------------------------------------------------------------------------
// Wire format

enum class ParseMode { Strict, Lenient };

struct ParseDiagnostic {
    std::size_t line = 0;
    std::string event_id; // empty when the record could not be decoded that far
    std::string code;     // violation code name or error code name
    std::string message;
};

struct ParseResult {
    EventBundle bundle;
    std::vector<ParseDiagnostic> skipped;
};

// Decodes one wire record into an event, clamping boxes to the image.
// Throws Error{Schema} for missing or ill-typed fields. Does not validate.
MultimodalEvent decode_event(std::string_view line_text, std::size_t line_no = 0);

// Strict mode throws on the first bad record: DanglingReference,
// DimensionMismatch or Schema. Lenient mode skips it and records a diagnostic.
ParseResult parse_bundle(std::istream& in, const LabelMap& map, ParseMode mode = ParseMode::Strict);

// Reads every record and reports all problems without throwing on bad
// events. Throws only when the header is missing.
std::vector<ParseDiagnostic> audit_bundle(std::istream& in);

std::string encode_event(const MultimodalEvent& event);
void serialize_bundle(const EventBundle& bundle, std::ostream& out);

// Label map document: a single JSON object {raw: canonical, ...}.
LabelMap load_label_map(std::istream& in);
void write_label_map(const LabelMap& map, std::ostream& out);

// Clamps box to [0, width] x [0, height]. Degenerate input is returned as-is.
BoundingBox clamp_to_image(const BoundingBox& box, double width, double height);

} // namespace mcs
