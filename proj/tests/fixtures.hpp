#pragma once

#include "mcs/bundle.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace fixture {

using namespace mcs;

// Unit vector in R^3 at cosine c from the x axis.
inline std::vector<double> at_cosine(double c) { return {c, std::sqrt(1.0 - c * c), 0.0}; }

inline std::vector<double> image_axis() { return {1.0, 0.0, 0.0}; }

// A small event that passes validation: two objects, one triplet, two
// regions, two QA records and two detections on a 640x480 image.
inline MultimodalEvent basic_event(const std::string& id = "ev-1") {
    MultimodalEvent ev;
    ev.event_id = id;
    ev.image_width = 640;
    ev.image_height = 480;
    ev.image_embedding = image_axis();
    ev.objects = {{"o1", "dog", {10, 10, 100, 80}}, {"o2", "frisbee", {200, 50, 40, 40}}};
    ev.relationships = {{"o1", "catching", "o2"}};
    ev.regions = {{"a dog catching a frisbee", {0, 0, 300, 200}, at_cosine(0.8)},
                  {"green grass", {0, 200, 640, 280}, at_cosine(0.4)}};
    ev.qa = {{"What is the dog catching?", "frisbee", "a frisbee"}, {"What color is the grass?", "green", "blue"}};
    ev.detections = {{"dog", {12, 12, 96, 78}, 0.95}, {"frisbee", {198, 52, 40, 40}, 0.5}};
    return ev;
}

// One event per violation code, each breaking exactly that invariant.
inline std::vector<std::pair<ViolationCode, MultimodalEvent>> violation_corpus() {
    std::vector<std::pair<ViolationCode, MultimodalEvent>> out;
    auto add = [&](ViolationCode code, auto mutate) {
        auto ev = basic_event("bad-" + std::string(violation_code_name(code)));
        mutate(ev);
        out.emplace_back(code, std::move(ev));
    };
    add(ViolationCode::EmptyEventId, [](MultimodalEvent& e) { e.event_id = "  "; });
    add(ViolationCode::NonPositiveImageSize, [](MultimodalEvent& e) { e.image_height = 0; });
    add(ViolationCode::DegenerateBbox, [](MultimodalEvent& e) { e.objects[0].bbox.w = 0; });
    add(ViolationCode::BboxOutOfBounds, [](MultimodalEvent& e) { e.regions[1].bbox.y = 300; });
    add(ViolationCode::DuplicateObjectId, [](MultimodalEvent& e) {
        e.objects.push_back({"o1", "ball", {300, 300, 20, 20}});
    });
    add(ViolationCode::EmptyLabel, [](MultimodalEvent& e) { e.objects[1].label = ""; });
    add(ViolationCode::DanglingReference, [](MultimodalEvent& e) { e.relationships[0].object_id = "o9"; });
    add(ViolationCode::EmptyRegionText, [](MultimodalEvent& e) { e.regions[0].text = " "; });
    add(ViolationCode::NonUnitEmbedding, [](MultimodalEvent& e) {
        for (auto& x : e.regions[0].embedding) x *= 1.01;
    });
    add(ViolationCode::EmbeddingDimMismatch, [](MultimodalEvent& e) { e.regions[1].embedding = {0.6, 0.8}; });
    add(ViolationCode::EmptyQuestion, [](MultimodalEvent& e) { e.qa[0].question = ""; });
    add(ViolationCode::EmptyGoldAnswer, [](MultimodalEvent& e) { e.qa[1].gold_answer = ""; });
    add(ViolationCode::ConfidenceOutOfRange, [](MultimodalEvent& e) { e.detections[1].confidence = 1.5; });
    return out;
}

// Hand-built fusion cases with the expected survivors of each transform.
struct FusionCase {
    MultimodalEvent event;
    std::vector<std::string> contract_objects;
    std::vector<std::string> contract_regions;
    std::size_t contract_triplets;
    std::vector<std::string> foundation_objects;
    std::vector<std::string> foundation_regions;
    std::vector<std::string> foundation_qa;
    std::size_t foundation_triplets;
};

inline MultimodalEvent shell(const std::string& id) {
    MultimodalEvent ev;
    ev.event_id = id;
    ev.image_width = 640;
    ev.image_height = 480;
    ev.image_embedding = image_axis();
    return ev;
}

inline std::vector<FusionCase> fusion_cases() {
    const BoundingBox det{100, 100, 100, 100};
    const BoundingBox far{400, 300, 50, 50};
    std::vector<FusionCase> cases;

    {  // plain keep/drop on both sides
        auto ev = shell("f0");
        ev.detections = {{"dog", det, 0.9}};
        ev.objects = {{"a", "dog", det}, {"b", "cat", far}};
        ev.relationships = {{"a", "chasing", "b"}, {"a", "near", "a"}};
        ev.regions = {{"a dog running", det, at_cosine(0.9)}, {"blurry thing", det, at_cosine(0.2)}};
        ev.qa = {{"what is the dog doing", "running", "running"}, {"is it running", "yes", "yes"}};
        cases.push_back({ev, {"a"}, {"a dog running"}, 1, {"a"}, {"a dog running"}, {"is it running"}, 1});
    }
    {  // thresholds are inclusive: IoU exactly 0.1 and cosines exactly 0.3 / 0.5 survive
        auto ev = shell("f1");
        ev.detections = {{"kite", det, 0.05}};
        ev.objects = {{"a", "kite", {100, 100, 100, 10}}, {"b", "string", {100, 100, 100, 9}}};
        ev.relationships = {{"b", "tied to", "a"}};
        ev.regions = {{"a kite in the wind", det, at_cosine(0.5)}, {"some string", det, at_cosine(0.3)},
                      {"clouds overhead", det, at_cosine(0.29)}};
        ev.qa = {{"where is the kite flying", "sky", "sky"}, {"what holds the string", "hand", "hand"}};
        cases.push_back({ev, {"a"}, {"a kite in the wind", "some string"}, 0, {"a"}, {"a kite in the wind"},
                         {"where is the kite flying"}, 0});
    }
    {  // no detections: contract keeps no object
        auto ev = shell("f2");
        ev.objects = {{"a", "horse", det}, {"b", "rider", far}};
        ev.relationships = {{"b", "riding", "a"}};
        ev.regions = {{"a rider on a horse", det, at_cosine(0.7)}};
        ev.qa = {{"who is riding the horse", "man", "man"}};
        cases.push_back({ev, {}, {"a rider on a horse"}, 0, {"a", "b"}, {"a rider on a horse"},
                         {"who is riding the horse"}, 1});
    }
    {  // multi-word labels match as whole-word phrases only
        auto ev = shell("f3");
        ev.detections = {{"traffic light", det, 0.9}};
        ev.objects = {{"a", "Traffic Light", det}, {"b", "traffic cone", det}, {"c", "cat", det}};
        ev.regions = {{"a traffic light at night", det, at_cosine(0.8)}, {"category sign", det, at_cosine(0.6)}};
        ev.qa = {{"is the light green", "no", "no"}};
        cases.push_back({ev, {"a", "b", "c"}, {"a traffic light at night", "category sign"}, 0, {"a"},
                         {"a traffic light at night", "category sign"}, {"is the light green"}, 0});
    }
    {  // punctuation separates words
        auto ev = shell("f4");
        ev.detections = {{"bench", det, 0.8}};
        ev.objects = {{"a", "bench", det}, {"b", "pigeon", {100, 150, 100, 50}}};
        ev.relationships = {{"b", "on", "a"}};
        ev.regions = {{"bench, wooden; old", det, at_cosine(0.55)}};
        ev.qa = {{"Is the BENCH wooden?", "yes", "yes"}, {"how old", "very", "very"}};
        cases.push_back({ev, {"a", "b"}, {"bench, wooden; old"}, 1, {"a"}, {"bench, wooden; old"},
                         {"Is the BENCH wooden?"}, 0});
    }
    {  // every region below both thresholds
        auto ev = shell("f5");
        ev.detections = {{"boat", det, 0.9}};
        ev.objects = {{"a", "boat", det}};
        ev.regions = {{"a boat at sea", det, at_cosine(0.25)}, {"waves", det, at_cosine(0.1)}};
        ev.qa = {{"what color is the boat", "red", "red"}};
        cases.push_back({ev, {"a"}, {}, 0, {}, {}, {}, 0});
    }
    {  // negative cosine
        auto ev = shell("f6");
        ev.detections = {{"pizza", det, 0.9}};
        ev.objects = {{"a", "pizza", {150, 100, 100, 100}}};
        ev.regions = {{"pizza slice", det, at_cosine(-0.2)}, {"a pizza on a table", det, at_cosine(0.95)}};
        ev.qa = {{"what food is this", "pizza", "pizza"}};
        cases.push_back({ev, {"a"}, {"a pizza on a table"}, 0, {"a"}, {"a pizza on a table"}, {}, 0});
    }
    {  // the transforms disagree on which endpoint of a triplet survives
        auto ev = shell("f7");
        ev.detections = {{"man", det, 0.9}};
        ev.objects = {{"a", "man", det}, {"b", "umbrella", far}, {"c", "hat", det}};
        ev.relationships = {{"a", "holding", "b"}, {"a", "wearing", "c"}, {"b", "above", "a"}};
        ev.regions = {{"man with an umbrella", det, at_cosine(0.6)}, {"rainy street", det, at_cosine(0.35)}};
        ev.qa = {{"what color is the umbrella", "black", "black"}, {"is it rainy", "yes", "no"}};
        cases.push_back({ev, {"a", "c"}, {"man with an umbrella", "rainy street"}, 1, {"a", "b"},
                         {"man with an umbrella"}, {"what color is the umbrella"}, 2});
    }
    {  // nothing beyond the image
        auto ev = shell("f8");
        ev.detections = {{"tree", det, 0.9}};
        cases.push_back({ev, {}, {}, 0, {}, {}, {}, 0});
    }
    {  // partial overlap of one third
        auto ev = shell("f9");
        ev.detections = {{"car", det, 0.99}, {"bus", far, 0.1}};
        ev.objects = {{"a", "car", {150, 100, 100, 100}}, {"b", "bus", {440, 300, 50, 50}},
                      {"c", "truck", {0, 0, 50, 50}}};
        ev.relationships = {{"a", "behind", "b"}, {"c", "behind", "a"}};
        ev.regions = {{"a red car and a bus", det, at_cosine(0.75)}};
        ev.qa = {{"what color is the car", "red", "red"}};
        cases.push_back({ev, {"a", "b"}, {"a red car and a bus"}, 1, {"a", "b"}, {"a red car and a bus"}, {}, 1});
    }
    return cases;
}

} // namespace fixture
