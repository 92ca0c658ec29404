#include "mcs/synth.hpp"

#include "mcs/error.hpp"
#include "mcs/parallel.hpp"
#include "mcs/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>

namespace mcs {

namespace {

constexpr std::size_t kDetectionVocabulary = 1000;
constexpr std::size_t kForeignVocabulary = 100000;
constexpr const char* kPredicates[] = {"next to", "on", "near", "behind", "holding", "under"};
constexpr const char* kVerbs[] = {"beside", "near", "with", "above", "behind"};

bool valid_range(const CountRange& r) { return r.min <= r.max; }

} // namespace

void SynthSpec::validate() const {
    auto fail = [](const char* what) { throw Error(ErrorCode::InvalidArgument, what); };
    if (!valid_range(objects_per_event) || !valid_range(regions_per_event) || !valid_range(qa_per_event)) {
        fail("count ranges must satisfy min <= max");
    }
    if (objects_per_event.min < 1) fail("events need at least one object");
    if (embedding_dim < 3) fail("embedding_dim must be at least 3");
    for (double level : {planted.ic, planted.spc, planted.sc, planted.dc}) {
        if (!(level >= 0.0 && level <= 1.0)) fail("planted levels must lie in [0, 1]");
    }
    if (!(level_spread >= 0.0 && level_spread <= 1.0)) fail("level_spread must lie in [0, 1]");
    if (!(dc_track_gain >= 0.0 && dc_track_gain <= 1.0)) fail("dc_track_gain must lie in [0, 1]");
    if (!(dc_track_noise >= 0.0 && dc_track_noise <= 1.0)) fail("dc_track_noise must lie in [0, 1]");
    if (!(shared_image_component >= 0.0 && shared_image_component < 1.0)) {
        fail("shared_image_component must lie in [0, 1)");
    }
    if (!(idiosyncratic_region_fraction >= 0.0 && idiosyncratic_region_fraction <= 1.0)) {
        fail("idiosyncratic_region_fraction must lie in [0, 1]");
    }
    if (!(image_width > 0.0) || !(image_height > 0.0)) fail("image size must be positive");
}

namespace {

using Vec = std::vector<double>;

double dotv(const Vec& a, const Vec& b) { return std::inner_product(a.begin(), a.end(), b.begin(), 0.0); }

void normalize(Vec& v) {
    const double n = std::sqrt(dotv(v, v));
    for (auto& x : v) x /= n;
}

// v minus its projections on each (unit) basis vector.
void orthogonalize(Vec& v, const std::vector<const Vec*>& basis) {
    for (const auto* b : basis) {
        const double p = dotv(v, *b);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= p * (*b)[i];
    }
}

Vec random_unit_orthogonal(Rng& rng, std::size_t dim, const std::vector<const Vec*>& basis) {
    for (;;) {
        Vec v(dim);
        for (auto& x : v) x = standard_normal(rng);
        orthogonalize(v, basis);
        orthogonalize(v, basis); // second pass removes rounding residue
        const double n = std::sqrt(dotv(v, v));
        if (n > 1e-6) {
            for (auto& x : v) x /= n;
            return v;
        }
    }
}

std::size_t draw_count(Rng& rng, const CountRange& r) {
    return r.min + static_cast<std::size_t>(uniform_index(rng, r.max - r.min + 1));
}

double draw_level(Rng& rng, double level, double spread) {
    if (spread <= 0.0) return level;
    return std::clamp(level + uniform_real(rng, -spread, spread), 0.0, 1.0);
}

std::size_t planted_count(double level, std::size_t n) {
    return std::min(n, static_cast<std::size_t>(std::lround(level * static_cast<double>(n))));
}

std::string token(const char* prefix, std::size_t index, int width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, index);
    return buf;
}

// Lays n boxes out on a grid inside [x0, x0 + w) x [y0, y0 + h), one per cell,
// with margins so boxes in different cells never touch.
std::vector<BoundingBox> grid_boxes(Rng& rng, std::size_t n, double x0, double y0, double w, double h) {
    const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    const std::size_t rows = (n + cols - 1) / cols;
    const double cw = w / static_cast<double>(cols);
    const double ch = h / static_cast<double>(rows);
    std::vector<BoundingBox> out;
    for (std::size_t i = 0; i < n; ++i) {
        const double bw = cw * uniform_real(rng, 0.5, 0.8);
        const double bh = ch * uniform_real(rng, 0.5, 0.8);
        const double cx = x0 + static_cast<double>(i % cols) * cw;
        const double cy = y0 + static_cast<double>(i / cols) * ch;
        out.push_back({cx + uniform_real(rng, 0.05, 0.95) * (cw - bw) * 0.9 + 0.05 * (cw - bw),
                       cy + uniform_real(rng, 0.05, 0.95) * (ch - bh) * 0.9 + 0.05 * (ch - bh), bw, bh});
    }
    return out;
}

MultimodalEvent generate_event(const SynthSpec& spec, std::size_t index, const Vec& common) {
    auto rng = SeedBuilder(spec.seed).add("synth-event").add(index).rng();
    MultimodalEvent ev;
    ev.event_id = token("synth-", index, 6);
    ev.image_width = spec.image_width;
    ev.image_height = spec.image_height;

    const double ic_level = draw_level(rng, spec.planted.ic, spec.level_spread);
    const double spc_level = draw_level(rng, spec.planted.spc, spec.level_spread);
    const double sc_level = draw_level(rng, spec.planted.sc, spec.level_spread);
    const double dc_level = spec.dc_tracks_sc
                                ? draw_level(rng, spec.dc_track_gain * sc_level, spec.dc_track_noise)
                                : draw_level(rng, spec.planted.dc, spec.level_spread);

    // --- detections (truth side) and objects -------------------------------
    const std::size_t n_obj = draw_count(rng, spec.objects_per_event);
    const std::size_t n_labels = planted_count(ic_level, n_obj);
    const std::size_t n_aligned = planted_count(spc_level, n_obj);

    const auto shared = sample_without_replacement(rng, kDetectionVocabulary, std::max<std::size_t>(n_labels, 1));
    std::vector<std::size_t> label_order(shared.begin(), shared.end());
    shuffle_indices(rng, label_order);
    const auto copied = sample_without_replacement(rng, n_obj, n_labels);
    const auto aligned = sample_without_replacement(rng, n_obj, n_aligned);
    const auto foreign = sample_without_replacement(rng, kForeignVocabulary, n_obj - n_labels);

    // Detection boxes live in the top half, displaced annotations in the bottom
    // half, so a displaced box has zero IoU with every detection.
    const double half = spec.image_height / 2.0;
    const auto det_boxes = grid_boxes(rng, n_obj, 0.0, 0.0, spec.image_width, half);
    const auto far_boxes = grid_boxes(rng, n_obj, 0.0, half, spec.image_width, half);

    std::vector<std::string> det_labels(n_obj);
    for (std::size_t j = 0; j < copied.size(); ++j) det_labels[copied[j]] = token("c", label_order[j], 4);
    for (std::size_t i = 0, cycle = 0; i < n_obj; ++i) {
        if (det_labels[i].empty()) det_labels[i] = token("c", label_order[cycle++ % label_order.size()], 4);
    }
    for (std::size_t i = 0; i < n_obj; ++i) {
        ev.detections.push_back({det_labels[i], det_boxes[i], uniform_real(rng, 0.75, 1.0)});
    }

    std::size_t next_foreign = 0;
    for (std::size_t i = 0; i < n_obj; ++i) {
        const bool keeps_label = std::binary_search(copied.begin(), copied.end(), i);
        const bool keeps_box = std::binary_search(aligned.begin(), aligned.end(), i);
        ev.objects.push_back({token("o", i, 1), keeps_label ? det_labels[i] : token("f", foreign[next_foreign++], 5),
                              keeps_box ? det_boxes[i] : far_boxes[i]});
    }
    const std::size_t n_rel = static_cast<std::size_t>(uniform_index(rng, n_obj));
    for (std::size_t r = 0; r < n_rel; ++r) {
        const auto s = static_cast<std::size_t>(uniform_index(rng, n_obj));
        const auto o = static_cast<std::size_t>(uniform_index(rng, n_obj));
        ev.relationships.push_back(
            {ev.objects[s].id, kPredicates[uniform_index(rng, std::size(kPredicates))], ev.objects[o].id});
    }

    // --- embeddings -----------------------------------------------------------
    const std::size_t dim = spec.embedding_dim;
    const double rho = spec.shared_image_component;
    const Vec own = random_unit_orthogonal(rng, dim, {&common});
    Vec image(dim);
    for (std::size_t i = 0; i < dim; ++i) image[i] = std::sqrt(rho) * common[i] + std::sqrt(1.0 - rho) * own[i];
    normalize(image);
    ev.image_embedding = image;

    // Unit direction orthogonal to the image, pointing toward the common axis.
    Vec toward = common;
    orthogonalize(toward, {&image});
    if (std::sqrt(dotv(toward, toward)) < 1e-6) {
        toward = random_unit_orthogonal(rng, dim, {&image});
    } else {
        normalize(toward);
    }

    const std::size_t n_reg = draw_count(rng, spec.regions_per_event);
    const std::size_t n_idio =
        n_reg > 1 ? std::min(n_reg - 1, planted_count(spec.idiosyncratic_region_fraction, n_reg)) : 0;
    // Region 0 carries the planted minimum cosine; it is never idiosyncratic.
    std::vector<std::size_t> idio;
    if (n_reg > 1) {
        idio = sample_without_replacement(rng, n_reg - 1, n_idio);
        for (auto& i : idio) ++i;
    }
    for (std::size_t j = 0; j < n_reg; ++j) {
        const double c = j == 0 ? sc_level : uniform_real(rng, sc_level, sc_level + 0.5 * (1.0 - sc_level));
        const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
        const double sign = std::binary_search(idio.begin(), idio.end(), j) ? -1.0 : 1.0;
        Vec t(dim);
        for (std::size_t i = 0; i < dim; ++i) t[i] = c * image[i] + sign * s * toward[i];
        normalize(t);

        const auto& a = ev.objects[uniform_index(rng, n_obj)].label;
        const auto& b = ev.objects[uniform_index(rng, n_obj)].label;
        const double bw = uniform_real(rng, 0.1, 0.5) * spec.image_width;
        const double bh = uniform_real(rng, 0.1, 0.5) * spec.image_height;
        const BoundingBox box{uniform_real(rng, 0.0, spec.image_width - bw), uniform_real(rng, 0.0, spec.image_height - bh),
                              bw, bh};
        ev.regions.push_back({a + " " + kVerbs[uniform_index(rng, std::size(kVerbs))] + " " + b, box, std::move(t)});
    }

    // --- QA -----------------------------------------------------------------
    const std::size_t n_qa = draw_count(rng, spec.qa_per_event);
    const std::size_t scored = std::min<std::size_t>(n_qa, 3);
    const auto correct = sample_without_replacement(rng, scored, planted_count(dc_level, scored));
    for (std::size_t q = 0; q < n_qa; ++q) {
        const bool right = q < scored ? std::binary_search(correct.begin(), correct.end(), q) : uniform_index(rng, 2) == 0;
        const auto& subject = ev.objects[uniform_index(rng, n_obj)].label;
        const auto gold = token("answer", static_cast<std::size_t>(uniform_index(rng, 1000)), 3);
        ev.qa.push_back({"what is the " + subject + " doing", gold, right ? gold : gold + " wrong"});
    }
    return ev;
}

} // namespace

EventBundle generate_bundle(const SynthSpec& spec, unsigned width) {
    spec.validate();
    auto rng = SeedBuilder(spec.seed).add("synth-common").rng();
    Vec common = random_unit_orthogonal(rng, spec.embedding_dim, {});

    EventBundle bundle;
    bundle.embedding_dim = spec.embedding_dim;
    bundle.events.resize(spec.n_events);
    parallel_for(spec.n_events, width, [&](std::size_t i) { bundle.events[i] = generate_event(spec, i, common); });
    return bundle;
}

namespace {

// Expectation and range of f(n, L) for n uniform over `counts` and L the
// (clamped) per-event level.
ExpectedScore expect(const CountRange& counts, double level, double spread,
                     const std::function<double(std::size_t, double)>& f) {
    const double lo = std::clamp(level - spread, 0.0, 1.0);
    const double hi = std::clamp(level + spread, 0.0, 1.0);
    ExpectedScore out{0.0, 1e300, -1e300};
    constexpr int kGrid = 2001;
    double total = 0.0;
    std::size_t cells = 0;
    for (std::size_t n = counts.min; n <= counts.max; ++n) {
        out.lower = std::min({out.lower, f(n, lo), f(n, hi)});
        out.upper = std::max({out.upper, f(n, lo), f(n, hi)});
        if (spread <= 0.0) {
            total += f(n, level);
            ++cells;
            continue;
        }
        for (int g = 0; g < kGrid; ++g) {
            const double u = -spread + 2.0 * spread * (g + 0.5) / kGrid;
            total += f(n, std::clamp(level + u, 0.0, 1.0));
            ++cells;
        }
    }
    out.expected = total / static_cast<double>(cells);
    return out;
}

double fraction(double level, std::size_t n) {
    return static_cast<double>(planted_count(level, n)) / static_cast<double>(n);
}

} // namespace

PlantedExpectation planted_score_oracle(const SynthSpec& spec) {
    spec.validate();
    PlantedExpectation out;
    const double spread = spec.level_spread;
    out.ic = expect(spec.objects_per_event, spec.planted.ic, spread, [](std::size_t n, double l) { return fraction(l, n); });
    out.spc = expect(spec.objects_per_event, spec.planted.spc, spread, [](std::size_t n, double l) { return fraction(l, n); });
    out.sc = expect(spec.regions_per_event, spec.planted.sc, spread, [](std::size_t, double l) { return l; });
    // Rounding in the embedding construction; cosines are exact otherwise.
    out.sc.lower -= 1e-12;
    out.sc.upper += 1e-12;

    CountRange scored{std::min<std::size_t>(spec.qa_per_event.min, 3), std::min<std::size_t>(spec.qa_per_event.max, 3)};
    if (scored.min == 0) scored.min = 1; // events without QA have no DC and do not enter the mean
    if (!spec.dc_tracks_sc) {
        out.dc = expect(scored, spec.planted.dc, spread, [](std::size_t k, double l) { return fraction(l, k); });
        return out;
    }
    // Tracking: the DC level is itself uniform around gain * sc_level, so
    // average the inner expectation over the SC level.
    const double gain = spec.dc_track_gain;
    const double noise = spec.dc_track_noise;
    out.dc = expect(scored, spec.planted.sc, spread, [&](std::size_t k, double l) {
        return expect({k, k}, gain * l, noise, [](std::size_t kk, double d) { return fraction(d, kk); }).expected;
    });
    // The outer range only sees the inner mean; widen to the extreme levels.
    const double lo = std::clamp(gain * std::clamp(spec.planted.sc - spread, 0.0, 1.0) - noise, 0.0, 1.0);
    const double hi = std::clamp(gain * std::clamp(spec.planted.sc + spread, 0.0, 1.0) + noise, 0.0, 1.0);
    for (std::size_t k = scored.min; k <= scored.max; ++k) {
        out.dc.lower = std::min(out.dc.lower, fraction(lo, k));
        out.dc.upper = std::max(out.dc.upper, fraction(hi, k));
    }
    return out;
}

} // namespace mcs
