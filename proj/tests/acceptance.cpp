// Acceptance run: one PASS/FAIL line per criterion; exit status 1 on any FAIL.

#include "fixtures.hpp"
#include "oracles.hpp"

#include "mcs/bundle.hpp"
#include "mcs/cli.hpp"
#include "mcs/fusion.hpp"
#include "mcs/metrics.hpp"
#include "mcs/optimize.hpp"
#include "mcs/perturb.hpp"
#include "mcs/rng.hpp"
#include "mcs/stats.hpp"
#include "mcs/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace mcs;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
    const auto start = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (!o.pass) ++failures;
    std::ostringstream line;
    line.setf(std::ios::fixed);
    line.precision(2);
    line << (o.pass ? "PASS" : "FAIL") << "  criterion " << id << "  " << title << "  [" << o.detail << "; " << secs
         << " s]";
    std::cout << line.str() << std::endl;
}

std::string fmt(double v, int digits = 4) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
}

bool is_constant(const std::vector<double>& v) {
    return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
}

std::optional<double> target_delta(const ImpactCell& c) {
    switch (c.kind) {
    case PerturbationKind::ObjectSwap: return c.d_ic;
    case PerturbationKind::BboxShuffle: return c.d_spc;
    case PerturbationKind::CaptionSwap: return c.d_sc;
    case PerturbationKind::Compound: return c.d_mcs;
    }
    return std::nullopt;
}

EventBundle coherent(std::size_t n, std::uint64_t seed) {
    SynthSpec spec;
    spec.n_events = n;
    spec.planted = {0.8, 0.8, 0.8, 0.8};
    spec.seed = seed;
    return generate_bundle(spec, 0);
}

Outcome composite_vs_table() {
    const auto w = WeightVector::make(0.002, 0.276, 0.722);
    struct Row {
        double ic, spc, sc, expected;
    };
    const Row rows[] = {{0.121, 0.239, 0.204, 0.214}, {0.272, 0.500, 0.265, 0.330}, {0.219, 0.360, 0.238, 0.271}};
    bool ok = true;
    std::string detail;
    for (const auto& r : rows) {
        EventScores s;
        s.ic = r.ic;
        s.spc = r.spc;
        s.sc = r.sc;
        const double got = *composite(s, w);
        ok = ok && std::abs(got - r.expected) <= 0.002;
        detail += fmt(got) + " vs " + fmt(r.expected, 3) + " ";
    }
    return {ok, detail};
}

Outcome decomposition() {
    const auto bundle = coherent(200, 7);
    SuiteOptions opts;
    opts.rates = {0.5};
    opts.seed = 2024;
    opts.width = 0;
    const auto m = run_perturbation_suite(bundle, opts);
    const auto verdicts = crosstalk_check(m);
    bool ok = true;
    std::string detail;
    for (const auto& c : m.cells) {
        const auto target = target_delta(c);
        detail += std::string(perturbation_name(c.kind)) + " " + (target ? fmt(*target, 3) : "n/a") + " ";
        if (c.kind == PerturbationKind::Compound) {
            ok = ok && c.d_ic && c.d_spc && c.d_sc && std::abs(*c.d_ic) > 0.2 && std::abs(*c.d_spc) > 0.2 &&
                 std::abs(*c.d_sc) > 0.2;
            continue;
        }
        ok = ok && target && std::abs(*target) > 0.2;
        for (const auto& d : {c.d_ic, c.d_spc, c.d_sc}) {
            if (d == target) continue;
            ok = ok && d && std::abs(*d) <= 1e-12;
        }
    }
    for (const auto& v : verdicts) ok = ok && v.verdict == Verdict::Pass;
    return {ok, detail};
}

Outcome rate_monotonicity() {
    const auto bundle = coherent(1000, 11);
    SuiteOptions opts;
    opts.seed = 99;
    opts.width = 0;
    const auto m = run_perturbation_suite(bundle, opts);
    bool ok = true;
    std::string detail;
    for (auto kind : kAllPerturbations) {
        std::vector<double> x, y;
        for (double rate : kProtocolRates) {
            const auto t = target_delta(*m.find(kind, rate));
            if (!t) return {false, "missing delta"};
            x.push_back(rate);
            y.push_back(std::abs(*t));
        }
        ok = ok && std::is_sorted(y.begin(), y.end());
        const double r2 = oracle::r_squared(x, y);
        ok = ok && r2 > 0.95;
        detail += std::string(perturbation_name(kind)) + " R2=" + fmt(r2) + " ";
    }
    return {ok, detail};
}

Outcome weight_learning() {
    SynthSpec spec;
    spec.n_events = 300;
    spec.planted = {0.5, 0.5, 0.5, 0.5};
    spec.level_spread = 0.4;
    spec.dc_tracks_sc = true;
    spec.dc_track_gain = 0.9;
    spec.dc_track_noise = 0.1;
    spec.seed = 31;
    const auto scores = score_bundle(generate_bundle(spec, 0), {}, WeightVector::equal(), 0).events;

    NelderMeadOptions opts;
    opts.seed = 5;
    opts.width = 0;
    const auto learned = learn_weights(scores, opts);

    std::vector<std::array<double, 3>> dims;
    std::vector<double> dc;
    for (const auto& s : scores) {
        dims.push_back({*s.ic, *s.spc, *s.sc});
        dc.push_back(*s.dc);
    }
    auto rho_at = [&](double a, double b, double c) {
        std::vector<double> comp;
        for (const auto& d : dims) comp.push_back(a * d[0] + b * d[1] + c * d[2]);
        return is_constant(comp) ? 0.0 : oracle::spearman(comp, dc);
    };
    double grid = -2.0;
    for (int i = 0; i <= 100; ++i) {
        for (int j = 0; i + j <= 100; ++j) grid = std::max(grid, rho_at(i / 100.0, j / 100.0, (100 - i - j) / 100.0));
    }
    bool ok = learned.weights.sc() >= 0.8 && learned.rho >= grid - 0.02;
    for (const auto& single : learned.single_rho) ok = ok && (!single || learned.rho >= *single);
    return {ok, "w=(" + fmt(learned.weights.ic(), 3) + "," + fmt(learned.weights.spc(), 3) + "," +
                    fmt(learned.weights.sc(), 3) + ") rho=" + fmt(learned.rho) + " grid=" + fmt(grid)};
}

Outcome statistics_oracles() {
    double spearman_err = 0.0;
    std::size_t compared = 0;
    Rng rng(2024);
    for (std::size_t n = 3; n <= 8; ++n) {
        std::vector<std::vector<double>> ys;
        for (int k = 0; k < 4; ++k) {
            std::vector<double> y(n);
            for (auto& e : y) e = static_cast<double>(uniform_index(rng, k + 2)) * 0.5;
            if (!is_constant(y)) ys.push_back(y);
        }
        std::vector<double> x(n, 0.0);
        for (;;) {
            if (!is_constant(x)) {
                for (const auto& y : ys) {
                    spearman_err = std::max(spearman_err, std::abs(stats::spearman(x, y) - oracle::spearman(x, y)));
                    ++compared;
                }
            }
            std::size_t i = 0;
            while (i < n && x[i] == 2.0) x[i++] = 0.0;
            if (i == n) break;
            x[i] += 1.0;
        }
    }

    const double h = stats::kruskal_wallis({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}}).h;
    double kw_err = 0.0;
    int fixtures = 0;
    Rng krng(50);
    while (fixtures < 50) {
        std::vector<std::vector<double>> groups(2 + uniform_index(krng, 3));
        for (auto& g : groups) {
            g.resize(2 + uniform_index(krng, 2));
            for (auto& v : g) v = static_cast<double>(uniform_index(krng, 4));
        }
        std::vector<double> pooled;
        for (const auto& g : groups) pooled.insert(pooled.end(), g.begin(), g.end());
        if (is_constant(pooled)) continue;
        ++fixtures;
        const double want = oracle::kruskal_wallis_h(groups);
        kw_err = std::max(kw_err, std::abs(stats::kruskal_wallis(groups).h - want) / std::max(1.0, want));
    }
    const double sf = stats::chi_square_sf(2.0 * std::log(2.0), 2);

    const bool ok = spearman_err <= 1e-12 && std::abs(h - 7.2) <= 1e-12 && kw_err <= 1e-10 && std::abs(sf - 0.5) <= 1e-10;
    return {ok, std::to_string(compared) + " spearman cases err=" + fmt(spearman_err * 1e12, 3) + "e-12 H=" +
                    fmt(h, 12) + " sf=" + fmt(sf, 12)};
}

Outcome fusion_exactness() {
    const FusionThresholds thr;
    int matched = 0, total = 0;
    for (const auto& c : fixture::fusion_cases()) {
        ++total;
        const auto ct = apply_contract(c.event, thr);
        const auto fd = apply_foundation(c.event, thr);
        std::vector<std::string> co, cr, fo, fr, fq;
        for (const auto& o : ct.objects) co.push_back(o.id);
        for (const auto& r : ct.regions) cr.push_back(r.text);
        for (const auto& o : fd.objects) fo.push_back(o.id);
        for (const auto& r : fd.regions) fr.push_back(r.text);
        for (const auto& q : fd.qa) fq.push_back(q.question);
        const bool ok = co == c.contract_objects && cr == c.contract_regions &&
                        ct.relationships.size() == c.contract_triplets && fo == c.foundation_objects &&
                        fr == c.foundation_regions && fq == c.foundation_qa &&
                        fd.relationships.size() == c.foundation_triplets && apply_contract(ct, thr) == ct &&
                        apply_foundation(fd, thr) == fd;
        if (ok) ++matched;
    }
    return {matched == total && total == 10, std::to_string(matched) + "/" + std::to_string(total) + " events exact"};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism() {
    const auto root = fs::current_path() / "acceptance_tmp";
    fs::remove_all(root);
    fs::create_directories(root);
    const auto bundle_path = root / "bundle.jsonl";
    {
        SynthSpec spec;
        spec.n_events = 120;
        spec.planted = {0.7, 0.7, 0.5, 0.5};
        spec.level_spread = 0.3;
        spec.dc_tracks_sc = true;
        spec.dc_track_gain = 0.9;
        spec.dc_track_noise = 0.1;
        spec.seed = 8;
        std::ofstream f(bundle_path, std::ios::binary);
        serialize_bundle(generate_bundle(spec), f);
    }
    std::ostringstream sink;
    auto run = [&](const std::string& cmd, const std::string& threads, const std::string& tag) {
        const auto dir = root / (cmd + "_" + tag);
        fs::create_directories(dir);
        std::vector<std::string> args{cmd, "--bundle", bundle_path.string(), "--seed", "17", "--out", dir.string(),
                                      "--threads", threads};
        if (cmd == "perturb") args.insert(args.end(), {"--format", "structured"});
        if (cli::run(args, sink, sink) != cli::kExitOk) throw std::runtime_error(cmd + " failed: " + sink.str());
        return dir;
    };
    bool ok = true;
    int comparisons = 0;
    for (const auto& [cmd, file] : {std::pair<std::string, std::string>{"perturb", "impact.json"},
                                    std::pair<std::string, std::string>{"learn-weights", "weights.json"}}) {
        const auto base = slurp(run(cmd, "1", "a") / file);
        for (const auto& [threads, tag] : {std::pair<std::string, std::string>{"1", "b"}, {"4", "c"}, {"0", "d"}}) {
            ok = ok && slurp(run(cmd, threads, tag) / file) == base;
            ++comparisons;
        }
        ok = ok && !base.empty();
    }
    return {ok, std::to_string(comparisons) + " reruns byte-identical"};
}

Outcome validation_round_trip() {
    SynthSpec spec;
    spec.n_events = 100;
    spec.embedding_dim = 16;
    spec.level_spread = 0.3;
    spec.planted = {0.6, 0.7, 0.4, 0.5};
    spec.seed = 99;
    const auto bundle = generate_bundle(spec);
    std::stringstream first;
    serialize_bundle(bundle, first);
    const auto parsed = parse_bundle(first, {});
    bool ok = parsed.bundle.events == bundle.events && parsed.skipped.empty();

    std::set<ViolationCode> reached;
    for (const auto& [code, ev] : fixture::violation_corpus()) {
        const auto r = validate_event(ev);
        bool only = !r.ok();
        for (const auto& v : r.violations) only = only && v.code == code;
        ok = ok && only && reached.insert(code).second;
    }
    ok = ok && reached.size() == std::size(kAllViolationCodes);
    return {ok, "100 events round-trip, " + std::to_string(reached.size()) + " violation codes"};
}

} // namespace

int main() {
    report(1, "composite arithmetic vs table", composite_vs_table);
    report(2, "decomposition at 50% (200 events)", decomposition);
    report(3, "rate monotonicity (1000 events)", rate_monotonicity);
    report(4, "weight learning recovers SC", weight_learning);
    report(5, "statistics oracles", statistics_oracles);
    report(6, "fusion filter exactness", fusion_exactness);
    report(7, "determinism across widths", determinism);
    report(8, "validation and round-trip", validation_round_trip);
    std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
    return failures == 0 ? 0 : 1;
}
