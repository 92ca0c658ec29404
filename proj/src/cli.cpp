#include "mcs/cli.hpp"

#include "mcs/bundle.hpp"
#include "mcs/error.hpp"
#include "mcs/fusion.hpp"
#include "mcs/metrics.hpp"
#include "mcs/optimize.hpp"
#include "mcs/perturb.hpp"
#include "mcs/stats.hpp"
#include "mcs/synth.hpp"
#include "mcs/weights.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

namespace mcs::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

// Bad flag values found after CLI11 has accepted the command line.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string bundle;
    std::string label_map;
    std::string weights;
    std::optional<std::uint64_t> seed;
    std::string rates;
    std::string arch;
    std::string out = ".";
    std::string format = "structured";
    std::string mode = "strict";
    std::size_t perm = 10000;
    unsigned threads = 0;
    // generate
    std::size_t n_events = 200;
    std::string levels = "0.8,0.8,0.8,0.8";
    double spread = 0.0;
    std::size_t dim = 128;
};

std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
        if (used == 0 || used != item.size()) throw UsageError(std::string("bad number in ") + what + ": '" + item + "'");
        values.push_back(v);
    }
    if (values.empty()) throw UsageError(std::string(what) + " is empty");
    return values;
}

std::ifstream open_input(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, std::string("cannot read ") + what + " '" + path + "'");
    return in;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
    body(out);
    if (!out) throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

fs::path output_dir(const Options& o) {
    std::error_code ec;
    fs::create_directories(o.out, ec);
    if (ec || !fs::is_directory(o.out)) throw Error(ErrorCode::Io, "output directory '" + o.out + "' is not usable");
    return fs::path(o.out);
}

LabelMap load_map(const Options& o) {
    if (o.label_map.empty()) return {};
    auto in = open_input(o.label_map, "label map");
    return load_label_map(in);
}

EventBundle load_bundle(const Options& o, std::ostream& err) {
    const LabelMap map = load_map(o);
    auto in = open_input(o.bundle, "bundle");
    auto result = parse_bundle(in, map, o.mode == "lenient" ? ParseMode::Lenient : ParseMode::Strict);
    for (const auto& d : result.skipped) {
        err << "skipped line " << d.line << (d.event_id.empty() ? "" : " (" + d.event_id + ")") << ": " << d.code
            << ": " << d.message << '\n';
    }
    return std::move(result.bundle);
}

WeightVector load_weight_option(const Options& o) {
    if (o.weights.empty()) return WeightVector::equal();
    if (fs::is_regular_file(o.weights)) {
        auto in = open_input(o.weights, "weights");
        return read_weights(in).weights;
    }
    return parse_inline_weights(o.weights);
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json aggregate_json(const DimensionAggregate& a) { return {{"mean", optional_json(a.mean)}, {"count", a.count}}; }

std::string table_cell(const DimensionAggregate& a) {
    if (!a.mean) return "      -";
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%7.3f", *a.mean);
    return buf;
}

void write_summary_row(const std::string& name, const BundleAggregates& a, std::ostream& out) {
    char head[32];
    std::snprintf(head, sizeof(head), "%-12s", name.c_str());
    out << head << table_cell(a.ic) << ' ' << table_cell(a.spc) << ' ' << table_cell(a.sc) << ' ' << table_cell(a.dc)
        << ' ' << table_cell(a.mcs) << '\n';
}

constexpr const char* kSummaryHeader = "Architecture       IC     SpC      SC      DC     MCS\n";

// ---------------------------------------------------------------------------

int cmd_validate(const Options& o, std::ostream& out) {
    auto in = open_input(o.bundle, "bundle");
    const auto diagnostics = audit_bundle(in);
    for (const auto& d : diagnostics) {
        out << "line " << d.line << '\t' << (d.event_id.empty() ? "-" : d.event_id) << '\t' << d.code << '\t'
            << d.message << '\n';
    }
    return diagnostics.empty() ? kExitOk : kExitFailure;
}

void write_scores_json(const std::vector<EventScores>& scores, std::ostream& out) {
    Json rows = Json::array();
    for (const auto& s : scores) {
        rows.push_back({{"event_id", s.event_id},
                        {"ic", optional_json(s.ic)},
                        {"spc", optional_json(s.spc)},
                        {"sc", optional_json(s.sc)},
                        {"dc", optional_json(s.dc)},
                        {"mcs", optional_json(s.mcs)},
                        {"flags", s.flags}});
    }
    out << rows.dump(2) << '\n';
}

void write_scores_table(const std::vector<EventScores>& scores, std::ostream& out) {
    auto cell = [](const std::optional<double>& v) {
        char buf[16];
        if (v) {
            std::snprintf(buf, sizeof(buf), "%7.3f", *v);
        } else {
            std::snprintf(buf, sizeof(buf), "%7s", "-");
        }
        return std::string(buf);
    };
    out << "Event                    IC     SpC      SC      DC     MCS  Flags\n";
    for (const auto& s : scores) {
        char head[32];
        std::snprintf(head, sizeof(head), "%-20s", s.event_id.c_str());
        out << head << cell(s.ic) << ' ' << cell(s.spc) << ' ' << cell(s.sc) << ' ' << cell(s.dc) << ' '
            << cell(s.mcs);
        for (std::size_t i = 0; i < s.flags.size(); ++i) out << (i == 0 ? "  " : ";") << s.flags[i];
        out << '\n';
    }
}

int cmd_score(const Options& o, std::ostream& out, std::ostream& err) {
    const std::string arch_name = o.arch.empty() ? "naive" : o.arch;
    const auto arch = parse_architecture(arch_name);
    if (!arch) throw UsageError("score takes a single architecture, not '" + arch_name + "'");
    const auto weights = load_weight_option(o);
    const auto dir = output_dir(o);
    auto bundle = load_bundle(o, err);
    if (*arch != Architecture::Naive) bundle = transform_bundle(*arch, bundle, {});
    const auto scores = score_bundle(bundle, {}, weights, o.threads);

    if (o.format == "csv") {
        write_file(dir / "scores.csv", [&](std::ostream& f) { write_scores_csv(scores.events, f); });
    } else if (o.format == "structured") {
        write_file(dir / "scores.json", [&](std::ostream& f) { write_scores_json(scores.events, f); });
    } else {
        write_file(dir / "scores.txt", [&](std::ostream& f) { write_scores_table(scores.events, f); });
    }

    Json summary;
    summary["architecture"] = arch_name;
    summary["n_events"] = scores.events.size();
    summary["weights"] = {{"ic", weights.ic()}, {"spc", weights.spc()}, {"sc", weights.sc()}, {"dc", weights.dc()}};
    const auto& a = scores.aggregates;
    summary["dimensions"] = {{"ic", aggregate_json(a.ic)},
                             {"spc", aggregate_json(a.spc)},
                             {"sc", aggregate_json(a.sc)},
                             {"dc", aggregate_json(a.dc)},
                             {"mcs", aggregate_json(a.mcs)}};
    write_file(dir / "summary.json", [&](std::ostream& f) { f << summary.dump(2) << '\n'; });

    out << kSummaryHeader;
    write_summary_row(arch_name, a, out);
    return kExitOk;
}

void write_comparison_csv(const ArchitectureComparison& cmp, std::ostream& out) {
    out << "dimension,naive_mean,contract_mean,foundation_mean,n_naive,n_contract,n_foundation,h,p,all_tied\n";
    for (const auto& t : cmp.tests) {
        out << dimension_name(t.dimension);
        for (auto arch : kAllArchitectures) {
            const auto& a = cmp.aggregates(arch);
            const DimensionAggregate* d = nullptr;
            switch (t.dimension) {
            case Dimension::Ic: d = &a.ic; break;
            case Dimension::Spc: d = &a.spc; break;
            case Dimension::Sc: d = &a.sc; break;
            case Dimension::Dc: d = &a.dc; break;
            case Dimension::Mcs: d = &a.mcs; break;
            }
            out << ',' << (d->mean ? format_real(*d->mean) : "");
        }
        for (auto n : t.n_per_group) out << ',' << n;
        out << ',' << format_real(t.h) << ',' << format_real(t.p) << ',' << (t.all_tied ? "true" : "false") << '\n';
    }
}

int cmd_compare(const Options& o, std::ostream& out, std::ostream& err) {
    if (!o.arch.empty() && o.arch != "all") throw UsageError("compare runs every architecture; use --arch all");
    const auto weights = load_weight_option(o);
    const auto dir = output_dir(o);
    const auto bundle = load_bundle(o, err);
    const auto cmp = compare_architectures(bundle, {}, {}, weights, o.threads);
    if (o.format == "csv") {
        write_file(dir / "comparison.csv", [&](std::ostream& f) { write_comparison_csv(cmp, f); });
    } else if (o.format == "structured") {
        write_file(dir / "comparison.json", [&](std::ostream& f) { write_comparison_json(cmp, f); });
    } else {
        write_file(dir / "comparison.txt", [&](std::ostream& f) { write_comparison_table(cmp, f); });
    }
    write_comparison_table(cmp, out);
    return kExitOk;
}

void write_impact_csv(const PerturbationImpactMatrix& m, const std::vector<CrosstalkVerdict>& verdicts,
                      std::ostream& out) {
    auto f = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string(); };
    out << "kind,rate,d_ic,d_spc,d_sc,d_mcs,events_clamp_limited,verdict\n";
    for (std::size_t i = 0; i < m.cells.size(); ++i) {
        const auto& c = m.cells[i];
        out << perturbation_name(c.kind) << ',' << format_real(c.rate) << ',' << f(c.d_ic) << ',' << f(c.d_spc) << ','
            << f(c.d_sc) << ',' << f(c.d_mcs) << ',' << c.events_clamp_limited << ','
            << (verdicts[i].verdict == Verdict::Pass ? "PASS" : "FAIL") << '\n';
    }
}

int cmd_perturb(const Options& o, std::ostream& out, std::ostream& err) {
    SuiteOptions suite;
    if (!o.rates.empty()) {
        suite.rates = parse_list(o.rates, "--rates");
        for (double r : suite.rates) {
            if (!(r > 0.0 && r <= 1.0)) throw UsageError("rates must lie in (0, 1], got " + format_real(r));
        }
    }
    suite.seed = *o.seed;
    suite.width = o.threads;
    const auto dir = output_dir(o);
    const auto bundle = load_bundle(o, err);
    const auto matrix = run_perturbation_suite(bundle, suite);
    const auto verdicts = crosstalk_check(matrix);
    if (o.format == "csv") {
        write_file(dir / "impact.csv", [&](std::ostream& f) { write_impact_csv(matrix, verdicts, f); });
    } else if (o.format == "structured") {
        write_file(dir / "impact.json", [&](std::ostream& f) { write_impact_json(matrix, verdicts, f); });
    } else {
        write_file(dir / "impact.txt", [&](std::ostream& f) { write_impact_table(matrix, verdicts, f); });
    }
    write_impact_table(matrix, verdicts, out);
    return kExitOk;
}

int cmd_learn_weights(const Options& o, std::ostream& out, std::ostream& err) {
    if (o.perm < 1000) throw UsageError("--perm must be at least 1000");
    const auto dir = output_dir(o);
    const auto bundle = load_bundle(o, err);
    const auto scores = score_bundle(bundle, {}, WeightVector::equal(), o.threads);

    NelderMeadOptions nm;
    nm.seed = *o.seed;
    nm.width = o.threads;
    const auto learned = learn_weights(scores.events, nm);

    WeightsDocument doc;
    doc.weights = learned.weights;
    doc.rho = learned.rho;
    doc.n_events = learned.n_events;
    doc.seed = *o.seed;
    write_file(dir / "weights.json", [&](std::ostream& f) { write_weights(doc, f); });

    std::vector<double> comp, dc;
    for (const auto& s : scores.events) {
        if (s.ic && s.spc && s.sc && s.dc) {
            comp.push_back(learned.weights.ic() * *s.ic + learned.weights.spc() * *s.spc +
                           learned.weights.sc() * *s.sc);
            dc.push_back(*s.dc);
        }
    }

    char line[160];
    std::snprintf(line, sizeof(line), "weights  w_ic = %.4f  w_spc = %.4f  w_sc = %.4f  (n = %zu)\n",
                  learned.weights.ic(), learned.weights.spc(), learned.weights.sc(), learned.n_events);
    out << line;
    out << "Dimension     rho\n";
    const char* names[] = {"IC", "SpC", "SC"};
    double best_single = -1.0;
    for (std::size_t d = 0; d < 3; ++d) {
        if (learned.single_rho[d]) {
            std::snprintf(line, sizeof(line), "%-9s %7.4f\n", names[d], *learned.single_rho[d]);
            best_single = std::max(best_single, *learned.single_rho[d]);
        } else {
            std::snprintf(line, sizeof(line), "%-9s %7s\n", names[d], "-");
        }
        out << line;
    }
    std::snprintf(line, sizeof(line), "%-9s %7.4f", "MCS", learned.rho);
    out << line;
    if (std::adjacent_find(comp.begin(), comp.end(), std::not_equal_to<>()) != comp.end()) {
        const auto test = stats::spearman_test(comp, dc, stats::PValueMethod::Permutation, o.perm, *o.seed, o.threads);
        std::snprintf(line, sizeof(line), "  p = %.4g (%zu permutations)", test.p, o.perm);
        out << line;
    }
    out << '\n' << "composite rho " << (learned.rho >= best_single ? ">=" : "<") << " every single dimension\n";
    return kExitOk;
}

int cmd_generate(const Options& o, std::ostream& out) {
    const auto levels = parse_list(o.levels, "--levels");
    if (levels.size() != 4) throw UsageError("--levels takes four values: ic,spc,sc,dc");
    SynthSpec spec;
    spec.n_events = o.n_events;
    spec.planted = {levels[0], levels[1], levels[2], levels[3]};
    spec.level_spread = o.spread;
    spec.embedding_dim = o.dim;
    spec.seed = *o.seed;
    const auto bundle = generate_bundle(spec, o.threads);
    write_file(o.out, [&](std::ostream& f) { serialize_bundle(bundle, f); });
    out << "wrote " << bundle.events.size() << " events to " << o.out << '\n';
    return kExitOk;
}

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::Io:
    case ErrorCode::MissingInput:
    case ErrorCode::InvalidArgument:
        return kExitUsage;
    default:
        return kExitFailure;
    }
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Multimodal coherence scoring"};
    app.name("mcs");
    app.require_subcommand(1);

    const std::vector<std::string> formats{"csv", "structured", "text-table"};
    const std::vector<std::string> modes{"strict", "lenient"};
    auto common = [&](CLI::App* sub) {
        sub->add_option("--bundle", o.bundle, "Bundle file (mcs-bundle/1)")->required();
        sub->add_option("--threads", o.threads, "Worker threads; 0 uses every core");
    };
    auto analysis = [&](CLI::App* sub) {
        common(sub);
        sub->add_option("--label-map", o.label_map, "Label map JSON document");
        sub->add_option("--out", o.out, "Output directory");
        sub->add_option("--format", o.format, "Report format")->check(CLI::IsMember(formats));
        sub->add_option("--mode", o.mode, "Parse mode")->check(CLI::IsMember(modes));
    };

    auto* validate = app.add_subcommand("validate", "Check every event against the bundle invariants");
    common(validate);

    auto* score = app.add_subcommand("score", "Score every event and summarize");
    analysis(score);
    score->add_option("--weights", o.weights, "Weights file or inline 'ic,spc,sc[,dc]'");
    score->add_option("--arch", o.arch, "Fusion architecture applied before scoring")
        ->check(CLI::IsMember({"naive", "contract", "foundation"}));

    auto* compare = app.add_subcommand("compare", "Compare fusion architectures with Kruskal-Wallis");
    analysis(compare);
    compare->add_option("--weights", o.weights, "Weights file or inline 'ic,spc,sc[,dc]'");
    compare->add_option("--arch", o.arch, "Architectures to compare")->check(CLI::IsMember({"all"}));

    auto* perturb = app.add_subcommand("perturb", "Run the perturbation suite and crosstalk check");
    analysis(perturb);
    perturb->add_option("--seed", o.seed, "Seed")->required();
    perturb->add_option("--rates", o.rates, "Comma-separated rates in (0, 1]");

    auto* learn = app.add_subcommand("learn-weights", "Learn composite weights against DC");
    analysis(learn);
    learn->add_option("--seed", o.seed, "Seed")->required();
    learn->add_option("--perm", o.perm, "Permutations for the p-value");

    auto* generate = app.add_subcommand("generate", "Write a synthetic bundle with planted coherence");
    generate->add_option("--out", o.out, "Bundle file to write")->required();
    generate->add_option("--seed", o.seed, "Seed")->required();
    generate->add_option("--n-events", o.n_events, "Number of events");
    generate->add_option("--levels", o.levels, "Planted levels 'ic,spc,sc,dc'");
    generate->add_option("--spread", o.spread, "Per-event level jitter");
    generate->add_option("--dim", o.dim, "Embedding dimension");
    generate->add_option("--threads", o.threads, "Worker threads; 0 uses every core");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (validate->parsed()) return cmd_validate(o, out);
        if (score->parsed()) return cmd_score(o, out, err);
        if (compare->parsed()) return cmd_compare(o, out, err);
        if (perturb->parsed()) return cmd_perturb(o, out, err);
        if (learn->parsed()) return cmd_learn_weights(o, out, err);
        if (generate->parsed()) return cmd_generate(o, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

} // namespace mcs::cli
