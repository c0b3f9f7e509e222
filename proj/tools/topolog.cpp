// topolog: command-line front end for the log-topology feature pipeline.
//
// Exit status: 0 success, 2 usage or data error, 1 internal error.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "topolog/topolog.hpp"

namespace fs = std::filesystem;
using namespace topolog;

namespace {

constexpr int kExitData = 2;
constexpr int kExitInternal = 1;

std::uint64_t default_seed() {
    if (const char* env = std::getenv("TOPOLOG_SEED")) {
        char* end = nullptr;
        const auto v = std::strtoull(env, &end, 10);
        if (end != env && *end == '\0') return v;
        throw Error(ErrorCode::DegenerateConfig, "TOPOLOG_SEED is not an unsigned integer");
    }
    return 0;
}

std::vector<Family> parse_families(const std::vector<std::string>& names) {
    std::vector<Family> out;
    for (const auto& n : names) {
        const auto f = parse_family(n);
        if (!f) throw Error(ErrorCode::DegenerateConfig, "unknown feature family '" + n + "'");
        if (std::find(out.begin(), out.end(), *f) == out.end()) out.push_back(*f);
    }
    return out;
}

EdgePolicy parse_policy(const std::string& name) {
    if (name == "semantic_pairs") return EdgePolicy::SemanticPairs;
    if (name == "clique_per_event") return EdgePolicy::CliquePerEvent;
    throw Error(ErrorCode::DegenerateConfig, "unknown edge policy '" + name + "'");
}

struct GenArgs {
    std::optional<std::uint64_t> seed;
    std::size_t runs = 200;
    double anomaly_frac = 0.5;
    double duration = 180.0;
    bool null_profile = false;
    std::string out;
    unsigned jobs = 1;
};

struct FeatureArgs {
    std::string dataset;
    int construction = 1;
    std::vector<std::string> families{"counts", "ph", "gl", "hl", "counts_gl"};
    int resolution = 20;
    bool induced = false;
    std::string edge_policy = "semantic_pairs";
    std::string out = "features.csv";
    unsigned jobs = 1;
};

struct ClassifyArgs {
    std::string features;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> families;
    std::string out_dir = ".";
    unsigned jobs = 1;
};

struct ImportanceArgs {
    std::string report;
    std::string features;
    std::vector<std::string> families;
    std::string out_dir = ".";
    std::string dataset;
    std::string run_id;
    std::string eigen_family = "gl";
    std::size_t eigen_index = 0;
    int construction = 1;
    bool induced = false;
    std::string edge_policy = "semantic_pairs";
};

struct DiagramArgs {
    std::string run;
    int construction = 1;
    bool induced = false;
    std::string edge_policy = "semantic_pairs";
    std::string emit_complex;
    std::string out;
};

int cmd_gen(const GenArgs& a) {
    GenConfig cfg;
    cfg.seed = a.seed.value_or(default_seed());
    cfg.n_runs = a.runs;
    cfg.anomaly_fraction = a.anomaly_frac;
    cfg.run_duration = a.duration;
    cfg.jobs = a.jobs;
    if (a.null_profile) cfg.anomalous = cfg.benign;
    const auto runs = generate(cfg);
    write_dataset(runs, cfg, a.out);
    std::cout << "wrote " << runs.size() << " runs to " << a.out << "\n";
    return 0;
}

int cmd_features(const FeatureArgs& a) {
    FeatureOptions opts;
    opts.construction = construction_by_number(a.construction);
    opts.families = parse_families(a.families);
    if (opts.families.empty()) throw Error(ErrorCode::DegenerateConfig, "no feature families requested");
    if (a.resolution < 1) throw Error(ErrorCode::DegenerateConfig, "resolution must be positive");
    opts.resolution = a.resolution;
    opts.induced_2simplices = a.induced;
    opts.edge_policy = parse_policy(a.edge_policy);
    opts.jobs = a.jobs;
    const auto runs = load_dataset(a.dataset);
    const auto m = compute_features(runs, opts);
    write_file(a.out, features_to_csv(m));
    std::cout << "wrote " << m.rows() << " rows x " << m.cols() << " features to " << a.out << "\n";
    return 0;
}

int cmd_classify(const ClassifyArgs& a) {
    const auto m = features_from_csv(read_text_file(a.features), a.features);
    const auto families = a.families.empty() ? families_present(m) : parse_families(a.families);
    if (families.empty()) throw Error(ErrorCode::MissingFeatureFamily, "no feature families in " + a.features);
    ForestConfig cfg;
    cfg.seed = a.seed.value_or(default_seed());
    cfg.jobs = a.jobs;
    const auto result = classify(m, families, cfg);
    const fs::path dir(a.out_dir);
    write_file(dir / "report.json", report_json(result));
    const auto table = results_table(result);
    write_file(dir / "table.txt", table);
    std::cout << table;
    return 0;
}

int cmd_importance(const ImportanceArgs& a) {
    const auto report = parse_report(read_text_file(a.report));
    const auto features = features_from_csv(read_text_file(a.features), a.features);
    std::vector<Family> wanted;
    if (a.families.empty()) {
        for (const auto& r : report) wanted.push_back(r.family);
    } else {
        wanted = parse_families(a.families);
    }
    const auto files = write_importance(report, features, wanted, a.out_dir);
    for (const auto& p : files.written) std::cout << p.string() << "\n";

    if (!a.run_id.empty()) {
        if (a.dataset.empty()) throw Error(ErrorCode::DegenerateConfig, "--run requires --dataset");
        const auto fam = parse_families({a.eigen_family}).front();
        FeatureOptions opts;
        opts.construction = construction_by_number(a.construction);
        opts.induced_2simplices = a.induced;
        opts.edge_policy = parse_policy(a.edge_policy);
        const Run run = read_run_file(fs::path(a.dataset) / (a.run_id + ".jsonl"));
        const auto path = fs::path(a.out_dir) /
                          (a.run_id + "_" + a.eigen_family + "_eigvec_" + std::to_string(a.eigen_index) + ".csv");
        write_file(path, eigenvector_csv(run, fam, a.eigen_index, opts));
        std::cout << path.string() << "\n";
    }
    return 0;
}

int cmd_diagram(const DiagramArgs& a) {
    FeatureOptions opts;
    opts.construction = construction_by_number(a.construction);
    opts.induced_2simplices = a.induced;
    opts.edge_policy = parse_policy(a.edge_policy);
    const auto out = run_diagrams(read_run_file(a.run), opts);
    nlohmann::ordered_json j = nlohmann::ordered_json::array({diagram_json(out.h0), diagram_json(out.h1)});
    const std::string text = j.dump(2) + "\n";
    if (a.out.empty()) std::cout << text;
    else write_file(a.out, text);
    if (!a.emit_complex.empty()) write_file(a.emit_complex, complex_json(out.complex).dump(2) + "\n");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Topological and spectral features of host event logs"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "Generate a seeded synthetic dataset");
    g->add_option("--seed", gen.seed, "PRNG seed (default: $TOPOLOG_SEED or 0)");
    g->add_option("--runs", gen.runs, "Number of runs")->capture_default_str();
    g->add_option("--anomaly-frac", gen.anomaly_frac, "Fraction of anomalous runs")->capture_default_str();
    g->add_option("--duration", gen.duration, "Run length in seconds")->capture_default_str();
    g->add_flag("--null-profile", gen.null_profile, "Use the benign profile for anomalous runs too");
    g->add_option("--out", gen.out, "Output directory")->required();
    g->add_option("--jobs", gen.jobs, "Worker threads")->capture_default_str();

    FeatureArgs feat;
    auto* f = app.add_subcommand("features", "Compute the feature CSV of a dataset");
    f->add_option("--dataset", feat.dataset, "Directory of *.jsonl runs")->required();
    f->add_option("--construction", feat.construction, "1 or 2")->capture_default_str();
    f->add_option("--features", feat.families, "Families: counts ph gl hl counts_gl")->delimiter(',')->capture_default_str();
    f->add_option("--resolution", feat.resolution, "Persistence image pixels per axis")->capture_default_str();
    f->add_flag("--induced", feat.induced, "Add induced 2-simplices");
    f->add_option("--edge-policy", feat.edge_policy, "semantic_pairs or clique_per_event")->capture_default_str();
    f->add_option("--out", feat.out, "Output CSV")->capture_default_str();
    f->add_option("--jobs", feat.jobs, "Worker threads")->capture_default_str();

    ClassifyArgs cls;
    auto* c = app.add_subcommand("classify", "10-fold cross-validated random forest per feature family");
    c->add_option("--features", cls.features, "Feature CSV")->required();
    c->add_option("--seed", cls.seed, "Forest and fold seed (default: $TOPOLOG_SEED or 0)");
    c->add_option("--families", cls.families, "Families to evaluate (default: all present)")->delimiter(',');
    c->add_option("--out-dir", cls.out_dir, "Where report.json and table.txt go")->capture_default_str();
    c->add_option("--jobs", cls.jobs, "Worker threads")->capture_default_str();

    ImportanceArgs imp;
    auto* i = app.add_subcommand("importance", "Emit MDI importances as plot-ready CSV");
    i->add_option("--report", imp.report, "report.json from classify")->required();
    i->add_option("--features", imp.features, "Feature CSV the report was computed from")->required();
    i->add_option("--families", imp.families, "Families to emit (default: all in report)")->delimiter(',');
    i->add_option("--out-dir", imp.out_dir, "Output directory")->capture_default_str();
    i->add_option("--dataset", imp.dataset, "Dataset directory, for per-node eigenvector output");
    i->add_option("--run", imp.run_id, "Run id whose eigenvector to emit");
    i->add_option("--eigen-family", imp.eigen_family, "gl or hl")->capture_default_str();
    i->add_option("--eigen-index", imp.eigen_index, "0 = largest eigenvalue")->capture_default_str();
    i->add_option("--construction", imp.construction, "1 or 2")->capture_default_str();
    i->add_flag("--induced", imp.induced, "Add induced 2-simplices");
    i->add_option("--edge-policy", imp.edge_policy, "semantic_pairs or clique_per_event")->capture_default_str();

    DiagramArgs dia;
    auto* d = app.add_subcommand("diagram", "Persistence diagrams of one run as JSON");
    d->add_option("--run", dia.run, "Run *.jsonl file")->required();
    d->add_option("--construction", dia.construction, "1 or 2")->capture_default_str();
    d->add_flag("--induced", dia.induced, "Add induced 2-simplices");
    d->add_option("--edge-policy", dia.edge_policy, "semantic_pairs or clique_per_event")->capture_default_str();
    d->add_option("--emit-complex", dia.emit_complex, "Also write the filtered complex as JSON");
    d->add_option("--out", dia.out, "Write diagrams here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitData;
    }

    try {
        if (g->parsed()) return cmd_gen(gen);
        if (f->parsed()) return cmd_features(feat);
        if (c->parsed()) return cmd_classify(cls);
        if (i->parsed()) return cmd_importance(imp);
        if (d->parsed()) return cmd_diagram(dia);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitInternal;
}
