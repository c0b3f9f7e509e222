#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "topolog/complex_builder.hpp"
#include "topolog/counts.hpp"
#include "topolog/csv.hpp"
#include "topolog/error.hpp"
#include "topolog/log_model.hpp"
#include "topolog/ml.hpp"
#include "topolog/parallel.hpp"
#include "topolog/pers_image.hpp"
#include "topolog/persistence.hpp"
#include "topolog/spectral.hpp"

namespace topolog {

enum class Family { Counts, Ph, Gl, Hl, CountsGl };

inline constexpr std::array<Family, 5> kAllFamilies{Family::Counts, Family::Ph, Family::Gl, Family::Hl,
                                                    Family::CountsGl};

inline std::string_view to_string(Family f) {
    switch (f) {
    case Family::Counts: return "counts";
    case Family::Ph: return "ph";
    case Family::Gl: return "gl";
    case Family::Hl: return "hl";
    case Family::CountsGl: return "counts_gl";
    }
    return "?";
}

inline std::string_view table_heading(Family f) {
    switch (f) {
    case Family::Counts: return "Counts";
    case Family::Ph: return "PH (H0/H1)";
    case Family::Gl: return "Graph Lap.";
    case Family::Hl: return "Hyper. Lap.";
    case Family::CountsGl: return "Counts + GL";
    }
    return "?";
}

inline std::optional<Family> parse_family(std::string_view name) {
    for (Family f : kAllFamilies)
        if (to_string(f) == name) return f;
    return std::nullopt;
}

struct FeatureOptions {
    Construction construction = kConstruction1;
    std::vector<Family> families{Family::Counts, Family::Ph, Family::Gl, Family::Hl, Family::CountsGl};
    int resolution = 20;
    bool induced_2simplices = false;
    EdgePolicy edge_policy = EdgePolicy::SemanticPairs;
    unsigned jobs = 1;

    bool wants(Family f) const { return std::find(families.begin(), families.end(), f) != families.end(); }
    bool needs_counts() const { return wants(Family::Counts) || wants(Family::CountsGl); }
    bool needs_gl() const { return wants(Family::Gl) || wants(Family::CountsGl); }
};

/// Everything computed for one run before corpus-level parameters are known.
struct RunArtifacts {
    std::string run_id;
    int label = 0;
    std::optional<CountsVector> counts;
    std::optional<FinitizedDiagram> h0, h1;
    std::vector<double> gl_eigs, hl_eigs;
};

inline RunArtifacts extract_run(const Run& run, const FeatureOptions& opts) {
    RunArtifacts a;
    a.run_id = run.run_id;
    a.label = run.label == Label::Anomalous ? 1 : 0;
    const Run filtered = filter_events(run, opts.construction);
    if (opts.needs_counts()) a.counts = count_vector(filtered, opts.construction);
    if (opts.wants(Family::Ph) || opts.needs_gl()) {
        const FilteredComplex complex = build_complex(filtered, opts.edge_policy, opts.induced_2simplices);
        if (opts.wants(Family::Ph)) {
            const DiagramPair d = compute_persistence(complex);
            a.h0 = finitize(d.h0, complex.max_time());
            a.h1 = finitize(d.h1, complex.max_time());
        }
        if (opts.needs_gl()) a.gl_eigs = eig_symmetric(graph_laplacian(complex));
    }
    if (opts.wants(Family::Hl)) a.hl_eigs = eig_symmetric(hypergraph_laplacian(build_hypergraph(filtered)));
    return a;
}

inline std::vector<RunArtifacts> extract_all(const std::vector<Run>& runs, const FeatureOptions& opts) {
    std::vector<RunArtifacts> out(runs.size());
    parallel_for(runs.size(), opts.jobs, [&](std::size_t i) { out[i] = extract_run(runs[i], opts); });
    return out;
}

/// Corpus-level parameters derived from every run of one experiment.
struct CorpusParams {
    ImageGrid grid0, grid1;
    std::size_t gl_len = 0;
    std::size_t hl_len = 0;
};

inline CorpusParams fit_corpus(const std::vector<RunArtifacts>& arts, const FeatureOptions& opts) {
    CorpusParams p;
    if (opts.wants(Family::Ph)) {
        std::vector<FinitizedDiagram> d0, d1;
        for (const auto& a : arts) {
            d0.push_back(*a.h0);
            d1.push_back(*a.h1);
        }
        p.grid0 = fit_grid(d0, opts.resolution);
        p.grid1 = fit_grid(d1, opts.resolution);
    }
    auto target = [&](auto member) {
        std::vector<std::size_t> counts;
        for (const auto& a : arts) counts.push_back((a.*member).size());
        return choose_target_len(counts);
    };
    if (opts.needs_gl()) p.gl_len = target(&RunArtifacts::gl_eigs);
    if (opts.wants(Family::Hl)) p.hl_len = target(&RunArtifacts::hl_eigs);
    return p;
}

/// Builds the feature matrix, columns in family order counts, ph (pi0 then
/// pi1), gl, hl. Values are rounded exactly as the CSV writer would, so an
/// in-memory matrix equals one read back from disk.
inline FeatureMatrix assemble_features(const std::vector<RunArtifacts>& arts, const FeatureOptions& opts) {
    if (arts.empty()) throw Error(ErrorCode::TooFewSamples, "dataset has no runs");
    const CorpusParams params = fit_corpus(arts, opts);
    FeatureMatrix m;
    const int res = opts.resolution;
    if (opts.needs_counts())
        for (const auto& name : arts.front().counts->schema) m.column_names.push_back("cnt_" + name);
    if (opts.wants(Family::Ph))
        for (int dim = 0; dim <= 1; ++dim)
            for (int r = 0; r < res; ++r)
                for (int c = 0; c < res; ++c)
                    m.column_names.push_back("pi" + std::to_string(dim) + "_" + std::to_string(r) + "_" + std::to_string(c));
    for (std::size_t i = 0; i < params.gl_len; ++i) m.column_names.push_back("gl_" + std::to_string(i));
    for (std::size_t i = 0; i < params.hl_len; ++i) m.column_names.push_back("hl_" + std::to_string(i));

    m.data.reserve(arts.size() * m.column_names.size());
    for (const auto& a : arts) {
        m.row_ids.push_back(a.run_id);
        m.labels.push_back(a.label);
        if (opts.needs_counts())
            for (auto v : a.counts->values) m.data.push_back(static_cast<double>(v));
        if (opts.wants(Family::Ph)) {
            for (const auto& v : rasterize(*a.h0, params.grid0).values) m.data.push_back(csv::round_trip(v));
            for (const auto& v : rasterize(*a.h1, params.grid1).values) m.data.push_back(csv::round_trip(v));
        }
        if (params.gl_len > 0)
            for (double v : to_spectrum_vector(a.gl_eigs, params.gl_len)) m.data.push_back(csv::round_trip(v));
        if (params.hl_len > 0)
            for (double v : to_spectrum_vector(a.hl_eigs, params.hl_len)) m.data.push_back(csv::round_trip(v));
    }
    m.validate();
    return m;
}

inline FeatureMatrix compute_features(const std::vector<Run>& runs, const FeatureOptions& opts) {
    return assemble_features(extract_all(runs, opts), opts);
}

inline std::string features_to_csv(const FeatureMatrix& m) {
    std::string out = "run_id,label";
    for (const auto& n : m.column_names) {
        out += ',';
        out += n;
    }
    out += '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out += csv::escape(m.row_ids[r]);
        out += m.labels[r] == 1 ? ",anomalous" : ",benign";
        for (std::size_t c = 0; c < m.cols(); ++c) {
            out += ',';
            out += csv::format_double(m.at(r, c));
        }
        out += '\n';
    }
    return out;
}

inline FeatureMatrix features_from_csv(std::string_view text, const std::string& source = "features.csv") {
    FeatureMatrix m;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool header = true;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        auto fields = csv::split_line(line);
        const auto where = source + " line " + std::to_string(line_no);
        if (header) {
            if (fields.size() < 2 || fields[0] != "run_id" || fields[1] != "label")
                throw Error(ErrorCode::MalformedLine, where + ": header must start with run_id,label");
            m.column_names.assign(fields.begin() + 2, fields.end());
            header = false;
            continue;
        }
        if (fields.size() != m.column_names.size() + 2)
            throw Error(ErrorCode::MalformedLine, where + ": expected " + std::to_string(m.column_names.size() + 2) + " fields");
        const auto label = parse_label(fields[1]);
        if (!label) throw Error(ErrorCode::MalformedLine, where + ": unknown label '" + fields[1] + "'");
        m.row_ids.push_back(fields[0]);
        m.labels.push_back(*label == Label::Anomalous ? 1 : 0);
        for (std::size_t c = 2; c < fields.size(); ++c) {
            char* endp = nullptr;
            const double v = std::strtod(fields[c].c_str(), &endp);
            if (fields[c].empty() || endp != fields[c].c_str() + fields[c].size() || !std::isfinite(v))
                throw Error(ErrorCode::MalformedLine, where + ": bad number '" + fields[c] + "'");
            m.data.push_back(v);
        }
    }
    if (header) throw Error(ErrorCode::MalformedLine, source + ": empty file");
    return m;
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << content;
}

// --- classification -------------------------------------------------------

inline std::string_view column_prefix(Family f) {
    switch (f) {
    case Family::Counts: return "cnt_";
    case Family::Ph: return "pi";
    case Family::Gl: return "gl_";
    case Family::Hl: return "hl_";
    case Family::CountsGl: return "";
    }
    return "";
}

inline bool has_columns(const FeatureMatrix& m, std::string_view prefix) {
    return std::any_of(m.column_names.begin(), m.column_names.end(),
                       [&](const std::string& n) { return n.starts_with(prefix); });
}

inline FeatureMatrix family_matrix(const FeatureMatrix& m, Family f) {
    if (f == Family::CountsGl) {
        if (!has_columns(m, "cnt_") || !has_columns(m, "gl_"))
            throw Error(ErrorCode::MissingFeatureFamily, "counts_gl needs both cnt_ and gl_ columns");
        return concat(m.select_prefix("cnt_"), m.select_prefix("gl_"));
    }
    if (f == Family::Ph) {
        if (!has_columns(m, "pi0_") || !has_columns(m, "pi1_"))
            throw Error(ErrorCode::MissingFeatureFamily, "ph needs pi0_ and pi1_ columns");
        return m.select_prefix("pi");
    }
    if (!has_columns(m, column_prefix(f)))
        throw Error(ErrorCode::MissingFeatureFamily, std::string(to_string(f)) + " columns are not present");
    return m.select_prefix(column_prefix(f));
}

/// Families with columns in `m`, plus counts_gl when both halves exist.
inline std::vector<Family> families_present(const FeatureMatrix& m) {
    std::vector<Family> out;
    if (has_columns(m, "cnt_")) out.push_back(Family::Counts);
    if (has_columns(m, "pi0_") && has_columns(m, "pi1_")) out.push_back(Family::Ph);
    if (has_columns(m, "gl_")) out.push_back(Family::Gl);
    if (has_columns(m, "hl_")) out.push_back(Family::Hl);
    if (has_columns(m, "cnt_") && has_columns(m, "gl_")) out.push_back(Family::CountsGl);
    return out;
}

struct ClassifyResult {
    std::uint64_t seed = 0;
    std::vector<std::pair<Family, CvReport>> experiments;
};

inline constexpr std::size_t kMinClassifyRows = 20;

inline ClassifyResult classify(const FeatureMatrix& m, const std::vector<Family>& families, const ForestConfig& cfg,
                               std::size_t folds = 10) {
    if (m.rows() < kMinClassifyRows)
        throw Error(ErrorCode::TooFewSamples, "need at least " + std::to_string(kMinClassifyRows) + " rows, have " +
                                                  std::to_string(m.rows()));
    ClassifyResult result;
    result.seed = cfg.seed;
    std::vector<FeatureMatrix> inputs;
    for (Family f : families) inputs.push_back(family_matrix(m, f)); // fail before any training
    for (std::size_t i = 0; i < families.size(); ++i)
        result.experiments.emplace_back(families[i], cross_validate(inputs[i], cfg, folds));
    return result;
}

inline std::string report_json(const ClassifyResult& r) {
    nlohmann::ordered_json j;
    j["seed"] = r.seed;
    nlohmann::ordered_json exps = nlohmann::ordered_json::array();
    for (const auto& [family, report] : r.experiments) {
        nlohmann::ordered_json e;
        e["family"] = to_string(family);
        e["report"] = to_json(report);
        exps.push_back(std::move(e));
    }
    j["experiments"] = std::move(exps);
    return j.dump(2) + "\n";
}

/// Accuracy/Precision/Recall/F1 rows, one column per family, "mean ± std".
inline std::string results_table(const ClassifyResult& r) {
    constexpr int kLabelWidth = 11;
    constexpr int kCellWidth = 17;
    auto pad = [](std::string s, int width) {
        // "±" is two bytes but one column wide
        int cols = 0;
        for (unsigned char c : s) cols += (c & 0xC0) != 0x80;
        if (cols < width) s.append(static_cast<std::size_t>(width - cols), ' ');
        return s;
    };
    std::string out = pad("", kLabelWidth);
    for (const auto& [family, rep] : r.experiments) out += pad(std::string(table_heading(family)), kCellWidth);
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
    auto row = [&](const char* name, const MetricSummary CvReport::*metric) {
        std::string line = pad(name, kLabelWidth);
        for (const auto& [family, rep] : r.experiments) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.2f ± %.2f", (rep.*metric).mean, (rep.*metric).std);
            line += pad(buf, kCellWidth);
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + '\n';
    };
    row("Accuracy", &CvReport::accuracy);
    row("Precision", &CvReport::precision);
    row("Recall", &CvReport::recall);
    row("F1", &CvReport::f1);
    return out;
}

// --- importance -------------------------------------------------------------

struct ReportFamily {
    Family family;
    std::vector<std::string> columns;
    std::vector<double> mdi;
};

inline std::vector<ReportFamily> parse_report(std::string_view text) {
    const auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.contains("experiments"))
        throw Error(ErrorCode::MalformedLine, "report is not a classify report");
    std::vector<ReportFamily> out;
    for (const auto& e : j.at("experiments")) {
        const auto fam = parse_family(e.at("family").get<std::string>());
        if (!fam) throw Error(ErrorCode::MalformedLine, "unknown family in report");
        const auto& rep = e.at("report");
        if (!rep.contains("mdi")) throw Error(ErrorCode::MissingFeatureFamily, "report has no MDI");
        out.push_back({*fam, rep.at("columns").get<std::vector<std::string>>(), rep.at("mdi").get<std::vector<double>>()});
    }
    return out;
}

struct ImportanceFiles {
    std::vector<std::filesystem::path> written;
};

/// Writes `<family>_mdi.csv` for every family, image-shaped `pi0_mdi_grid.csv`
/// / `pi1_mdi_grid.csv` for ph, and `<gl|hl>_eigen_mdi.csv` (largest
/// eigenvalue first) for the spectra.
inline ImportanceFiles write_importance(const std::vector<ReportFamily>& report, const FeatureMatrix& features,
                                        const std::vector<Family>& wanted, const std::filesystem::path& out_dir) {
    ImportanceFiles files;
    for (Family f : wanted) {
        auto it = std::find_if(report.begin(), report.end(), [&](const ReportFamily& r) { return r.family == f; });
        if (it == report.end())
            throw Error(ErrorCode::MissingFeatureFamily, "report has no '" + std::string(to_string(f)) + "' experiment");
        for (const auto& col : it->columns)
            if (std::find(features.column_names.begin(), features.column_names.end(), col) == features.column_names.end())
                throw Error(ErrorCode::MissingFeatureFamily, "features file lacks report column " + col);

        std::string flat = "column,mdi\n";
        for (std::size_t i = 0; i < it->columns.size(); ++i)
            flat += csv::escape(it->columns[i]) + "," + csv::format_double(it->mdi[i]) + "\n";
        const auto flat_path = out_dir / (std::string(to_string(f)) + "_mdi.csv");
        write_file(flat_path, flat);
        files.written.push_back(flat_path);

        if (f == Family::Ph) {
            for (int dim = 0; dim <= 1; ++dim) {
                const std::string prefix = "pi" + std::to_string(dim) + "_";
                std::vector<std::pair<std::pair<int, int>, double>> cells;
                int res = 0;
                for (std::size_t i = 0; i < it->columns.size(); ++i) {
                    const auto& name = it->columns[i];
                    if (!name.starts_with(prefix)) continue;
                    int r = 0, c = 0;
                    if (std::sscanf(name.c_str() + prefix.size(), "%d_%d", &r, &c) != 2)
                        throw Error(ErrorCode::MalformedLine, "bad image column " + name);
                    res = std::max({res, r + 1, c + 1});
                    cells.push_back({{r, c}, it->mdi[i]});
                }
                std::vector<double> grid(static_cast<std::size_t>(res) * res, 0.0);
                for (const auto& [rc, v] : cells) grid[static_cast<std::size_t>(rc.first) * res + rc.second] = v;
                std::string text;
                for (int r = 0; r < res; ++r) {
                    for (int c = 0; c < res; ++c) {
                        if (c) text += ',';
                        text += csv::format_double(grid[static_cast<std::size_t>(r) * res + c]);
                    }
                    text += '\n';
                }
                const auto path = out_dir / ("pi" + std::to_string(dim) + "_mdi_grid.csv");
                write_file(path, text);
                files.written.push_back(path);
            }
        }
        if (f == Family::Gl || f == Family::Hl) {
            std::string text = "eigen_index,mdi\n";
            const std::string prefix = std::string(column_prefix(f));
            for (std::size_t i = 0; i < it->columns.size(); ++i)
                if (it->columns[i].starts_with(prefix))
                    text += it->columns[i].substr(prefix.size()) + "," + csv::format_double(it->mdi[i]) + "\n";
            const auto path = out_dir / (std::string(to_string(f)) + "_eigen_mdi.csv");
            write_file(path, text);
            files.written.push_back(path);
        }
    }
    return files;
}

/// Per-node entries of the eigenvector belonging to the `eigen_index`-th
/// largest eigenvalue of a run's graph (gl) or hypergraph (hl) Laplacian.
/// The sign of each eigenvector is fixed so its largest-magnitude entry is
/// positive.
inline std::string eigenvector_csv(const Run& run, Family family, std::size_t eigen_index, const FeatureOptions& opts) {
    if (family != Family::Gl && family != Family::Hl)
        throw Error(ErrorCode::MissingFeatureFamily, "eigenvectors exist only for gl and hl");
    const Run filtered = filter_events(run, opts.construction);
    std::vector<NodeKey> nodes;
    EigenDecomposition eig;
    if (family == Family::Gl) {
        const auto complex = build_complex(filtered, opts.edge_policy, opts.induced_2simplices);
        nodes = complex.nodes;
        eig = eig_symmetric_full(graph_laplacian(complex).matrix());
    } else {
        const auto h = build_hypergraph(filtered);
        nodes = h.nodes;
        eig = eig_symmetric_full(hypergraph_laplacian(h).matrix());
    }
    if (eigen_index >= eig.values.size())
        throw Error(ErrorCode::DegenerateConfig, "eigen index " + std::to_string(eigen_index) + " out of range (" +
                                                     std::to_string(eig.values.size()) + " eigenvalues)");
    Eigen::VectorXd v = eig.vectors.col(static_cast<Eigen::Index>(eigen_index));
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    std::string out = "node_id,value\n";
    for (std::size_t i = 0; i < nodes.size(); ++i)
        out += csv::escape(nodes[i].label()) + "," + csv::format_double(v(static_cast<Eigen::Index>(i))) + "\n";
    return out;
}

// --- diagrams -----------------------------------------------------------------

inline nlohmann::ordered_json diagram_json(const FinitizedDiagram& d) {
    nlohmann::ordered_json j;
    j["dim"] = d.dimension;
    nlohmann::ordered_json pts = nlohmann::ordered_json::array();
    for (const auto& p : d.points) pts.push_back({p.birth, p.death});
    j["points"] = std::move(pts);
    j["infinite_replaced_with"] = d.finitization_value;
    return j;
}

inline nlohmann::ordered_json complex_json(const FilteredComplex& c) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < c.nodes.size(); ++i) {
        nlohmann::ordered_json n;
        n["index"] = i;
        n["kind"] = to_string(c.nodes[i].kind);
        n["value"] = c.nodes[i].value;
        nodes.push_back(std::move(n));
    }
    j["nodes"] = std::move(nodes);
    nlohmann::ordered_json simplices = nlohmann::ordered_json::array();
    for (const auto& s : c.simplices) {
        nlohmann::ordered_json e;
        e["vertices"] = std::vector<Index>(s.vertices().begin(), s.vertices().end());
        e["time"] = s.time;
        simplices.push_back(std::move(e));
    }
    j["simplices"] = std::move(simplices);
    return j;
}

struct DiagramOutput {
    FilteredComplex complex;
    FinitizedDiagram h0, h1;
};

inline DiagramOutput run_diagrams(const Run& run, const FeatureOptions& opts) {
    DiagramOutput out;
    out.complex = build_complex(filter_events(run, opts.construction), opts.edge_policy, opts.induced_2simplices);
    const auto d = compute_persistence(out.complex);
    out.h0 = finitize(d.h0, out.complex.max_time());
    out.h1 = finitize(d.h1, out.complex.max_time());
    return out;
}

} // namespace topolog
