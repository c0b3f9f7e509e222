// Acceptance gate. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.
//
// usage: acceptance <work-dir> <path-to-topolog-cli>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "persistence_oracle.hpp"
#include "topolog/topolog.hpp"

using namespace topolog;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

fs::path g_work;
std::string g_cli;

int run_cli(const std::string& args) {
    const std::string cmd = "\"" + g_cli + "\" " + args + " > \"" + (g_work / "cli_stdout.txt").string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

// --- persistence ------------------------------------------------------------

bool same_as_oracle(const FilteredComplex& c) {
    const auto got = compute_persistence(c);
    const auto want = oracle::persistence(c);
    return oracle::positive_points(got.h0.points) == want.h0 && oracle::positive_points(got.h1.points) == want.h1 &&
           got.h0.points.size() == c.vertex_count();
}

Outcome persistence_oracle() {
    const auto t0 = Clock::now();
    Rng rng(20240601);
    std::size_t random_bad = 0;
    for (int i = 0; i < 500; ++i) {
        const auto c = oracle::random_complex(rng, 30);
        if (c.simplices.size() > 30 || !same_as_oracle(c)) ++random_bad;
    }
    std::size_t swept = 0, sweep_bad = 0;
    oracle::for_each_small_complex([&](const FilteredComplex& c) {
        ++swept;
        if (!same_as_oracle(c)) ++sweep_bad;
    });
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << "500 random complexes (" << random_bad << " mismatches), " << swept << " exhaustive complexes on <=4 vertices ("
      << sweep_bad << " mismatches), " << fmt("%.1f", secs) << " s";
    return {random_bad == 0 && sweep_bad == 0 && secs <= 60.0, d.str()};
}

Outcome vr_circle() {
    const auto t0 = Clock::now();
    Rng rng(100);
    std::vector<Point2> pts;
    for (int i = 0; i < 100; ++i) {
        const double a = rng.uniform(0.0, 2 * std::numbers::pi);
        pts.push_back({std::cos(a), std::sin(a)});
    }
    const auto c = vietoris_rips(pts, 2.0, 2);
    const auto d = compute_persistence(c);
    std::size_t long_lived = 0;
    double worst_other = 0.0;
    for (const auto& p : d.h1.points) {
        if (p.persistence() >= 1.0) ++long_lived;
        else worst_other = std::max(worst_other, p.persistence());
    }
    const double secs = seconds_since(t0);
    std::ostringstream s;
    s << c.simplices.size() << " simplices, " << long_lived << " H1 point(s) with persistence >= 1, largest other "
      << fmt("%.4f", worst_other) << ", " << fmt("%.1f", secs) << " s";
    return {long_lived == 1 && worst_other <= 0.3 && secs <= 30.0, s.str()};
}

Outcome finitization() {
    const PersistenceDiagram d{0, {{0.0, 50.0}, {10.0, kInfinity}}};
    const auto f = finitize(d, 200.0);
    const bool ok = f.finitization_value == 500.0 && f.points[1].death == 500.0 && f.points[0].death == 50.0;
    return {ok, "max filtration 200 -> infinite deaths replaced with " + fmt("%g", f.points[1].death)};
}

// --- spectral ---------------------------------------------------------------

Outcome spectral() {
    const auto t0 = Clock::now();
    FilteredComplex path;
    path.simplices = {Simplex({0}, 0), Simplex({1}, 0), Simplex({2}, 0), Simplex({0, 1}, 1), Simplex({1, 2}, 1)};
    path.sort();
    const auto pe = eig_symmetric(graph_laplacian(path));
    const std::vector<double> pw{3, 1, 0};

    Hypergraph h;
    for (int i = 0; i < 4; ++i) h.nodes.push_back({NodeKind::Process, std::to_string(i)});
    h.hyperedges = {{0, 1, 2, 3}};
    const auto he = eig_symmetric(hypergraph_laplacian(h));
    const std::vector<double> hw{1, 1, 1, 0};

    double exact_err = 0.0;
    for (std::size_t i = 0; i < 3; ++i) exact_err = std::max(exact_err, std::abs(pe[i] - pw[i]));
    for (std::size_t i = 0; i < 4; ++i) exact_err = std::max(exact_err, std::abs(he[i] - hw[i]));

    Rng rng(77);
    double worst_ratio = 0.0;
    for (int k = 0; k < 100; ++k) {
        const Eigen::Index n = 2 * (k + 1); // 2 .. 200
        Eigen::MatrixXd m(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i; j < n; ++j) m(i, j) = m(j, i) = rng.uniform(-10.0, 10.0);
        const auto eig = eig_symmetric_full(m);
        const double bound = 1e-8 * std::max(1.0, m.norm());
        for (Eigen::Index c = 0; c < n; ++c) {
            const auto v = eig.vectors.col(c);
            const double r = (m * v - eig.values[static_cast<std::size_t>(c)] * v).norm();
            worst_ratio = std::max(worst_ratio, r / bound);
        }
    }
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << "path-3 and 4-node hyperedge max error " << fmt("%.2e", exact_err)
      << ", worst residual / bound over 100 matrices (2x2..200x200) " << fmt("%.2e", worst_ratio) << ", "
      << fmt("%.1f", secs) << " s";
    return {exact_err <= 1e-9 && worst_ratio <= 1.0 && secs <= 60.0, d.str()};
}

// --- persistence images -----------------------------------------------------

FinitizedDiagram random_diagram(Rng& rng, std::size_t n) {
    FinitizedDiagram d{1, {}, 1.0};
    for (std::size_t i = 0; i < n; ++i) {
        const double b = rng.uniform(0.0, 10.0);
        d.points.push_back({b, b + rng.uniform(0.0, 5.0)});
    }
    return d;
}

Outcome pi_linearity() {
    Rng rng(1);
    const ImageGrid g{20, 10.0, 5.0, 0.25};
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const auto a = random_diagram(rng, 1 + rng.below(20));
        const auto b = random_diagram(rng, 1 + rng.below(20));
        auto ab = a;
        ab.points.insert(ab.points.end(), b.points.begin(), b.points.end());
        const auto ia = rasterize(a, g), ib = rasterize(b, g), iab = rasterize(ab, g);
        for (std::size_t i = 0; i < iab.values.size(); ++i) {
            const double sum = ia.values[i] + ib.values[i];
            if (sum == 0.0 && iab.values[i] == 0.0) continue;
            worst = std::max(worst, std::abs(iab.values[i] - sum) / std::abs(sum));
        }
    }
    return {worst <= 1e-12, "max relative deviation " + fmt("%.2e", worst) + " over 50 diagram pairs"};
}

Outcome pi_permutation() {
    Rng rng(2);
    const ImageGrid g{20, 10.0, 5.0, 0.25};
    int differing = 0;
    for (int t = 0; t < 50; ++t) {
        auto d = random_diagram(rng, 30);
        const auto ref = rasterize(d, g);
        rng.shuffle(std::span<PersistencePoint>(d.points));
        const auto again = rasterize(d, g);
        differing += std::memcmp(ref.values.data(), again.values.data(), ref.values.size() * sizeof(double)) != 0;
    }
    return {differing == 0, std::to_string(differing) + " of 50 shuffled diagrams gave different bytes"};
}

Outcome pi_mass() {
    // Sigma fixed; both ranges grow so the points sit ever deeper inside the grid.
    const double sigma = 0.25;
    std::vector<double> gaps;
    bool bounded = true;
    for (double s : {0.5, 1.0, 2.0}) {
        const FinitizedDiagram d{1, {{s, 2 * s}, {2 * s, 3 * s}, {1.5 * s, 1.5 * s + 0.75 * s}}, 1.0};
        const ImageGrid g{20, 8 * s, 4 * s, sigma};
        double w = 0.0;
        for (const auto& p : d.points) w += std::min((p.death - p.birth) / g.persistence_max, 1.0);
        const double total = rasterize(d, g).total();
        bounded = bounded && total <= w * (1 + 1e-12);
        gaps.push_back((w - total) / w);
    }
    const bool converging = gaps[0] > gaps[1] && gaps[1] > gaps[2] && gaps[2] < 1e-9;

    Rng rng(3);
    const auto d = random_diagram(rng, 40);
    const double fine = rasterize(d, ImageGrid{20, 10.0, 5.0, 0.25}).total();
    const double coarse = rasterize(d, ImageGrid{10, 10.0, 5.0, 0.25}).total();
    const double res_gap = std::abs(fine - coarse) / fine;

    std::ostringstream s;
    s << "relative mass deficit at 3 growing ranges " << fmt("%.2e", gaps[0]) << " > " << fmt("%.2e", gaps[1]) << " > "
      << fmt("%.2e", gaps[2]) << ", mass <= weight sum: " << (bounded ? "yes" : "no")
      << ", resolution 20 vs 10 relative mass gap " << fmt("%.2e", res_gap);
    return {bounded && converging && res_gap <= 1e-9, s.str()};
}

// --- classifier ---------------------------------------------------------------

FeatureMatrix noise_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    FeatureMatrix m;
    for (std::size_t c = 0; c < cols; ++c) m.column_names.push_back("f" + std::to_string(c));
    for (std::size_t r = 0; r < rows; ++r) {
        m.row_ids.push_back("r" + std::to_string(r));
        m.labels.push_back(static_cast<int>(r % 2));
        for (std::size_t c = 0; c < cols; ++c) m.data.push_back(rng.uniform());
    }
    return m;
}

Outcome classifier_separable() {
    FeatureMatrix m = noise_matrix(100, 4, 11);
    m.column_names.push_back("signal");
    std::vector<double> data;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < 4; ++c) data.push_back(m.data[r * 4 + c]);
        data.push_back(m.labels[r] == 1 ? 10.0 + static_cast<double>(r) : -10.0 - static_cast<double>(r));
    }
    m.data = std::move(data);
    const auto rep = cross_validate(m, ForestConfig{});
    return {rep.accuracy.mean == 100.0 && rep.accuracy.std == 0.0,
            "accuracy " + fmt("%.2f", rep.accuracy.mean) + " ± " + fmt("%.2f", rep.accuracy.std)};
}

Outcome classifier_shuffle() {
    // Informative features, then labels shuffled: nothing left to learn. The
    // mean over 10 independent shuffles is compared with the chance band.
    double total = 0.0;
    std::ostringstream each;
    for (std::uint64_t rep = 0; rep < 10; ++rep) {
        FeatureMatrix m = noise_matrix(400, 6, 500 + rep);
        for (std::size_t r = 0; r < m.rows(); ++r) m.data[r * 6] += m.labels[r];
        Rng rng(derive_seed(42, rep));
        rng.shuffle(std::span<int>(m.labels));
        ForestConfig cfg;
        cfg.seed = rep;
        const double acc = cross_validate(m, cfg).accuracy.mean;
        total += acc;
        each << (rep ? " " : "") << fmt("%.1f", acc);
    }
    const double mean = total / 10.0;
    return {mean >= 45.0 && mean <= 55.0, "mean " + fmt("%.2f", mean) + " over 10 shuffles [" + each.str() + "]"};
}

Outcome classifier_mdi() {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 5; ++s) {
        FeatureMatrix m = noise_matrix(200, 10, 900 + s);
        for (std::size_t r = 0; r < m.rows(); ++r) m.data[r * 10 + s] += 0.5 * m.labels[r];
        ForestConfig cfg;
        cfg.seed = s;
        const auto imp = mdi_importance(fit_forest(m, cfg));
        worst = std::max(worst, std::abs(std::accumulate(imp.begin(), imp.end(), 0.0) - 1.0));
        const auto rep = cross_validate(m, cfg);
        worst = std::max(worst, std::abs(std::accumulate(rep.mdi.begin(), rep.mdi.end(), 0.0) - 1.0));
    }
    return {worst <= 1e-9, "max |sum - 1| " + fmt("%.2e", worst)};
}

Outcome classifier_determinism() {
    FeatureMatrix m = noise_matrix(120, 8, 7);
    for (std::size_t r = 0; r < m.rows(); ++r) m.data[r * 8] += m.labels[r];
    ForestConfig a;
    a.seed = 123;
    ForestConfig b = a;
    b.jobs = 4;
    const auto ja = to_json(cross_validate(m, a)).dump();
    const auto jb = to_json(cross_validate(m, a)).dump();
    const auto jc = to_json(cross_validate(m, b)).dump();
    return {ja == jb && ja == jc, "report JSON " + std::string(ja == jb && ja == jc ? "identical" : "differs") +
                                      " across reruns and worker counts"};
}

// --- end-to-end on the synthetic dataset ----------------------------------------

struct Accuracies {
    std::vector<std::pair<std::string, double>> by_family;
    double of(const std::string& f) const {
        for (const auto& [k, v] : by_family)
            if (k == f) return v;
        return -1.0;
    }
};

Accuracies read_accuracies(const fs::path& report) {
    const auto j = nlohmann::json::parse(read_text_file(report));
    Accuracies a;
    for (const auto& e : j.at("experiments"))
        a.by_family.emplace_back(e.at("family").get<std::string>(),
                                 e.at("report").at("metrics").at("accuracy").at("mean").get<double>());
    return a;
}

const fs::path& dataset_dir() {
    static const fs::path d = g_work / "seed7";
    return d;
}

// Features + classify through the CLI; returns the accuracy per family.
Accuracies experiment(const std::string& name, int construction, const std::string& extra, bool& ok) {
    const fs::path dir = g_work / name;
    const fs::path csv = dir / "features.csv";
    ok = run_cli("features --dataset " + q(dataset_dir()) + " --construction " + std::to_string(construction) + " " +
                 extra + " --out " + q(csv)) == 0 &&
         run_cli("classify --features " + q(csv) + " --seed 0 --out-dir " + q(dir)) == 0;
    if (!ok) return {};
    return read_accuracies(dir / "report.json");
}

std::vector<Accuracies> g_full(3); // index by construction

Outcome end_to_end() {
    const auto t0 = Clock::now();
    fs::remove_all(dataset_dir());
    if (run_cli("gen --seed 7 --runs 200 --out " + q(dataset_dir())) != 0) return {false, "gen failed"};
    std::ostringstream d;
    bool pass = true;
    for (int c = 1; c <= 2; ++c) {
        bool ok = false;
        g_full[c] = experiment("construction" + std::to_string(c), c, "", ok);
        if (!ok) return {false, "features/classify failed for construction " + std::to_string(c)};
        const std::string table = read_text_file(g_work / ("construction" + std::to_string(c)) / "table.txt");
        std::cout << "Construction " << c << "\n" << table << "\n";
        const auto& a = g_full[c];
        if (a.by_family.size() != 5 || table.find("Counts + GL") == std::string::npos) pass = false;
        for (const auto& [f, v] : a.by_family) {
            if (v < 65.0) pass = false;
            d << "C" << c << " " << f << " " << fmt("%.2f", v) << "; ";
        }
        const double bound = std::max(a.of("counts"), a.of("gl")) - 2.0;
        if (a.of("counts_gl") < bound) pass = false;
    }
    const double secs = seconds_since(t0);
    d << fmt("%.1f", secs) << " s";
    return {pass && secs <= 600.0, d.str()};
}

Outcome induced_toggle() {
    std::ostringstream d;
    bool pass = true;
    for (int c = 1; c <= 2; ++c) {
        bool ok = false;
        const auto a = experiment("induced" + std::to_string(c), c, "--features ph --induced", ok);
        if (!ok) return {false, "features/classify failed"};
        const double base = g_full[c].of("ph");
        const double diff = std::abs(a.of("ph") - base);
        pass = pass && diff <= 3.0;
        if (c > 1) d << "; ";
        d << "C" << c << " PH " << fmt("%.2f", base) << " -> " << fmt("%.2f", a.of("ph")) << " (|diff| "
          << fmt("%.2f", diff) << " pp)";
    }
    return {pass, d.str()};
}

Outcome resolution_sweep() {
    std::ostringstream d;
    bool pass = true;
    for (int c = 1; c <= 2; ++c) {
        double lo = 101.0, hi = -1.0;
        if (c > 1) d << "; ";
        d << "C" << c << ":";
        for (int res : {5, 10, 15, 20, 50, 100}) {
            bool ok = false;
            const auto a = experiment("res" + std::to_string(c) + "_" + std::to_string(res), c,
                                      "--features ph --resolution " + std::to_string(res), ok);
            if (!ok) return {false, "features/classify failed at resolution " + std::to_string(res)};
            const double acc = a.of("ph");
            lo = std::min(lo, acc);
            hi = std::max(hi, acc);
            d << " " << res << "=" << fmt("%.1f", acc);
        }
        d << " (spread " << fmt("%.2f", hi - lo) << " pp)";
        pass = pass && hi - lo <= 5.0;
    }
    return {pass, d.str()};
}

} // namespace

int main(int argc, char** argv) {
    if (argc != 3) {
        std::cerr << "usage: acceptance <work-dir> <topolog-cli>\n";
        return 2;
    }
    g_work = argv[1];
    g_cli = argv[2];
    fs::create_directories(g_work);

    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"persistence_oracle_equivalence", persistence_oracle},
        {"vietoris_rips_circle", vr_circle},
        {"finitization_200_to_500", finitization},
        {"spectral_exactness", spectral},
        {"pers_image_linearity", pi_linearity},
        {"pers_image_permutation_invariance", pi_permutation},
        {"pers_image_mass_convergence", pi_mass},
        {"classifier_separable", classifier_separable},
        {"classifier_label_shuffle", classifier_shuffle},
        {"classifier_mdi_sums_to_one", classifier_mdi},
        {"classifier_deterministic_report", classifier_determinism},
        {"end_to_end_synthetic", end_to_end},
        {"induced_2simplices_toggle", induced_toggle},
        {"resolution_sweep", resolution_sweep},
    };

    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
