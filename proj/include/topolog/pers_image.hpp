#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "topolog/error.hpp"
#include "topolog/persistence.hpp"

namespace topolog {

/// Birth-persistence raster: x spans birth in [0, birth_max], y spans
/// persistence in [0, persistence_max].
struct ImageGrid {
    int resolution = 0;
    double birth_max = 0.0;
    double persistence_max = 0.0;
    double sigma = 0.0;

    bool fitted() const {
        return resolution >= 1 && birth_max > 0.0 && persistence_max > 0.0 && sigma > 0.0;
    }
};

/// Row-major, row index = persistence bin, column index = birth bin.
struct PersistenceImage {
    int resolution = 0;
    std::vector<double> values;

    double at(int row, int col) const { return values[static_cast<std::size_t>(row) * resolution + col]; }
    double total() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
};

/// Corpus-wide grid: one range for every diagram so pixel columns line up
/// across runs. Degenerate (zero) ranges fall back to 1.0.
inline ImageGrid fit_grid(std::span<const FinitizedDiagram> diagrams, int resolution) {
    if (resolution < 1) throw Error(ErrorCode::DegenerateConfig, "resolution must be >= 1");
    double bmax = 0.0;
    double pmax = 0.0;
    for (const auto& d : diagrams)
        for (const auto& p : d.points) {
            bmax = std::max(bmax, p.birth);
            pmax = std::max(pmax, p.death - p.birth);
        }
    ImageGrid g;
    g.resolution = resolution;
    g.birth_max = bmax > 0.0 ? bmax : 1.0;
    g.persistence_max = pmax > 0.0 ? pmax : 1.0;
    g.sigma = g.persistence_max / resolution;
    return g;
}

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Mass of N(mean, sigma^2) in each of `bins` equal cells of [0, hi].
inline void cell_masses(double mean, double sigma, double hi, int bins, std::vector<double>& out) {
    out.assign(static_cast<std::size_t>(bins), 0.0);
    const double width = hi / bins;
    double prev = normal_cdf((0.0 - mean) / sigma);
    for (int i = 0; i < bins; ++i) {
        const double edge = i + 1 == bins ? hi : width * (i + 1);
        const double cur = normal_cdf((edge - mean) / sigma);
        out[static_cast<std::size_t>(i)] = cur - prev;
        prev = cur;
    }
}

} // namespace detail

/// Linear-weighted Gaussian surface integrated exactly over each pixel.
/// Points are visited in sorted order so the output does not depend on the
/// order of the input diagram.
inline PersistenceImage rasterize(const FinitizedDiagram& d, const ImageGrid& grid) {
    if (!grid.fitted()) throw Error(ErrorCode::UnfittedGrid, "grid has not been fitted");
    const int res = grid.resolution;
    PersistenceImage img{res, std::vector<double>(static_cast<std::size_t>(res) * res, 0.0)};

    std::vector<PersistencePoint> pts = d.points;
    std::sort(pts.begin(), pts.end());
    std::vector<double> xs, ys;
    for (const auto& p : pts) {
        const double pers = p.death - p.birth;
        if (!(pers > 0.0)) continue;
        const double weight = std::min(pers / grid.persistence_max, 1.0);
        detail::cell_masses(p.birth, grid.sigma, grid.birth_max, res, xs);
        detail::cell_masses(pers, grid.sigma, grid.persistence_max, res, ys);
        for (int r = 0; r < res; ++r) {
            const double wy = weight * ys[static_cast<std::size_t>(r)];
            if (wy == 0.0) continue;
            double* row = img.values.data() + static_cast<std::size_t>(r) * res;
            for (int c = 0; c < res; ++c) row[c] += wy * xs[static_cast<std::size_t>(c)];
        }
    }
    return img;
}

} // namespace topolog
