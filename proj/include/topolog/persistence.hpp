#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <unordered_map>
#include <vector>

#include "topolog/complex_builder.hpp"
#include "topolog/error.hpp"

namespace topolog {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct PersistencePoint {
    double birth = 0.0;
    double death = kInfinity;

    bool infinite() const { return std::isinf(death); }
    bool zero_persistence() const { return birth == death; }
    double persistence() const { return death - birth; }

    auto operator<=>(const PersistencePoint&) const = default;
};

struct PersistenceDiagram {
    int dimension = 0;
    std::vector<PersistencePoint> points;

    std::size_t infinite_count() const {
        return static_cast<std::size_t>(
            std::count_if(points.begin(), points.end(), [](const auto& p) { return p.infinite(); }));
    }
};

/// A diagram whose infinite deaths were replaced with `finitization_value`.
struct FinitizedDiagram {
    int dimension = 0;
    std::vector<PersistencePoint> points;
    double finitization_value = 1.0;
};

struct DiagramPair {
    PersistenceDiagram h0{0, {}};
    PersistenceDiagram h1{1, {}};
};

namespace detail {

using Column = std::vector<std::uint32_t>;

/// col <- col + other over Z/2; both sorted ascending.
inline void add_column(Column& col, const Column& other, Column& scratch) {
    scratch.clear();
    std::set_symmetric_difference(col.begin(), col.end(), other.begin(), other.end(),
                                  std::back_inserter(scratch));
    col.swap(scratch);
}

inline std::uint64_t edge_key(Index a, Index b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

} // namespace detail

/// H0 and H1 diagrams of a filtered complex, by reduction of the Z/2 boundary
/// matrix with simplices in filtration order. Columns are reduced from the
/// top dimension down, clearing the columns of simplices that are already
/// known to create a class; this gives the same pairing as the plain
/// left-to-right reduction. Zero-persistence points are kept.
inline DiagramPair compute_persistence(const FilteredComplex& complex) {
    check_filtration(complex);

    std::vector<Simplex> order = complex.simplices;
    std::sort(order.begin(), order.end(), filtration_less);
    const auto n = static_cast<std::uint32_t>(order.size());

    std::unordered_map<Index, std::uint32_t> vertex_pos;
    std::unordered_map<std::uint64_t, std::uint32_t> edge_pos;
    for (std::uint32_t i = 0; i < n; ++i) {
        const Simplex& s = order[i];
        if (s.size == 1) vertex_pos.emplace(s.v[0], i);
        else if (s.size == 2) edge_pos.emplace(detail::edge_key(s.v[0], s.v[1]), i);
    }

    std::vector<detail::Column> columns(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        const Simplex& s = order[i];
        auto& col = columns[i];
        if (s.size == 2) {
            col = {vertex_pos.at(s.v[0]), vertex_pos.at(s.v[1])};
        } else if (s.size == 3) {
            col = {edge_pos.at(detail::edge_key(s.v[0], s.v[1])),
                   edge_pos.at(detail::edge_key(s.v[0], s.v[2])),
                   edge_pos.at(detail::edge_key(s.v[1], s.v[2]))};
        }
        std::sort(col.begin(), col.end());
    }

    constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> pivot_owner(n, kNone); // row -> column whose low it is
    std::vector<bool> cleared(n, false);
    detail::Column scratch;

    for (int dim = 2; dim >= 1; --dim) {
        for (std::uint32_t j = 0; j < n; ++j) {
            if (order[j].dim() != dim || cleared[j]) continue;
            auto& col = columns[j];
            while (!col.empty()) {
                const std::uint32_t owner = pivot_owner[col.back()];
                if (owner == kNone) break;
                detail::add_column(col, columns[owner], scratch);
            }
            if (!col.empty()) {
                const std::uint32_t low = col.back();
                pivot_owner[low] = j;
                cleared[low] = true;
                columns[low].clear();
            }
        }
    }

    DiagramPair out;
    for (std::uint32_t i = 0; i < n; ++i) {
        const int dim = order[i].dim();
        if (dim > 1) continue;
        const bool negative = !columns[i].empty();
        if (negative) continue;
        auto& diagram = dim == 0 ? out.h0 : out.h1;
        const std::uint32_t killer = pivot_owner[i];
        diagram.points.push_back(
            {order[i].time, killer == kNone ? kInfinity : order[killer].time});
    }
    return out;
}

/// Replaces infinite deaths with 2.5x the largest filtration value (1.0 when
/// that value is zero).
inline FinitizedDiagram finitize(const PersistenceDiagram& d, double complex_max) {
    FinitizedDiagram out;
    out.dimension = d.dimension;
    out.finitization_value = complex_max > 0.0 ? 2.5 * complex_max : 1.0;
    out.points = d.points;
    for (auto& p : out.points)
        if (p.infinite()) p.death = out.finitization_value;
    return out;
}

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// Vietoris-Rips filtration on planar points up to dimension `max_dim` (<= 2):
/// vertices at 0, edges at their length when within `max_eps`, triangles at
/// their longest edge.
inline FilteredComplex vietoris_rips(std::span<const Point2> points, double max_eps, int max_dim = 2) {
    FilteredComplex out;
    const auto n = static_cast<Index>(points.size());
    for (Index i = 0; i < n; ++i) out.simplices.push_back(Simplex({i}, 0.0));
    if (max_dim < 1) return out;

    std::vector<double> dist(static_cast<std::size_t>(n) * n, kInfinity);
    auto d = [&](Index a, Index b) -> double& { return dist[static_cast<std::size_t>(a) * n + b]; };
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            const double len = std::hypot(points[i].x - points[j].x, points[i].y - points[j].y);
            if (len <= max_eps) {
                d(i, j) = d(j, i) = len;
                out.simplices.push_back(Simplex({i, j}, len));
            }
        }
    }
    if (max_dim >= 2) {
        for (Index i = 0; i < n; ++i)
            for (Index j = i + 1; j < n; ++j) {
                if (std::isinf(d(i, j))) continue;
                for (Index k = j + 1; k < n; ++k) {
                    if (std::isinf(d(i, k)) || std::isinf(d(j, k))) continue;
                    out.simplices.push_back(Simplex({i, j, k}, std::max({d(i, j), d(i, k), d(j, k)})));
                }
            }
    }
    out.sort();
    return out;
}

} // namespace topolog
