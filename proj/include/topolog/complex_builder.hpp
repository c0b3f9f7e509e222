#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <set>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "topolog/error.hpp"
#include "topolog/log_model.hpp"

namespace topolog {

using Index = std::uint32_t;

/// A 0-, 1- or 2-simplex with its filtration time. Vertices are strictly increasing.
struct Simplex {
    std::array<Index, 3> v{};
    std::uint8_t size = 0;
    double time = 0.0;

    Simplex() = default;
    Simplex(std::initializer_list<Index> verts, double t) : time(t) {
        for (Index x : verts) v[size++] = x;
        std::sort(v.begin(), v.begin() + size);
    }

    std::span<const Index> vertices() const { return {v.data(), size}; }
    int dim() const { return static_cast<int>(size) - 1; }

    /// Codimension-1 faces, in lexicographic order.
    std::vector<Simplex> faces() const {
        std::vector<Simplex> out;
        if (size == 2) {
            out.push_back(Simplex({v[0]}, time));
            out.push_back(Simplex({v[1]}, time));
        } else if (size == 3) {
            out.push_back(Simplex({v[0], v[1]}, time));
            out.push_back(Simplex({v[0], v[2]}, time));
            out.push_back(Simplex({v[1], v[2]}, time));
        }
        return out;
    }

    bool same_vertices(const Simplex& o) const {
        return size == o.size && std::equal(v.begin(), v.begin() + size, o.v.begin());
    }
};

/// Total filtration order: time, then dimension, then vertex tuple.
inline bool filtration_less(const Simplex& a, const Simplex& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.size != b.size) return a.size < b.size;
    return std::lexicographical_compare(a.v.begin(), a.v.begin() + a.size, b.v.begin(), b.v.begin() + b.size);
}

struct VertexTupleLess {
    bool operator()(const Simplex& a, const Simplex& b) const {
        if (a.size != b.size) return a.size < b.size;
        return std::lexicographical_compare(a.v.begin(), a.v.begin() + a.size, b.v.begin(), b.v.begin() + b.size);
    }
};

struct FilteredComplex {
    std::vector<NodeKey> nodes;    // empty for complexes not built from logs
    std::vector<Simplex> simplices; // in filtration order

    std::size_t vertex_count() const {
        return static_cast<std::size_t>(std::count_if(simplices.begin(), simplices.end(),
                                                      [](const Simplex& s) { return s.size == 1; }));
    }

    int max_dim() const {
        int d = -1;
        for (const auto& s : simplices) d = std::max(d, s.dim());
        return d;
    }

    double max_time() const {
        double t = 0.0;
        for (const auto& s : simplices) t = std::max(t, s.time);
        return t;
    }

    void sort() { std::sort(simplices.begin(), simplices.end(), filtration_less); }
};

/// Checks face closure and face monotonicity; throws InvalidFiltration.
inline void check_filtration(const FilteredComplex& complex) {
    std::map<Simplex, double, VertexTupleLess> time_of;
    for (const auto& s : complex.simplices) {
        if (s.size < 1 || s.size > 3)
            throw Error(ErrorCode::InvalidFiltration, "simplex dimension out of range");
        for (std::size_t i = 1; i < s.size; ++i)
            if (s.v[i - 1] >= s.v[i])
                throw Error(ErrorCode::InvalidFiltration, "simplex vertices not strictly increasing");
        if (!time_of.emplace(s, s.time).second)
            throw Error(ErrorCode::InvalidFiltration, "duplicate simplex");
    }
    for (const auto& s : complex.simplices) {
        for (const auto& f : s.faces()) {
            auto it = time_of.find(f);
            if (it == time_of.end())
                throw Error(ErrorCode::InvalidFiltration, "missing face");
            if (it->second > s.time)
                throw Error(ErrorCode::InvalidFiltration, "face enters after coface");
        }
    }
}

struct Hypergraph {
    std::vector<NodeKey> nodes;
    std::vector<std::vector<Index>> hyperedges; // each sorted, unique
};

enum class EdgePolicy { SemanticPairs, CliquePerEvent };

inline std::string_view to_string(EdgePolicy p) {
    return p == EdgePolicy::SemanticPairs ? "semantic_pairs" : "clique_per_event";
}

/// Identifiers mentioned by an event, in schema order, without duplicates.
inline std::vector<NodeKey> event_nodes(const LogEvent& e) {
    std::vector<NodeKey> keys;
    auto add = [&](NodeKind kind, const char* attr) {
        NodeKey k{kind, e.attr(attr)};
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(std::move(k));
    };
    switch (e.type) {
    case EventType::ProcessCreate:
        add(NodeKind::Process, "parent_process_id");
        add(NodeKind::Process, "process_id");
        add(NodeKind::File, "image");
        break;
    case EventType::ProcessTerminate:
        add(NodeKind::Process, "process_id");
        break;
    case EventType::FileCreate:
        add(NodeKind::Process, "process_id");
        add(NodeKind::File, "target_file");
        break;
    case EventType::NetworkConnect:
        add(NodeKind::Process, "process_id");
        add(NodeKind::Ip, "src_ip");
        add(NodeKind::Port, "src_port");
        add(NodeKind::Ip, "dst_ip");
        add(NodeKind::Port, "dst_port");
        break;
    }
    return keys;
}

/// Interacting identifier pairs of an event under the semantic policy.
inline std::vector<std::pair<NodeKey, NodeKey>> semantic_pairs(const LogEvent& e) {
    auto key = [&](NodeKind kind, const char* attr) { return NodeKey{kind, e.attr(attr)}; };
    switch (e.type) {
    case EventType::ProcessCreate:
        return {{key(NodeKind::Process, "parent_process_id"), key(NodeKind::Process, "process_id")},
                {key(NodeKind::Process, "process_id"), key(NodeKind::File, "image")}};
    case EventType::FileCreate:
        return {{key(NodeKind::Process, "process_id"), key(NodeKind::File, "target_file")}};
    case EventType::NetworkConnect: {
        const auto proc = key(NodeKind::Process, "process_id");
        const auto src = key(NodeKind::Ip, "src_ip");
        const auto dst = key(NodeKind::Ip, "dst_ip");
        return {{proc, src}, {proc, dst}, {src, key(NodeKind::Port, "src_port")},
                {dst, key(NodeKind::Port, "dst_port")}};
    }
    case EventType::ProcessTerminate:
        return {};
    }
    return {};
}

namespace detail {

/// Assigns node indices in order of first appearance and records entry times.
class NodeTable {
public:
    Index intern(const NodeKey& key, double time) {
        auto [it, inserted] = index_.emplace(key, static_cast<Index>(nodes_.size()));
        if (inserted) {
            nodes_.push_back(key);
            times_.push_back(time);
        }
        return it->second;
    }

    Index at(const NodeKey& key) const { return index_.at(key); }
    const std::vector<NodeKey>& nodes() const { return nodes_; }
    const std::vector<double>& times() const { return times_; }

private:
    std::map<NodeKey, Index> index_;
    std::vector<NodeKey> nodes_;
    std::vector<double> times_;
};

} // namespace detail

/// Embeds a construction-filtered run into a filtered simplicial complex.
/// Vertices enter when an identifier is first seen, edges when two identifiers
/// first interact, and (optionally) every triangle of the final 1-skeleton at
/// the latest of its edge times.
inline FilteredComplex build_complex(const Run& run, EdgePolicy policy = EdgePolicy::SemanticPairs,
                                     bool induced_2simplices = false) {
    if (run.events.empty()) throw Error(ErrorCode::EmptyRun, "run '" + run.run_id + "' is empty");

    detail::NodeTable table;
    std::map<std::pair<Index, Index>, double> edges;
    auto add_edge = [&](Index a, Index b, double t) {
        if (a == b) return;
        if (a > b) std::swap(a, b);
        auto [it, inserted] = edges.emplace(std::pair{a, b}, t);
        if (!inserted) it->second = std::min(it->second, t);
    };

    for (const LogEvent& e : run.events) {
        const auto keys = event_nodes(e);
        std::vector<Index> ids;
        ids.reserve(keys.size());
        for (const auto& k : keys) ids.push_back(table.intern(k, e.timestamp));
        if (policy == EdgePolicy::SemanticPairs) {
            for (const auto& [a, b] : semantic_pairs(e)) add_edge(table.at(a), table.at(b), e.timestamp);
        } else {
            for (std::size_t i = 0; i < ids.size(); ++i)
                for (std::size_t j = i + 1; j < ids.size(); ++j) add_edge(ids[i], ids[j], e.timestamp);
        }
    }

    FilteredComplex out;
    out.nodes = table.nodes();
    const auto& vtimes = table.times();
    out.simplices.reserve(vtimes.size() + edges.size());
    for (Index i = 0; i < vtimes.size(); ++i) out.simplices.push_back(Simplex({i}, vtimes[i]));
    for (const auto& [e, t] : edges) out.simplices.push_back(Simplex({e.first, e.second}, t));

    if (induced_2simplices) {
        std::vector<std::vector<Index>> upper(vtimes.size()); // neighbours with larger index
        for (const auto& [e, t] : edges) upper[e.first].push_back(e.second);
        for (Index a = 0; a < upper.size(); ++a) {
            const auto& na = upper[a]; // sorted, since map iterates in order
            for (std::size_t i = 0; i < na.size(); ++i) {
                const Index b = na[i];
                const auto& nb = upper[b];
                for (std::size_t j = i + 1; j < na.size(); ++j) {
                    const Index c = na[j];
                    if (!std::binary_search(nb.begin(), nb.end(), c)) continue;
                    const double t = std::max({edges.at({a, b}), edges.at({a, c}), edges.at({b, c})});
                    out.simplices.push_back(Simplex({a, b, c}, t));
                }
            }
        }
    }
    out.sort();
    return out;
}

/// One hyperedge per distinct identifier set appearing in a single event.
inline Hypergraph build_hypergraph(const Run& run) {
    if (run.events.empty()) throw Error(ErrorCode::EmptyRun, "run '" + run.run_id + "' is empty");
    detail::NodeTable table;
    std::set<std::vector<Index>> seen;
    Hypergraph out;
    for (const LogEvent& e : run.events) {
        std::vector<Index> ids;
        for (const auto& k : event_nodes(e)) ids.push_back(table.intern(k, e.timestamp));
        std::sort(ids.begin(), ids.end());
        if (seen.insert(ids).second) out.hyperedges.push_back(std::move(ids));
    }
    out.nodes = table.nodes();
    return out;
}

} // namespace topolog
