#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "topolog/complex_builder.hpp"
#include "topolog/error.hpp"

namespace topolog {

/// Dense matrix with entries[i][j] == entries[j][i] exactly.
class SymmetricMatrix {
public:
    SymmetricMatrix() = default;
    explicit SymmetricMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
        if (!is_exactly_symmetric(m_)) throw Error(ErrorCode::NotSymmetric, "matrix is not symmetric");
    }

    static bool is_exactly_symmetric(const Eigen::MatrixXd& m) {
        if (m.rows() != m.cols()) return false;
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = i + 1; j < m.cols(); ++j)
                if (m(i, j) != m(j, i)) return false;
        return true;
    }

    Eigen::Index order() const { return m_.rows(); }
    double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
    const Eigen::MatrixXd& matrix() const { return m_; }

private:
    Eigen::MatrixXd m_;
};

/// Unnormalized Laplacian D - A of the final 1-skeleton (filtration times are
/// ignored). Rows follow ascending vertex id.
inline SymmetricMatrix graph_laplacian(const FilteredComplex& complex) {
    std::map<Index, Eigen::Index> pos;
    for (const auto& s : complex.simplices)
        if (s.size == 1) pos.emplace(s.v[0], 0);
    Eigen::Index next = 0;
    for (auto& [v, p] : pos) p = next++;

    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(next, next);
    for (const auto& s : complex.simplices) {
        if (s.size != 2) continue;
        const auto a = pos.at(s.v[0]);
        const auto b = pos.at(s.v[1]);
        L(a, b) -= 1.0;
        L(b, a) -= 1.0;
        L(a, a) += 1.0;
        L(b, b) += 1.0;
    }
    return SymmetricMatrix(std::move(L));
}

/// Normalized hypergraph Laplacian I - Dv^-1/2 H De^-1 H^T Dv^-1/2 with unit
/// hyperedge weights. A vertex in no hyperedge gets an all-zero row.
inline SymmetricMatrix hypergraph_laplacian(const Hypergraph& h) {
    const auto n = static_cast<Eigen::Index>(h.nodes.size());
    Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n, n); // H De^-1 H^T
    std::vector<double> degree(static_cast<std::size_t>(n), 0.0);
    for (const auto& e : h.hyperedges) {
        const double w = 1.0 / static_cast<double>(e.size());
        for (std::size_t i = 0; i < e.size(); ++i) {
            degree[e[i]] += 1.0;
            for (std::size_t j = i; j < e.size(); ++j) adj(e[i], e[j]) += w;
        }
    }
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double di = degree[static_cast<std::size_t>(i)];
        if (di == 0.0) continue;
        L(i, i) = 1.0 - adj(i, i) / di;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double dj = degree[static_cast<std::size_t>(j)];
            if (dj == 0.0 || adj(i, j) == 0.0) continue;
            L(i, j) = L(j, i) = -adj(i, j) / std::sqrt(di * dj);
        }
    }
    return SymmetricMatrix(std::move(L));
}

struct EigenDecomposition {
    std::vector<double> values; // descending
    Eigen::MatrixXd vectors;    // column k pairs with values[k]
};

inline EigenDecomposition eig_symmetric_full(const Eigen::MatrixXd& m) {
    if (!SymmetricMatrix::is_exactly_symmetric(m))
        throw Error(ErrorCode::NotSymmetric, "matrix is not symmetric");
    EigenDecomposition out;
    if (m.rows() == 0) return out;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success)
        throw Error(ErrorCode::NotSymmetric, "eigensolver did not converge");
    const auto n = m.rows();
    out.values.resize(static_cast<std::size_t>(n));
    out.vectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) { // Eigen sorts ascending
        out.values[static_cast<std::size_t>(k)] = solver.eigenvalues()(n - 1 - k);
        out.vectors.col(k) = solver.eigenvectors().col(n - 1 - k);
    }
    return out;
}

/// All eigenvalues, largest first.
inline std::vector<double> eig_symmetric(const Eigen::MatrixXd& m) {
    if (!SymmetricMatrix::is_exactly_symmetric(m))
        throw Error(ErrorCode::NotSymmetric, "matrix is not symmetric");
    if (m.rows() == 0) return {};
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    std::vector<double> values(solver.eigenvalues().data(), solver.eigenvalues().data() + m.rows());
    std::sort(values.begin(), values.end(), std::greater<>());
    return values;
}

inline std::vector<double> eig_symmetric(const SymmetricMatrix& m) { return eig_symmetric(m.matrix()); }

/// Sorted descending, truncated or zero-padded to `target_len`.
inline std::vector<double> to_spectrum_vector(std::vector<double> eigs, std::size_t target_len) {
    std::sort(eigs.begin(), eigs.end(), std::greater<>());
    eigs.resize(target_len, 0.0);
    return eigs;
}

/// ceil(1.1 * mean(counts)), evaluated in integers so 1.1 * 10 is exactly 11.
inline std::size_t choose_target_len(std::span<const std::size_t> eig_counts) {
    if (eig_counts.empty()) throw Error(ErrorCode::DegenerateConfig, "no eigenvalue counts");
    std::uint64_t sum = 0;
    for (auto c : eig_counts) sum += c;
    const std::uint64_t num = 11 * sum;
    const std::uint64_t den = 10 * static_cast<std::uint64_t>(eig_counts.size());
    return static_cast<std::size_t>(std::max<std::uint64_t>(1, (num + den - 1) / den));
}

} // namespace topolog
