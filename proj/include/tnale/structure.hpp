#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tnale/errors.hpp"

namespace tnale {

/// Unordered vertex pair, stored with a < b.
struct Edge {
    std::size_t a = 0;
    std::size_t b = 0;

    Edge() = default;
    Edge(std::size_t u, std::size_t v) : a(std::min(u, v)), b(std::max(u, v)) {
        if (u == v) throw StructureError("self-loop on vertex " + std::to_string(u));
    }

    friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Searchable edges in canonical order: upper triangle, row-major.
struct EdgeOrder {
    std::vector<Edge> edges;

    [[nodiscard]] std::size_t size() const noexcept { return edges.size(); }
    [[nodiscard]] const Edge& operator[](std::size_t k) const { return edges[k]; }
};

/// Position of pair (i, j), i < j, in the row-major upper triangle of an
/// n x n matrix.
inline std::size_t upper_triangle_index(std::size_t n, std::size_t i, std::size_t j) {
    return i * n - i * (i + 1) / 2 + (j - i - 1);
}

class VertexPermutation {
public:
    VertexPermutation() = default;

    explicit VertexPermutation(std::vector<std::size_t> perm) : perm_(std::move(perm)) {
        std::vector<bool> seen(perm_.size(), false);
        for (std::size_t p : perm_) {
            if (p >= perm_.size() || seen[p]) throw StructureError("vertex permutation is not a bijection");
            seen[p] = true;
        }
    }

    static VertexPermutation identity(std::size_t n) {
        std::vector<std::size_t> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = i;
        return VertexPermutation(std::move(p));
    }

    static VertexPermutation transposition(std::size_t n, std::size_t i, std::size_t j) {
        auto p = identity(n);
        std::swap(p.perm_.at(i), p.perm_.at(j));
        return p;
    }

    [[nodiscard]] std::size_t size() const noexcept { return perm_.size(); }
    std::size_t operator()(std::size_t v) const { return perm_.at(v); }
    [[nodiscard]] const std::vector<std::size_t>& map() const noexcept { return perm_; }

    [[nodiscard]] VertexPermutation inverse() const {
        std::vector<std::size_t> inv(perm_.size());
        for (std::size_t i = 0; i < perm_.size(); ++i) inv[perm_[i]] = i;
        return VertexPermutation(std::move(inv));
    }

    [[nodiscard]] bool is_identity() const noexcept {
        for (std::size_t i = 0; i < perm_.size(); ++i)
            if (perm_[i] != i) return false;
        return true;
    }

    friend bool operator==(const VertexPermutation&, const VertexPermutation&) = default;

private:
    std::vector<std::size_t> perm_;
};

/**
 * A tensor-network structure (G, r) held as a weighted adjacency matrix.
 *
 * Every vertex pair owns a bond; a bond dimension of 1 is a trivial edge, so
 * topology changes are rank changes. When a template is set, only template
 * edges are searchable and all other bonds stay at 1. Vertices with physical
 * dimension 1 are latent (internal nodes of HT/MERA/TW layouts).
 */
class TnStructure {
public:
    TnStructure() = default;

    /// All bonds 1. Without a template every pair is searchable.
    TnStructure(std::vector<std::size_t> phys_dims, std::optional<std::vector<Edge>> template_edges = std::nullopt)
        : n_(phys_dims.size()), bond_(n_ * n_, 1), phys_(std::move(phys_dims)) {
        for (std::size_t i = 0; i < n_; ++i) bond_[i * n_ + i] = 0;
        if (template_edges) {
            auto t = *template_edges;
            std::sort(t.begin(), t.end());
            t.erase(std::unique(t.begin(), t.end()), t.end());
            template_ = std::move(t);
        }
        validate();
    }

    /**
     * Builds a structure from an n x n weighted adjacency matrix (row-major).
     * Nonzero off-diagonal entries become template edges carrying that bond
     * dimension.
     */
    static TnStructure from_adjacency(std::size_t n, std::span<const std::size_t> weights,
                                      std::vector<std::size_t> phys_dims) {
        if (weights.size() != n * n) throw StructureError("adjacency matrix must hold n*n entries");
        if (phys_dims.size() != n) throw StructureError("one physical dimension per vertex required");
        std::vector<Edge> edges;
        for (std::size_t i = 0; i < n; ++i) {
            if (weights[i * n + i] != 0) throw StructureError("adjacency diagonal must be zero");
            for (std::size_t j = i + 1; j < n; ++j) {
                if (weights[i * n + j] != weights[j * n + i]) throw StructureError("adjacency matrix is not symmetric");
                if (weights[i * n + j] != 0) edges.emplace_back(i, j);
            }
        }
        TnStructure s(std::move(phys_dims), edges);
        for (const Edge& e : edges) s.set_bond(e, weights[e.a * n + e.b]);
        return s;
    }

    [[nodiscard]] std::size_t n_vertices() const noexcept { return n_; }
    [[nodiscard]] const std::vector<std::size_t>& phys_dims() const noexcept { return phys_; }
    [[nodiscard]] std::size_t phys_dim(std::size_t v) const { return phys_.at(v); }
    [[nodiscard]] bool has_template() const noexcept { return template_.has_value(); }
    [[nodiscard]] const std::optional<std::vector<Edge>>& template_edges() const noexcept { return template_; }

    [[nodiscard]] std::size_t bond(std::size_t i, std::size_t j) const {
        if (i >= n_ || j >= n_) throw StructureError("bond index out of range");
        return bond_[i * n_ + j];
    }
    [[nodiscard]] std::size_t bond(const Edge& e) const { return bond(e.a, e.b); }

    [[nodiscard]] bool is_searchable(const Edge& e) const {
        if (!template_) return true;
        return std::binary_search(template_->begin(), template_->end(), e);
    }

    /// Sets the bond dimension of a searchable edge.
    void set_bond(const Edge& e, std::size_t dim) {
        if (e.b >= n_) throw StructureError("edge vertex out of range");
        if (dim < 1) throw StructureError("bond dimension must be at least 1");
        if (!is_searchable(e) && dim != 1)
            throw StructureError("edge (" + std::to_string(e.a) + "," + std::to_string(e.b) +
                                 ") is outside the template and must stay 1");
        bond_[e.a * n_ + e.b] = dim;
        bond_[e.b * n_ + e.a] = dim;
    }

    [[nodiscard]] TnStructure with_bond(const Edge& e, std::size_t dim) const {
        TnStructure s = *this;
        s.set_bond(e, dim);
        return s;
    }

    [[nodiscard]] EdgeOrder searchable_edges() const {
        if (template_) return EdgeOrder{*template_};
        EdgeOrder order;
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = i + 1; j < n_; ++j) order.edges.emplace_back(i, j);
        return order;
    }

    /// Bond dimensions of the searchable edges in canonical order.
    [[nodiscard]] std::vector<std::size_t> ranks() const {
        std::vector<std::size_t> r;
        for (const Edge& e : searchable_edges().edges) r.push_back(bond(e));
        return r;
    }

    [[nodiscard]] TnStructure with_ranks(std::span<const std::size_t> ranks) const {
        const EdgeOrder order = searchable_edges();
        if (ranks.size() != order.size())
            throw StructureError("expected " + std::to_string(order.size()) + " ranks, got " +
                                 std::to_string(ranks.size()));
        TnStructure s = *this;
        for (std::size_t k = 0; k < order.size(); ++k) s.set_bond(order[k], ranks[k]);
        return s;
    }

    /// Every vertex neighbour in ascending order; bond slots of a core.
    [[nodiscard]] std::vector<std::size_t> core_shape(std::size_t v) const {
        std::vector<std::size_t> shape{phys_.at(v)};
        for (std::size_t u = 0; u < n_; ++u)
            if (u != v) shape.push_back(bond_[v * n_ + u]);
        return shape;
    }

    /// Canonical text key: bond upper triangle, physical dims, template.
    [[nodiscard]] std::string key() const {
        std::string k = "n" + std::to_string(n_) + "|p";
        for (std::size_t d : phys_) k += std::to_string(d) + ",";
        k += "|b";
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = i + 1; j < n_; ++j) k += std::to_string(bond_[i * n_ + j]) + ",";
        if (template_) {
            k += "|t";
            for (const Edge& e : *template_) k += std::to_string(e.a) + "-" + std::to_string(e.b) + ",";
        }
        return k;
    }

    /// FNV-1a hash of key().
    [[nodiscard]] std::uint64_t hash() const {
        std::uint64_t h = 1469598103934665603ULL;
        for (unsigned char c : key()) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        return h;
    }

    friend bool operator==(const TnStructure&, const TnStructure&) = default;

private:
    void validate() const {
        if (n_ == 0) throw StructureError("structure needs at least one vertex");
        for (std::size_t d : phys_)
            if (d == 0) throw StructureError("physical dimension must be positive");
        if (template_)
            for (const Edge& e : *template_)
                if (e.b >= n_) throw StructureError("template edge vertex out of range");
    }

    std::size_t n_ = 0;
    std::vector<std::size_t> bond_;
    std::vector<std::size_t> phys_;
    std::optional<std::vector<Edge>> template_;
};

/// Full upper triangle in canonical order; pairs outside the template read 0.
inline std::vector<std::size_t> ranks_to_padded_vector(const TnStructure& s) {
    const std::size_t n = s.n_vertices();
    std::vector<std::size_t> out;
    out.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) out.push_back(s.is_searchable(Edge(i, j)) ? s.bond(i, j) : 0);
    return out;
}

/// Relabels vertices: vertex v of s becomes vertex perm(v).
inline TnStructure apply_permutation(const TnStructure& s, const VertexPermutation& perm) {
    const std::size_t n = s.n_vertices();
    if (perm.size() != n) throw StructureError("permutation size does not match vertex count");
    std::vector<std::size_t> phys(n);
    for (std::size_t v = 0; v < n; ++v) phys[perm(v)] = s.phys_dim(v);
    std::optional<std::vector<Edge>> tmpl;
    if (s.template_edges()) {
        tmpl.emplace();
        for (const Edge& e : *s.template_edges()) tmpl->emplace_back(perm(e.a), perm(e.b));
    }
    TnStructure out(std::move(phys), std::move(tmpl));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const std::size_t b = s.bond(i, j);
            if (b != 1) out.set_bond(Edge(perm(i), perm(j)), b);
        }
    return out;
}

/// One structure per vertex transposition, pairs in canonical order.
inline std::vector<TnStructure> graph_neighborhood(const TnStructure& s) {
    const std::size_t n = s.n_vertices();
    std::vector<TnStructure> out;
    if (n < 2) return out;
    out.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            out.push_back(apply_permutation(s, VertexPermutation::transposition(n, i, j)));
    return out;
}

/// {center + i : |i| <= radius} clipped to [lo, hi], ascending.
inline std::vector<std::size_t> rank_candidates(std::size_t center, std::size_t radius, std::size_t lo,
                                                std::size_t hi) {
    if (lo > hi || center < lo || center > hi)
        throw StructureError("rank_candidates: center " + std::to_string(center) + " outside [" + std::to_string(lo) +
                             ", " + std::to_string(hi) + "]");
    const std::size_t first = center - std::min(radius, center - lo);
    const std::size_t last = std::min(hi, center + radius);
    std::vector<std::size_t> out;
    for (std::size_t r = first; r <= last; ++r) out.push_back(r);
    return out;
}

/// Number of core entries: sum over vertices of phys dim times incident bonds.
inline std::uint64_t param_count(const TnStructure& s) {
    std::uint64_t total = 0;
    for (std::size_t v = 0; v < s.n_vertices(); ++v) {
        std::uint64_t p = s.phys_dim(v);
        for (std::size_t u = 0; u < s.n_vertices(); ++u)
            if (u != v) p *= s.bond(v, u);
        total += p;
    }
    return total;
}

inline std::uint64_t data_size(const TnStructure& s) {
    std::uint64_t total = 1;
    for (std::size_t d : s.phys_dims()) total *= d;
    return total;
}

/// Entries of the represented tensor over the parameter count.
inline double compression_ratio(const TnStructure& s) {
    return static_cast<double>(data_size(s)) / static_cast<double>(param_count(s));
}

/// param_count(truth) / param_count(found); at least 1 means found is as
/// compact as the generating structure.
inline double efficiency(const TnStructure& found, const TnStructure& truth) {
    auto observable = [](const TnStructure& s) {
        std::vector<std::size_t> d;
        for (std::size_t x : s.phys_dims())
            if (x != 1) d.push_back(x);
        std::sort(d.begin(), d.end());
        return d;
    };
    if (observable(found) != observable(truth))
        throw StructureError("efficiency: structures have incompatible physical dimensions");
    return static_cast<double>(param_count(truth)) / static_cast<double>(param_count(found));
}

/// Tensor-ring helper: vertex k is joined to k+1 (mod n) with ranks[k].
inline TnStructure ring_structure(std::span<const std::size_t> ranks, std::size_t phys_dim) {
    const std::size_t n = ranks.size();
    if (n < 2) throw StructureError("a ring needs at least two vertices");
    std::vector<Edge> edges;
    for (std::size_t k = 0; k < n; ++k) edges.emplace_back(k, (k + 1) % n);
    TnStructure s(std::vector<std::size_t>(n, phys_dim), edges);
    for (std::size_t k = 0; k < n; ++k) {
        const Edge e(k, (k + 1) % n);
        // Two-vertex rings share one bond; the first rank wins.
        if (n == 2 && k == 1) break;
        s.set_bond(e, ranks[k]);
    }
    return s;
}

/// Ranks of a ring structure read in ring order (bond k joins k and k+1).
inline std::vector<std::size_t> ring_ranks(const TnStructure& s) {
    const std::size_t n = s.n_vertices();
    std::vector<std::size_t> r;
    for (std::size_t k = 0; k < n; ++k) r.push_back(s.bond(k, (k + 1) % n));
    return r;
}

}  // namespace tnale
