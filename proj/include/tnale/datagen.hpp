#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tnale/errors.hpp"
#include "tnale/network.hpp"
#include "tnale/objective.hpp"
#include "tnale/random.hpp"
#include "tnale/structure.hpp"
#include "tnale/tensor.hpp"

namespace tnale {

enum class TopologyKind { TR, TW, PEPS, HT, MERA, FC };

inline std::string_view topology_name(TopologyKind k) {
    switch (k) {
        case TopologyKind::TR: return "tr";
        case TopologyKind::TW: return "tw";
        case TopologyKind::PEPS: return "peps";
        case TopologyKind::HT: return "ht";
        case TopologyKind::MERA: return "mera";
        case TopologyKind::FC: return "fc";
    }
    return "?";
}

inline TopologyKind parse_topology(std::string_view name) {
    for (TopologyKind k : {TopologyKind::TR, TopologyKind::TW, TopologyKind::PEPS, TopologyKind::HT,
                           TopologyKind::MERA, TopologyKind::FC})
        if (topology_name(k) == name) return k;
    throw Error("unknown topology '" + std::string(name) + "'");
}

struct TopologyTemplate {
    TopologyKind kind = TopologyKind::TR;
    /// Physical vertices.
    std::size_t order = 0;
};

namespace detail {

inline TnStructure with_latent(std::size_t order, std::size_t latent, std::size_t phys_dim,
                               std::vector<Edge> edges) {
    std::vector<std::size_t> phys(order, phys_dim);
    phys.resize(order + latent, 1);
    return TnStructure(std::move(phys), std::move(edges));
}

// Internal node for leaves [lo, hi); leaves are vertices 0..n-1, internal
// nodes are numbered from n upward in creation order.
inline std::size_t ht_subtree(std::size_t lo, std::size_t hi, std::size_t& next, std::vector<Edge>& edges) {
    if (hi - lo == 1) return lo;
    const std::size_t node = next++;
    const std::size_t mid = lo + (hi - lo + 1) / 2;
    edges.emplace_back(node, ht_subtree(lo, mid, next, edges));
    edges.emplace_back(node, ht_subtree(mid, hi, next, edges));
    return node;
}

}  // namespace detail

/// Unweighted template with physical vertices 0..order-1 and latent vertices after them.
inline TnStructure template_adjacency(const TopologyTemplate& t, std::size_t phys_dim = 3) {
    const std::size_t n = t.order;
    auto unsupported = [&] {
        return StructureError("template: " + std::string(topology_name(t.kind)) + " of order " + std::to_string(n) +
                              " is not supported");
    };
    if (phys_dim < 1) throw StructureError("template: physical dimension must be positive");
    std::vector<Edge> edges;
    switch (t.kind) {
        case TopologyKind::TR:
            if (n < 3) throw unsupported();
            for (std::size_t k = 0; k < n; ++k) edges.emplace_back(k, (k + 1) % n);
            return detail::with_latent(n, 0, phys_dim, edges);
        case TopologyKind::TW:
            if (n < 3) throw unsupported();
            for (std::size_t k = 0; k < n; ++k) edges.emplace_back(k, (k + 1) % n);
            for (std::size_t k = 0; k < n; ++k) edges.emplace_back(k, n);
            return detail::with_latent(n, 1, phys_dim, edges);
        case TopologyKind::PEPS: {
            std::size_t rows = 1;
            for (std::size_t r = 1; r * r <= n; ++r)
                if (n % r == 0) rows = r;
            if (rows < 2) throw unsupported();
            const std::size_t cols = n / rows;
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t j = 0; j < cols; ++j) {
                    const std::size_t v = i * cols + j;
                    if (j + 1 < cols) edges.emplace_back(v, v + 1);
                    if (i + 1 < rows) edges.emplace_back(v, v + cols);
                }
            return detail::with_latent(n, 0, phys_dim, edges);
        }
        case TopologyKind::HT: {
            if (n < 3) throw unsupported();
            std::size_t next = n;
            detail::ht_subtree(0, n, next, edges);
            return detail::with_latent(n, next - n, phys_dim, edges);
        }
        case TopologyKind::MERA: {
            if (n < 4 || n % 2 != 0) throw unsupported();
            const std::size_t half = n / 2;
            // Disentanglers n..n+half-1, isometries n+half..n+2half-1, top last.
            for (std::size_t j = 0; j < half; ++j) {
                edges.emplace_back(n + j, 2 * j + 1);
                edges.emplace_back(n + j, (2 * j + 2) % n);
            }
            for (std::size_t j = 0; j < half; ++j) {
                edges.emplace_back(n + half + j, 2 * j);
                edges.emplace_back(n + half + j, 2 * j + 1);
                edges.emplace_back(n + half + j, n + 2 * half);
            }
            return detail::with_latent(n, 2 * half + 1, phys_dim, edges);
        }
        case TopologyKind::FC:
            if (n < 2) throw unsupported();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j) edges.emplace_back(i, j);
            return detail::with_latent(n, 0, phys_dim, edges);
    }
    throw unsupported();
}

struct GenSpec {
    TopologyTemplate topology;
    std::size_t phys_dim = 3;
    std::size_t rank_lo = 1;
    std::size_t rank_hi = 4;
    bool permute = false;
    double core_std = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (rank_lo < 1 || rank_hi < rank_lo) throw Error("generate: invalid rank range");
        if (!(core_std > 0.0)) throw Error("generate: core_std must be positive");
    }
};

struct GeneratedInstance {
    DenseTensor target{Shape{1}};
    /// Structure of the target's modes (generating structure relabelled).
    TnStructure truth;
    /// Generating vertex v sits at truth vertex truth_perm(v).
    VertexPermutation truth_perm;
    /// Cores conforming to `truth`.
    CoreSet cores;
};

/// Random instance with hidden ranks and, optionally, hidden vertex order.
inline GeneratedInstance generate(const GenSpec& spec) {
    spec.validate();
    const TnStructure tmpl = template_adjacency(spec.topology, spec.phys_dim);
    const EdgeOrder order = tmpl.searchable_edges();
    if (order.size() == 0) throw StructureError("generate: template has no edges");

    Rng rank_rng = make_rng(spec.seed, "gen-ranks");
    std::uniform_int_distribution<std::size_t> rank(spec.rank_lo, spec.rank_hi);
    std::vector<std::size_t> ranks(order.size());
    for (auto& r : ranks) r = rank(rank_rng);
    const TnStructure generating = tmpl.with_ranks(ranks);

    Rng core_rng = make_rng(spec.seed, "gen-cores");
    std::normal_distribution<double> normal(0.0, spec.core_std);
    CoreSet cores;
    for (std::size_t v = 0; v < generating.n_vertices(); ++v) {
        DenseTensor c(generating.core_shape(v));
        for (double& x : c.values()) x = normal(core_rng);
        cores.cores.push_back(std::move(c));
    }

    std::vector<std::size_t> p(generating.n_vertices());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = i;
    if (spec.permute) {
        // Latent vertices are invisible in the target and keep their labels.
        Rng perm_rng = make_rng(spec.seed, "gen-perm");
        std::shuffle(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(spec.topology.order), perm_rng);
    }
    VertexPermutation perm(std::move(p));

    GeneratedInstance out;
    out.truth = apply_permutation(generating, perm);
    out.cores = permute_cores(generating, cores, perm);
    out.truth_perm = std::move(perm);
    out.target = contract_network(out.truth, out.cores);
    return out;
}

/// RSE at most 1e-4 and a structure at least as compact as the truth.
inline bool success(const EvaluationRecord& found, const TnStructure& truth) {
    return !found.estimated && found.rse <= 1e-4 && efficiency(found.structure, truth) >= 1.0;
}

}  // namespace tnale
