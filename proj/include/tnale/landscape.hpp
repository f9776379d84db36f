#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tnale/errors.hpp"
#include "tnale/objective.hpp"
#include "tnale/search.hpp"
#include "tnale/structure.hpp"
#include "tnale/tensor.hpp"

namespace tnale {

/**
 * Reciprocal objective over a neighbourhood grid. Rank modes come first in
 * searchable-edge order; the optional last mode runs over the center graph
 * followed by its vertex-transposition neighbours.
 */
struct LandscapeTensor {
    DenseTensor tensor{Shape{1}};
    TnStructure center;
    std::size_t radius = 0;
    /// 1-based position of the center rank in an unclamped mode.
    std::size_t index_offset = 1;
    /// Realized rank candidates of each rank mode.
    std::vector<std::vector<std::size_t>> candidates;
    std::optional<std::vector<TnStructure>> graph_mode_labels;

    [[nodiscard]] std::size_t n_rank_modes() const noexcept { return candidates.size(); }

    /// 0-based index of the center in every mode.
    [[nodiscard]] std::vector<std::size_t> center_index() const {
        const EdgeOrder order = center.searchable_edges();
        std::vector<std::size_t> idx;
        for (std::size_t k = 0; k < candidates.size(); ++k) {
            const auto& c = candidates[k];
            idx.push_back(static_cast<std::size_t>(std::find(c.begin(), c.end(), center.bond(order[k])) - c.begin()));
        }
        if (graph_mode_labels) idx.push_back(0);
        return idx;
    }

    /// Structure at a 0-based multi-index.
    [[nodiscard]] TnStructure decode(std::span<const std::size_t> index) const {
        if (index.size() != tensor.order()) throw ShapeError("landscape: index order mismatch");
        const EdgeOrder order = center.searchable_edges();
        std::vector<std::size_t> ranks(candidates.size());
        for (std::size_t k = 0; k < candidates.size(); ++k) ranks[k] = candidates[k].at(index[k]);
        TnStructure s = center.with_ranks(ranks);
        if (graph_mode_labels) {
            const std::size_t g = index[candidates.size()];
            if (g > 0) {
                // Neighbour g-1 is the center relabelled by one transposition.
                const TnStructure& label = (*graph_mode_labels).at(g);
                const VertexPermutation swap = transposition_between(center, label);
                s = apply_permutation(s, swap);
            }
        }
        return s;
    }

private:
    static VertexPermutation transposition_between(const TnStructure& center, const TnStructure& neighbour) {
        const std::size_t n = center.n_vertices();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                VertexPermutation t = VertexPermutation::transposition(n, i, j);
                if (apply_permutation(center, t) == neighbour) return t;
            }
        throw StructureError("landscape: graph label is not a transposition of the center");
    }
};

namespace detail {

inline std::vector<std::vector<std::size_t>> landscape_candidates(const TnStructure& center, std::size_t radius,
                                                                  std::size_t lo, std::size_t hi) {
    std::vector<std::vector<std::size_t>> out;
    const EdgeOrder order = center.searchable_edges();
    for (std::size_t k = 0; k < order.size(); ++k) {
        const std::size_t r = center.bond(order[k]);
        out.push_back(rank_candidates(r, radius, lo, std::max(hi, r)));
    }
    return out;
}

}  // namespace detail

/**
 * Materializes the landscape around `center`: every grid entry is the
 * reciprocal of an explicit objective. Throws GridCapExceeded above the cap
 * and NumericError on a non-positive objective.
 */
inline LandscapeTensor build_landscape(const TnStructure& center, std::size_t radius, bool include_graph_mode,
                                       Evaluator& evaluator, std::size_t rank_lo = 1, std::size_t rank_hi = 7,
                                       std::size_t grid_cap = grid_cap_from_env()) {
    LandscapeTensor b;
    b.center = center;
    b.radius = radius;
    b.index_offset = radius + 1;
    b.candidates = detail::landscape_candidates(center, radius, rank_lo, rank_hi);

    Shape dims;
    for (const auto& c : b.candidates) dims.push_back(c.size());
    if (include_graph_mode) {
        std::vector<TnStructure> labels{center};
        for (auto& s : graph_neighborhood(center)) labels.push_back(std::move(s));
        dims.push_back(labels.size());
        b.graph_mode_labels = std::move(labels);
    }
    if (dims.empty()) throw StructureError("build_landscape: structure has no searchable edges");

    double total = 1.0;
    for (std::size_t d : dims) total *= static_cast<double>(d);
    if (total > static_cast<double>(grid_cap))
        throw GridCapExceeded("build_landscape: grid of " + std::to_string(static_cast<std::uint64_t>(total)) +
                              " entries exceeds the cap of " + std::to_string(grid_cap));

    b.tensor = DenseTensor(dims);
    std::vector<TnStructure> batch;
    batch.reserve(b.tensor.size());
    for (std::size_t flat = 0; flat < b.tensor.size(); ++flat) batch.push_back(b.decode(unravel(flat, dims)));
    const auto records = evaluator.evaluate_batch(batch);
    for (std::size_t flat = 0; flat < records.size(); ++flat) {
        const double f = records[flat].objective;
        if (!(f > 0.0))
            throw NumericError("build_landscape: non-positive objective " + std::to_string(f) + " at " +
                               records[flat].structure.key());
        b.tensor[flat] = 1.0 / f;
    }
    return b;
}

struct EntrySearchResult {
    std::vector<std::size_t> index;
    double value = 0.0;
    /// Distinct entries read.
    std::size_t reads = 0;
};

/// Exact maximum entry; ties go to the lexicographically smallest index.
inline EntrySearchResult min_entry_brute(const DenseTensor& t) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < t.size(); ++i)
        if (t[i] > t[best]) best = i;
    return {unravel(best, t.dims()), t[best], t.size()};
}

inline EntrySearchResult min_entry_brute(const LandscapeTensor& b) { return min_entry_brute(b.tensor); }

using EntryFn = std::function<double(std::span<const std::size_t>)>;

/**
 * Fiber alternation for the maximum entry. Sweeps alternate direction,
 * starting forward; each mode's fiber through the current index is scanned
 * and the current index moves only to a strictly larger entry. Stops early
 * once a whole sweep moves nothing.
 */
inline EntrySearchResult ale_min_entry(const Shape& mode_sizes, const EntryFn& entry, std::size_t sweeps,
                                       std::vector<std::size_t> start) {
    if (start.size() != mode_sizes.size()) throw ShapeError("ale_min_entry: start index order mismatch");
    for (std::size_t k = 0; k < mode_sizes.size(); ++k) {
        if (mode_sizes[k] < 1) throw ShapeError("ale_min_entry: empty mode");
        if (start[k] >= mode_sizes[k]) throw ShapeError("ale_min_entry: start index out of range");
    }
    std::map<std::vector<std::size_t>, double> seen;
    auto read = [&](const std::vector<std::size_t>& idx) {
        auto it = seen.find(idx);
        if (it != seen.end()) return it->second;
        const double v = entry(idx);
        seen.emplace(idx, v);
        return v;
    };

    std::vector<std::size_t> cur = std::move(start);
    double value = read(cur);
    const std::size_t K = mode_sizes.size();
    for (std::size_t d = 0; d < sweeps; ++d) {
        bool moved = false;
        for (std::size_t step = 0; step < K; ++step) {
            const std::size_t k = d % 2 == 0 ? step : K - 1 - step;
            std::vector<std::size_t> probe = cur;
            for (std::size_t i = 0; i < mode_sizes[k]; ++i) {
                probe[k] = i;
                const double v = read(probe);
                if (v > value) {
                    value = v;
                    cur[k] = i;
                    moved = true;
                }
            }
        }
        if (!moved) break;
    }
    return {cur, value, seen.size()};
}

inline EntrySearchResult ale_min_entry(const DenseTensor& t, std::size_t sweeps, std::vector<std::size_t> start) {
    return ale_min_entry(
        t.dims(), [&](std::span<const std::size_t> idx) { return t.at(idx); }, sweeps, std::move(start));
}

/**
 * Evaluator-backed entries of the landscape around `center` without
 * materializing it; returns the mode sizes, the entry function and the
 * decoder. Entries are explicit evaluations through the shared cache.
 */
struct LazyLandscape {
    LandscapeTensor layout;
    Shape mode_sizes;
    EntryFn entry;
};

inline LazyLandscape lazy_landscape(const TnStructure& center, std::size_t radius, Evaluator& evaluator,
                                    std::size_t rank_lo = 1, std::size_t rank_hi = 7) {
    LazyLandscape lazy;
    lazy.layout.center = center;
    lazy.layout.radius = radius;
    lazy.layout.index_offset = radius + 1;
    lazy.layout.candidates = detail::landscape_candidates(center, radius, rank_lo, rank_hi);
    for (const auto& c : lazy.layout.candidates) lazy.mode_sizes.push_back(c.size());
    lazy.layout.tensor = DenseTensor(lazy.mode_sizes);
    const LandscapeTensor* layout = &lazy.layout;
    lazy.entry = [layout, &evaluator](std::span<const std::size_t> idx) {
        return 1.0 / evaluator.evaluate(layout->decode(idx)).objective;
    };
    return lazy;
}

/// Forward differences f(x + e_i) - f(x) over a nonnegative integer point.
inline std::vector<double> finite_gradient(const std::function<double(std::span<const std::int64_t>)>& f,
                                           std::span<const std::int64_t> x) {
    for (std::int64_t v : x)
        if (v < 0) throw Error("finite_gradient: point has a negative coordinate");
    std::vector<std::int64_t> probe(x.begin(), x.end());
    const double f0 = f(probe);
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        ++probe[i];
        g[i] = f(probe) - f0;
        --probe[i];
    }
    return g;
}

struct ModeSpectrum {
    std::vector<double> singular_values;
    /// Smallest r whose rank-r truncation has relative error <= the tolerance.
    std::size_t rank_at_tolerance = 0;
};

inline std::vector<ModeSpectrum> unfolding_spectra(const DenseTensor& t, double tolerance = 0.1) {
    std::vector<ModeSpectrum> out;
    for (std::size_t mode = 0; mode < t.order(); ++mode) {
        ModeSpectrum m;
        m.singular_values = singular_values(unfold(t, mode));
        double total = 0.0;
        for (double s : m.singular_values) total += s * s;
        // tail[r] = energy beyond the first r values.
        double tail = total;
        std::size_t r = 0;
        while (r < m.singular_values.size() && (total == 0.0 ? false : std::sqrt(tail / total) > tolerance)) {
            tail -= m.singular_values[r] * m.singular_values[r];
            ++r;
        }
        m.rank_at_tolerance = r;
        out.push_back(std::move(m));
    }
    return out;
}

inline std::vector<ModeSpectrum> unfolding_spectra(const LandscapeTensor& b, double tolerance = 0.1) {
    return unfolding_spectra(b.tensor, tolerance);
}

struct SpotCheck {
    std::size_t samples = 0;
    double max_relative_error = 0.0;
};

/// Compares 1/entry with the cached objective of the decoded structure.
inline SpotCheck reciprocal_spot_check(const LandscapeTensor& b, const Evaluator& evaluator, std::size_t samples,
                                       std::uint64_t seed) {
    Rng rng = make_rng(seed, "landscape-spot-check");
    std::uniform_int_distribution<std::size_t> pick(0, b.tensor.size() - 1);
    SpotCheck out;
    for (std::size_t i = 0; i < samples; ++i) {
        const std::size_t flat = pick(rng);
        const auto rec = evaluator.lookup(b.decode(unravel(flat, b.tensor.dims())));
        if (!rec) throw Error("reciprocal_spot_check: grid entry was never evaluated");
        const double err = std::abs(1.0 / b.tensor[flat] - rec->objective) / std::abs(rec->objective);
        out.max_relative_error = std::max(out.max_relative_error, err);
        ++out.samples;
    }
    return out;
}

}  // namespace tnale
