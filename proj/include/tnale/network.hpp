#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "tnale/errors.hpp"
#include "tnale/structure.hpp"
#include "tnale/tensor.hpp"

namespace tnale {

/**
 * One core per vertex. Core v has shape [phys_dims[v]] followed by the bond
 * dimension to every other vertex u in ascending u, unit bonds included.
 */
struct CoreSet {
    std::vector<DenseTensor> cores;

    [[nodiscard]] std::size_t size() const noexcept { return cores.size(); }
    DenseTensor& operator[](std::size_t v) { return cores[v]; }
    const DenseTensor& operator[](std::size_t v) const { return cores[v]; }

    [[nodiscard]] std::size_t total_size() const noexcept {
        std::size_t n = 0;
        for (const auto& c : cores) n += c.size();
        return n;
    }

    friend bool operator==(const CoreSet&, const CoreSet&) = default;
};

inline void check_conformance(const TnStructure& s, const CoreSet& cores) {
    if (cores.size() != s.n_vertices())
        throw ConformanceError("structure has " + std::to_string(s.n_vertices()) + " vertices but " +
                               std::to_string(cores.size()) + " cores were given");
    for (std::size_t v = 0; v < s.n_vertices(); ++v) {
        const Shape expected = s.core_shape(v);
        if (cores[v].dims() != expected)
            throw ConformanceError("core " + std::to_string(v) + " has shape " + shape_string(cores[v].dims()) +
                                   ", structure expects " + shape_string(expected));
    }
}

/// Dims of the tensor a structure represents; unit physical modes dropped.
inline Shape network_output_dims(const TnStructure& s) {
    Shape d;
    for (std::size_t x : s.phys_dims())
        if (x > 1) d.push_back(x);
    if (d.empty()) d.push_back(1);
    return d;
}

/**
 * Contracts a network by merging cores in ascending vertex order and keeps
 * the pairwise products so that gradients with respect to every core can be
 * pulled back through the same sequence.
 *
 * Unit modes are squeezed before merging; they do not change the row-major
 * layout of a core, so gradients map back onto the full core shape directly.
 */
class NetworkContraction {
public:
    explicit NetworkContraction(const TnStructure& s) : structure_(s), out_dims_(network_output_dims(s)) {
        const std::size_t n = s.n_vertices();
        auto edge_label = [n](std::size_t i, std::size_t j) {
            return static_cast<int>(n + upper_triangle_index(n, std::min(i, j), std::max(i, j)));
        };

        core_modes_.resize(n);
        for (std::size_t v = 0; v < n; ++v) {
            if (s.phys_dim(v) > 1) core_modes_[v].push_back({static_cast<int>(v), s.phys_dim(v)});
            for (std::size_t u = 0; u < n; ++u)
                if (u != v && s.bond(v, u) > 1) core_modes_[v].push_back({edge_label(v, u), s.bond(v, u)});
        }

        std::vector<Mode> merged = core_modes_[0];
        for (std::size_t v = 1; v < n; ++v) {
            Step step;
            step.vertex = v;
            const auto& core = core_modes_[v];
            std::vector<Mode> free_a, shared, free_b;
            std::vector<std::size_t> shared_pos_a, free_pos_a;
            for (std::size_t i = 0; i < merged.size(); ++i) {
                if (find(core, merged[i].label) < core.size()) {
                    shared.push_back(merged[i]);
                    shared_pos_a.push_back(i);
                } else {
                    free_a.push_back(merged[i]);
                    free_pos_a.push_back(i);
                }
            }
            step.perm_a = free_pos_a;
            step.perm_a.insert(step.perm_a.end(), shared_pos_a.begin(), shared_pos_a.end());
            for (const Mode& m : shared) step.perm_b.push_back(find(core, m.label));
            for (std::size_t i = 0; i < core.size(); ++i)
                if (find(shared, core[i].label) == shared.size()) {
                    step.perm_b.push_back(i);
                    free_b.push_back(core[i]);
                }
            step.dims_a = dims_of(merged);
            step.dims_b = dims_of(core);
            step.m = product(free_a);
            step.k = product(shared);
            step.n = product(free_b);
            merged = free_a;
            merged.insert(merged.end(), free_b.begin(), free_b.end());
            steps_.push_back(std::move(step));
        }

        // Everything left is physical; order by vertex.
        for (const Mode& m : merged)
            if (m.label >= static_cast<int>(n))
                throw ConformanceError("internal: bond label left open after contraction");
        final_dims_ = dims_of(merged);
        final_perm_.resize(merged.size());
        for (std::size_t i = 0; i < merged.size(); ++i) final_perm_[i] = i;
        std::sort(final_perm_.begin(), final_perm_.end(),
                  [&](std::size_t x, std::size_t y) { return merged[x].label < merged[y].label; });
    }

    [[nodiscard]] const Shape& output_dims() const noexcept { return out_dims_; }
    [[nodiscard]] const TnStructure& structure() const noexcept { return structure_; }

    /// Full tensor of the network; caches intermediates for backward().
    DenseTensor forward(const CoreSet& cores) {
        check_conformance(structure_, cores);
        a_mats_.assign(steps_.size(), {});
        b_mats_.assign(steps_.size(), {});

        std::vector<double> merged(cores[0].data(), cores[0].data() + cores[0].size());
        for (std::size_t t = 0; t < steps_.size(); ++t) {
            const Step& st = steps_[t];
            const DenseTensor& core = cores[st.vertex];
            a_mats_[t] = permuted(merged.data(), st.dims_a, st.perm_a);
            b_mats_[t] = permuted(core.data(), st.dims_b, st.perm_b);
            merged.assign(st.m * st.n, 0.0);
            gemm(a_mats_[t].data(), b_mats_[t].data(), merged.data(), st.m, st.k, st.n);
        }

        DenseTensor out(out_dims_);
        if (detail::is_identity(final_perm_)) {
            std::copy(merged.begin(), merged.end(), out.data());
        } else {
            detail::permute_into(merged.data(), final_dims_, final_perm_, out.data());
        }
        return out;
    }

    /**
     * Gradient of <d_out, T(cores)> with respect to each core, for the cores
     * of the last forward() call. Each result has its core's full shape.
     */
    [[nodiscard]] std::vector<DenseTensor> backward(const DenseTensor& d_out) const {
        if (d_out.dims() != out_dims_) throw ShapeError("backward: gradient shape does not match network output");
        if (a_mats_.size() != steps_.size()) throw Error("backward called before forward");
        const std::size_t n = structure_.n_vertices();
        std::vector<DenseTensor> grads;
        grads.reserve(n);
        for (std::size_t v = 0; v < n; ++v) grads.emplace_back(structure_.core_shape(v));

        // Undo the final ordering.
        std::vector<double> d_merged(d_out.size());
        if (detail::is_identity(final_perm_)) {
            std::copy(d_out.data(), d_out.data() + d_out.size(), d_merged.begin());
        } else {
            std::vector<std::size_t> out_order_dims(final_perm_.size());
            for (std::size_t i = 0; i < final_perm_.size(); ++i) out_order_dims[i] = final_dims_[final_perm_[i]];
            detail::permute_into(d_out.data(), out_order_dims, inverse(final_perm_), d_merged.data());
        }

        for (std::size_t t = steps_.size(); t-- > 0;) {
            const Step& st = steps_[t];
            ConstMatrixMap dc(d_merged.data(), idx(st.m), idx(st.n));
            ConstMatrixMap a(a_mats_[t].data(), idx(st.m), idx(st.k));
            ConstMatrixMap b(b_mats_[t].data(), idx(st.k), idx(st.n));

            std::vector<double> db(st.k * st.n);
            MatrixMap(db.data(), idx(st.k), idx(st.n)).noalias() = a.transpose() * dc;
            unpermute_into(db.data(), st.dims_b, st.perm_b, grads[st.vertex].data());

            std::vector<double> da(st.m * st.k);
            MatrixMap(da.data(), idx(st.m), idx(st.k)).noalias() = dc * b.transpose();
            d_merged.assign(shape_size(st.dims_a), 0.0);
            unpermute_into(da.data(), st.dims_a, st.perm_a, d_merged.data());
        }
        std::copy(d_merged.begin(), d_merged.end(), grads[0].data());
        return grads;
    }

private:
    struct Mode {
        int label;
        std::size_t dim;
    };

    struct Step {
        std::size_t vertex = 0;
        std::vector<std::size_t> perm_a, perm_b;
        Shape dims_a, dims_b;
        std::size_t m = 1, k = 1, n = 1;
    };

    static Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

    static std::size_t find(const std::vector<Mode>& modes, int label) {
        for (std::size_t i = 0; i < modes.size(); ++i)
            if (modes[i].label == label) return i;
        return modes.size();
    }

    static Shape dims_of(const std::vector<Mode>& modes) {
        Shape d;
        for (const Mode& m : modes) d.push_back(m.dim);
        return d;
    }

    static std::size_t product(const std::vector<Mode>& modes) {
        std::size_t p = 1;
        for (const Mode& m : modes) p *= m.dim;
        return p;
    }

    static std::vector<std::size_t> inverse(const std::vector<std::size_t>& perm) {
        std::vector<std::size_t> inv(perm.size());
        for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
        return inv;
    }

    static std::vector<double> permuted(const double* src, const Shape& dims, const std::vector<std::size_t>& perm) {
        const std::size_t total = shape_size(dims);
        std::vector<double> out(total);
        if (detail::is_identity(perm)) {
            std::copy(src, src + total, out.begin());
        } else {
            detail::permute_into(src, dims, perm, out.data());
        }
        return out;
    }

    // src is laid out as dims permuted by perm; write it back in dims order.
    static void unpermute_into(const double* src, const Shape& dims, const std::vector<std::size_t>& perm,
                               double* dst) {
        const std::size_t total = shape_size(dims);
        if (detail::is_identity(perm)) {
            std::copy(src, src + total, dst);
            return;
        }
        Shape permuted_dims(perm.size());
        for (std::size_t i = 0; i < perm.size(); ++i) permuted_dims[i] = dims[perm[i]];
        detail::permute_into(src, permuted_dims, inverse(perm), dst);
    }

    static void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
        MatrixMap(c, idx(m), idx(n)).noalias() = ConstMatrixMap(a, idx(m), idx(k)) * ConstMatrixMap(b, idx(k), idx(n));
    }

    TnStructure structure_;
    Shape out_dims_;
    std::vector<std::vector<Mode>> core_modes_;
    std::vector<Step> steps_;
    Shape final_dims_;
    std::vector<std::size_t> final_perm_;
    std::vector<std::vector<double>> a_mats_, b_mats_;
};

/// Full tensor represented by a structure and its cores.
inline DenseTensor contract_network(const TnStructure& s, const CoreSet& cores) {
    NetworkContraction net(s);
    return net.forward(cores);
}

/**
 * Moves cores along with a vertex relabelling: the core of vertex v becomes
 * the core of perm(v), with its bond axes reordered to the new neighbour
 * order.
 */
inline CoreSet permute_cores(const TnStructure& s, const CoreSet& cores, const VertexPermutation& perm) {
    check_conformance(s, cores);
    const std::size_t n = s.n_vertices();
    CoreSet out;
    out.cores.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
        const std::size_t w = perm(v);
        // Old bond axes follow old neighbours u != v ascending; new axes follow
        // new neighbours x != w ascending, where x = perm(u).
        std::vector<std::size_t> old_axis_of_neighbor(n, 0);
        for (std::size_t u = 0, axis = 1; u < n; ++u)
            if (u != v) old_axis_of_neighbor[u] = axis++;
        const auto inv = perm.inverse();
        std::vector<std::size_t> axes{0};
        for (std::size_t x = 0; x < n; ++x)
            if (x != w) axes.push_back(old_axis_of_neighbor[inv(x)]);
        out.cores[w] = permute(cores[v], axes);
    }
    return out;
}

}  // namespace tnale
