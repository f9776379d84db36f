#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "tnale/errors.hpp"
#include "tnale/network.hpp"
#include "tnale/random.hpp"
#include "tnale/structure.hpp"
#include "tnale/tensor.hpp"

namespace tnale {

struct SolverConfig {
    double learning_rate = 0.01;
    std::size_t max_iters = 3000;
    double init_std = 0.1;
    std::uint64_t seed = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    /// Stop as soon as the RSE is at or below this value.
    double early_stop_rse = 1e-4;
    /// Stop once the best RSE has not improved by a relative 1e-6 for this
    /// many iterations.
    std::size_t patience = 200;

    void validate() const {
        if (!(learning_rate > 0.0)) throw Error("solver: learning_rate must be positive");
        if (max_iters < 1) throw Error("solver: max_iters must be at least 1");
        if (!(init_std > 0.0)) throw Error("solver: init_std must be positive");
    }
};

/// Cores with i.i.d. N(0, init_std^2) entries.
inline CoreSet init_cores(const TnStructure& s, const SolverConfig& cfg, Rng& rng) {
    std::normal_distribution<double> normal(0.0, cfg.init_std);
    CoreSet out;
    for (std::size_t v = 0; v < s.n_vertices(); ++v) {
        DenseTensor core(s.core_shape(v));
        for (double& x : core.values()) x = normal(rng);
        out.cores.push_back(std::move(core));
    }
    return out;
}

/// Exact gradient of rse(target, contract_network(s, cores)) for every core.
inline CoreSet gradient_rse(const DenseTensor& target, const TnStructure& s, const CoreSet& cores) {
    NetworkContraction net(s);
    DenseTensor residual = net.forward(cores);
    if (residual.dims() != target.dims())
        throw ShapeError("gradient_rse: network shape " + shape_string(residual.dims()) + " vs target " +
                         shape_string(target.dims()));
    const double norm2 = target.squared_norm();
    if (norm2 == 0.0) throw NumericError("gradient_rse: target has zero norm");
    const double scale = 2.0 / norm2;
    for (std::size_t i = 0; i < residual.size(); ++i) residual[i] = scale * (residual[i] - target[i]);
    return CoreSet{net.backward(residual)};
}

struct SolveResult {
    CoreSet cores;
    double rse = 0.0;
    /// Gradient steps taken.
    std::size_t iters = 0;
};

/**
 * Adam on the RSE of a fixed structure. Returns the best iterate seen, which
 * is not necessarily the last one.
 */
inline SolveResult minimize_rse(const DenseTensor& target, const TnStructure& s, const CoreSet& init,
                                const SolverConfig& cfg) {
    cfg.validate();
    check_conformance(s, init);
    NetworkContraction net(s);
    if (net.output_dims() != target.dims())
        throw ShapeError("minimize_rse: structure represents " + shape_string(net.output_dims()) + ", target is " +
                         shape_string(target.dims()));
    const double norm2 = target.squared_norm();
    if (norm2 == 0.0) throw NumericError("minimize_rse: target has zero norm");

    CoreSet cores = init;
    std::vector<std::vector<double>> m(cores.size()), v(cores.size());
    for (std::size_t c = 0; c < cores.size(); ++c) {
        m[c].assign(cores[c].size(), 0.0);
        v[c].assign(cores[c].size(), 0.0);
    }

    SolveResult best{cores, std::numeric_limits<double>::infinity(), 0};
    double reference = std::numeric_limits<double>::infinity();
    std::size_t last_improvement = 0;
    double beta1_pow = 1.0, beta2_pow = 1.0;
    DenseTensor residual(target.dims());

    for (std::size_t it = 0;; ++it) {
        const DenseTensor z = net.forward(cores);
        double err = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double d = z[i] - target[i];
            residual[i] = d;
            err += d * d;
        }
        const double current = err / norm2;
        if (!std::isfinite(current)) throw SolverDivergence(it, "minimize_rse: objective became non-finite");

        if (current < best.rse) {
            best.rse = current;
            best.cores = cores;
        }
        if (best.rse < reference * (1.0 - 1e-6)) {
            reference = best.rse;
            last_improvement = it;
        }
        best.iters = it;
        if (best.rse <= cfg.early_stop_rse || it >= cfg.max_iters || it - last_improvement >= cfg.patience) break;

        const double scale = 2.0 / norm2;
        for (double& r : residual.values()) r *= scale;
        const std::vector<DenseTensor> grads = net.backward(residual);

        beta1_pow *= cfg.adam_beta1;
        beta2_pow *= cfg.adam_beta2;
        const double step = cfg.learning_rate * std::sqrt(1.0 - beta2_pow) / (1.0 - beta1_pow);
        const double eps_hat = cfg.adam_eps * std::sqrt(1.0 - beta2_pow);
        for (std::size_t c = 0; c < cores.size(); ++c) {
            double* x = cores[c].data();
            const double* g = grads[c].data();
            double* mc = m[c].data();
            double* vc = v[c].data();
            for (std::size_t i = 0; i < cores[c].size(); ++i) {
                mc[i] = cfg.adam_beta1 * mc[i] + (1.0 - cfg.adam_beta1) * g[i];
                vc[i] = cfg.adam_beta2 * vc[i] + (1.0 - cfg.adam_beta2) * g[i] * g[i];
                x[i] -= step * mc[i] / (std::sqrt(vc[i]) + eps_hat);
            }
        }
    }
    return best;
}

/**
 * Embeds optimized cores of old_s into the shapes of new_s. Shared index
 * ranges are copied, grown slices get N(0, (noise_factor * init_std)^2)
 * noise and shrunk bonds keep their leading slices.
 */
inline CoreSet warm_start(const CoreSet& old, const TnStructure& old_s, const TnStructure& new_s,
                          const SolverConfig& cfg, Rng& rng, double noise_factor = 0.1) {
    check_conformance(old_s, old);
    if (old_s.n_vertices() != new_s.n_vertices() || old_s.phys_dims() != new_s.phys_dims() ||
        old_s.template_edges() != new_s.template_edges())
        throw StructureError("warm_start: structures differ in vertices or template");
    if (old_s == new_s) return old;

    const double std_dev = noise_factor * cfg.init_std;
    std::normal_distribution<double> normal(0.0, std_dev > 0.0 ? std_dev : 1.0);
    CoreSet out;
    for (std::size_t v = 0; v < new_s.n_vertices(); ++v) {
        const DenseTensor& src = old[v];
        DenseTensor dst(new_s.core_shape(v));
        const Shape& od = src.dims();
        const Shape& nd = dst.dims();
        std::vector<std::size_t> idx(nd.size(), 0);
        for (std::size_t flat = 0; flat < dst.size(); ++flat) {
            bool inside = true;
            std::size_t src_off = 0;
            for (std::size_t k = 0; k < nd.size(); ++k) {
                if (idx[k] >= od[k]) {
                    inside = false;
                    break;
                }
                src_off = src_off * od[k] + idx[k];
            }
            if (inside) {
                dst[flat] = src[src_off];
            } else {
                dst[flat] = std_dev > 0.0 ? normal(rng) : 0.0;
            }
            for (std::size_t k = nd.size(); k-- > 0;) {
                if (++idx[k] < nd[k]) break;
                idx[k] = 0;
            }
        }
        out.cores.push_back(std::move(dst));
    }
    return out;
}

}  // namespace tnale
