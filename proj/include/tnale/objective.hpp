#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tnale/errors.hpp"
#include "tnale/network.hpp"
#include "tnale/random.hpp"
#include "tnale/solver.hpp"
#include "tnale/structure.hpp"
#include "tnale/tensor.hpp"

namespace tnale {

struct ObjectiveConfig {
    /// Weight of the RSE against the inverse compression ratio.
    double lambda = 200.0;
    SolverConfig solver;
    /// Iteration budget of one inner solve; 0 falls back to solver.max_iters.
    std::size_t iters_per_eval = 0;
    /// Interpolate log(objective) instead of the objective in estimation sweeps.
    bool estimate_in_log_domain = false;

    void validate() const {
        if (!(lambda >= 0.0)) throw Error("objective: lambda must be non-negative");
        solver.validate();
    }

    [[nodiscard]] SolverConfig effective_solver() const {
        SolverConfig s = solver;
        if (iters_per_eval > 0) s.max_iters = iters_per_eval;
        return s;
    }
};

struct EvaluationRecord {
    TnStructure structure;
    double rse = 0.0;
    double compression_ratio = 0.0;
    double objective = 0.0;
    /// Explicit evaluations performed when this record was produced (1-based).
    std::size_t eval_index = 0;
    bool estimated = false;
    std::size_t solver_iters = 0;
};

/// 1/compression_ratio + lambda * rse.
inline double compose_objective(double compression_ratio, double rse, double lambda) {
    return 1.0 / compression_ratio + lambda * rse;
}

/// Orders explicit records: lower objective, then fewer parameters, then the
/// lexicographically smaller padded rank vector.
inline bool better_record(const EvaluationRecord& a, const EvaluationRecord& b) {
    if (a.objective != b.objective) return a.objective < b.objective;
    const auto pa = param_count(a.structure), pb = param_count(b.structure);
    if (pa != pb) return pa < pb;
    return ranks_to_padded_vector(a.structure) < ranks_to_padded_vector(b.structure);
}

/**
 * Explicit evaluations keyed by structure. Each structure is solved at most
 * once, including under concurrent callers; hits never advance the counter.
 */
class EvaluationCache {
public:
    struct Entry {
        EvaluationRecord record;
        std::optional<CoreSet> cores;
    };

    [[nodiscard]] std::optional<Entry> find(const TnStructure& s) const {
        std::lock_guard lock(mutex_);
        auto it = entries_.find(s.key());
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    [[nodiscard]] std::size_t n_evals() const noexcept { return counter_.load(); }
    [[nodiscard]] std::size_t size() const {
        std::lock_guard lock(mutex_);
        return entries_.size();
    }

    /**
     * Returns the cached entry for s or runs solve() exactly once for it.
     * The second member is true when this call performed the solve.
     */
    std::pair<Entry, bool> get_or_solve(const TnStructure& s, const std::function<Entry()>& solve) {
        const std::string key = s.key();
        std::shared_future<Entry> pending;
        std::promise<Entry> promise;
        bool owner = false;
        {
            std::lock_guard lock(mutex_);
            if (auto it = entries_.find(key); it != entries_.end()) return {it->second, false};
            if (auto it = in_flight_.find(key); it != in_flight_.end()) {
                pending = it->second;
            } else {
                pending = promise.get_future().share();
                in_flight_.emplace(key, pending);
                owner = true;
            }
        }
        if (!owner) return {pending.get(), false};

        try {
            Entry e = solve();
            {
                std::lock_guard lock(mutex_);
                e.record.eval_index = ++counter_;
                entries_.emplace(key, e);
                in_flight_.erase(key);
            }
            promise.set_value(e);
            return {e, true};
        } catch (...) {
            {
                std::lock_guard lock(mutex_);
                in_flight_.erase(key);
            }
            promise.set_exception(std::current_exception());
            throw;
        }
    }

    /// Stores a record solved elsewhere and assigns its evaluation index.
    Entry commit(const TnStructure& s, Entry e) {
        std::lock_guard lock(mutex_);
        const std::string key = s.key();
        if (auto it = entries_.find(key); it != entries_.end()) return it->second;
        e.record.eval_index = ++counter_;
        entries_.emplace(key, e);
        return e;
    }

private:
    mutable std::mutex mutex_;
    std::unordered_map<std::string, Entry> entries_;
    std::unordered_map<std::string, std::shared_future<Entry>> in_flight_;
    std::atomic<std::size_t> counter_{0};
};

namespace detail {

inline double rms(const DenseTensor& t) { return std::sqrt(t.squared_norm() / static_cast<double>(t.size())); }

/**
 * Solves one structure. The solve runs on the target scaled to unit RMS;
 * stored cores are rescaled to reproduce the unscaled target.
 */
inline EvaluationCache::Entry solve_structure(const TnStructure& s, const DenseTensor& target,
                                              const ObjectiveConfig& cfg, const CoreSet* warm,
                                              const TnStructure* warm_structure) {
    const Shape out = network_output_dims(s);
    if (out != target.dims())
        throw ShapeError("evaluate: structure represents " + shape_string(out) + ", target is " +
                         shape_string(target.dims()));
    const SolverConfig solver = cfg.effective_solver();
    const double scale = rms(target);
    if (scale == 0.0) throw NumericError("evaluate: target has zero norm");
    DenseTensor normalized = target;
    normalized *= 1.0 / scale;
    const double core_scale = std::pow(scale, 1.0 / static_cast<double>(s.n_vertices()));

    Rng rng = make_rng(solver.seed, "solver-init", s.hash());
    CoreSet init;
    if (warm != nullptr && warm_structure != nullptr && warm_structure->n_vertices() == s.n_vertices() &&
        warm_structure->phys_dims() == s.phys_dims() && warm_structure->template_edges() == s.template_edges()) {
        CoreSet source = *warm;
        for (auto& c : source.cores) c *= 1.0 / core_scale;
        init = warm_start(source, *warm_structure, s, solver, rng);
    } else {
        init = init_cores(s, solver, rng);
    }

    SolveResult res = minimize_rse(normalized, s, init, solver);
    for (auto& c : res.cores.cores) c *= core_scale;

    EvaluationCache::Entry e;
    e.record.structure = s;
    e.record.rse = res.rse;
    e.record.compression_ratio = compression_ratio(s);
    e.record.objective = compose_objective(e.record.compression_ratio, res.rse, cfg.lambda);
    e.record.estimated = false;
    e.record.solver_iters = res.iters;
    e.cores = std::move(res.cores);
    return e;
}

}  // namespace detail

/**
 * Objective of a structure: a cache hit returns the stored record unchanged;
 * a miss runs the inner solver (warm-started from `warm` when given) and
 * advances the evaluation counter.
 */
inline EvaluationRecord evaluate(const TnStructure& s, const DenseTensor& target, const ObjectiveConfig& cfg,
                                 EvaluationCache& cache, const CoreSet* warm = nullptr,
                                 const TnStructure* warm_structure = nullptr) {
    cfg.validate();
    auto [entry, solved] = cache.get_or_solve(
        s, [&] { return detail::solve_structure(s, target, cfg, warm, warm_structure); });
    return entry.record;
}

/**
 * Binds a target, objective and cache together for the search algorithms:
 * enforces the explicit-evaluation budget, keeps an ordered log of every
 * explicit and estimated record, and tracks the best explicit record seen.
 */
class Evaluator {
public:
    /// Replacement for the inner solve; receives the structure and returns its objective.
    using ObjectiveFn = std::function<double(const TnStructure&)>;

    Evaluator(DenseTensor target, ObjectiveConfig cfg, std::shared_ptr<EvaluationCache> cache = nullptr)
        : target_(std::move(target)),
          cfg_(std::move(cfg)),
          cache_(cache ? std::move(cache) : std::make_shared<EvaluationCache>()) {
        cfg_.validate();
    }

    /// Evaluator over a closed-form objective; no tensors are fitted.
    static std::unique_ptr<Evaluator> from_function(ObjectiveFn fn, ObjectiveConfig cfg = {}) {
        auto ev = std::make_unique<Evaluator>(DenseTensor({1}, {1.0}), std::move(cfg));
        ev->objective_fn_ = std::move(fn);
        return ev;
    }

    [[nodiscard]] const DenseTensor& target() const noexcept { return target_; }
    [[nodiscard]] const ObjectiveConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] EvaluationCache& cache() noexcept { return *cache_; }
    [[nodiscard]] const std::shared_ptr<EvaluationCache>& shared_cache() const noexcept { return cache_; }

    /// Cap on the total explicit evaluations in the cache; nullopt = none.
    void set_budget(std::optional<std::size_t> budget) { budget_ = budget; }
    [[nodiscard]] std::optional<std::size_t> budget() const noexcept { return budget_; }
    /// Once an explicit record satisfies `stop`, further solves throw BudgetExhausted.
    void set_stop_condition(std::function<bool(const EvaluationRecord&)> stop) { stop_ = std::move(stop); }
    [[nodiscard]] bool stopped() const noexcept { return stopped_; }
    void set_workers(std::size_t workers) { workers_ = std::max<std::size_t>(1, workers); }
    [[nodiscard]] std::size_t workers() const noexcept { return workers_; }

    [[nodiscard]] std::size_t n_evals() const noexcept { return cache_->n_evals(); }
    /// Inner solves actually run through this evaluator.
    [[nodiscard]] std::size_t solver_calls() const noexcept { return solver_calls_.load(); }

    [[nodiscard]] std::optional<EvaluationRecord> lookup(const TnStructure& s) const {
        auto e = cache_->find(s);
        if (!e) return std::nullopt;
        return e->record;
    }

    [[nodiscard]] const std::vector<EvaluationRecord>& log() const noexcept { return log_; }
    [[nodiscard]] const std::optional<EvaluationRecord>& best_seen() const noexcept { return best_; }
    void reset_best_seen() { best_.reset(); }

    /// Explicit evaluation, warm-started from the cached cores of warm_from.
    EvaluationRecord evaluate(const TnStructure& s, const TnStructure* warm_from = nullptr) {
        if (auto hit = cache_->find(s)) {
            note(hit->record);
            return hit->record;
        }
        check_budget(1);
        auto entry = solve_entry(s, warm_from);
        auto committed = cache_->commit(s, std::move(entry));
        log_.push_back(committed.record);
        note(committed.record);
        return committed.record;
    }

    /**
     * Evaluates candidates, solving misses on up to workers() threads. Records
     * are committed in candidate order, so indices and results do not depend
     * on the worker count. Throws BudgetExhausted after committing what the
     * budget allows.
     */
    std::vector<EvaluationRecord> evaluate_batch(const std::vector<TnStructure>& batch,
                                                 const TnStructure* warm_from = nullptr) {
        std::vector<std::optional<EvaluationRecord>> results(batch.size());
        std::vector<std::size_t> misses;
        std::vector<std::string> miss_keys;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            if (auto hit = cache_->find(batch[i])) {
                results[i] = hit->record;
            } else {
                const std::string key = batch[i].key();
                if (std::find(miss_keys.begin(), miss_keys.end(), key) == miss_keys.end()) {
                    misses.push_back(i);
                    miss_keys.push_back(key);
                }
            }
        }

        if (stopped_ && !misses.empty()) throw BudgetExhausted("stop condition reached");
        bool exhausted = false;
        if (budget_) {
            const std::size_t left = *budget_ > n_evals() ? *budget_ - n_evals() : 0;
            if (misses.size() > left) {
                misses.resize(left);
                exhausted = true;
            }
        }

        std::vector<EvaluationCache::Entry> solved(misses.size());
        if (workers_ <= 1 || misses.size() <= 1) {
            for (std::size_t j = 0; j < misses.size(); ++j) solved[j] = solve_entry(batch[misses[j]], warm_from);
        } else {
            for (std::size_t start = 0; start < misses.size(); start += workers_) {
                const std::size_t stop = std::min(misses.size(), start + workers_);
                std::vector<std::future<EvaluationCache::Entry>> futures;
                for (std::size_t j = start; j < stop; ++j)
                    futures.push_back(std::async(std::launch::async,
                                                 [this, &batch, &misses, j, warm_from] {
                                                     return solve_entry(batch[misses[j]], warm_from);
                                                 }));
                for (std::size_t j = start; j < stop; ++j) solved[j] = futures[j - start].get();
            }
        }
        for (std::size_t j = 0; j < misses.size(); ++j) {
            auto committed = cache_->commit(batch[misses[j]], std::move(solved[j]));
            log_.push_back(committed.record);
            results[misses[j]] = committed.record;
        }

        std::vector<EvaluationRecord> out;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            if (!results[i]) {
                if (auto hit = cache_->find(batch[i])) results[i] = hit->record;
            }
            if (results[i]) note(*results[i]);
        }
        if (exhausted) throw BudgetExhausted("explicit evaluation budget of " + std::to_string(*budget_) + " reached");
        for (auto& r : results) out.push_back(std::move(*r));
        return out;
    }

    /// Appends an interpolated record to the log; it never counts.
    void record_estimate(const EvaluationRecord& r) { log_.push_back(r); }

    /// Record for a structure whose objective was interpolated.
    [[nodiscard]] EvaluationRecord estimated_record(const TnStructure& s, double objective) const {
        EvaluationRecord r;
        r.structure = s;
        r.compression_ratio = compression_ratio(s);
        r.objective = objective;
        r.rse = cfg_.lambda > 0.0 ? (objective - 1.0 / r.compression_ratio) / cfg_.lambda
                                  : std::numeric_limits<double>::quiet_NaN();
        r.eval_index = n_evals();
        r.estimated = true;
        return r;
    }

    [[nodiscard]] std::optional<CoreSet> cores_of(const TnStructure& s) const {
        auto e = cache_->find(s);
        if (!e) return std::nullopt;
        return e->cores;
    }

private:
    void check_budget(std::size_t needed) const {
        if (stopped_) throw BudgetExhausted("stop condition reached");
        if (budget_ && n_evals() + needed > *budget_)
            throw BudgetExhausted("explicit evaluation budget of " + std::to_string(*budget_) + " reached");
    }

    EvaluationCache::Entry solve_entry(const TnStructure& s, const TnStructure* warm_from) {
        std::optional<CoreSet> warm;
        if (warm_from != nullptr) warm = cores_of(*warm_from);
        ++solver_calls_;
        if (objective_fn_) {
            EvaluationCache::Entry e;
            e.record.structure = s;
            e.record.compression_ratio = compression_ratio(s);
            e.record.objective = objective_fn_(s);
            e.record.rse = cfg_.lambda > 0.0 ? (e.record.objective - 1.0 / e.record.compression_ratio) / cfg_.lambda : 0.0;
            return e;
        }
        return detail::solve_structure(s, target_, cfg_, warm ? &*warm : nullptr, warm ? warm_from : nullptr);
    }

    void note(const EvaluationRecord& r) {
        if (r.estimated) return;
        std::lock_guard lock(best_mutex_);
        if (!best_ || better_record(r, *best_)) best_ = r;
        if (stop_ && !stopped_ && stop_(r)) stopped_ = true;
    }

    DenseTensor target_;
    ObjectiveConfig cfg_;
    std::shared_ptr<EvaluationCache> cache_;
    std::optional<std::size_t> budget_;
    ObjectiveFn objective_fn_;
    std::function<bool(const EvaluationRecord&)> stop_;
    bool stopped_ = false;
    std::size_t workers_ = 1;
    std::atomic<std::size_t> solver_calls_{0};
    std::vector<EvaluationRecord> log_;
    std::optional<EvaluationRecord> best_;
    std::mutex best_mutex_;
};

struct RankEstimate {
    double objective = 0.0;
    bool estimated = false;
};

/**
 * Objective over ranks center-b..center+b (clipped to [lo, hi]) from three
 * explicit anchors: center, the lower end and the upper end. Ranks strictly
 * between two anchors are linearly interpolated.
 */
inline std::map<std::size_t, RankEstimate> estimate_rank_sweep(
    std::size_t center, std::size_t radius, std::size_t lo, std::size_t hi,
    const std::function<double(std::size_t)>& anchor_objective, bool log_domain = false) {
    if (radius < 1) throw Error("estimate_rank_sweep: radius must be at least 1");
    const auto candidates = rank_candidates(center, radius, lo, hi);
    const std::size_t lower = candidates.front();
    const std::size_t upper = candidates.back();

    std::map<std::size_t, RankEstimate> out;
    out[center] = {anchor_objective(center), false};
    if (lower != center) out[lower] = {anchor_objective(lower), false};
    if (upper != center) out[upper] = {anchor_objective(upper), false};

    auto to = [&](double f) { return log_domain ? std::log(f) : f; };
    auto from = [&](double g) { return log_domain ? std::exp(g) : g; };
    auto interpolate = [&](std::size_t a, std::size_t b) {
        const double fa = to(out[a].objective), fb = to(out[b].objective);
        for (std::size_t r = a + 1; r < b; ++r) {
            const double t = static_cast<double>(r - a) / static_cast<double>(b - a);
            out[r] = {from(fa + t * (fb - fa)), true};
        }
    };
    interpolate(lower, center);
    interpolate(center, upper);
    return out;
}

}  // namespace tnale
