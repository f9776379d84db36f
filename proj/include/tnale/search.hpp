#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tnale/errors.hpp"
#include "tnale/objective.hpp"
#include "tnale/random.hpp"
#include "tnale/structure.hpp"

namespace tnale {

struct AleConfig {
    std::size_t radius = 1;
    std::size_t round_trips = 1;
    bool use_estimation = false;
    /// Enumerate vertex transpositions between the forward and backward passes.
    bool permutation_search = false;
    std::size_t rank_lo = 1;
    std::size_t rank_hi = 7;

    void validate() const {
        if (rank_lo < 1) throw Error("ale: rank lower bound must be at least 1");
        if (rank_hi < rank_lo) throw Error("ale: empty rank range");
        if (round_trips < 1) throw Error("ale: at least one round-trip is required");
    }
};

struct TnaleConfig {
    /// Radius of the initialization phase (with objective estimation).
    std::size_t r1 = 2;
    /// Radius of the search phase.
    std::size_t r2 = 1;
    std::size_t l0 = 2;
    std::size_t l = 30;
    AleConfig ale;
    /// Stagnant search iterations before re-centering at random; 0 disables.
    std::size_t restart_patience = 5;
    /// Interpolate between anchors during the initialization phase.
    bool init_estimation = true;
    std::uint64_t seed = 0;

    void validate() const {
        ale.validate();
        if (r2 < 1 || r1 < r2) throw Error("tnale: radii must satisfy r1 >= r2 >= 1");
        if (l < 1) throw Error("tnale: at least one search iteration is required");
    }
};

struct TnlsConfig {
    std::size_t samples_per_iter = 60;
    std::size_t max_iters = 30;
    std::size_t initial_radius = 2;
    /// Geometric decay of the sampling radius, floored at 1.
    double radius_decay = 0.9;
    /// Explicit per-iteration radii; overrides the decay when non-empty and
    /// repeats its last entry.
    std::vector<std::size_t> radius_schedule;
    bool permutation_search = false;
    std::size_t rank_lo = 1;
    std::size_t rank_hi = 7;
    std::uint64_t seed = 0;

    void validate() const {
        if (samples_per_iter < 1) throw Error("tnls: samples_per_iter must be at least 1");
        if (rank_lo < 1 || rank_hi < rank_lo) throw Error("tnls: invalid rank range");
        if (!(radius_decay > 0.0 && radius_decay <= 1.0)) throw Error("tnls: radius_decay must lie in (0, 1]");
    }

    [[nodiscard]] std::size_t radius_at(std::size_t iteration) const {
        if (!radius_schedule.empty()) return radius_schedule[std::min(iteration, radius_schedule.size() - 1)];
        const double r = static_cast<double>(initial_radius) * std::pow(radius_decay, static_cast<double>(iteration));
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(r)));
    }
};

struct SearchTrace {
    /// Explicit and estimated records produced by this search, in order.
    std::vector<EvaluationRecord> records;
    /// (eval_index, best explicit objective so far).
    std::vector<std::pair<std::size_t, double>> best_curve;
    EvaluationRecord final;
    std::size_t restarts = 0;
    /// Explicit evaluations performed by this search.
    std::size_t n_evals = 0;
    /// Explicit evaluations spent in the initialization phase (TnALE only).
    std::size_t init_evals = 0;
    bool budget_exhausted = false;
    double wall_time_s = 0.0;
};

/// Random structure on a template: uniform ranks and, optionally, a uniform
/// vertex relabelling.
inline TnStructure random_structure(const TnStructure& tmpl, std::size_t lo, std::size_t hi, bool permute, Rng& rng) {
    std::uniform_int_distribution<std::size_t> rank(lo, hi);
    std::vector<std::size_t> ranks(tmpl.searchable_edges().size());
    for (auto& r : ranks) r = rank(rng);
    TnStructure s = tmpl.with_ranks(ranks);
    if (permute) {
        std::vector<std::size_t> p(s.n_vertices());
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = i;
        std::shuffle(p.begin(), p.end(), rng);
        s = apply_permutation(s, VertexPermutation(std::move(p)));
    }
    return s;
}

namespace detail {

/// Index of the smallest value; ties keep the earliest position.
inline std::size_t argmin_first(const std::vector<double>& values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] < values[best]) best = i;
    return best;
}

class AleRunner {
public:
    AleRunner(const AleConfig& cfg, Evaluator& evaluator) : cfg_(cfg), ev_(evaluator) {}

    /// Makes sure `s` has an explicit value and its cores are cached.
    void ensure_explicit(const TnStructure& s) {
        if (ev_.lookup(s)) {
            anchor_ = s;
            return;
        }
        ev_.evaluate(s, anchor_ ? &*anchor_ : nullptr);
        anchor_ = s;
    }

    TnStructure enumerate_edge(const TnStructure& current, std::size_t k) {
        const EdgeOrder order = current.searchable_edges();
        const Edge e = order[k];
        const std::size_t rank = current.bond(e);
        const auto candidates = rank_candidates(rank, cfg_.radius, cfg_.rank_lo, std::max(cfg_.rank_hi, rank));

        ensure_explicit(current);
        std::vector<double> values(candidates.size());

        if (cfg_.use_estimation && cfg_.radius >= 1) {
            auto anchor = [&](std::size_t r) {
                return ev_.evaluate(current.with_bond(e, r), &current).objective;
            };
            const auto est = estimate_rank_sweep(rank, cfg_.radius, cfg_.rank_lo, std::max(cfg_.rank_hi, rank), anchor,
                                                 ev_.config().estimate_in_log_domain);
            for (std::size_t i = 0; i < candidates.size(); ++i) {
                const RankEstimate& v = est.at(candidates[i]);
                values[i] = v.objective;
                if (v.estimated) ev_.record_estimate(ev_.estimated_record(current.with_bond(e, candidates[i]), v.objective));
            }
        } else {
            std::vector<TnStructure> batch;
            for (std::size_t r : candidates) batch.push_back(current.with_bond(e, r));
            const auto records = ev_.evaluate_batch(batch, &current);
            for (std::size_t i = 0; i < candidates.size(); ++i) values[i] = records[i].objective;
        }
        return current.with_bond(e, candidates[argmin_first(values)]);
    }

    TnStructure graph_pass(const TnStructure& current) {
        ensure_explicit(current);
        const double center_value = *objective_of(current);
        const auto neighbors = graph_neighborhood(current);
        const auto records = ev_.evaluate_batch(neighbors, nullptr);
        std::size_t best = neighbors.size();
        double best_value = center_value;
        for (std::size_t i = 0; i < records.size(); ++i)
            if (records[i].objective < best_value) {
                best_value = records[i].objective;
                best = i;
            }
        return best == neighbors.size() ? current : neighbors[best];
    }

    TnStructure forward(TnStructure s) {
        const std::size_t K = s.searchable_edges().size();
        for (std::size_t k = 0; k < K; ++k) s = enumerate_edge(s, k);
        return s;
    }

    TnStructure round_trip(TnStructure s) {
        s = forward(std::move(s));
        if (cfg_.permutation_search) s = graph_pass(s);
        const std::size_t K = s.searchable_edges().size();
        for (std::size_t k = K; k-- > 1;) s = enumerate_edge(s, k);
        return s;
    }

    [[nodiscard]] std::optional<double> objective_of(const TnStructure& s) const {
        auto r = ev_.lookup(s);
        if (!r) return std::nullopt;
        return r->objective;
    }

private:
    AleConfig cfg_;
    Evaluator& ev_;
    std::optional<TnStructure> anchor_;
};

inline SearchTrace finish_trace(const Evaluator& ev, std::size_t log_start, std::size_t evals_start,
                                std::chrono::steady_clock::time_point t0) {
    SearchTrace trace;
    trace.records.assign(ev.log().begin() + static_cast<std::ptrdiff_t>(log_start), ev.log().end());
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : trace.records) {
        if (r.estimated) continue;
        best = std::min(best, r.objective);
        trace.best_curve.emplace_back(r.eval_index, best);
    }
    if (!ev.best_seen()) throw BudgetExhausted("search ended before any explicit evaluation");
    trace.final = *ev.best_seen();
    trace.n_evals = ev.n_evals() - evals_start;
    trace.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return trace;
}

}  // namespace detail

/// The forward half of a round-trip: each edge in canonical order is set to
/// its best rank within the radius while the others are held fixed.
inline TnStructure ale_forward_pass(const TnStructure& center, const AleConfig& cfg, Evaluator& evaluator) {
    cfg.validate();
    detail::AleRunner runner(cfg, evaluator);
    return runner.forward(center);
}

/**
 * Alternating local enumeration around `center`: each round-trip runs a
 * forward pass over edges 1..K, an optional pass over vertex transpositions
 * and a backward pass over edges K..2. Rank ties go to the smaller rank and
 * graph ties keep the current graph.
 */
inline TnStructure ale_sweep(const TnStructure& center, const AleConfig& cfg, Evaluator& evaluator) {
    cfg.validate();
    detail::AleRunner runner(cfg, evaluator);
    TnStructure s = center;
    for (std::size_t d = 0; d < cfg.round_trips; ++d) s = runner.round_trip(std::move(s));
    return s;
}

/**
 * Structure search by alternating local enumeration: L0 sweeps with radius
 * r1 and objective estimation, then L sweeps with radius r2 and explicit
 * evaluation. A center that stays put for restart_patience sweeps is
 * replaced by a random one; the best explicit record is kept throughout.
 */
inline SearchTrace tnale(Evaluator& evaluator, const TnStructure& tmpl, const TnaleConfig& cfg,
                         std::optional<TnStructure> start = std::nullopt) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t log_start = evaluator.log().size();
    const std::size_t evals_start = evaluator.n_evals();
    evaluator.reset_best_seen();

    Rng init_rng = make_rng(cfg.seed, "search-init");
    Rng restart_rng = make_rng(cfg.seed, "search-restart");
    const std::size_t lo = cfg.ale.rank_lo, hi = cfg.ale.rank_hi;
    TnStructure center = start ? *start : random_structure(tmpl, lo, hi, cfg.ale.permutation_search, init_rng);

    AleConfig init_phase = cfg.ale;
    init_phase.radius = cfg.r1;
    init_phase.use_estimation = cfg.init_estimation;
    AleConfig search_phase = cfg.ale;
    search_phase.radius = cfg.r2;
    search_phase.use_estimation = false;

    std::size_t restarts = 0;
    std::size_t init_evals = 0;
    bool exhausted = false;
    try {
        {
            detail::AleRunner runner(init_phase, evaluator);
            runner.ensure_explicit(center);
        }
        for (std::size_t it = 0; it < cfg.l0; ++it) {
            detail::AleRunner runner(init_phase, evaluator);
            for (std::size_t d = 0; d < init_phase.round_trips; ++d) center = runner.round_trip(center);
            // An interpolated winner is confirmed before it becomes a center.
            runner.ensure_explicit(center);
        }
        init_evals = evaluator.n_evals() - evals_start;
        std::size_t stagnant = 0;
        for (std::size_t it = 0; it < cfg.l; ++it) {
            TnStructure next = ale_sweep(center, search_phase, evaluator);
            stagnant = (next == center) ? stagnant + 1 : 0;
            center = std::move(next);
            if (cfg.restart_patience > 0 && stagnant >= cfg.restart_patience && it + 1 < cfg.l) {
                center = random_structure(tmpl, lo, hi, cfg.ale.permutation_search, restart_rng);
                detail::AleRunner(search_phase, evaluator).ensure_explicit(center);
                stagnant = 0;
                ++restarts;
            }
        }
    } catch (const BudgetExhausted&) {
        exhausted = true;
    }
    SearchTrace trace = detail::finish_trace(evaluator, log_start, evals_start, t0);
    trace.restarts = restarts;
    trace.init_evals = exhausted && init_evals == 0 ? trace.n_evals : init_evals;
    trace.budget_exhausted = exhausted;
    return trace;
}

/**
 * Random local sampling baseline: each iteration draws samples uniformly from
 * the rank box around the center (and from the vertex-transposition
 * neighbourhood when enabled), evaluates them, and moves the center to the
 * best sample if it improves.
 */
inline SearchTrace tnls(Evaluator& evaluator, const TnStructure& tmpl, const TnlsConfig& cfg,
                        std::optional<TnStructure> start = std::nullopt) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t log_start = evaluator.log().size();
    const std::size_t evals_start = evaluator.n_evals();
    evaluator.reset_best_seen();

    Rng init_rng = make_rng(cfg.seed, "search-init");
    Rng sample_rng = make_rng(cfg.seed, "tnls-sample");
    TnStructure center =
        start ? *start : random_structure(tmpl, cfg.rank_lo, cfg.rank_hi, cfg.permutation_search, init_rng);

    bool exhausted = false;
    try {
        EvaluationRecord center_record = evaluator.evaluate(center);
        for (std::size_t it = 0; it < cfg.max_iters; ++it) {
            const std::size_t radius = cfg.radius_at(it);
            const EdgeOrder order = center.searchable_edges();
            const std::size_t n = center.n_vertices();
            const std::size_t n_swaps = cfg.permutation_search && n >= 2 ? n * (n - 1) / 2 : 0;

            std::vector<TnStructure> samples;
            samples.reserve(cfg.samples_per_iter);
            for (std::size_t k = 0; k < cfg.samples_per_iter; ++k) {
                TnStructure s = center;
                for (std::size_t e = 0; e < order.size(); ++e) {
                    const auto range = rank_candidates(center.bond(order[e]), radius, cfg.rank_lo,
                                                       std::max(cfg.rank_hi, center.bond(order[e])));
                    std::uniform_int_distribution<std::size_t> pick(0, range.size() - 1);
                    s.set_bond(order[e], range[pick(sample_rng)]);
                }
                if (n_swaps > 0) {
                    // Index 0 keeps the current graph.
                    std::uniform_int_distribution<std::size_t> pick(0, n_swaps);
                    std::size_t which = pick(sample_rng);
                    if (which > 0) {
                        --which;
                        std::size_t i = 0;
                        while (which >= n - 1 - i) {
                            which -= n - 1 - i;
                            ++i;
                        }
                        s = apply_permutation(s, VertexPermutation::transposition(n, i, i + 1 + which));
                    }
                }
                samples.push_back(std::move(s));
            }

            const auto records = evaluator.evaluate_batch(samples, &center);
            std::size_t best = records.size();
            for (std::size_t i = 0; i < records.size(); ++i)
                if (records[i].objective < center_record.objective &&
                    (best == records.size() || better_record(records[i], records[best])))
                    best = i;
            if (best != records.size()) {
                center = records[best].structure;
                center_record = records[best];
            }
        }
    } catch (const BudgetExhausted&) {
        exhausted = true;
    }
    SearchTrace trace = detail::finish_trace(evaluator, log_start, evals_start, t0);
    trace.budget_exhausted = exhausted;
    return trace;
}

inline constexpr std::size_t kDefaultGridCap = 100000;

/// Grid cap for exhaustive enumerations; TNALE_GRID_CAP overrides the default.
inline std::size_t grid_cap_from_env(std::size_t fallback = kDefaultGridCap) {
    if (const char* v = std::getenv("TNALE_GRID_CAP")) {
        try {
            return static_cast<std::size_t>(std::stoull(v));
        } catch (const std::exception&) {
            throw Error(std::string("TNALE_GRID_CAP is not an integer: ") + v);
        }
    }
    return fallback;
}

/// Number of (ranks, permutation) combinations brute_force would evaluate.
inline std::size_t brute_force_grid_size(const TnStructure& tmpl, std::size_t lo, std::size_t hi,
                                         std::size_t n_perms) {
    const std::size_t K = tmpl.searchable_edges().size();
    const double size = std::pow(static_cast<double>(hi - lo + 1), static_cast<double>(K)) *
                        static_cast<double>(std::max<std::size_t>(1, n_perms));
    return size > 1e18 ? std::numeric_limits<std::size_t>::max() : static_cast<std::size_t>(size);
}

/**
 * Evaluates every rank assignment in [lo, hi]^K (under each permutation when
 * given) and returns the global minimum; ties go to fewer parameters, then
 * the lexicographically smaller rank vector.
 */
inline EvaluationRecord brute_force(Evaluator& evaluator, const TnStructure& tmpl, std::size_t lo, std::size_t hi,
                                    const std::vector<VertexPermutation>& perms = {},
                                    std::size_t grid_cap = grid_cap_from_env()) {
    if (lo < 1 || hi < lo) throw Error("brute_force: invalid rank range");
    const std::size_t total = brute_force_grid_size(tmpl, lo, hi, perms.size());
    if (total > grid_cap)
        throw GridCapExceeded("brute_force: grid of " + std::to_string(total) + " structures exceeds the cap of " +
                              std::to_string(grid_cap));

    const std::vector<VertexPermutation> relabels =
        perms.empty() ? std::vector<VertexPermutation>{VertexPermutation::identity(tmpl.n_vertices())} : perms;
    const std::size_t K = tmpl.searchable_edges().size();
    std::optional<EvaluationRecord> best;
    for (const VertexPermutation& p : relabels) {
        std::vector<std::size_t> ranks(K, lo);
        std::vector<TnStructure> batch;
        for (;;) {
            batch.push_back(apply_permutation(tmpl.with_ranks(ranks), p));
            std::size_t k = K;
            while (k > 0 && ranks[k - 1] == hi) ranks[--k] = lo;
            if (k == 0) break;
            ++ranks[k - 1];
        }
        for (const auto& r : evaluator.evaluate_batch(batch))
            if (!best || better_record(r, *best)) best = r;
    }
    return *best;
}

}  // namespace tnale
