#include <gtest/gtest.h>

#include <cstdlib>

#include "tnale/datagen.hpp"
#include "tnale/search.hpp"

using namespace tnale;

namespace {

// Chain 0-1-2: two searchable edges, ranks (a, b).
TnStructure chain() { return TnStructure(std::vector<std::size_t>(3, 3), std::vector<Edge>{{0, 1}, {1, 2}}); }

TnStructure chain(std::size_t a, std::size_t b) { return chain().with_ranks(std::vector<std::size_t>{a, b}); }

double bowl(const TnStructure& s) {
    const auto r = s.ranks();
    const double a = static_cast<double>(r[0]), b = static_cast<double>(r[1]);
    return 1.0 + (a - 3) * (a - 3) + (b - 5) * (b - 5);
}

AleConfig ale(std::size_t radius, std::size_t trips = 1) {
    AleConfig c;
    c.radius = radius;
    c.round_trips = trips;
    return c;
}

}  // namespace

TEST(AleSweep, RadiusZeroEvaluatesOnlyCenter) {
    auto ev = Evaluator::from_function(bowl);
    const TnStructure c = chain(2, 2);
    EXPECT_EQ(ale_sweep(c, ale(0), *ev), c);
    EXPECT_EQ(ev->n_evals(), 1u);
}

TEST(AleSweep, ToyBowlTrace) {
    auto ev = Evaluator::from_function(bowl);
    // Forward: a in {1,2,3} -> 3, b in {1,2,3} -> 3.
    EXPECT_EQ(ale_forward_pass(chain(1, 1), ale(2), *ev), chain(3, 3));
    // The backward pass revisits b from 3 and reaches 5.
    EXPECT_EQ(ale_sweep(chain(1, 1), ale(2, 1), *ev), chain(3, 5));
    EXPECT_EQ(ale_sweep(chain(1, 1), ale(2, 2), *ev), chain(3, 5));

    auto oracle = Evaluator::from_function(bowl);
    EXPECT_EQ(brute_force(*oracle, chain(), 1, 7).structure, chain(3, 5));
}

TEST(AleSweep, ForwardPassEvaluationBound) {
    for (std::size_t r = 1; r <= 3; ++r) {
        auto ev = Evaluator::from_function(bowl);
        ale_forward_pass(chain(4, 4), ale(r), *ev);
        EXPECT_LE(ev->n_evals(), 2 * (2 * r + 1));
    }
}

TEST(AleSweep, TiesPreferSmallerRank) {
    auto ev = Evaluator::from_function([](const TnStructure&) { return 1.0; });
    EXPECT_EQ(ale_forward_pass(chain(3, 3), ale(1), *ev), chain(2, 2));
}

TEST(AleSweep, NeverWorseThanCenter) {
    GenSpec g;
    g.topology = {TopologyKind::TR, 4};
    g.rank_hi = 3;
    g.seed = 3;
    const auto inst = generate(g);
    Evaluator ev(inst.target, ObjectiveConfig{});
    const TnStructure center = template_adjacency(g.topology, 3).with_ranks(std::vector<std::size_t>{2, 2, 2, 2});
    const TnStructure out = ale_sweep(center, ale(1), ev);
    EXPECT_LE(ev.lookup(out)->objective, ev.lookup(center)->objective);
}

TEST(AleSweep, PermutationPassFindsRelabelling) {
    const TnStructure ring = ring_structure(std::vector<std::size_t>{2, 2, 2, 2}, 3);
    const auto goal = ranks_to_padded_vector(ring);
    auto f = [&](const TnStructure& s) {
        const auto p = ranks_to_padded_vector(s);
        double d = 1.0;
        for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(static_cast<double>(p[i]) - static_cast<double>(goal[i]));
        return d;
    };
    auto ev = Evaluator::from_function(f);
    const TnStructure start = apply_permutation(ring, VertexPermutation::transposition(4, 1, 2));
    AleConfig c = ale(0);
    c.permutation_search = true;
    const TnStructure out = ale_sweep(start, c, *ev);
    EXPECT_EQ(ranks_to_padded_vector(out), goal);
    // Center plus the six transpositions; symmetric relabellings share a cache entry.
    EXPECT_LE(ev->n_evals(), 7u);
}

TEST(AleSweep, GraphTiesKeepCenter) {
    auto ev = Evaluator::from_function([](const TnStructure&) { return 1.0; });
    const TnStructure s = ring_structure(std::vector<std::size_t>{1, 1, 1, 1}, 3);
    AleConfig c = ale(0);
    c.permutation_search = true;
    EXPECT_EQ(ale_sweep(s, c, *ev), s);
}

TEST(Tnale, ConvergesOnToyBowl) {
    auto ev = Evaluator::from_function(bowl);
    TnaleConfig c;
    c.seed = 4;
    c.l = 6;
    const SearchTrace t = tnale::tnale(*ev, chain(), c);
    EXPECT_EQ(t.final.structure, chain(3, 5));
    for (std::size_t i = 1; i < t.best_curve.size(); ++i) EXPECT_LE(t.best_curve[i].second, t.best_curve[i - 1].second);
    double best = 1e300;
    for (const auto& r : t.records)
        if (!r.estimated) best = std::min(best, r.objective);
    EXPECT_EQ(t.final.objective, best);
}

TEST(Tnale, EstimatedCentersAreConfirmed) {
    auto ev = Evaluator::from_function(bowl);
    TnaleConfig c;
    c.l0 = 3;
    c.l = 1;
    c.r1 = 3;
    c.seed = 1;
    const SearchTrace t = tnale::tnale(*ev, chain(), c);
    bool any_estimate = false;
    for (const auto& r : t.records) any_estimate |= r.estimated;
    EXPECT_TRUE(any_estimate);
    EXPECT_FALSE(t.final.estimated);
}

TEST(Tnale, BudgetCapsExplicitEvaluations) {
    auto ev = Evaluator::from_function(bowl);
    ev->set_budget(10);
    TnaleConfig c;
    c.seed = 2;
    const SearchTrace t = tnale::tnale(*ev, chain(), c);
    std::size_t explicit_records = 0;
    for (const auto& r : t.records) explicit_records += r.estimated ? 0 : 1;
    EXPECT_LE(explicit_records, 10u);
    EXPECT_EQ(t.n_evals, 10u);
    EXPECT_TRUE(t.budget_exhausted);
}

TEST(Tnale, BudgetTooSmallForAnything) {
    auto ev = Evaluator::from_function(bowl);
    ev->set_budget(0);
    EXPECT_THROW(tnale::tnale(*ev, chain(), TnaleConfig{}), BudgetExhausted);
}

TEST(Tnale, DeterministicOnRealTarget) {
    GenSpec g;
    g.topology = {TopologyKind::TR, 3};
    g.rank_hi = 3;
    g.seed = 5;
    const auto inst = generate(g);
    TnaleConfig c;
    c.ale.rank_hi = 3;
    c.l = 4;
    c.seed = 9;
    const TnStructure tmpl = template_adjacency(g.topology, 3);
    Evaluator e1(inst.target, ObjectiveConfig{}), e2(inst.target, ObjectiveConfig{});
    const auto t1 = tnale::tnale(e1, tmpl, c);
    const auto t2 = tnale::tnale(e2, tmpl, c);
    ASSERT_EQ(t1.records.size(), t2.records.size());
    for (std::size_t i = 0; i < t1.records.size(); ++i) {
        EXPECT_EQ(t1.records[i].structure, t2.records[i].structure);
        EXPECT_EQ(t1.records[i].objective, t2.records[i].objective);
        EXPECT_EQ(t1.records[i].eval_index, t2.records[i].eval_index);
    }
    EXPECT_EQ(t1.restarts, t2.restarts);
}

TEST(Tnale, AllOnesTargetGivesAllOnes) {
    GenSpec g;
    g.topology = {TopologyKind::TR, 3};
    g.rank_lo = g.rank_hi = 1;
    g.seed = 6;
    const auto inst = generate(g);
    const TnStructure tmpl = template_adjacency(g.topology, 3);
    TnaleConfig c;
    c.ale.rank_hi = 3;
    c.l = 3;
    Evaluator ev(inst.target, ObjectiveConfig{});
    const auto t = tnale::tnale(ev, tmpl, c);
    EXPECT_EQ(t.final.structure.ranks(), (std::vector<std::size_t>{1, 1, 1}));
    EXPECT_EQ(brute_force(ev, tmpl, 1, 3).structure, t.final.structure);
}

TEST(Tnls, ImprovesOrStays) {
    auto ev = Evaluator::from_function(bowl);
    TnlsConfig c;
    c.max_iters = 1;
    c.samples_per_iter = 200;
    c.radius_schedule = {1};
    const SearchTrace t = tnls(*ev, chain(), c, chain(3, 5));
    EXPECT_EQ(t.final.structure, chain(3, 5));
}

TEST(Tnls, CoveringSamplesBeatForwardPass) {
    for (std::size_t a = 1; a <= 6; a += 2)
        for (std::size_t b = 1; b <= 7; b += 3) {
            auto e1 = Evaluator::from_function(bowl);
            auto e2 = Evaluator::from_function(bowl);
            TnlsConfig c;
            c.max_iters = 1;
            c.samples_per_iter = 300;
            c.radius_schedule = {1};
            const auto t = tnls(*e1, chain(), c, chain(a, b));
            const TnStructure f = ale_forward_pass(chain(a, b), ale(1), *e2);
            EXPECT_LE(t.final.objective, e2->lookup(f)->objective);
        }
}

TEST(Tnls, RadiusSchedule) {
    TnlsConfig c;
    c.initial_radius = 3;
    c.radius_decay = 0.5;
    EXPECT_EQ(c.radius_at(0), 3u);
    EXPECT_EQ(c.radius_at(1), 2u);
    EXPECT_EQ(c.radius_at(10), 1u);
    c.radius_schedule = {4, 2};
    EXPECT_EQ(c.radius_at(0), 4u);
    EXPECT_EQ(c.radius_at(5), 2u);
}

TEST(Tnls, BestCurveMonotone) {
    auto ev = Evaluator::from_function(bowl);
    TnlsConfig c;
    c.samples_per_iter = 5;
    c.max_iters = 6;
    c.seed = 3;
    const auto t = tnls(*ev, chain(), c);
    for (std::size_t i = 1; i < t.best_curve.size(); ++i) EXPECT_LE(t.best_curve[i].second, t.best_curve[i - 1].second);
}

TEST(BruteForce, CountsAndTies) {
    auto ev = Evaluator::from_function([](const TnStructure&) { return 2.0; });
    const auto best = brute_force(*ev, chain(), 1, 3);
    EXPECT_EQ(ev->n_evals(), 9u);
    EXPECT_EQ(best.structure, chain(1, 1));
}

TEST(BruteForce, GridCap) {
    auto ev = Evaluator::from_function(bowl);
    EXPECT_THROW(brute_force(*ev, chain(), 1, 7, {}, 48), GridCapExceeded);
    EXPECT_NO_THROW(brute_force(*ev, chain(), 1, 7, {}, 49));
    ::setenv("TNALE_GRID_CAP", "5", 1);
    EXPECT_EQ(grid_cap_from_env(), 5u);
    ::unsetenv("TNALE_GRID_CAP");
    EXPECT_EQ(grid_cap_from_env(), kDefaultGridCap);
}

TEST(BruteForce, GeneratorIsNoBetterThanOptimum) {
    GenSpec g;
    g.topology = {TopologyKind::TR, 3};
    g.rank_hi = 2;
    g.seed = 8;
    const auto inst = generate(g);
    Evaluator ev(inst.target, ObjectiveConfig{});
    const auto best = brute_force(ev, template_adjacency(g.topology, 3), 1, 3);
    EXPECT_GE(efficiency(best.structure, inst.truth), 1.0);
    EXPECT_LE(best.objective, ev.evaluate(inst.truth).objective);
}
