#include <gtest/gtest.h>

#include <random>

#include "tnale/landscape.hpp"
#include "tnale/search.hpp"

using namespace tnale;

namespace {

TnStructure chain(std::size_t a, std::size_t b) {
    return TnStructure(std::vector<std::size_t>(3, 3), std::vector<Edge>{{0, 1}, {1, 2}})
        .with_ranks(std::vector<std::size_t>{a, b});
}

double bowl(const TnStructure& s) {
    const auto r = s.ranks();
    const double a = static_cast<double>(r[0]), b = static_cast<double>(r[1]);
    return 1.0 + (a - 3) * (a - 3) + (b - 5) * (b - 5);
}

// Positive rank-1 tensor: entry = prod_k v_k[i_k].
DenseTensor separable(const Shape& dims, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.1, 1.0);
    std::vector<std::vector<double>> factors;
    for (std::size_t d : dims) {
        std::vector<double> v(d);
        for (double& x : v) x = u(rng);
        factors.push_back(std::move(v));
    }
    return outer_product(factors);
}

}  // namespace

TEST(BuildLandscape, EntriesAreReciprocalObjectives) {
    auto ev = Evaluator::from_function(bowl);
    const auto b = build_landscape(chain(2, 2), 1, false, *ev);
    ASSERT_EQ(b.tensor.dims(), (Shape{3, 3}));
    EXPECT_EQ(b.index_offset, 2u);
    EXPECT_EQ(ev->n_evals(), 9u);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            const std::vector<std::size_t> idx{i, j};
            EXPECT_EQ(b.decode(idx), chain(1 + i, 1 + j));
            EXPECT_EQ(b.tensor.at(idx), 1.0 / bowl(chain(1 + i, 1 + j)));
        }
    EXPECT_EQ(b.center_index(), (std::vector<std::size_t>{1, 1}));
    EXPECT_EQ(b.tensor.at(b.center_index()), 1.0 / ev->lookup(chain(2, 2))->objective);
}

TEST(BuildLandscape, ClampedCandidates) {
    auto ev = Evaluator::from_function(bowl);
    const auto b = build_landscape(chain(1, 7), 2, false, *ev);
    EXPECT_EQ(b.tensor.dims(), (Shape{3, 3}));
    EXPECT_EQ(b.candidates[0], (std::vector<std::size_t>{1, 2, 3}));
    EXPECT_EQ(b.candidates[1], (std::vector<std::size_t>{5, 6, 7}));
    EXPECT_EQ(b.center_index(), (std::vector<std::size_t>{0, 2}));
}

TEST(BuildLandscape, GraphModeDecodesTranspositions) {
    const TnStructure ring = ring_structure(std::vector<std::size_t>{2, 3, 4, 5}, 3);
    auto ev = Evaluator::from_function([](const TnStructure& s) { return 1.0 + static_cast<double>(param_count(s)); });
    const auto b = build_landscape(ring, 0, true, *ev);
    ASSERT_EQ(b.tensor.order(), 5u);
    EXPECT_EQ(b.tensor.dims()[4], 7u);
    const auto nb = graph_neighborhood(ring);
    std::vector<std::size_t> idx(5, 0);
    EXPECT_EQ(b.decode(idx), ring);
    for (std::size_t g = 1; g <= 6; ++g) {
        idx[4] = g;
        EXPECT_EQ(b.decode(idx), nb[g - 1]);
    }
    EXPECT_EQ(b.center_index().back(), 0u);
}

TEST(BuildLandscape, SpotCheckMatchesCache) {
    auto ev = Evaluator::from_function(bowl);
    const auto b = build_landscape(chain(4, 4), 2, false, *ev);
    const auto sc = reciprocal_spot_check(b, *ev, 10, 1);
    EXPECT_EQ(sc.samples, 10u);
    EXPECT_LE(sc.max_relative_error, 1e-12);
}

TEST(MinEntryBrute, Cases) {
    DenseTensor c(Shape{2, 3});
    for (double& x : c.values()) x = 1.0;
    auto r = min_entry_brute(c);
    EXPECT_EQ(r.index, (std::vector<std::size_t>{0, 0}));
    EXPECT_EQ(r.reads, 6u);

    std::mt19937_64 rng(2);
    DenseTensor t(Shape{3, 4, 2});
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& x : t.values()) x = u(rng);
    r = min_entry_brute(t);
    for (double x : t.values()) EXPECT_LE(x, r.value);
    EXPECT_EQ(t.at(r.index), r.value);
}

TEST(AleMinEntry, SeparableOneSweepIsExact) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        std::uniform_int_distribution<std::size_t> size(2, 5);
        Shape dims{size(rng), size(rng), size(rng), size(rng)};
        const DenseTensor t = separable(dims, rng);
        std::vector<std::size_t> start;
        std::size_t total = 0;
        for (std::size_t d : dims) {
            start.push_back(std::uniform_int_distribution<std::size_t>(0, d - 1)(rng));
            total += d;
        }
        const auto ale = ale_min_entry(t, 1, start);
        const auto exact = min_entry_brute(t);
        EXPECT_EQ(ale.index, exact.index);
        EXPECT_EQ(ale.value, exact.value);
        EXPECT_LE(ale.reads, total);
    }
}

TEST(AleMinEntry, ConstantStaysAtStart) {
    DenseTensor c(Shape{3, 3, 3});
    for (double& x : c.values()) x = 2.0;
    const std::vector<std::size_t> start{1, 2, 0};
    const auto r = ale_min_entry(c, 3, start);
    EXPECT_EQ(r.index, start);
    EXPECT_EQ(r.reads, 7u);
}

TEST(AleMinEntry, NeverDecreasesAndValidates) {
    std::mt19937_64 rng(4);
    DenseTensor t(Shape{4, 4, 4});
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& x : t.values()) x = u(rng);
    const std::vector<std::size_t> start{0, 0, 0};
    double prev = t.at(start);
    for (std::size_t sweeps = 1; sweeps <= 4; ++sweeps) {
        const auto r = ale_min_entry(t, sweeps, start);
        EXPECT_GE(r.value, prev);
        EXPECT_EQ(t.at(r.index), r.value);
        prev = r.value;
    }
    EXPECT_THROW(ale_min_entry(t, 1, {0, 0}), ShapeError);
    EXPECT_THROW(ale_min_entry(t, 1, {0, 4, 0}), ShapeError);
}

TEST(LazyLandscape, OneSweepMatchesForwardPass) {
    for (std::size_t a = 1; a <= 7; a += 2)
        for (std::size_t b = 1; b <= 7; b += 2) {
            auto e1 = Evaluator::from_function(bowl);
            auto e2 = Evaluator::from_function(bowl);
            const auto lazy = lazy_landscape(chain(a, b), 2, *e1);
            const auto r = ale_min_entry(lazy.mode_sizes, lazy.entry, 1, lazy.layout.center_index());
            AleConfig c;
            c.radius = 2;
            EXPECT_EQ(lazy.layout.decode(r.index), ale_forward_pass(chain(a, b), c, *e2));
            EXPECT_EQ(e1->n_evals(), r.reads);
        }
}

TEST(FiniteGradient, Cases) {
    auto sq = [](std::span<const std::int64_t> x) {
        double s = 0.0;
        for (auto v : x) s += static_cast<double>(v * v);
        return s;
    };
    const std::vector<std::int64_t> x{1, 2, 0};
    EXPECT_EQ(finite_gradient(sq, x), (std::vector<double>{3, 5, 1}));
    auto lin = [](std::span<const std::int64_t> x) { return 2.0 * static_cast<double>(x[0]) - static_cast<double>(x[1]); };
    EXPECT_EQ(finite_gradient(lin, std::vector<std::int64_t>{4, 4}), (std::vector<double>{2, -1}));
    EXPECT_THROW(finite_gradient(sq, std::vector<std::int64_t>{1, -1}), Error);
}

TEST(UnfoldingSpectra, SeparableIsRankOne) {
    std::mt19937_64 rng(8);
    const DenseTensor t = separable({3, 4, 5}, rng);
    const auto spectra = unfolding_spectra(t);
    ASSERT_EQ(spectra.size(), 3u);
    for (const auto& m : spectra) {
        EXPECT_EQ(m.rank_at_tolerance, 1u);
        double energy = 0.0;
        for (double s : m.singular_values) energy += s * s;
        EXPECT_NEAR(energy, t.squared_norm(), 1e-12 * t.squared_norm());
        for (std::size_t i = 1; i < m.singular_values.size(); ++i) EXPECT_NEAR(m.singular_values[i], 0.0, 1e-12);
    }
}

TEST(UnfoldingSpectra, ToleranceCountsTail) {
    // Diagonal 2x2 with singular values 3 and 1: tail 1/sqrt(10) ~ 0.316.
    DenseTensor t(Shape{2, 2}, {3.0, 0.0, 0.0, 1.0});
    EXPECT_EQ(unfolding_spectra(t, 0.5)[0].rank_at_tolerance, 1u);
    EXPECT_EQ(unfolding_spectra(t, 0.3)[0].rank_at_tolerance, 2u);
    EXPECT_EQ(unfolding_spectra(DenseTensor(Shape{2, 2}), 0.1)[0].rank_at_tolerance, 0u);
}
