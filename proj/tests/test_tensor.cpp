#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "tnale/tensor.hpp"

using namespace tnale;

namespace {

DenseTensor iota(Shape dims) {
    DenseTensor t(std::move(dims));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
    return t;
}

DenseTensor random_tensor(Shape dims, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    DenseTensor t(std::move(dims));
    for (double& x : t.values()) x = n(rng);
    return t;
}

}  // namespace

TEST(DenseTensor, RejectsInconsistentShapes) {
    EXPECT_THROW(DenseTensor(Shape{}), ShapeError);
    EXPECT_THROW(DenseTensor(Shape{2, 0}), ShapeError);
    EXPECT_THROW(DenseTensor(Shape{2, 2}, std::vector<double>(3)), ShapeError);
    EXPECT_NO_THROW(DenseTensor(Shape{2, 2}, std::vector<double>(4)));
}

TEST(DenseTensor, RowMajorOffsets) {
    DenseTensor t = iota({2, 3, 4});
    const std::vector<std::size_t> idx{1, 2, 3};
    EXPECT_EQ(t.offset(idx), 1u * 12 + 2 * 4 + 3);
    EXPECT_EQ(t.at(idx), 23.0);
}

TEST(Rse, HandExamples) {
    DenseTensor x(Shape{2}, {1.0, 0.0});
    DenseTensor z(Shape{2}, {0.0, 1.0});
    EXPECT_DOUBLE_EQ(rse(x, x), 0.0);
    EXPECT_DOUBLE_EQ(rse(x, DenseTensor(Shape{2})), 1.0);
    EXPECT_DOUBLE_EQ(rse(x, z), 2.0);
}

TEST(Rse, Errors) {
    EXPECT_THROW(rse(DenseTensor(Shape{2}), DenseTensor(Shape{2})), NumericError);
    EXPECT_THROW(rse(DenseTensor(Shape{2}, {1, 1}), DenseTensor(Shape{3})), ShapeError);
}

TEST(Unfold, MatrixIsItself) {
    DenseTensor t = iota({2, 3});
    Matrix m = unfold(t, 0);
    ASSERT_EQ(m.rows(), 2u);
    ASSERT_EQ(m.cols(), 3u);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(m.values()[i], t[i]);
}

TEST(Unfold, Mode1Of2x2x2) {
    Matrix m = unfold(iota({2, 2, 2}), 1);
    ASSERT_EQ(m.rows(), 2u);
    ASSERT_EQ(m.cols(), 4u);
    const std::vector<double> expected{0, 1, 4, 5, 2, 3, 6, 7};
    for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(m.values()[i], expected[i]);
}

TEST(Unfold, IndexArithmeticOracle) {
    // Entry (i_k, column) with column = row-major position of the other modes.
    DenseTensor t = iota({3, 2, 4, 2});
    for (std::size_t mode = 0; mode < t.order(); ++mode) {
        Matrix m = unfold(t, mode);
        for (std::size_t flat = 0; flat < t.size(); ++flat) {
            auto idx = unravel(flat, t.dims());
            std::size_t col = 0;
            for (std::size_t k = 0; k < t.order(); ++k)
                if (k != mode) col = col * t.dims()[k] + idx[k];
            EXPECT_EQ(m(idx[mode], col), t[flat]);
        }
    }
}

TEST(Unfold, RefoldRoundTripAndEnergy) {
    std::mt19937_64 rng(3);
    DenseTensor t = random_tensor({3, 4, 2, 5}, rng);
    for (std::size_t mode = 0; mode < t.order(); ++mode) {
        Matrix m = unfold(t, mode);
        EXPECT_DOUBLE_EQ(m.squared_norm(), t.squared_norm());
        EXPECT_EQ(refold(m, mode, t.dims()), t);
    }
    EXPECT_THROW(unfold(t, 4), ShapeError);
}

TEST(SingularValues, IdentityAndRankOne) {
    Matrix eye(3, 3);
    for (std::size_t i = 0; i < 3; ++i) eye(i, i) = 1.0;
    for (double s : singular_values(eye)) EXPECT_NEAR(s, 1.0, 1e-14);

    const std::vector<double> u{1, 2, 3}, v{4, 5};
    Matrix uv(3, 2);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 2; ++j) uv(i, j) = u[i] * v[j];
    auto s = singular_values(uv);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_NEAR(s[0], std::sqrt(14.0) * std::sqrt(41.0), 1e-12);
    EXPECT_NEAR(s[1], 0.0, 1e-12);
}

TEST(SingularValues, MatchesGramEigenvalues) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix m(4, 6);
        for (double& x : m.values()) x = n(rng);
        Eigen::MatrixXd a(4, 6);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 6; ++j) a(i, j) = m(i, j);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a.transpose() * a);
        std::vector<double> ev(eig.eigenvalues().data(), eig.eigenvalues().data() + 6);
        std::sort(ev.rbegin(), ev.rend());
        auto s = singular_values(m);
        ASSERT_EQ(s.size(), 4u);
        double energy = 0.0;
        for (std::size_t i = 0; i < 4; ++i) {
            EXPECT_NEAR(s[i], std::sqrt(std::max(0.0, ev[i])), 1e-10);
            if (i > 0) EXPECT_LE(s[i], s[i - 1]);
            energy += s[i] * s[i];
        }
        EXPECT_NEAR(energy, m.squared_norm(), 1e-10 * m.squared_norm());
    }
}

TEST(SingularValues, RejectsNonFinite) {
    Matrix m(2, 2);
    m(0, 1) = std::nan("");
    EXPECT_THROW(singular_values(m), NumericError);
}

TEST(SingularValues, InvariantUnderColumnModePermutation) {
    std::mt19937_64 rng(5);
    DenseTensor t = random_tensor({3, 2, 4}, rng);
    const std::vector<std::size_t> perm{0, 2, 1};
    auto a = singular_values(unfold(t, 0));
    auto b = singular_values(unfold(permute(t, perm), 0));
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(Permute, MovesAxes) {
    DenseTensor t = iota({2, 3, 4});
    DenseTensor p = permute(t, {2, 0, 1});
    ASSERT_EQ(p.dims(), (Shape{4, 2, 3}));
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t k = 0; k < 4; ++k) {
                const std::vector<std::size_t> a{i, j, k}, b{k, i, j};
                EXPECT_EQ(t.at(a), p.at(b));
            }
    EXPECT_THROW(permute(t, {0, 0, 1}), ShapeError);
}

TEST(OuterProduct, Entries) {
    DenseTensor t = outer_product({{1, 2}, {3, 4, 5}});
    ASSERT_EQ(t.dims(), (Shape{2, 3}));
    EXPECT_EQ(t[4], 2.0 * 4.0);
}
