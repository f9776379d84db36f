#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "tnale/errors.hpp"

namespace tnale {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(std::span<const std::size_t> dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(std::span<const std::size_t> dims) {
    std::string s = "(";
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(dims[i]);
    }
    return s + ")";
}

/// Arbitrary-order real tensor stored row-major (last index fastest).
class DenseTensor {
public:
    DenseTensor() : dims_{1}, values_(1, 0.0) {}

    explicit DenseTensor(Shape dims) : dims_(std::move(dims)) {
        check_dims();
        values_.assign(shape_size(dims_), 0.0);
    }

    DenseTensor(Shape dims, std::vector<double> values) : dims_(std::move(dims)), values_(std::move(values)) {
        check_dims();
        if (shape_size(dims_) != values_.size())
            throw ShapeError("tensor of shape " + shape_string(dims_) + " given " + std::to_string(values_.size()) +
                             " values");
    }

    [[nodiscard]] const Shape& dims() const noexcept { return dims_; }
    [[nodiscard]] std::size_t order() const noexcept { return dims_.size(); }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::span<double> values() noexcept { return values_; }
    [[nodiscard]] const double* data() const noexcept { return values_.data(); }
    [[nodiscard]] double* data() noexcept { return values_.data(); }

    double& operator[](std::size_t flat) noexcept { return values_[flat]; }
    double operator[](std::size_t flat) const noexcept { return values_[flat]; }

    [[nodiscard]] std::size_t offset(std::span<const std::size_t> index) const {
        if (index.size() != dims_.size()) throw ShapeError("index order does not match tensor order");
        std::size_t off = 0;
        for (std::size_t k = 0; k < dims_.size(); ++k) {
            if (index[k] >= dims_[k]) throw ShapeError("index out of range in mode " + std::to_string(k));
            off = off * dims_[k] + index[k];
        }
        return off;
    }

    [[nodiscard]] double at(std::span<const std::size_t> index) const { return values_[offset(index)]; }
    double& at(std::span<const std::size_t> index) { return values_[offset(index)]; }

    /// Same values under a new shape of equal size.
    [[nodiscard]] DenseTensor reshaped(Shape dims) const { return DenseTensor(std::move(dims), values_); }

    [[nodiscard]] double squared_norm() const noexcept {
        double s = 0.0;
        for (double v : values_) s += v * v;
        return s;
    }

    [[nodiscard]] double norm() const noexcept { return std::sqrt(squared_norm()); }

    DenseTensor& operator*=(double alpha) noexcept {
        for (double& v : values_) v *= alpha;
        return *this;
    }

    friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

private:
    void check_dims() const {
        if (dims_.empty()) throw ShapeError("tensor needs at least one mode");
        for (std::size_t d : dims_)
            if (d == 0) throw ShapeError("tensor mode of size zero in " + shape_string(dims_));
    }

    Shape dims_;
    std::vector<double> values_;
};

/// Dense row-major matrix.
class Matrix {
public:
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {
        if (rows == 0 || cols == 0) throw ShapeError("matrix with an empty dimension");
    }

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
        : rows_(rows), cols_(cols), values_(std::move(values)) {
        if (rows == 0 || cols == 0) throw ShapeError("matrix with an empty dimension");
        if (rows * cols != values_.size()) throw ShapeError("matrix value count does not match rows*cols");
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::span<double> values() noexcept { return values_; }

    double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }

    [[nodiscard]] double squared_norm() const noexcept {
        double s = 0.0;
        for (double v : values_) s += v * v;
        return s;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> values_;
};

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMajorMatrix>;
using MatrixMap = Eigen::Map<RowMajorMatrix>;

namespace detail {

// out[o] = in[offset(o)] where output mode i walks input mode perm[i].
inline void permute_into(const double* in, std::span<const std::size_t> in_dims, std::span<const std::size_t> perm,
                         double* out) {
    const std::size_t order = in_dims.size();
    const std::size_t total = shape_size(in_dims);
    if (order == 0 || total == 0) return;

    std::vector<std::size_t> in_strides(order);
    std::size_t stride = 1;
    for (std::size_t k = order; k-- > 0;) {
        in_strides[k] = stride;
        stride *= in_dims[k];
    }
    std::vector<std::size_t> out_dims(order), out_strides(order);
    for (std::size_t i = 0; i < order; ++i) {
        out_dims[i] = in_dims[perm[i]];
        out_strides[i] = in_strides[perm[i]];
    }

    // The innermost output mode is copied as a strided run.
    const std::size_t inner = out_dims[order - 1];
    const std::size_t inner_stride = out_strides[order - 1];
    std::vector<std::size_t> counter(order, 0);
    std::size_t in_off = 0;
    for (std::size_t o = 0; o < total; o += inner) {
        const double* src = in + in_off;
        double* dst = out + o;
        if (inner_stride == 1) {
            std::copy(src, src + inner, dst);
        } else {
            for (std::size_t j = 0; j < inner; ++j) dst[j] = src[j * inner_stride];
        }
        for (std::size_t k = order - 1; k-- > 0;) {
            if (++counter[k] < out_dims[k]) {
                in_off += out_strides[k];
                break;
            }
            in_off -= (out_dims[k] - 1) * out_strides[k];
            counter[k] = 0;
        }
    }
}

inline bool is_identity(std::span<const std::size_t> perm) {
    for (std::size_t i = 0; i < perm.size(); ++i)
        if (perm[i] != i) return false;
    return true;
}

inline void check_permutation(std::span<const std::size_t> perm, std::size_t order) {
    if (perm.size() != order) throw ShapeError("permutation length does not match tensor order");
    std::vector<bool> seen(order, false);
    for (std::size_t p : perm) {
        if (p >= order || seen[p]) throw ShapeError("axis permutation is not a bijection");
        seen[p] = true;
    }
}

}  // namespace detail

/// Transposes modes: result mode i is input mode perm[i].
inline DenseTensor permute(const DenseTensor& t, std::span<const std::size_t> perm) {
    detail::check_permutation(perm, t.order());
    Shape out_dims(t.order());
    for (std::size_t i = 0; i < perm.size(); ++i) out_dims[i] = t.dims()[perm[i]];
    DenseTensor out(std::move(out_dims));
    detail::permute_into(t.data(), t.dims(), perm, out.data());
    return out;
}

inline DenseTensor permute(const DenseTensor& t, std::initializer_list<std::size_t> perm) {
    return permute(t, std::span<const std::size_t>(perm.begin(), perm.size()));
}

/// Relative squared error ||x - z||^2 / ||x||^2.
inline double rse(const DenseTensor& x, const DenseTensor& z) {
    if (x.dims() != z.dims())
        throw ShapeError("rse: shapes " + shape_string(x.dims()) + " and " + shape_string(z.dims()) + " differ");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - z[i];
        num += d * d;
        den += x[i] * x[i];
    }
    if (den == 0.0) throw NumericError("rse: reference tensor has zero norm");
    return num / den;
}

/// Mode-k matricization. Columns run over the remaining modes in ascending
/// order, row-major.
inline Matrix unfold(const DenseTensor& t, std::size_t mode) {
    if (mode >= t.order())
        throw ShapeError("unfold: mode " + std::to_string(mode) + " out of range for order " +
                         std::to_string(t.order()));
    std::vector<std::size_t> perm{mode};
    for (std::size_t k = 0; k < t.order(); ++k)
        if (k != mode) perm.push_back(k);
    const std::size_t rows = t.dims()[mode];
    std::vector<double> values(t.size());
    detail::permute_into(t.data(), t.dims(), perm, values.data());
    return Matrix(rows, t.size() / rows, std::move(values));
}

/// Inverse of unfold for a tensor of the given shape.
inline DenseTensor refold(const Matrix& m, std::size_t mode, const Shape& dims) {
    if (mode >= dims.size()) throw ShapeError("refold: mode out of range");
    if (m.rows() != dims[mode] || m.rows() * m.cols() != shape_size(dims))
        throw ShapeError("refold: matrix does not match shape " + shape_string(dims));
    Shape unfolded_dims{dims[mode]};
    for (std::size_t k = 0; k < dims.size(); ++k)
        if (k != mode) unfolded_dims.push_back(dims[k]);
    // The unfolded layout is the permuted tensor; undo the permutation.
    std::vector<std::size_t> inverse(dims.size());
    for (std::size_t k = 0, pos = 1; k < dims.size(); ++k) inverse[k] = (k == mode) ? 0 : pos++;
    DenseTensor out(dims);
    detail::permute_into(m.values().data(), unfolded_dims, inverse, out.data());
    return out;
}

/// Singular values in descending order.
inline std::vector<double> singular_values(const Matrix& m) {
    for (double v : m.values())
        if (!std::isfinite(v)) throw NumericError("singular_values: non-finite entry");
    ConstMatrixMap a(m.values().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& s = svd.singularValues();
    std::vector<double> out(s.data(), s.data() + s.size());
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

/// Outer product of vectors, used for separable tensors.
inline DenseTensor outer_product(const std::vector<std::vector<double>>& factors) {
    Shape dims;
    for (const auto& f : factors) dims.push_back(f.size());
    DenseTensor out(dims);
    std::vector<std::size_t> idx(dims.size(), 0);
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
        double v = 1.0;
        for (std::size_t k = 0; k < dims.size(); ++k) v *= factors[k][idx[k]];
        out[flat] = v;
        for (std::size_t k = dims.size(); k-- > 0;) {
            if (++idx[k] < dims[k]) break;
            idx[k] = 0;
        }
    }
    return out;
}

/// Decodes a flat row-major offset into a multi-index.
inline std::vector<std::size_t> unravel(std::size_t flat, std::span<const std::size_t> dims) {
    std::vector<std::size_t> idx(dims.size());
    for (std::size_t k = dims.size(); k-- > 0;) {
        idx[k] = flat % dims[k];
        flat /= dims[k];
    }
    return idx;
}

}  // namespace tnale
