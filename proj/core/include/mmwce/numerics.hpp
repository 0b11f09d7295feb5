// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The mmwce Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense complex matrix kernels shared by every other module: storage,
// products, SVD, least squares, Kronecker products, sampling masks and the
// scalar soft-shrinkage operator.

#ifndef MMWCE_NUMERICS_HPP
#define MMWCE_NUMERICS_HPP

#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace mmwce {

using cplx = std::complex<double>;

/// Upper bound on the element count of any matrix produced by kron() and
/// friends (about 1 GiB of complex doubles).
inline constexpr std::size_t kMaxMatrixElements = std::size_t{1} << 26;

/// Relative tolerance (times sigma_max) used for numerical rank decisions.
inline constexpr double kRankTolerance = 1e-12;

/// Condition-number cap accepted by least_squares().
inline constexpr double kConditionCap = 1e12;

/// Dense complex matrix, row-major.
class CMatrix {
public:
    CMatrix() = default;
    CMatrix(std::size_t rows, std::size_t cols);
    /// Takes ownership of `entries` (row-major). Throws on size mismatch or
    /// non-finite entries.
    CMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> entries);

    static CMatrix identity(std::size_t n);
    static CMatrix from_rows(std::initializer_list<std::initializer_list<cplx>> rows);
    static CMatrix column_vector(std::span<const cplx> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    cplx& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<cplx> data() noexcept { return data_; }
    std::span<const cplx> data() const noexcept { return data_; }

    CMatrix col(std::size_t j) const;
    void set_col(std::size_t j, const CMatrix& column);
    /// Columns [first, first + count).
    CMatrix cols_range(std::size_t first, std::size_t count) const;

    CMatrix adjoint() const;
    CMatrix transpose() const;
    CMatrix conjugate() const;

    double squared_norm() const noexcept;
    double frobenius_norm() const noexcept;
    bool all_finite() const noexcept;

    CMatrix& operator+=(const CMatrix& rhs);
    CMatrix& operator-=(const CMatrix& rhs);
    CMatrix& operator*=(cplx s) noexcept;

    friend bool operator==(const CMatrix&, const CMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cplx> data_;
};

CMatrix operator+(CMatrix a, const CMatrix& b);
CMatrix operator-(CMatrix a, const CMatrix& b);
CMatrix operator*(const CMatrix& a, const CMatrix& b);
CMatrix operator*(cplx s, CMatrix a);

/// Frobenius inner product sum(conj(a_ij) * b_ij).
cplx inner(const CMatrix& a, const CMatrix& b);

/// Column-major vectorization (stacks columns), shape (rows*cols) x 1.
CMatrix vec(const CMatrix& m);
/// Inverse of vec().
CMatrix unvec(const CMatrix& v, std::size_t rows, std::size_t cols);

/// Thin SVD: m = u * diag(s) * v^H with k = min(rows, cols) triplets.
struct SvdResult {
    CMatrix u;
    std::vector<double> s;
    CMatrix v;

    /// Count of singular values above rel_tol * s[0].
    std::size_t rank(double rel_tol = kRankTolerance) const noexcept;
    CMatrix reconstruct() const;
    /// Sum of the leading `k` rank-one terms.
    CMatrix truncate(std::size_t k) const;
};

/// One-sided (Hestenes) Jacobi SVD. Throws Errc::solver_failure carrying the
/// sweep count if the sweep cap 100*max(rows, cols) is reached.
SvdResult svd(const CMatrix& m);

CMatrix kron(const CMatrix& a, const CMatrix& b);

/// Minimizer of ||a x - y||_F via Householder QR. Requires rows >= cols and a
/// condition number below kConditionCap.
CMatrix least_squares(const CMatrix& a, const CMatrix& y);

/// Moore-Penrose pseudo-inverse; singular values below kRankTolerance*s_max
/// are treated as zero.
CMatrix pseudo_inverse(const CMatrix& m);

/// Orthonormal basis (thin Q of a Householder QR) of the columns of `m`.
CMatrix orthonormal_columns(const CMatrix& m);

/// sign(a) * max(|a| - mu, 0).
double soft_shrink(double a, double mu);

/// Set of observed (row, col) entries of a rows x cols matrix.
class SamplingMask {
public:
    SamplingMask(std::size_t rows, std::size_t cols, std::vector<std::pair<std::size_t, std::size_t>> observed);
    static SamplingMask full(std::size_t rows, std::size_t cols);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t count() const noexcept { return observed_.size(); }
    double fraction() const noexcept { return double(count()) / double(rows_ * cols_); }
    bool contains(std::size_t i, std::size_t j) const noexcept { return bitmap_[i * cols_ + j] != 0; }
    bool covers_all_rows_and_cols() const;
    /// Observed entries in row-major order.
    const std::vector<std::pair<std::size_t, std::size_t>>& observed() const noexcept { return observed_; }

    friend bool operator==(const SamplingMask& a, const SamplingMask& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.observed_ == b.observed_;
    }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<std::uint8_t> bitmap_;
    std::vector<std::pair<std::size_t, std::size_t>> observed_;
};

/// Keeps the observed entries of `m` and zeroes the rest.
CMatrix project_mask(const CMatrix& m, const SamplingMask& mask);
/// Keeps the unobserved entries of `m` and zeroes the rest.
CMatrix project_complement(const CMatrix& m, const SamplingMask& mask);

} // namespace mmwce

#endif // MMWCE_NUMERICS_HPP
