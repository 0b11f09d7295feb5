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

#include "mmwce/numerics.hpp"

#include "mmwce/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace mmwce {

namespace {

std::size_t checked_product(std::size_t a, std::size_t b) {
    if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a)
        throw Error(Errc::size, "dimension product overflows");
    return a * b;
}

void require_same_shape(const CMatrix& a, const CMatrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw Error(Errc::shape, std::string(op) + ": " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                     " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

} // namespace

// ---------------------------------------------------------------------------
// CMatrix
// ---------------------------------------------------------------------------

CMatrix::CMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(checked_product(rows, cols)) {
    if (data_.size() > kMaxMatrixElements) throw Error(Errc::size, "matrix exceeds element cap");
}

CMatrix::CMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != checked_product(rows, cols))
        throw Error(Errc::shape, "entry count " + std::to_string(data_.size()) + " does not match " +
                                     std::to_string(rows) + "x" + std::to_string(cols));
    if (!all_finite()) throw Error(Errc::precondition, "matrix entries must be finite");
}

CMatrix CMatrix::identity(std::size_t n) {
    CMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

CMatrix CMatrix::from_rows(std::initializer_list<std::initializer_list<cplx>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<cplx> entries;
    entries.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw Error(Errc::shape, "ragged row list");
        entries.insert(entries.end(), row.begin(), row.end());
    }
    return CMatrix(r, c, std::move(entries));
}

CMatrix CMatrix::column_vector(std::span<const cplx> values) {
    return CMatrix(values.size(), 1, std::vector<cplx>(values.begin(), values.end()));
}

CMatrix CMatrix::col(std::size_t j) const {
    CMatrix out(rows_, 1);
    for (std::size_t i = 0; i < rows_; ++i) out.data_[i] = (*this)(i, j);
    return out;
}

void CMatrix::set_col(std::size_t j, const CMatrix& column) {
    if (column.size() != rows_) throw Error(Errc::shape, "set_col: column length mismatch");
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = column.data_[i];
}

CMatrix CMatrix::cols_range(std::size_t first, std::size_t count) const {
    if (first + count > cols_) throw Error(Errc::shape, "cols_range out of bounds");
    CMatrix out(rows_, count);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < count; ++j) out(i, j) = (*this)(i, first + j);
    return out;
}

CMatrix CMatrix::adjoint() const {
    CMatrix out(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) out(j, i) = std::conj((*this)(i, j));
    return out;
}

CMatrix CMatrix::transpose() const {
    CMatrix out(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
    return out;
}

CMatrix CMatrix::conjugate() const {
    CMatrix out = *this;
    for (auto& x : out.data_) x = std::conj(x);
    return out;
}

double CMatrix::squared_norm() const noexcept {
    double s = 0.0;
    for (const auto& x : data_) s += std::norm(x);
    return s;
}

double CMatrix::frobenius_norm() const noexcept { return std::sqrt(squared_norm()); }

bool CMatrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(),
                       [](const cplx& x) { return std::isfinite(x.real()) && std::isfinite(x.imag()); });
}

CMatrix& CMatrix::operator+=(const CMatrix& rhs) {
    require_same_shape(*this, rhs, "operator+");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += rhs.data_[k];
    return *this;
}

CMatrix& CMatrix::operator-=(const CMatrix& rhs) {
    require_same_shape(*this, rhs, "operator-");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= rhs.data_[k];
    return *this;
}

CMatrix& CMatrix::operator*=(cplx s) noexcept {
    for (auto& x : data_) x *= s;
    return *this;
}

CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
CMatrix operator*(cplx s, CMatrix a) { return a *= s; }

CMatrix operator*(const CMatrix& a, const CMatrix& b) {
    if (a.cols() != b.rows())
        throw Error(Errc::shape, "matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " * " +
                                     std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    CMatrix out(a.rows(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        cplx* orow = &out(i, 0);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const cplx aik = a(i, k);
            if (aik == cplx{}) continue;
            const cplx* brow = &b(k, 0);
            for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

cplx inner(const CMatrix& a, const CMatrix& b) {
    require_same_shape(a, b, "inner");
    cplx s{};
    auto da = a.data();
    auto db = b.data();
    for (std::size_t k = 0; k < da.size(); ++k) s += std::conj(da[k]) * db[k];
    return s;
}

CMatrix vec(const CMatrix& m) {
    CMatrix out(m.size(), 1);
    std::size_t k = 0;
    for (std::size_t j = 0; j < m.cols(); ++j)
        for (std::size_t i = 0; i < m.rows(); ++i) out(k++, 0) = m(i, j);
    return out;
}

CMatrix unvec(const CMatrix& v, std::size_t rows, std::size_t cols) {
    if (v.size() != rows * cols) throw Error(Errc::shape, "unvec: length does not match target shape");
    CMatrix out(rows, cols);
    auto d = v.data();
    std::size_t k = 0;
    for (std::size_t j = 0; j < cols; ++j)
        for (std::size_t i = 0; i < rows; ++i) out(i, j) = d[k++];
    return out;
}

// ---------------------------------------------------------------------------
// SVD
// ---------------------------------------------------------------------------

std::size_t SvdResult::rank(double rel_tol) const noexcept {
    if (s.empty() || s.front() <= 0.0) return 0;
    const double cut = rel_tol * s.front();
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [cut](double x) { return x > cut; }));
}

CMatrix SvdResult::reconstruct() const { return truncate(s.size()); }

CMatrix SvdResult::truncate(std::size_t k) const {
    k = std::min(k, s.size());
    CMatrix out(u.rows(), v.rows());
    for (std::size_t q = 0; q < k; ++q) {
        for (std::size_t i = 0; i < u.rows(); ++i) {
            const cplx a = s[q] * u(i, q);
            for (std::size_t j = 0; j < v.rows(); ++j) out(i, j) += a * std::conj(v(j, q));
        }
    }
    return out;
}

namespace {

// Column-major scratch buffer for the Jacobi sweeps.
struct ColumnStore {
    std::size_t rows;
    std::size_t cols;
    std::vector<cplx> data;

    cplx* col(std::size_t j) { return data.data() + j * rows; }
    const cplx* col(std::size_t j) const { return data.data() + j * rows; }
};

ColumnStore to_columns(const CMatrix& m) {
    ColumnStore c{m.rows(), m.cols(), std::vector<cplx>(m.size())};
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) c.col(j)[i] = m(i, j);
    return c;
}

// Replaces column `j` of `u` by a unit vector orthogonal to columns [0, j).
void complete_basis(CMatrix& u, std::size_t j) {
    const std::size_t m = u.rows();
    for (std::size_t e = 0; e < m; ++e) {
        std::vector<cplx> x(m);
        x[e] = 1.0;
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t q = 0; q < j; ++q) {
                cplx d{};
                for (std::size_t i = 0; i < m; ++i) d += std::conj(u(i, q)) * x[i];
                for (std::size_t i = 0; i < m; ++i) x[i] -= d * u(i, q);
            }
        }
        double nrm = 0.0;
        for (const auto& xi : x) nrm += std::norm(xi);
        nrm = std::sqrt(nrm);
        if (nrm > 0.5) {
            for (std::size_t i = 0; i < m; ++i) u(i, j) = x[i] / nrm;
            return;
        }
    }
}

// Tall case (rows >= cols).
SvdResult jacobi_tall(const CMatrix& m) {
    const std::size_t rows = m.rows();
    const std::size_t n = m.cols();
    ColumnStore a = to_columns(m);
    ColumnStore v{n, n, std::vector<cplx>(n * n)};
    for (std::size_t j = 0; j < n; ++j) v.col(j)[j] = 1.0;

    constexpr double eps = std::numeric_limits<double>::epsilon();
    const double tol = eps * double(std::max<std::size_t>(rows, 4));
    double fro2 = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < rows; ++i) fro2 += std::norm(a.col(j)[i]);
    const double null_floor = eps * eps * fro2;
    const std::size_t sweep_cap = 100 * std::max(rows, n);
    std::size_t sweep = 0;
    for (bool rotated = true; rotated; ++sweep) {
        if (sweep >= sweep_cap)
            throw Error(Errc::solver_failure, "Jacobi SVD did not converge after " + std::to_string(sweep) + " sweeps",
                        static_cast<long>(sweep));
        rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                cplx* ap = a.col(p);
                cplx* aq = a.col(q);
                double alpha = 0.0, beta = 0.0;
                cplx gamma{};
                for (std::size_t i = 0; i < rows; ++i) {
                    alpha += std::norm(ap[i]);
                    beta += std::norm(aq[i]);
                    gamma += std::conj(ap[i]) * aq[i];
                }
                const double g = std::abs(gamma);
                // The absolute floor lets roundoff-level columns of a
                // rank-deficient input settle instead of rotating forever.
                if (g == 0.0 || g <= tol * std::sqrt(alpha * beta) || g <= null_floor) continue;
                rotated = true;
                const cplx phase = gamma / g;
                const double zeta = (beta - alpha) / (2.0 * g);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                const cplx sp = s * phase;
                const cplx sp_conj = std::conj(sp);
                for (std::size_t i = 0; i < rows; ++i) {
                    const cplx x = ap[i], y = aq[i];
                    ap[i] = c * x - sp_conj * y;
                    aq[i] = sp * x + c * y;
                }
                cplx* vp = v.col(p);
                cplx* vq = v.col(q);
                for (std::size_t i = 0; i < n; ++i) {
                    const cplx x = vp[i], y = vq[i];
                    vp[i] = c * x - sp_conj * y;
                    vq[i] = sp * x + c * y;
                }
            }
        }
    }

    std::vector<double> norms(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < rows; ++i) s += std::norm(a.col(j)[i]);
        norms[j] = std::sqrt(s);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

    SvdResult out{CMatrix(rows, n), std::vector<double>(n), CMatrix(n, n)};
    const double smax = n ? norms[order[0]] : 0.0;
    const double floor = std::numeric_limits<double>::epsilon() * double(std::max(rows, n)) * smax;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = order[k];
        out.s[k] = norms[j];
        for (std::size_t i = 0; i < n; ++i) out.v(i, k) = v.col(j)[i];
        if (norms[j] > floor && norms[j] > 0.0) {
            for (std::size_t i = 0; i < rows; ++i) out.u(i, k) = a.col(j)[i] / norms[j];
        } else {
            complete_basis(out.u, k);
        }
    }
    return out;
}

} // namespace

SvdResult svd(const CMatrix& m) {
    if (m.empty()) throw Error(Errc::precondition, "svd of an empty matrix");
    if (!m.all_finite()) throw Error(Errc::precondition, "svd input has non-finite entries");
    if (m.rows() >= m.cols()) return jacobi_tall(m);
    SvdResult t = jacobi_tall(m.adjoint());
    return SvdResult{std::move(t.v), std::move(t.s), std::move(t.u)};
}

// ---------------------------------------------------------------------------
// Kronecker product
// ---------------------------------------------------------------------------

CMatrix kron(const CMatrix& a, const CMatrix& b) {
    if (a.empty() || b.empty()) throw Error(Errc::precondition, "kron of an empty matrix");
    const std::size_t rows = checked_product(a.rows(), b.rows());
    const std::size_t cols = checked_product(a.cols(), b.cols());
    if (checked_product(rows, cols) > kMaxMatrixElements)
        throw Error(Errc::size, "kron result " + std::to_string(rows) + "x" + std::to_string(cols) + " exceeds cap");
    CMatrix out(rows, cols);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const cplx aij = a(i, j);
            for (std::size_t k = 0; k < b.rows(); ++k)
                for (std::size_t l = 0; l < b.cols(); ++l) out(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
        }
    return out;
}

// ---------------------------------------------------------------------------
// Householder QR, least squares, pseudo-inverse
// ---------------------------------------------------------------------------

namespace {

struct HouseholderQr {
    CMatrix r;                          // upper triangle holds R
    std::vector<std::vector<cplx>> vs;  // reflector k acts on rows [k, m)

    explicit HouseholderQr(const CMatrix& a) : r(a) {
        const std::size_t m = a.rows();
        const std::size_t n = std::min(a.rows(), a.cols());
        vs.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            double xnorm = 0.0;
            for (std::size_t i = k; i < m; ++i) xnorm += std::norm(r(i, k));
            xnorm = std::sqrt(xnorm);
            if (xnorm == 0.0) continue;
            const cplx x0 = r(k, k);
            const cplx phase = std::abs(x0) > 0.0 ? x0 / std::abs(x0) : cplx{1.0};
            const cplx alpha = -phase * xnorm;
            std::vector<cplx> v(m - k);
            for (std::size_t i = k; i < m; ++i) v[i - k] = r(i, k);
            v[0] -= alpha;
            double vnorm = 0.0;
            for (const auto& vi : v) vnorm += std::norm(vi);
            vnorm = std::sqrt(vnorm);
            for (auto& vi : v) vi /= vnorm;
            vs[k] = std::move(v);
            apply_reflector(k, r);
        }
    }

    // x <- (I - 2 v v^H) x on rows [k, m) of every column.
    void apply_reflector(std::size_t k, CMatrix& x) const {
        const auto& v = vs[k];
        if (v.empty()) return;
        for (std::size_t j = 0; j < x.cols(); ++j) {
            cplx d{};
            for (std::size_t i = 0; i < v.size(); ++i) d += std::conj(v[i]) * x(k + i, j);
            d *= 2.0;
            for (std::size_t i = 0; i < v.size(); ++i) x(k + i, j) -= d * v[i];
        }
    }

    CMatrix apply_qh(CMatrix y) const {
        for (std::size_t k = 0; k < vs.size(); ++k) apply_reflector(k, y);
        return y;
    }

    CMatrix thin_q(std::size_t m, std::size_t n) const {
        CMatrix q(m, n);
        for (std::size_t j = 0; j < n; ++j) q(j, j) = 1.0;
        for (std::size_t k = vs.size(); k-- > 0;) apply_reflector(k, q);
        return q;
    }
};

} // namespace

CMatrix least_squares(const CMatrix& a, const CMatrix& y) {
    if (a.empty()) throw Error(Errc::precondition, "least_squares with empty system matrix");
    if (a.rows() < a.cols()) throw Error(Errc::shape, "least_squares needs rows >= cols");
    if (y.rows() != a.rows()) throw Error(Errc::shape, "least_squares right-hand side row mismatch");

    const SvdResult sv = svd(a);
    const double smin = sv.s.back();
    if (smin <= 0.0 || sv.s.front() / smin >= kConditionCap) {
        const auto r = sv.rank();
        throw Error(Errc::degenerate_system,
                    "system matrix has numerical rank " + std::to_string(r) + " < " + std::to_string(a.cols()),
                    static_cast<long>(r));
    }

    const HouseholderQr qr(a);
    const CMatrix qy = qr.apply_qh(y);
    const std::size_t n = a.cols();
    CMatrix x(n, y.cols());
    for (std::size_t c = 0; c < y.cols(); ++c) {
        for (std::size_t i = n; i-- > 0;) {
            cplx s = qy(i, c);
            for (std::size_t k = i + 1; k < n; ++k) s -= qr.r(i, k) * x(k, c);
            x(i, c) = s / qr.r(i, i);
        }
    }
    return x;
}

CMatrix pseudo_inverse(const CMatrix& m) {
    if (m.empty()) throw Error(Errc::precondition, "pseudo_inverse of an empty matrix");
    const SvdResult sv = svd(m);
    CMatrix out(m.cols(), m.rows());
    const std::size_t r = sv.rank();
    for (std::size_t q = 0; q < r; ++q) {
        const double inv = 1.0 / sv.s[q];
        for (std::size_t i = 0; i < m.cols(); ++i) {
            const cplx a = inv * sv.v(i, q);
            for (std::size_t j = 0; j < m.rows(); ++j) out(i, j) += a * std::conj(sv.u(j, q));
        }
    }
    return out;
}

CMatrix orthonormal_columns(const CMatrix& m) {
    if (m.empty()) throw Error(Errc::precondition, "orthonormal_columns of an empty matrix");
    const HouseholderQr qr(m);
    CMatrix q = qr.thin_q(m.rows(), std::min(m.rows(), m.cols()));
    // Fix the phase so that diag(R) is real positive; makes the basis unique.
    for (std::size_t j = 0; j < q.cols(); ++j) {
        const cplx d = qr.r(j, j);
        if (std::abs(d) == 0.0) continue;
        const cplx ph = std::conj(d / std::abs(d));
        for (std::size_t i = 0; i < q.rows(); ++i) q(i, j) *= std::conj(ph);
    }
    return q;
}

double soft_shrink(double a, double mu) {
    if (!(mu >= 0.0)) throw Error(Errc::precondition, "soft_shrink threshold must be non-negative");
    const double m = std::abs(a) - mu;
    return m > 0.0 ? std::copysign(m, a) : 0.0;
}

// ---------------------------------------------------------------------------
// Sampling masks
// ---------------------------------------------------------------------------

SamplingMask::SamplingMask(std::size_t rows, std::size_t cols,
                           std::vector<std::pair<std::size_t, std::size_t>> observed)
    : rows_(rows), cols_(cols), bitmap_(checked_product(rows, cols), 0), observed_(std::move(observed)) {
    if (rows == 0 || cols == 0) throw Error(Errc::precondition, "mask dimensions must be positive");
    if (observed_.empty()) throw Error(Errc::precondition, "mask must observe at least one entry");
    for (const auto& [i, j] : observed_) {
        if (i >= rows || j >= cols)
            throw Error(Errc::precondition, "mask index (" + std::to_string(i) + "," + std::to_string(j) +
                                                ") out of range");
        auto& bit = bitmap_[i * cols + j];
        if (bit) throw Error(Errc::precondition, "duplicate mask index (" + std::to_string(i) + "," +
                                                     std::to_string(j) + ")");
        bit = 1;
    }
    std::sort(observed_.begin(), observed_.end());
}

SamplingMask SamplingMask::full(std::size_t rows, std::size_t cols) {
    std::vector<std::pair<std::size_t, std::size_t>> all;
    all.reserve(rows * cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) all.emplace_back(i, j);
    return SamplingMask(rows, cols, std::move(all));
}

bool SamplingMask::covers_all_rows_and_cols() const {
    std::vector<bool> r(rows_), c(cols_);
    for (const auto& [i, j] : observed_) {
        r[i] = true;
        c[j] = true;
    }
    return std::all_of(r.begin(), r.end(), [](bool b) { return b; }) &&
           std::all_of(c.begin(), c.end(), [](bool b) { return b; });
}

CMatrix project_mask(const CMatrix& m, const SamplingMask& mask) {
    if (m.rows() != mask.rows() || m.cols() != mask.cols())
        throw Error(Errc::shape, "project_mask: mask is " + std::to_string(mask.rows()) + "x" +
                                     std::to_string(mask.cols()) + ", matrix is " + std::to_string(m.rows()) + "x" +
                                     std::to_string(m.cols()));
    CMatrix out(m.rows(), m.cols());
    for (const auto& [i, j] : mask.observed()) out(i, j) = m(i, j);
    return out;
}

CMatrix project_complement(const CMatrix& m, const SamplingMask& mask) {
    CMatrix out = m;
    out -= project_mask(m, mask);
    return out;
}

} // namespace mmwce
