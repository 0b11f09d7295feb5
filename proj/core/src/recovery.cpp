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

#include "mmwce/recovery.hpp"

#include "mmwce/error.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <string>

namespace mmwce {

namespace {

constexpr double kUnitNormTol = 1e-10;
// Pivot of the incremental Cholesky factor, relative to the Gram diagonal.
constexpr double kPivotFloor = 1e-12;

void require_unit_columns(const CMatrix& d) {
    for (std::size_t j = 0; j < d.cols(); ++j) {
        double n = 0.0;
        for (std::size_t i = 0; i < d.rows(); ++i) n += std::norm(d(i, j));
        if (std::abs(std::sqrt(n) - 1.0) > kUnitNormTol)
            throw Error(Errc::precondition, "dictionary column " + std::to_string(j) + " is not unit-norm",
                        static_cast<long>(j));
    }
}

std::size_t resolve_cap(const OmpOptions& opts, std::size_t rows, std::size_t atoms) {
    const std::size_t cap = opts.sparsity_cap.value_or(std::min(rows, atoms));
    require(cap >= 1, Errc::precondition, "sparsity_cap must be >= 1");
    require(cap <= atoms, Errc::precondition,
            "sparsity_cap " + std::to_string(cap) + " exceeds the " + std::to_string(atoms) + " dictionary columns");
    return cap;
}

double resolve_tol(const OmpOptions& opts, double target_norm) {
    return opts.residual_tol >= 0.0 ? opts.residual_tol : 1e-8 * target_norm;
}

// Index of the largest score among unselected columns; ties keep the lowest index.
std::optional<std::size_t> pick(const std::vector<double>& score, const std::vector<bool>& taken) {
    std::optional<std::size_t> best;
    double best_score = 0.0;
    for (std::size_t k = 0; k < score.size(); ++k) {
        if (taken[k]) continue;
        if (score[k] > best_score) {
            best_score = score[k];
            best = k;
        }
    }
    return best;
}

CMatrix select_columns(const CMatrix& d, const std::vector<std::size_t>& idx) {
    CMatrix s(d.rows(), idx.size());
    for (std::size_t c = 0; c < idx.size(); ++c)
        for (std::size_t i = 0; i < d.rows(); ++i) s(i, c) = d(i, idx[c]);
    return s;
}

// coeffs: |selection| x targets.
void finalize(SparseGainEstimate& est, const CMatrix& coeffs, std::size_t atoms, std::size_t grid_rows) {
    const std::size_t n_targets = coeffs.cols();
    const bool grid = grid_rows > 0 && n_targets == 1;
    if (grid) require(atoms % grid_rows == 0, Errc::shape, "dictionary size is not a multiple of the grid rows");
    est.gains = grid ? CMatrix(grid_rows, atoms / grid_rows) : CMatrix(atoms, n_targets);

    std::vector<std::size_t> order(est.selection.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return est.selection[a] < est.selection[b]; });
    est.support.clear();
    for (std::size_t o : order) {
        const std::size_t k = est.selection[o];
        if (grid) {
            est.gains(k % grid_rows, k / grid_rows) = coeffs(o, 0);
            est.support.emplace_back(k % grid_rows, k / grid_rows);
        } else {
            for (std::size_t c = 0; c < n_targets; ++c) est.gains(k, c) = coeffs(o, c);
            est.support.emplace_back(k, 0);
        }
    }
}

} // namespace

OmpDictionary::OmpDictionary(CMatrix atoms, std::size_t batch_size) : atoms_(std::move(atoms)) {
    require(!atoms_.empty(), Errc::precondition, "empty dictionary");
    require(batch_size >= 1, Errc::config, "batch_size must be >= 1");
    require_unit_columns(atoms_);
    const std::size_t k = atoms_.cols();
    gram_ = CMatrix(k, k);
    const CMatrix ah = atoms_.adjoint();
    for (std::size_t c0 = 0; c0 < k; c0 += batch_size) {
        const std::size_t c1 = std::min(k, c0 + batch_size);
        const CMatrix block = ah * atoms_.cols_range(c0, c1 - c0);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = c0; j < c1; ++j) gram_(i, j) = block(i, j - c0);
    }
}

CMatrix build_dictionary(const AngularDictionary& dict) {
    require(!dict.a_bs.empty() && !dict.a_ms.empty(), Errc::precondition, "empty angular dictionary");
    require_unit_columns(dict.a_bs);
    require_unit_columns(dict.a_ms);
    return kron(dict.a_bs.conjugate(), dict.a_ms);
}

SparseGainEstimate batch_omp(const CMatrix& target, const OmpDictionary& dict, const OmpOptions& opts,
                             std::size_t grid_rows) {
    const CMatrix& d = dict.atoms();
    const CMatrix& g = dict.gram();
    require(target.cols() == 1, Errc::shape, "batch_omp expects a single target column");
    require(target.rows() == d.rows(), Errc::shape,
            "target length " + std::to_string(target.rows()) + " differs from dictionary rows " +
                std::to_string(d.rows()));
    const std::size_t atoms = d.cols();
    const std::size_t cap = resolve_cap(opts, d.rows(), atoms);
    const double x2 = target.squared_norm();
    const double tol = resolve_tol(opts, std::sqrt(x2));

    SparseGainEstimate est;
    est.residual_norm = std::sqrt(x2);
    CMatrix coeffs(0, 1);
    if (x2 == 0.0 || est.residual_norm <= tol) {
        finalize(est, coeffs, atoms, grid_rows);
        return est;
    }

    const CMatrix alpha0 = d.adjoint() * target;
    std::vector<cplx> alpha(alpha0.data().begin(), alpha0.data().end());
    std::vector<bool> taken(atoms);
    std::vector<double> score(atoms);
    // Lower-triangular Cholesky factor of G(I, I), row-major, grown one row per step.
    std::vector<std::vector<cplx>> chol;
    std::vector<cplx> gamma;

    while (est.selection.size() < cap) {
        for (std::size_t k = 0; k < atoms; ++k) score[k] = std::abs(alpha[k]);
        const auto next = pick(score, taken);
        if (!next) break;
        const std::size_t k = *next;
        const std::size_t n = est.selection.size();

        // Solve L w = G(I, k).
        std::vector<cplx> w(n);
        for (std::size_t i = 0; i < n; ++i) {
            cplx s = g(est.selection[i], k);
            for (std::size_t j = 0; j < i; ++j) s -= chol[i][j] * w[j];
            w[i] = s / chol[i][i];
        }
        double wn = 0.0;
        for (const auto& e : w) wn += std::norm(e);
        const double pivot = g(k, k).real() - wn;
        if (!(pivot > kPivotFloor * g(k, k).real()))
            throw Error(Errc::degenerate_system, "selected sub-dictionary is rank-deficient at column " +
                                                     std::to_string(k), static_cast<long>(k));
        std::vector<cplx> row(n + 1);
        for (std::size_t j = 0; j < n; ++j) row[j] = std::conj(w[j]);
        row[n] = std::sqrt(pivot);
        chol.push_back(std::move(row));
        est.selection.push_back(k);
        taken[k] = true;

        // (L L^H) gamma = alpha0(I).
        const std::size_t m = n + 1;
        std::vector<cplx> z(m);
        for (std::size_t i = 0; i < m; ++i) {
            cplx s = alpha0(est.selection[i], 0);
            for (std::size_t j = 0; j < i; ++j) s -= chol[i][j] * z[j];
            z[i] = s / chol[i][i];
        }
        gamma.assign(m, cplx{});
        for (std::size_t ii = m; ii-- > 0;) {
            cplx s = z[ii];
            for (std::size_t j = ii + 1; j < m; ++j) s -= std::conj(chol[j][ii]) * gamma[j];
            gamma[ii] = s / chol[ii][ii];
        }

        // alpha = alpha0 - G(:, I) gamma
        for (std::size_t c = 0; c < atoms; ++c) {
            cplx s = alpha0(c, 0);
            for (std::size_t i = 0; i < m; ++i) s -= g(c, est.selection[i]) * gamma[i];
            alpha[c] = s;
        }
        // ||x||^2 - Re(alpha0_I^H gamma) cancels badly near an exact fit, so
        // the stopping norm comes from the explicit residual.
        double r2 = 0.0;
        for (std::size_t row = 0; row < d.rows(); ++row) {
            cplx s = target(row, 0);
            for (std::size_t i = 0; i < m; ++i) s -= d(row, est.selection[i]) * gamma[i];
            r2 += std::norm(s);
        }
        const double r = std::sqrt(r2);
        est.residual_history.push_back(r);
        if (r <= tol) break;
    }

    coeffs = CMatrix(gamma.size(), 1);
    for (std::size_t i = 0; i < gamma.size(); ++i) coeffs(i, 0) = gamma[i];
    if (!est.residual_history.empty()) est.residual_norm = est.residual_history.back();
    finalize(est, coeffs, atoms, grid_rows);
    return est;
}

SparseGainEstimate batch_omp(const CMatrix& target, const CMatrix& dictionary, const OmpOptions& opts,
                             std::size_t grid_rows) {
    return batch_omp(target, OmpDictionary(dictionary, opts.batch_size), opts, grid_rows);
}

SparseGainEstimate naive_omp(const CMatrix& target, const CMatrix& dictionary, const OmpOptions& opts,
                             std::size_t grid_rows) {
    require(target.cols() == 1, Errc::shape, "naive_omp expects a single target column");
    return somp_baseline(target, dictionary, opts, grid_rows);
}

SparseGainEstimate somp_baseline(const CMatrix& targets, const CMatrix& dictionary, const OmpOptions& opts,
                                 std::size_t grid_rows) {
    require(!dictionary.empty(), Errc::precondition, "empty dictionary");
    require(targets.rows() == dictionary.rows(), Errc::shape,
            "target length " + std::to_string(targets.rows()) + " differs from dictionary rows " +
                std::to_string(dictionary.rows()));
    require(targets.cols() >= 1, Errc::shape, "no targets");
    require_unit_columns(dictionary);
    const std::size_t atoms = dictionary.cols();
    const std::size_t cap = resolve_cap(opts, dictionary.rows(), atoms);
    const double tol = resolve_tol(opts, targets.frobenius_norm());
    const CMatrix dh = dictionary.adjoint();

    SparseGainEstimate est;
    CMatrix residual = targets;
    CMatrix coeffs(0, targets.cols());
    est.residual_norm = residual.frobenius_norm();
    std::vector<bool> taken(atoms);
    std::vector<double> score(atoms);

    while (est.selection.size() < cap && est.residual_norm > tol) {
        const CMatrix corr = dh * residual;
        for (std::size_t k = 0; k < atoms; ++k) {
            double s = 0.0;
            for (std::size_t c = 0; c < corr.cols(); ++c) s += std::norm(corr(k, c));
            score[k] = std::sqrt(s);
        }
        const auto next = pick(score, taken);
        if (!next) break;
        est.selection.push_back(*next);
        taken[*next] = true;

        const CMatrix sub = select_columns(dictionary, est.selection);
        try {
            coeffs = least_squares(sub, targets);
        } catch (const Error& e) {
            if (e.code() != Errc::degenerate_system) throw;
            throw Error(Errc::degenerate_system,
                        "selected sub-dictionary is rank-deficient at column " + std::to_string(*next),
                        static_cast<long>(*next));
        }
        residual = targets - sub * coeffs;
        est.residual_norm = residual.frobenius_norm();
        est.residual_history.push_back(est.residual_norm);
    }
    finalize(est, coeffs, atoms, grid_rows);
    return est;
}

CMatrix reconstruct_channel(const SparseGainEstimate& est, const AngularDictionary& dict) {
    require(est.gains.rows() == dict.a_ms.cols() && est.gains.cols() == dict.a_bs.cols(), Errc::shape,
            "gain matrix does not match the angular grid");
    return dict.a_ms * est.gains * dict.a_bs.adjoint();
}

std::size_t phase2_sparsity_cap(const OmpOptions& opts, std::size_t rank, std::size_t dictionary_size) {
    if (opts.sparsity_cap) {
        require(*opts.sparsity_cap >= 1, Errc::precondition, "sparsity_cap must be >= 1");
        return std::min(*opts.sparsity_cap, dictionary_size);
    }
    require(rank >= 1, Errc::precondition, "rank must be >= 1");
    return std::min(opts.linear_cap ? rank : rank * rank, dictionary_size);
}

Phase2Result estimate_phase2(const CMatrix& refined_h_or_y, const PilotBlock& block, const AngularDictionary& dict,
                             const RankEstimate& rank, const OmpOptions& opts, const OmpDictionary* prepared) {
    const std::size_t l1 = dict.a_ms.cols();
    const std::size_t l2 = dict.a_bs.cols();
    OmpOptions o = opts;
    o.sparsity_cap = phase2_sparsity_cap(opts, rank.value, l1 * l2);

    Phase2Result out;
    if (!opts.measurement_dictionary) {
        require(refined_h_or_y.rows() == dict.a_ms.rows() && refined_h_or_y.cols() == dict.a_bs.rows(), Errc::shape,
                "refined channel does not match the array sizes");
        const CMatrix target = vec(refined_h_or_y);
        if (prepared) {
            out.estimate = batch_omp(target, *prepared, o, l1);
        } else {
            out.estimate = batch_omp(target, OmpDictionary(build_dictionary(dict), o.batch_size), o, l1);
        }
    } else {
        CMatrix atoms = measurement_matrix(block) * build_dictionary(dict);
        std::vector<double> norms(atoms.cols());
        for (std::size_t j = 0; j < atoms.cols(); ++j) {
            double n = 0.0;
            for (std::size_t i = 0; i < atoms.rows(); ++i) n += std::norm(atoms(i, j));
            norms[j] = std::sqrt(n);
            require(norms[j] > 0.0, Errc::degenerate_system, "measurement annihilates dictionary column",
                    static_cast<long>(j));
            for (std::size_t i = 0; i < atoms.rows(); ++i) atoms(i, j) /= norms[j];
        }
        require(refined_h_or_y.size() == atoms.rows(), Errc::shape, "observation does not match the measurement matrix");
        out.estimate = batch_omp(vec(refined_h_or_y), OmpDictionary(std::move(atoms), o.batch_size), o, l1);
        for (const auto& [i, j] : out.estimate.support) out.estimate.gains(i, j) /= norms[j * l1 + i];
    }

    for (const auto& [i, j] : out.estimate.support)
        out.estimate.parameters.push_back({dict.grid_aoa[i], dict.grid_aod[j], out.estimate.gains(i, j)});
    out.channel = reconstruct_channel(out.estimate, dict);
    return out;
}

void write_support_csv(std::ostream& os, std::size_t t, const SparseGainEstimate& est, bool header) {
    if (header) os << "t,aoa_deg,aod_deg,gain_re,gain_im,abs_gain\n";
    os << std::setprecision(17);
    constexpr double deg = 180.0 / std::numbers::pi;
    for (const auto& p : est.parameters)
        os << t << ',' << p.aoa * deg << ',' << p.aod * deg << ',' << p.gain.real() << ',' << p.gain.imag() << ','
           << std::abs(p.gain) << '\n';
}

} // namespace mmwce
