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

// Phase II: greedy recovery of the angular gain matrix from a refined
// channel estimate, and reconstruction of the channel from it.

#ifndef MMWCE_RECOVERY_HPP
#define MMWCE_RECOVERY_HPP

#include "mmwce/channel.hpp"
#include "mmwce/completion.hpp"
#include "mmwce/frontend.hpp"
#include "mmwce/numerics.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace mmwce {

struct OmpOptions {
    /// Maximum support size; unset selects rank^2 (or rank with linear_cap).
    std::optional<std::size_t> sparsity_cap;
    /// Stop once the residual norm drops to this; < 0 selects 1e-8 * ||target||.
    double residual_tol = -1.0;
    /// Gram columns formed per block when the dictionary is prepared.
    std::size_t batch_size = 64;
    bool linear_cap = false;
    /// Recover from the observation through Phi * dictionary instead of from the refined channel.
    bool measurement_dictionary = false;
};

struct PathEstimate {
    double aoa = 0.0;  ///< radians
    double aod = 0.0;  ///< radians
    cplx gain;
};

struct SparseGainEstimate {
    /// Grid-shaped gains (aoa x aod) when a grid shape is known, else
    /// dictionary columns x targets.
    CMatrix gains;
    /// (row, col) of each nonzero of `gains`, sorted by dictionary column.
    std::vector<std::pair<std::size_t, std::size_t>> support;
    std::vector<PathEstimate> parameters;
    double residual_norm = 0.0;
    std::vector<std::size_t> selection;      ///< dictionary columns in selection order
    std::vector<double> residual_history;    ///< residual norm after each selection
};

/// Unit-norm dictionary with its Gram matrix, shared read-only.
class OmpDictionary {
public:
    explicit OmpDictionary(CMatrix atoms, std::size_t batch_size = 64);

    const CMatrix& atoms() const noexcept { return atoms_; }
    const CMatrix& gram() const noexcept { return gram_; }
    std::size_t size() const noexcept { return atoms_.cols(); }

private:
    CMatrix atoms_;
    CMatrix gram_;
};

/// conj(A_bs) kron A_ms: column j * L1 + i is kron(conj(a_bs_j), a_ms_i),
/// so that D * vec(G) == vec(A_ms * G * A_bs^H).
CMatrix build_dictionary(const AngularDictionary& dict);

/// OMP driven by the Gram matrix and D^H * target; the residual is never
/// formed. `grid_rows` > 0 reshapes the gains to grid_rows x (K / grid_rows).
SparseGainEstimate batch_omp(const CMatrix& target, const OmpDictionary& dict, const OmpOptions& opts,
                             std::size_t grid_rows = 0);
SparseGainEstimate batch_omp(const CMatrix& target, const CMatrix& dictionary, const OmpOptions& opts,
                             std::size_t grid_rows = 0);

/// Textbook OMP that recomputes the residual each step. Reference for batch_omp.
SparseGainEstimate naive_omp(const CMatrix& target, const CMatrix& dictionary, const OmpOptions& opts,
                             std::size_t grid_rows = 0);

/// Simultaneous OMP: targets share one support, scored by the l2 norm of
/// their correlations.
SparseGainEstimate somp_baseline(const CMatrix& targets, const CMatrix& dictionary, const OmpOptions& opts,
                                 std::size_t grid_rows = 0);

/// A_ms * G * A_bs^H.
CMatrix reconstruct_channel(const SparseGainEstimate& est, const AngularDictionary& dict);

struct Phase2Result {
    SparseGainEstimate estimate;
    CMatrix channel;
};

/// Sparsity cap actually used for a given rank.
std::size_t phase2_sparsity_cap(const OmpOptions& opts, std::size_t rank, std::size_t dictionary_size);

/// Batch OMP on vec(refined) against the angular dictionary, capped by the
/// rank; with opts.measurement_dictionary the input is the completed
/// observation and the atoms are Phi * D (renormalized).
Phase2Result estimate_phase2(const CMatrix& refined_h_or_y, const PilotBlock& block, const AngularDictionary& dict,
                             const RankEstimate& rank, const OmpOptions& opts,
                             const OmpDictionary* prepared = nullptr);

/// Rows of t, aoa_deg, aod_deg, gain_re, gain_im, |gain|.
void write_support_csv(std::ostream& os, std::size_t t, const SparseGainEstimate& est, bool header = true);

} // namespace mmwce

#endif // MMWCE_RECOVERY_HPP
