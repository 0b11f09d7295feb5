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

// Hybrid analog/digital pilot front end: Y = W^H H F S + N, followed by
// entrywise sampling of Y.

#ifndef MMWCE_FRONTEND_HPP
#define MMWCE_FRONTEND_HPP

#include "mmwce/channel.hpp"
#include "mmwce/numerics.hpp"
#include "mmwce/random.hpp"

#include <optional>

namespace mmwce {

struct HybridConfig {
    std::size_t m_bs = 8;          ///< BS RF chains
    std::size_t m_ms = 8;          ///< MS RF chains
    std::size_t n_streams = 2;
    std::size_t phase_bits = 6;    ///< analog phase-shifter resolution
    std::size_t pilot_length = 8;  ///< M pilot symbols per instance

    void validate(std::size_t n_bs, std::size_t n_ms) const;
};

struct PilotBlock {
    CMatrix f;  ///< n_bs x m_bs precoder F_RF * F_BB
    CMatrix w;  ///< n_ms x m_ms combiner W_RF * W_BB
    CMatrix s;  ///< m_bs x M pilot symbols, S * S^H = I
    double noise_var = 0.0;
};

struct Beamformers {
    CMatrix f_rf, f_bb, w_rf, w_bb;
    CMatrix f, w;
};

struct ObservationSet {
    CMatrix complete;    ///< Y
    SamplingMask mask;
    CMatrix incomplete;  ///< P_Omega(Y)
    std::optional<CMatrix> completed;
};

/// Quantized-phase analog stages with entries exp(j*2*pi*q/2^bits)/sqrt(n)
/// and random orthonormal digital stages; each product scaled so that
/// ||F||_F^2 == ||W||_F^2 == n_streams.
Beamformers make_beamformers(const HybridConfig& cfg, std::size_t n_bs, std::size_t n_ms, Rng& rng);

/// Normalized DFT rows: m_bs x pilot_length with S * S^H == I.
CMatrix make_pilots(const HybridConfig& cfg);

PilotBlock make_pilot_block(const HybridConfig& cfg, std::size_t n_bs, std::size_t n_ms, double noise_var, Rng& rng);

/// W^H * H * F * S.
CMatrix noiseless_observation(const CMatrix& h, const PilotBlock& block);

/// Phi = (F S)^T kron W^H, so that vec(W^H H F S) == Phi * vec(H).
CMatrix measurement_matrix(const PilotBlock& block);

/// Noise variance giving SNR = ||Y0||_F^2 / (rows * cols * sigma^2).
double noise_variance_for_snr(const CMatrix& noiseless, double snr_db);

/// Full observation; the mask is the full mask and incomplete == complete.
ObservationSet observe(const CMatrix& h, const PilotBlock& block, Rng& rng);
ObservationSet observe(const ChannelRealization& real, const PilotBlock& block, Rng& rng);

/// Uniform mask of ceil(keep_fraction * rows * cols) entries that touches
/// every row and column. Throws Errc::infeasible_mask when that count cannot
/// cover all rows and columns.
ObservationSet subsample(const ObservationSet& obs, double keep_fraction, Rng& rng);

/// pinv(W^H) * Ytilde * pinv(F S).
CMatrix coarse_channel(const ObservationSet& obs, const PilotBlock& block);

/// pinv(W^H) * Y * pinv(F S) for an arbitrary observation-shaped matrix.
CMatrix invert_frontend(const CMatrix& y, const PilotBlock& block);

} // namespace mmwce

#endif // MMWCE_FRONTEND_HPP
