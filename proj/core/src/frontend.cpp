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

#include "mmwce/frontend.hpp"

#include "mmwce/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace mmwce {

namespace {

CMatrix analog_stage(std::size_t n, std::size_t m, std::size_t bits, Rng& rng) {
    const std::uint64_t levels = std::uint64_t{1} << std::min<std::size_t>(bits, 62);
    std::uniform_int_distribution<std::uint64_t> q(0, levels - 1);
    const double scale = 1.0 / std::sqrt(double(n));
    CMatrix a(n, m);
    for (auto& x : a.data()) {
        const std::uint64_t k = q(rng);
        // Exact values on the quadrant points keep 1- and 2-bit stages real/imaginary.
        const std::uint64_t quarter = levels / 4;
        if (levels >= 4 && k % quarter == 0) {
            static constexpr cplx quadrant[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
            x = scale * quadrant[k / quarter];
        } else if (levels == 2) {
            x = k == 0 ? cplx{scale} : cplx{-scale};
        } else {
            x = std::polar(scale, 2.0 * std::numbers::pi * double(k) / double(levels));
        }
    }
    return a;
}

CMatrix digital_stage(std::size_t m, Rng& rng) { return orthonormal_columns(complex_normal_matrix(m, m, rng)); }

void normalize_to(CMatrix& m, double target_sq_norm) {
    const double n = m.frobenius_norm();
    if (n > 0.0) m *= std::sqrt(target_sq_norm) / n;
}

} // namespace

void HybridConfig::validate(std::size_t n_bs, std::size_t n_ms) const {
    require(n_streams >= 1, Errc::config, "n_streams must be >= 1");
    require(n_streams <= m_ms && m_ms <= n_ms, Errc::config,
            "need n_streams <= m_ms <= n_ms (" + std::to_string(n_streams) + ", " + std::to_string(m_ms) + ", " +
                std::to_string(n_ms) + ")");
    require(n_streams <= m_bs && m_bs <= n_bs, Errc::config,
            "need n_streams <= m_bs <= n_bs (" + std::to_string(n_streams) + ", " + std::to_string(m_bs) + ", " +
                std::to_string(n_bs) + ")");
    require(phase_bits >= 1, Errc::config, "phase_bits must be >= 1");
    require(pilot_length >= m_bs, Errc::config, "pilot_length must be >= m_bs so that S S^H = I");
}

Beamformers make_beamformers(const HybridConfig& cfg, std::size_t n_bs, std::size_t n_ms, Rng& rng) {
    cfg.validate(n_bs, n_ms);
    Beamformers b;
    b.f_rf = analog_stage(n_bs, cfg.m_bs, cfg.phase_bits, rng);
    b.f_bb = digital_stage(cfg.m_bs, rng);
    b.w_rf = analog_stage(n_ms, cfg.m_ms, cfg.phase_bits, rng);
    b.w_bb = digital_stage(cfg.m_ms, rng);
    b.f = b.f_rf * b.f_bb;
    b.w = b.w_rf * b.w_bb;
    normalize_to(b.f, double(cfg.n_streams));
    normalize_to(b.w, double(cfg.n_streams));
    return b;
}

CMatrix make_pilots(const HybridConfig& cfg) {
    const std::size_t m = cfg.m_bs;
    const std::size_t len = cfg.pilot_length;
    require(len >= m, Errc::config, "pilot_length must be >= m_bs");
    CMatrix s(m, len);
    const double scale = 1.0 / std::sqrt(double(len));
    for (std::size_t k = 0; k < m; ++k)
        for (std::size_t n = 0; n < len; ++n) {
            const std::size_t e = (k * n) % len;
            s(k, n) = std::polar(scale, -2.0 * std::numbers::pi * double(e) / double(len));
        }
    return s;
}

PilotBlock make_pilot_block(const HybridConfig& cfg, std::size_t n_bs, std::size_t n_ms, double noise_var, Rng& rng) {
    require(noise_var >= 0.0, Errc::config, "noise variance must be >= 0");
    Beamformers b = make_beamformers(cfg, n_bs, n_ms, rng);
    return PilotBlock{std::move(b.f), std::move(b.w), make_pilots(cfg), noise_var};
}

CMatrix noiseless_observation(const CMatrix& h, const PilotBlock& block) {
    if (block.w.rows() != h.rows() || block.f.rows() != h.cols() || block.f.cols() != block.s.rows())
        throw Error(Errc::shape, "frontend shapes do not match: W " + std::to_string(block.w.rows()) + "x" +
                                     std::to_string(block.w.cols()) + ", H " + std::to_string(h.rows()) + "x" +
                                     std::to_string(h.cols()) + ", F " + std::to_string(block.f.rows()) + "x" +
                                     std::to_string(block.f.cols()) + ", S " + std::to_string(block.s.rows()) + "x" +
                                     std::to_string(block.s.cols()));
    return block.w.adjoint() * h * (block.f * block.s);
}

CMatrix measurement_matrix(const PilotBlock& block) {
    return kron((block.f * block.s).transpose(), block.w.adjoint());
}

double noise_variance_for_snr(const CMatrix& noiseless, double snr_db) {
    require(!noiseless.empty(), Errc::precondition, "empty observation");
    const double snr = std::pow(10.0, snr_db / 10.0);
    return noiseless.squared_norm() / (double(noiseless.size()) * snr);
}

ObservationSet observe(const CMatrix& h, const PilotBlock& block, Rng& rng) {
    CMatrix y = noiseless_observation(h, block);
    if (block.noise_var > 0.0)
        for (auto& x : y.data()) x += complex_normal(rng, block.noise_var);
    SamplingMask mask = SamplingMask::full(y.rows(), y.cols());
    CMatrix incomplete = y;
    return ObservationSet{std::move(y), std::move(mask), std::move(incomplete), std::nullopt};
}

ObservationSet observe(const ChannelRealization& real, const PilotBlock& block, Rng& rng) {
    return observe(real.matrix(), block, rng);
}

ObservationSet subsample(const ObservationSet& obs, double keep_fraction, Rng& rng) {
    require(keep_fraction > 0.0 && keep_fraction <= 1.0, Errc::precondition, "keep_fraction must lie in (0, 1]");
    const std::size_t rows = obs.complete.rows();
    const std::size_t cols = obs.complete.cols();
    const std::size_t total = rows * cols;
    const auto keep =
        std::min(total, static_cast<std::size_t>(std::ceil(keep_fraction * double(total) - 1e-9)));
    if (keep < std::max(rows, cols))
        throw Error(Errc::infeasible_mask, std::to_string(keep) + " entries cannot cover " + std::to_string(rows) +
                                               " rows and " + std::to_string(cols) + " columns");

    std::vector<std::size_t> idx(total);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<std::pair<std::size_t, std::size_t>> picked;

    auto covers = [&](const std::vector<std::pair<std::size_t, std::size_t>>& p) {
        std::vector<bool> r(rows), c(cols);
        for (const auto& [i, j] : p) r[i] = c[j] = true;
        return std::all_of(r.begin(), r.end(), [](bool b) { return b; }) &&
               std::all_of(c.begin(), c.end(), [](bool b) { return b; });
    };

    // Rejection sampling keeps the draw uniform over covering masks.
    bool ok = false;
    for (int attempt = 0; attempt < 256 && !ok; ++attempt) {
        std::vector<std::size_t> pool = idx;
        picked.clear();
        for (std::size_t k = 0; k < keep; ++k) {
            std::uniform_int_distribution<std::size_t> pick(k, total - 1);
            std::swap(pool[k], pool[pick(rng)]);
            picked.emplace_back(pool[k] / cols, pool[k] % cols);
        }
        ok = covers(picked);
    }
    if (!ok) {
        // Random permutation cover, then uniform fill.
        std::vector<std::size_t> pr(rows), pc(cols);
        std::iota(pr.begin(), pr.end(), 0);
        std::iota(pc.begin(), pc.end(), 0);
        std::shuffle(pr.begin(), pr.end(), rng);
        std::shuffle(pc.begin(), pc.end(), rng);
        std::vector<bool> used(total);
        picked.clear();
        for (std::size_t i = 0; i < std::max(rows, cols); ++i) {
            const std::size_t r = pr[i % rows], c = pc[i % cols];
            used[r * cols + c] = true;
            picked.emplace_back(r, c);
        }
        std::vector<std::size_t> rest;
        for (std::size_t k = 0; k < total; ++k)
            if (!used[k]) rest.push_back(k);
        std::shuffle(rest.begin(), rest.end(), rng);
        for (std::size_t k = 0; picked.size() < keep; ++k) picked.emplace_back(rest[k] / cols, rest[k] % cols);
    }

    SamplingMask mask(rows, cols, std::move(picked));
    CMatrix incomplete = project_mask(obs.complete, mask);
    return ObservationSet{obs.complete, std::move(mask), std::move(incomplete), std::nullopt};
}

CMatrix invert_frontend(const CMatrix& y, const PilotBlock& block) {
    return pseudo_inverse(block.w.adjoint()) * y * pseudo_inverse(block.f * block.s);
}

CMatrix coarse_channel(const ObservationSet& obs, const PilotBlock& block) {
    return invert_frontend(obs.incomplete, block);
}

} // namespace mmwce
