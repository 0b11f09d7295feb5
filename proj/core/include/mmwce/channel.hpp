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

// Clustered wideband mmWave channel with uniform linear arrays at both ends.
//
//   H[d] = sqrt(Nbs*Nms/Lp) * sum_l sum_k a_lk * p(d*Ts - tau_l - tau_lk)
//                           * a_ms(theta_l - dtheta_lk) * a_bs(phi_l - dphi_lk)^H
//   H    = sum_d H[d] * exp(-j*2*pi*f0*d)
//
// p() is a truncated raised-cosine pulse. With on-grid angles the channel
// factors exactly as A_ms * Hbar * A_bs^H over an overcomplete angular
// dictionary, Hbar having one nonzero per ray.

#ifndef MMWCE_CHANNEL_HPP
#define MMWCE_CHANNEL_HPP

#include "mmwce/numerics.hpp"
#include "mmwce/random.hpp"

#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace mmwce {

inline constexpr double kSpeedOfLight = 299792458.0;

/// Angular grid of the dictionary. Grid points are uniform in sin(angle)
/// over the image of [angle_min, angle_max] under sin; 0 points means
/// "twice the antenna count".
struct GridSpec {
    std::size_t aoa_points = 0;
    std::size_t aod_points = 0;
    double angle_min = 0.0;
    double angle_max = std::numbers::pi;
};

struct ChannelParams {
    std::size_t n_bs = 8;
    std::size_t n_ms = 8;
    std::size_t n_clusters = 2;
    /// Rays per cluster; the last entry repeats for clusters beyond the list.
    std::vector<std::size_t> rays_per_cluster{1};
    double wavelength = kSpeedOfLight / 28e9;
    double element_spacing = 0.0;       ///< meters; 0 selects wavelength / 2
    double sample_period = 0.1e-6;      ///< seconds
    std::size_t n_delay_taps = 1;
    double pulse_rolloff = 0.3;
    double angle_spread = 0.05;         ///< std of per-ray angle offsets, radians
    double normalization = 0.0;         ///< L_P; 0 selects the total ray count
    double normalized_frequency = 1.0;  ///< f0 in exp(-j*2*pi*f0*d)
    double velocity = 120.0 / 3.6;      ///< m/s, drives per-ray Doppler
    double angle_walk_std = 0.0;        ///< per-step random walk of cluster mean angles, radians
    bool on_grid = true;
    GridSpec grid;

    std::size_t rays_in_cluster(std::size_t cluster) const;
    double spacing() const { return element_spacing > 0.0 ? element_spacing : wavelength / 2.0; }
    std::size_t aoa_grid_size() const { return grid.aoa_points ? grid.aoa_points : 2 * n_ms; }
    std::size_t aod_grid_size() const { return grid.aod_points ? grid.aod_points : 2 * n_bs; }
    /// Throws Errc::config on an invalid combination.
    void validate() const;
};

struct Ray {
    cplx gain;
    double aoa_offset = 0.0;
    double aod_offset = 0.0;
    double delay = 0.0;
    double doppler = 0.0;  ///< Hz
};

struct PathCluster {
    double mean_aod = 0.0;
    double mean_aoa = 0.0;
    double delay = 0.0;
    std::vector<Ray> rays;

    double ray_aoa(const Ray& r) const { return mean_aoa - r.aoa_offset; }
    double ray_aod(const Ray& r) const { return mean_aod - r.aod_offset; }
};

/// Immutable channel snapshot at one time index; the dense matrix is
/// computed on construction.
class ChannelRealization {
public:
    ChannelRealization(ChannelParams params, std::vector<PathCluster> clusters, std::size_t time_index);

    const ChannelParams& params() const noexcept { return params_; }
    const std::vector<PathCluster>& clusters() const noexcept { return clusters_; }
    std::size_t time_index() const noexcept { return t_; }
    const CMatrix& matrix() const noexcept { return h_; }
    std::size_t ray_count() const noexcept;

private:
    ChannelParams params_;
    std::vector<PathCluster> clusters_;
    std::size_t t_;
    CMatrix h_;
};

struct AngularDictionary {
    CMatrix a_bs;  ///< n_bs x aod grid
    CMatrix a_ms;  ///< n_ms x aoa grid
    std::vector<double> grid_aod;
    std::vector<double> grid_aoa;
};

/// Scheduled change of the cluster count, effective at absolute time `time`.
struct RankChange {
    std::size_t time = 0;
    std::size_t clusters = 1;
};

/// ULA response exp(j*k*(2*pi/wavelength)*spacing*sin(angle))/sqrt(n), k = 0..n-1.
CMatrix steering_vector(std::size_t n, double angle, double wavelength, double spacing);

/// Raised-cosine pulse truncated to |t| <= 4 * period.
double raised_cosine(double t, double period, double rolloff);

/// Grid angles uniform in sin() over the image of [angle_min, angle_max].
std::vector<double> angle_grid(std::size_t points, double angle_min, double angle_max);

CMatrix delay_tap_matrix(const ChannelRealization& real, std::size_t tap);
CMatrix channel_matrix(const ChannelRealization& real);

AngularDictionary make_dictionary(const ChannelParams& params);

/// Sparse gain matrix Hbar (aoa grid x aod grid) with A_ms * Hbar * A_bs^H == H.
/// Throws Errc::grid_mismatch (detail = global ray index) for off-grid rays.
CMatrix angular_factorization(const ChannelRealization& real, const AngularDictionary& dict);

/// Draws a realization at time `t` from `params`.
ChannelRealization generate_channel(const ChannelParams& params, Rng& rng, std::size_t t = 0);

/// Advances `start` by `steps` time indices. Each step rotates every ray gain
/// by its Doppler phase over one sample period, random-walks the cluster mean
/// angles, and applies any scheduled cluster births/deaths. Returns the
/// snapshots for times start+1 .. start+steps.
std::vector<ChannelRealization> evolve(const ChannelRealization& start, std::size_t steps,
                                       std::span<const RankChange> schedule, Rng& rng);

/// Number of singular values above rel_tol * sigma_max.
std::size_t numerical_rank(const CMatrix& m, double rel_tol = 1e-10);

} // namespace mmwce

#endif // MMWCE_CHANNEL_HPP
