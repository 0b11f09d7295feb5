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

#include "mmwce/channel.hpp"

#include "mmwce/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace mmwce {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kGridTolerance = 1e-9;  // on sin(angle)

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    return std::sin(kPi * x) / (kPi * x);
}

std::size_t total_rays(const std::vector<PathCluster>& clusters) {
    std::size_t n = 0;
    for (const auto& c : clusters) n += c.rays.size();
    return n;
}

double path_normalization(const ChannelParams& p, std::size_t rays) {
    if (p.normalization > 0.0) return p.normalization;
    return rays ? double(rays) : 1.0;
}

std::size_t nearest_grid_index(const std::vector<double>& grid, double angle) {
    const double s = std::sin(angle);
    std::size_t best = 0;
    double best_d = std::abs(std::sin(grid[0]) - s);
    for (std::size_t k = 1; k < grid.size(); ++k) {
        const double d = std::abs(std::sin(grid[k]) - s);
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

// Bookkeeping used while drawing on-grid rays: every ray gets its own AoA and
// AoD grid cell so the channel rank equals the ray count.
struct GridOccupancy {
    std::vector<double> aoa_grid;
    std::vector<double> aod_grid;
    std::set<std::size_t> aoa_used;
    std::set<std::size_t> aod_used;

    std::size_t claim(std::set<std::size_t>& used, std::size_t size, std::size_t wanted) {
        if (used.size() >= size) return wanted;  // grid exhausted; allow reuse
        for (std::size_t dist = 0; dist < size; ++dist) {
            for (int sign : {+1, -1}) {
                const long idx = long(wanted) + sign * long(dist);
                if (idx < 0 || idx >= long(size)) continue;
                if (!used.count(std::size_t(idx))) {
                    used.insert(std::size_t(idx));
                    return std::size_t(idx);
                }
            }
        }
        return wanted;
    }
};

GridOccupancy occupancy_of(const ChannelParams& p, const std::vector<PathCluster>& clusters) {
    GridOccupancy occ{angle_grid(p.aoa_grid_size(), p.grid.angle_min, p.grid.angle_max),
                      angle_grid(p.aod_grid_size(), p.grid.angle_min, p.grid.angle_max),
                      {},
                      {}};
    for (const auto& c : clusters)
        for (const auto& r : c.rays) {
            occ.aoa_used.insert(nearest_grid_index(occ.aoa_grid, c.ray_aoa(r)));
            occ.aod_used.insert(nearest_grid_index(occ.aod_grid, c.ray_aod(r)));
        }
    return occ;
}

PathCluster draw_cluster(const ChannelParams& p, std::size_t rays, GridOccupancy& occ, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> spread(0.0, 1.0);
    PathCluster c;
    if (p.on_grid) {
        c.mean_aoa = occ.aoa_grid[std::size_t(unit(rng) * double(occ.aoa_grid.size())) % occ.aoa_grid.size()];
        c.mean_aod = occ.aod_grid[std::size_t(unit(rng) * double(occ.aod_grid.size())) % occ.aod_grid.size()];
    } else {
        c.mean_aoa = p.grid.angle_min + unit(rng) * (p.grid.angle_max - p.grid.angle_min);
        c.mean_aod = p.grid.angle_min + unit(rng) * (p.grid.angle_max - p.grid.angle_min);
    }
    if (p.n_delay_taps > 1) c.delay = unit(rng) * double(p.n_delay_taps - 1) * p.sample_period;

    for (std::size_t k = 0; k < rays; ++k) {
        Ray r;
        r.gain = complex_normal(rng, 1.0);
        double aoa_off = p.angle_spread * spread(rng);
        double aod_off = p.angle_spread * spread(rng);
        if (p.on_grid) {
            const std::size_t ia =
                occ.claim(occ.aoa_used, occ.aoa_grid.size(), nearest_grid_index(occ.aoa_grid, c.mean_aoa - aoa_off));
            const std::size_t id =
                occ.claim(occ.aod_used, occ.aod_grid.size(), nearest_grid_index(occ.aod_grid, c.mean_aod - aod_off));
            aoa_off = c.mean_aoa - occ.aoa_grid[ia];
            aod_off = c.mean_aod - occ.aod_grid[id];
        }
        r.aoa_offset = aoa_off;
        r.aod_offset = aod_off;
        if (p.n_delay_taps > 1) r.delay = 0.25 * p.sample_period * unit(rng);
        r.doppler = p.velocity * std::cos(2.0 * kPi * unit(rng)) / p.wavelength;
        c.rays.push_back(r);
    }
    return c;
}

} // namespace

std::size_t ChannelParams::rays_in_cluster(std::size_t cluster) const {
    if (rays_per_cluster.empty()) return 1;
    return rays_per_cluster[std::min(cluster, rays_per_cluster.size() - 1)];
}

void ChannelParams::validate() const {
    require(n_bs >= 1 && n_ms >= 1, Errc::config, "antenna counts must be >= 1");
    require(n_clusters >= 1, Errc::config, "n_clusters must be >= 1");
    require(!rays_per_cluster.empty(), Errc::config, "rays_per_cluster must not be empty");
    for (auto r : rays_per_cluster) require(r >= 1, Errc::config, "rays_per_cluster entries must be >= 1");
    require(wavelength > 0.0, Errc::config, "wavelength must be positive");
    require(spacing() > 0.0 && spacing() <= wavelength, Errc::config, "element spacing must lie in (0, wavelength]");
    require(sample_period > 0.0, Errc::config, "sample_period must be positive");
    require(n_delay_taps >= 1, Errc::config, "n_delay_taps must be >= 1");
    require(pulse_rolloff >= 0.0 && pulse_rolloff <= 1.0, Errc::config, "pulse_rolloff must lie in [0, 1]");
    require(angle_spread >= 0.0, Errc::config, "angle_spread must be >= 0");
    require(normalization >= 0.0, Errc::config, "normalization must be >= 0 (0 = ray count)");
    require(angle_walk_std >= 0.0, Errc::config, "angle_walk_std must be >= 0");
    require(velocity >= 0.0, Errc::config, "velocity must be >= 0");
    require(grid.angle_max > grid.angle_min, Errc::config, "grid angle_max must exceed angle_min");
    require(aoa_grid_size() >= n_ms && aod_grid_size() >= n_bs, Errc::config,
            "dictionary grids must be at least as large as the antenna counts");
}

ChannelRealization::ChannelRealization(ChannelParams params, std::vector<PathCluster> clusters,
                                       std::size_t time_index)
    : params_(std::move(params)), clusters_(std::move(clusters)), t_(time_index) {
    for (const auto& c : clusters_) {
        require(!c.rays.empty(), Errc::precondition, "cluster without rays");
        require(c.delay >= 0.0, Errc::precondition, "negative cluster delay");
        for (const auto& r : c.rays) require(r.delay >= 0.0, Errc::precondition, "negative ray delay");
    }
    h_ = channel_matrix(*this);
}

std::size_t ChannelRealization::ray_count() const noexcept { return total_rays(clusters_); }

CMatrix steering_vector(std::size_t n, double angle, double wavelength, double spacing) {
    require(n >= 1, Errc::precondition, "steering vector needs n >= 1");
    require(wavelength > 0.0, Errc::precondition, "wavelength must be positive");
    const double phase = 2.0 * kPi / wavelength * spacing * std::sin(angle);
    const double scale = 1.0 / std::sqrt(double(n));
    CMatrix a(n, 1);
    for (std::size_t k = 0; k < n; ++k) a(k, 0) = std::polar(scale, double(k) * phase);
    return a;
}

double raised_cosine(double t, double period, double rolloff) {
    const double x = t / period;
    if (std::abs(x) > 4.0) return 0.0;
    if (rolloff > 0.0 && std::abs(std::abs(2.0 * rolloff * x) - 1.0) < 1e-10)
        return kPi / 4.0 * sinc(1.0 / (2.0 * rolloff));
    return sinc(x) * std::cos(kPi * rolloff * x) / (1.0 - 4.0 * rolloff * rolloff * x * x);
}

std::vector<double> angle_grid(std::size_t points, double angle_min, double angle_max) {
    require(points >= 1, Errc::config, "angle grid needs at least one point");
    double s_lo = std::min(std::sin(angle_min), std::sin(angle_max));
    double s_hi = std::max(std::sin(angle_min), std::sin(angle_max));
    // Extrema of sin inside the interval.
    for (double peak = kPi / 2.0 - 2.0 * kPi * 4; peak <= angle_max; peak += kPi) {
        if (peak < angle_min) continue;
        s_lo = std::min(s_lo, std::sin(peak));
        s_hi = std::max(s_hi, std::sin(peak));
    }
    std::vector<double> grid(points);
    const double step = (s_hi - s_lo) / double(points);
    for (std::size_t k = 0; k < points; ++k) {
        const double s = std::clamp(s_lo + double(k) * step, -1.0, 1.0);
        double a = std::asin(s);
        if (a < angle_min || a > angle_max) a = kPi - a;
        grid[k] = a;
    }
    return grid;
}

CMatrix delay_tap_matrix(const ChannelRealization& real, std::size_t tap) {
    const auto& p = real.params();
    require(tap < p.n_delay_taps, Errc::precondition, "tap index " + std::to_string(tap) + " >= n_delay_taps");
    const double pref = std::sqrt(double(p.n_bs * p.n_ms) / path_normalization(p, real.ray_count()));
    CMatrix h(p.n_ms, p.n_bs);
    for (const auto& c : real.clusters()) {
        for (const auto& r : c.rays) {
            const double pulse =
                raised_cosine(double(tap) * p.sample_period - c.delay - r.delay, p.sample_period, p.pulse_rolloff);
            const cplx coef = pref * r.gain * pulse;
            if (coef == cplx{}) continue;
            const CMatrix a_ms = steering_vector(p.n_ms, c.ray_aoa(r), p.wavelength, p.spacing());
            const CMatrix a_bs = steering_vector(p.n_bs, c.ray_aod(r), p.wavelength, p.spacing());
            for (std::size_t i = 0; i < p.n_ms; ++i) {
                const cplx left = coef * a_ms(i, 0);
                for (std::size_t j = 0; j < p.n_bs; ++j) h(i, j) += left * std::conj(a_bs(j, 0));
            }
        }
    }
    return h;
}

CMatrix channel_matrix(const ChannelRealization& real) {
    const auto& p = real.params();
    CMatrix h(p.n_ms, p.n_bs);
    for (std::size_t d = 0; d < p.n_delay_taps; ++d) {
        const cplx rot = std::polar(1.0, -2.0 * kPi * p.normalized_frequency * double(d));
        h += rot * delay_tap_matrix(real, d);
    }
    return h;
}

AngularDictionary make_dictionary(const ChannelParams& p) {
    AngularDictionary dict;
    dict.grid_aoa = angle_grid(p.aoa_grid_size(), p.grid.angle_min, p.grid.angle_max);
    dict.grid_aod = angle_grid(p.aod_grid_size(), p.grid.angle_min, p.grid.angle_max);
    dict.a_ms = CMatrix(p.n_ms, dict.grid_aoa.size());
    dict.a_bs = CMatrix(p.n_bs, dict.grid_aod.size());
    for (std::size_t k = 0; k < dict.grid_aoa.size(); ++k)
        dict.a_ms.set_col(k, steering_vector(p.n_ms, dict.grid_aoa[k], p.wavelength, p.spacing()));
    for (std::size_t k = 0; k < dict.grid_aod.size(); ++k)
        dict.a_bs.set_col(k, steering_vector(p.n_bs, dict.grid_aod[k], p.wavelength, p.spacing()));
    return dict;
}

CMatrix angular_factorization(const ChannelRealization& real, const AngularDictionary& dict) {
    const auto& p = real.params();
    const double pref = std::sqrt(double(p.n_bs * p.n_ms) / path_normalization(p, real.ray_count()));
    CMatrix hbar(dict.grid_aoa.size(), dict.grid_aod.size());
    std::size_t ray_index = 0;
    for (const auto& c : real.clusters()) {
        for (const auto& r : c.rays) {
            const std::size_t ia = nearest_grid_index(dict.grid_aoa, c.ray_aoa(r));
            const std::size_t id = nearest_grid_index(dict.grid_aod, c.ray_aod(r));
            if (std::abs(std::sin(dict.grid_aoa[ia]) - std::sin(c.ray_aoa(r))) > kGridTolerance ||
                std::abs(std::sin(dict.grid_aod[id]) - std::sin(c.ray_aod(r))) > kGridTolerance)
                throw Error(Errc::grid_mismatch, "ray " + std::to_string(ray_index) + " is off the dictionary grid",
                            static_cast<long>(ray_index));
            cplx tap_sum{};
            for (std::size_t d = 0; d < p.n_delay_taps; ++d) {
                const double pulse =
                    raised_cosine(double(d) * p.sample_period - c.delay - r.delay, p.sample_period, p.pulse_rolloff);
                tap_sum += pulse * std::polar(1.0, -2.0 * kPi * p.normalized_frequency * double(d));
            }
            hbar(ia, id) += pref * r.gain * tap_sum;
            ++ray_index;
        }
    }
    return hbar;
}

ChannelRealization generate_channel(const ChannelParams& params, Rng& rng, std::size_t t) {
    params.validate();
    GridOccupancy occ = occupancy_of(params, {});
    std::vector<PathCluster> clusters;
    clusters.reserve(params.n_clusters);
    for (std::size_t l = 0; l < params.n_clusters; ++l)
        clusters.push_back(draw_cluster(params, params.rays_in_cluster(l), occ, rng));
    return ChannelRealization(params, std::move(clusters), t);
}

std::vector<ChannelRealization> evolve(const ChannelRealization& start, std::size_t steps,
                                       std::span<const RankChange> schedule, Rng& rng) {
    require(steps >= 1, Errc::precondition, "evolve needs steps >= 1");
    const std::size_t t0 = start.time_index();
    for (const auto& ev : schedule) {
        require(ev.time > t0 && ev.time <= t0 + steps, Errc::config,
                "rank schedule time " + std::to_string(ev.time) + " outside horizon (" + std::to_string(t0) + ", " +
                    std::to_string(t0 + steps) + "]");
        require(ev.clusters >= 1, Errc::config, "rank schedule needs at least one cluster");
    }

    ChannelParams params = start.params();
    std::vector<PathCluster> clusters = start.clusters();
    std::normal_distribution<double> walk(0.0, 1.0);
    std::vector<ChannelRealization> out;
    out.reserve(steps);

    for (std::size_t s = 1; s <= steps; ++s) {
        const std::size_t t = t0 + s;
        for (auto& c : clusters)
            for (auto& r : c.rays) r.gain *= std::polar(1.0, 2.0 * kPi * r.doppler * params.sample_period);

        if (params.angle_walk_std > 0.0) {
            const auto aoa_grid = angle_grid(params.aoa_grid_size(), params.grid.angle_min, params.grid.angle_max);
            const auto aod_grid = angle_grid(params.aod_grid_size(), params.grid.angle_min, params.grid.angle_max);
            for (auto& c : clusters) {
                const double new_aoa = c.mean_aoa + params.angle_walk_std * walk(rng);
                const double new_aod = c.mean_aod + params.angle_walk_std * walk(rng);
                for (auto& r : c.rays) {
                    if (params.on_grid) {
                        r.aoa_offset = new_aoa - aoa_grid[nearest_grid_index(aoa_grid, new_aoa - r.aoa_offset)];
                        r.aod_offset = new_aod - aod_grid[nearest_grid_index(aod_grid, new_aod - r.aod_offset)];
                    }
                }
                c.mean_aoa = new_aoa;
                c.mean_aod = new_aod;
            }
        }

        for (const auto& ev : schedule) {
            if (ev.time != t) continue;
            if (clusters.size() > ev.clusters) clusters.resize(ev.clusters);
            if (clusters.size() < ev.clusters) {
                GridOccupancy occ = occupancy_of(params, clusters);
                while (clusters.size() < ev.clusters)
                    clusters.push_back(draw_cluster(params, params.rays_in_cluster(clusters.size()), occ, rng));
            }
            params.n_clusters = ev.clusters;
        }
        out.emplace_back(params, clusters, t);
    }
    return out;
}

std::size_t numerical_rank(const CMatrix& m, double rel_tol) { return svd(m).rank(rel_tol); }

} // namespace mmwce
