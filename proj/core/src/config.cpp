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


#include "mmwce/config.hpp"

#include "mmwce/error.hpp"

#include "json.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace mmwce {

using nlohmann::json;

namespace {

using Handler = std::function<void(const json&, const std::string&)>;

void read_object(const json& j, const std::string& where, const std::map<std::string, Handler>& handlers) {
    if (!j.is_object()) throw Error(Errc::config, where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        const auto it = handlers.find(key);
        const std::string path = where.empty() ? key : where + "." + key;
        if (it == handlers.end()) throw Error(Errc::config, "unknown key '" + path + "'");
        it->second(value, path);
    }
}

std::size_t as_size(const json& v, const std::string& path) {
    if (!v.is_number_unsigned()) throw Error(Errc::config, path + " must be a non-negative integer");
    return v.get<std::size_t>();
}

std::uint64_t as_u64(const json& v, const std::string& path) {
    if (!v.is_number_unsigned()) throw Error(Errc::config, path + " must be a non-negative integer");
    return v.get<std::uint64_t>();
}

double as_double(const json& v, const std::string& path) {
    if (!v.is_number()) throw Error(Errc::config, path + " must be a number");
    return v.get<double>();
}

bool as_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) throw Error(Errc::config, path + " must be a boolean");
    return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) throw Error(Errc::config, path + " must be a string");
    return v.get<std::string>();
}

const json& as_array(const json& v, const std::string& path) {
    if (!v.is_array()) throw Error(Errc::config, path + " must be an array");
    return v;
}

Handler size_field(std::size_t& dst) { return [&dst](const json& v, const std::string& p) { dst = as_size(v, p); }; }
Handler double_field(double& dst) { return [&dst](const json& v, const std::string& p) { dst = as_double(v, p); }; }
Handler bool_field(bool& dst) { return [&dst](const json& v, const std::string& p) { dst = as_bool(v, p); }; }

void read_channel(const json& j, const std::string& where, ChannelParams& c) {
    read_object(j, where,
                {{"n_bs", size_field(c.n_bs)},
                 {"n_ms", size_field(c.n_ms)},
                 {"n_clusters", size_field(c.n_clusters)},
                 {"rays_per_cluster",
                  [&](const json& v, const std::string& p) {
                      c.rays_per_cluster.clear();
                      for (const auto& e : as_array(v, p)) c.rays_per_cluster.push_back(as_size(e, p + "[]"));
                  }},
                 {"wavelength", double_field(c.wavelength)},
                 {"element_spacing", double_field(c.element_spacing)},
                 {"sample_period", double_field(c.sample_period)},
                 {"n_delay_taps", size_field(c.n_delay_taps)},
                 {"pulse_rolloff", double_field(c.pulse_rolloff)},
                 {"angle_spread", double_field(c.angle_spread)},
                 {"normalization", double_field(c.normalization)},
                 {"normalized_frequency", double_field(c.normalized_frequency)},
                 {"velocity", double_field(c.velocity)},
                 {"angle_walk_std", double_field(c.angle_walk_std)},
                 {"on_grid", bool_field(c.on_grid)},
                 {"grid", [&](const json& v, const std::string& p) {
                      read_object(v, p,
                                  {{"aoa_points", size_field(c.grid.aoa_points)},
                                   {"aod_points", size_field(c.grid.aod_points)},
                                   {"angle_min", double_field(c.grid.angle_min)},
                                   {"angle_max", double_field(c.grid.angle_max)}});
                  }}});
}

void read_config(const json& j, ExperimentConfig& cfg) {
    read_object(
        j, "",
        {{"channel", [&](const json& v, const std::string& p) { read_channel(v, p, cfg.channel); }},
         {"hybrid",
          [&](const json& v, const std::string& p) {
              read_object(v, p,
                          {{"m_bs", size_field(cfg.hybrid.m_bs)},
                           {"m_ms", size_field(cfg.hybrid.m_ms)},
                           {"n_streams", size_field(cfg.hybrid.n_streams)},
                           {"phase_bits", size_field(cfg.hybrid.phase_bits)},
                           {"pilot_length", size_field(cfg.hybrid.pilot_length)}});
          }},
         {"solver",
          [&](const json& v, const std::string& p) {
              auto& s = cfg.solver;
              read_object(v, p,
                          {{"epsilon", double_field(s.epsilon)},
                           {"mu", double_field(s.mu)},
                           {"nuclear_weight", double_field(s.nuclear_weight)},
                           {"max_iters", size_field(s.max_iters)},
                           {"energy_ratio", double_field(s.energy_ratio)},
                           {"noise_variance", double_field(s.noise_variance)},
                           {"refine_without_l1", bool_field(s.refine_without_l1)},
                           {"trace_path",
                            [&](const json& x, const std::string& q) { s.trace_path = as_string(x, q); }}});
          }},
         {"omp",
          [&](const json& v, const std::string& p) {
              auto& o = cfg.omp;
              read_object(v, p,
                          {{"sparsity_cap",
                            [&](const json& x, const std::string& q) {
                                if (x.is_null()) o.sparsity_cap.reset();
                                else o.sparsity_cap = as_size(x, q);
                            }},
                           {"residual_tol", double_field(o.residual_tol)},
                           {"batch_size", size_field(o.batch_size)},
                           {"linear_cap", bool_field(o.linear_cap)},
                           {"measurement_dictionary", bool_field(o.measurement_dictionary)}});
          }},
         {"snr_grid_db",
          [&](const json& v, const std::string& p) {
              cfg.snr_grid_db.clear();
              for (const auto& e : as_array(v, p)) cfg.snr_grid_db.push_back(as_double(e, p + "[]"));
          }},
         {"keep_fraction", double_field(cfg.keep_fraction)},
         {"n_trials", size_field(cfg.n_trials)},
         {"time_steps", size_field(cfg.time_steps)},
         {"rank_schedule",
          [&](const json& v, const std::string& p) {
              cfg.rank_schedule.clear();
              for (const auto& e : as_array(v, p)) {
                  RankChange c;
                  read_object(e, p + "[]", {{"time", size_field(c.time)}, {"clusters", size_field(c.clusters)}});
                  cfg.rank_schedule.push_back(c);
              }
          }},
         {"master_seed", [&](const json& v, const std::string& p) { cfg.master_seed = as_u64(v, p); }},
         {"estimator_variant",
          [&](const json& v, const std::string& p) { cfg.estimator_variant = Variant::parse(as_string(v, p)); }},
         {"ablation_variants",
          [&](const json& v, const std::string& p) {
              cfg.ablation_variants.clear();
              for (const auto& e : as_array(v, p)) cfg.ablation_variants.push_back(Variant::parse(as_string(e, p)));
          }},
         {"threads", size_field(cfg.threads)},
         {"recovery_threshold_db", double_field(cfg.recovery_threshold_db)},
         {"nmse_floor_db", double_field(cfg.nmse_floor_db)},
         {"ber_symbols", size_field(cfg.ber_symbols)},
         {"noise_aware_rank", bool_field(cfg.noise_aware_rank)},
         {"record_runtime", bool_field(cfg.record_runtime)}});
}

} // namespace

ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(Errc::config, std::string("malformed config: ") + e.what());
    }
    ExperimentConfig cfg;
    read_config(j, cfg);
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error(Errc::config, "cannot open config " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

std::string dump_config(const ExperimentConfig& cfg) {
    const auto& c = cfg.channel;
    json channel = {{"n_bs", c.n_bs},
                    {"n_ms", c.n_ms},
                    {"n_clusters", c.n_clusters},
                    {"rays_per_cluster", c.rays_per_cluster},
                    {"wavelength", c.wavelength},
                    {"element_spacing", c.element_spacing},
                    {"sample_period", c.sample_period},
                    {"n_delay_taps", c.n_delay_taps},
                    {"pulse_rolloff", c.pulse_rolloff},
                    {"angle_spread", c.angle_spread},
                    {"normalization", c.normalization},
                    {"normalized_frequency", c.normalized_frequency},
                    {"velocity", c.velocity},
                    {"angle_walk_std", c.angle_walk_std},
                    {"on_grid", c.on_grid},
                    {"grid",
                     {{"aoa_points", c.grid.aoa_points},
                      {"aod_points", c.grid.aod_points},
                      {"angle_min", c.grid.angle_min},
                      {"angle_max", c.grid.angle_max}}}};
    json hybrid = {{"m_bs", cfg.hybrid.m_bs},
                   {"m_ms", cfg.hybrid.m_ms},
                   {"n_streams", cfg.hybrid.n_streams},
                   {"phase_bits", cfg.hybrid.phase_bits},
                   {"pilot_length", cfg.hybrid.pilot_length}};
    json solver = {{"epsilon", cfg.solver.epsilon},
                   {"mu", cfg.solver.mu},
                   {"nuclear_weight", cfg.solver.nuclear_weight},
                   {"max_iters", cfg.solver.max_iters},
                   {"energy_ratio", cfg.solver.energy_ratio},
                   {"noise_variance", cfg.solver.noise_variance},
                   {"refine_without_l1", cfg.solver.refine_without_l1},
                   {"trace_path", cfg.solver.trace_path}};
    json omp = {{"sparsity_cap", cfg.omp.sparsity_cap ? json(*cfg.omp.sparsity_cap) : json(nullptr)},
                {"residual_tol", cfg.omp.residual_tol},
                {"batch_size", cfg.omp.batch_size},
                {"linear_cap", cfg.omp.linear_cap},
                {"measurement_dictionary", cfg.omp.measurement_dictionary}};
    json schedule = json::array();
    for (const auto& r : cfg.rank_schedule) schedule.push_back({{"time", r.time}, {"clusters", r.clusters}});
    json variants = json::array();
    for (const auto& v : cfg.ablation_variants) variants.push_back(v.name());

    json j = {{"channel", channel},
              {"hybrid", hybrid},
              {"solver", solver},
              {"omp", omp},
              {"snr_grid_db", cfg.snr_grid_db},
              {"keep_fraction", cfg.keep_fraction},
              {"n_trials", cfg.n_trials},
              {"time_steps", cfg.time_steps},
              {"rank_schedule", schedule},
              {"master_seed", cfg.master_seed},
              {"estimator_variant", cfg.estimator_variant.name()},
              {"ablation_variants", variants},
              {"threads", cfg.threads},
              {"recovery_threshold_db", cfg.recovery_threshold_db},
              {"nmse_floor_db", cfg.nmse_floor_db},
              {"ber_symbols", cfg.ber_symbols},
              {"noise_aware_rank", cfg.noise_aware_rank},
              {"record_runtime", cfg.record_runtime}};
    return j.dump(2) + "\n";
}

} // namespace mmwce
