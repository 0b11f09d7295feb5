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

// mmwce command line: simulate, estimate, sweep, ablate, config.
//
// Exit codes: 0 success, 1 configuration or usage error, 2 runtime failure.

#include "CLI11.hpp"

#include "mmwce/config.hpp"
#include "mmwce/error.hpp"
#include "mmwce/harness.hpp"
#include "mmwce/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace mmwce;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    std::optional<std::size_t> threads;
    std::vector<std::string> variants;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", f.seed, "master seed");
    cmd->add_option("--out", f.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--variant", f.variants, "estimator variant, e.g. rank_aware or fixed_rank(2)")
        ->delimiter(',');
}

ExperimentConfig resolve(const CommonFlags& f, bool variants_are_list) {
    ExperimentConfig cfg = f.config_path.empty() ? ExperimentConfig{} : load_config(f.config_path);
    if (f.seed) cfg.master_seed = *f.seed;
    if (f.threads) cfg.threads = *f.threads;
    if (!f.variants.empty()) {
        if (variants_are_list) {
            cfg.ablation_variants.clear();
            for (const auto& v : f.variants) cfg.ablation_variants.push_back(Variant::parse(v));
        } else {
            if (f.variants.size() != 1) throw Error(Errc::config, "--variant takes a single name here");
            cfg.estimator_variant = Variant::parse(f.variants.front());
        }
    }
    cfg.validate();
    return cfg;
}

fs::path out_dir(const CommonFlags& f) {
    fs::path dir(f.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(Errc::io, "cannot create " + dir.string() + ": " + ec.message());
    return dir;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p);
    if (!os) throw Error(Errc::io, "cannot open " + p.string());
    return os;
}

std::size_t snr_index_of(const ExperimentConfig& cfg, std::optional<double> snr) {
    if (!snr) return 0;
    for (std::size_t i = 0; i < cfg.snr_grid_db.size(); ++i)
        if (std::abs(cfg.snr_grid_db[i] - *snr) < 1e-9) return i;
    throw Error(Errc::config, "--snr must be one of snr_grid_db");
}

void print_summary(const std::vector<MetricRecord>& recs, double threshold_db) {
    std::map<std::pair<std::string, double>, std::vector<MetricRecord>> groups;
    for (const auto& r : recs) groups[{r.variant, r.snr_db}].push_back(r);
    std::printf("%-18s %8s %12s %8s %8s\n", "variant", "snr_db", "median_db", "p_rec", "errors");
    for (const auto& [key, rs] : groups) {
        std::vector<double> db;
        std::size_t errors = 0;
        for (const auto& r : rs) {
            if (r.error.empty())
                db.push_back(r.nmse_db);
            else
                ++errors;
        }
        std::sort(db.begin(), db.end());
        double med = std::nan("");
        if (!db.empty()) med = db.size() % 2 ? db[db.size() / 2] : 0.5 * (db[db.size() / 2 - 1] + db[db.size() / 2]);
        std::printf("%-18s %8.1f %12.2f %8.3f %8zu\n", key.first.c_str(), key.second, med,
                    recovery_probability(rs, threshold_db), errors);
    }
}

int cmd_simulate(const CommonFlags& f, std::size_t trial) {
    const ExperimentConfig cfg = resolve(f, false);
    const fs::path dir = out_dir(f);
    const auto channels = trial_channels(cfg, trial);
    std::vector<CMatrix> steps;
    std::vector<std::vector<double>> sv;
    for (const auto& c : channels) {
        steps.push_back(c.matrix());
        sv.push_back(svd(c.matrix()).s);
    }
    save_channel_tensor((dir / "channels.bin").string(), steps);
    auto os = open_out(dir / "singular_values.csv");
    write_singular_values_csv(os, sv);
    std::printf("wrote %zu steps of %zux%zu channels to %s\n", steps.size(), steps.front().rows(),
                steps.front().cols(), dir.string().c_str());
    return kExitOk;
}

int cmd_estimate(const CommonFlags& f, std::size_t trial, std::size_t t, std::optional<double> snr) {
    ExperimentConfig cfg = resolve(f, false);
    require(t < cfg.time_steps, Errc::config, "--step must be below time_steps");
    const std::size_t snr_index = snr_index_of(cfg, snr);
    const fs::path dir = out_dir(f);
    cfg.solver.trace_path = (dir / "trace.csv").string();

    const auto channels = trial_channels(cfg, trial);
    const ChannelRealization& ch = channels[t];
    const TrialCell cell = make_cell(cfg, ch, trial, snr_index, t);
    const Workspace ws(cfg.channel);
    Rng rng(derive_seed(cfg.master_seed, {trial, snr_index, t}));
    const InstanceResult res = run_estimator(cfg.estimator_variant, cell.observation, cell.block, cfg, ws, nullptr, rng);

    {
        auto os = open_out(dir / "mask.csv");
        write_mask_csv(os, cell.observation.mask);
    }
    if (res.sparse) {
        auto os = open_out(dir / "support.csv");
        write_support_csv(os, t, *res.sparse);
    }
    save_channel_tensor((dir / "estimate.bin").string(), {res.channel});
    save_channel_tensor((dir / "channel.bin").string(), {ch.matrix()});

    const double e = nmse(ch.matrix(), res.channel);
    std::printf("variant %s  snr %.1f dB  trial %zu  t %zu\n", cfg.estimator_variant.name().c_str(),
                cfg.snr_grid_db[snr_index], trial, t);
    std::printf("rank_true %zu  rank_est %zu  nmse %.6g (%.2f dB)\n", numerical_rank(ch.matrix()), res.rank_est, e,
                to_db(e, cfg.nmse_floor_db));
    if (res.completion)
        std::printf("completion: %zu sweeps, converged %s\n", res.completion->iterations,
                    res.completion->converged ? "yes" : "no");
    return kExitOk;
}

int cmd_sweep(const CommonFlags& f) {
    const ExperimentConfig cfg = resolve(f, false);
    const fs::path dir = out_dir(f);
    const auto recs = run_sweep(cfg);
    auto os = open_out(dir / "metrics.csv");
    write_records_csv(os, recs);
    print_summary(recs, cfg.recovery_threshold_db);
    return kExitOk;
}

int cmd_ablate(const CommonFlags& f, std::optional<std::size_t> t_from) {
    const ExperimentConfig cfg = resolve(f, true);
    const fs::path dir = out_dir(f);
    const auto recs = run_ablation(cfg, cfg.ablation_variants);
    std::size_t from = 0;
    if (t_from)
        from = *t_from;
    else if (!cfg.rank_schedule.empty())
        from = cfg.rank_schedule.front().time;
    const AblationReport rep = ablation_report(recs, from);
    {
        auto os = open_out(dir / "metrics.csv");
        write_records_csv(os, recs);
    }
    {
        auto os = open_out(dir / "ablation.csv");
        write_ablation_csv(os, rep);
    }
    print_summary(recs, cfg.recovery_threshold_db);
    return kExitOk;
}

int cmd_config(const CommonFlags& f, bool dump_defaults) {
    if (dump_defaults) {
        std::cout << dump_config(ExperimentConfig{});
        return kExitOk;
    }
    if (f.config_path.empty()) throw Error(Errc::config, "config: pass --config PATH or --dump-defaults");
    const ExperimentConfig cfg = resolve(f, false);
    std::cout << dump_config(cfg);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mmwce: rank-aware mmWave MIMO channel estimation simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "mmwce 0.1.0");

    CommonFlags flags;
    std::size_t trial = 0;
    std::size_t step = 0;
    std::optional<double> snr;
    std::optional<std::size_t> t_from;
    bool dump_defaults = false;

    auto* sim = app.add_subcommand("simulate", "generate one trial's channel trajectory and export it");
    add_common(sim, flags);
    sim->add_option("--trial", trial, "trial index")->capture_default_str();

    auto* est = app.add_subcommand("estimate", "run one estimator instance and write its artifacts");
    add_common(est, flags);
    est->add_option("--trial", trial, "trial index")->capture_default_str();
    est->add_option("--step", step, "time index")->capture_default_str();
    est->add_option("--snr", snr, "SNR in dB, one of snr_grid_db (default: the first)");

    auto* sweep = app.add_subcommand("sweep", "Monte-Carlo sweep over the SNR grid");
    add_common(sweep, flags);

    auto* abl = app.add_subcommand("ablate", "paired sweep of several variants with a gap report");
    add_common(abl, flags);
    abl->add_option("--t-from", t_from, "first time index in the report (default: first rank change)");

    auto* cfgcmd = app.add_subcommand("config", "validate a configuration or print the defaults");
    add_common(cfgcmd, flags);
    cfgcmd->add_flag("--dump-defaults", dump_defaults, "print every field with its default value");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*sim) return cmd_simulate(flags, trial);
        if (*est) return cmd_estimate(flags, trial, step, snr);
        if (*sweep) return cmd_sweep(flags);
        if (*abl) return cmd_ablate(flags, t_from);
        if (*cfgcmd) return cmd_config(flags, dump_defaults);
    } catch (const Error& e) {
        std::cerr << "mmwce: " << e.what() << '\n';
        return e.code() == Errc::config ? kExitConfig : kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "mmwce: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitRuntime;
}
