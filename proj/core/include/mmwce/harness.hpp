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

// Seeded Monte-Carlo experiments: estimator variants, metrics and sweeps.

#ifndef MMWCE_HARNESS_HPP
#define MMWCE_HARNESS_HPP

#include "mmwce/channel.hpp"
#include "mmwce/completion.hpp"
#include "mmwce/frontend.hpp"
#include "mmwce/recovery.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mmwce {

struct Variant {
    enum class Kind { rank_aware, fixed_rank, rank_oblivious, coarse_only, somp_baseline };
    Kind kind = Kind::rank_aware;
    std::size_t rank = 0;  ///< fixed_rank only

    /// "rank_aware", "fixed_rank(3)", ...
    std::string name() const;
    /// Throws Errc::config on an unknown name.
    static Variant parse(const std::string& name);

    friend bool operator==(const Variant&, const Variant&) = default;
};

struct ExperimentConfig {
    ChannelParams channel;
    HybridConfig hybrid{8, 8, 2, 6, 32};
    SolverOptions solver;
    /// Recovery runs in the observation domain; inverting a random analog
    /// frontend amplifies noise too much at low SNR.
    OmpOptions omp = [] {
        OmpOptions o;
        o.measurement_dictionary = true;
        return o;
    }();
    std::vector<double> snr_grid_db{0, 5, 10, 15, 20, 25};
    double keep_fraction = 0.8;
    std::size_t n_trials = 10;
    std::size_t time_steps = 1;
    std::vector<RankChange> rank_schedule;
    std::uint64_t master_seed = 1;
    Variant estimator_variant;
    /// Variants compared by `ablate`.
    std::vector<Variant> ablation_variants{{Variant::Kind::rank_aware, 0},
                                           {Variant::Kind::fixed_rank, 2},
                                           {Variant::Kind::rank_oblivious, 0},
                                           {Variant::Kind::coarse_only, 0},
                                           {Variant::Kind::somp_baseline, 0}};

    std::size_t threads = 1;
    double recovery_threshold_db = -10.0;
    double nmse_floor_db = -120.0;
    /// QPSK symbols per stream for the BER column; 0 leaves it empty.
    std::size_t ber_symbols = 0;
    /// rank_aware debiases its rank estimates by the known noise level.
    bool noise_aware_rank = true;
    /// Wall-clock timing breaks byte-identical output, so it is opt-in.
    bool record_runtime = false;

    /// Throws Errc::config on violated invariants.
    void validate() const;
};

struct MetricRecord {
    std::string variant;
    double snr_db = 0.0;
    std::size_t trial = 0;
    std::size_t t = 0;
    double nmse = 0.0;
    double nmse_db = 0.0;
    bool recovered = false;
    std::optional<double> ber;
    std::size_t rank_true = 0;
    std::size_t rank_est = 0;
    double runtime_ms = 0.0;
    std::string error;  ///< empty unless the trial failed
};

/// ||H - Hhat||_F^2 / ||H||_F^2. Throws Errc::undefined_metric for H == 0.
double nmse(const CMatrix& h_true, const CMatrix& h_est);
/// 10 log10(x), clamped below at floor_db.
double to_db(double linear, double floor_db = -120.0);

/// Fraction of records with nmse_db <= threshold_db; failed records count as misses.
double recovery_probability(const std::vector<MetricRecord>& records, double threshold_db = -10.0);

/// Eigen-beamformed QPSK over `n_streams` modes of h_est, sent through h_true
/// with AWGN of variance (||H||_F^2 / (n_ms n_bs)) / snr. Returns the bit
/// error fraction over 2 * n_streams * n_symbols bits.
double ber_link(const CMatrix& h_true, const CMatrix& h_est, double snr_db, std::size_t n_symbols, std::uint64_t seed,
                std::size_t n_streams = 2);

/// One estimator run on a single observation.
struct InstanceResult {
    CMatrix channel;
    std::size_t rank_est = 0;
    std::optional<CompletionResult> completion;
    std::optional<SparseGainEstimate> sparse;
};

/// Shared read-only state for a configuration.
struct Workspace {
    AngularDictionary dict;
    OmpDictionary omp_dict;
    CMatrix ms_atoms;  ///< A_ms, used by the SOMP baseline

    explicit Workspace(const ChannelParams& params);
};

/// Runs `variant` on `obs`. The tracker carries rank feedback across time
/// steps for rank_aware and may be null otherwise.
InstanceResult run_estimator(const Variant& variant, const ObservationSet& obs, const PilotBlock& block,
                             const ExperimentConfig& cfg, const Workspace& ws, RankTracker* tracker, Rng& rng);

/// Channel trajectory (t = 0 .. time_steps-1) of one trial.
std::vector<ChannelRealization> trial_channels(const ExperimentConfig& cfg, std::size_t trial);

/// Observation (noisy, then subsampled) of one (trial, snr, t) cell; the
/// pilot block and mask do not depend on the SNR or the variant.
struct TrialCell {
    PilotBlock block;
    ObservationSet observation;
};
TrialCell make_cell(const ExperimentConfig& cfg, const ChannelRealization& channel, std::size_t trial,
                    std::size_t snr_index, std::size_t t);

/// All (snr, trial, t) records of cfg.estimator_variant in canonical order.
std::vector<MetricRecord> run_sweep(const ExperimentConfig& cfg);
/// run_sweep for each variant on the same seeds; ordered by variant name.
std::vector<MetricRecord> run_ablation(const ExperimentConfig& cfg, const std::vector<Variant>& variants);

struct AblationReport {
    struct Row {
        std::string variant;
        double snr_db = 0.0;
        double median_nmse_db = 0.0;
        std::size_t samples = 0;
        std::size_t failures = 0;
        double rank_accuracy = 0.0;  ///< fraction of steps with rank_est == rank_true
    };
    struct Gap {
        std::string variant;    ///< candidate
        std::string reference;  ///< compared against
        double snr_db = 0.0;
        double gap_db = 0.0;    ///< median(reference) - median(variant); > 0 favours the candidate
    };
    std::vector<Row> rows;
    std::vector<Gap> gaps;
};

/// Per-variant medians per SNR and pairwise gaps; records with t < t_from
/// are ignored. Requires at least two variants.
AblationReport ablation_report(const std::vector<MetricRecord>& records, std::size_t t_from = 0);

void write_records_csv(std::ostream& os, const std::vector<MetricRecord>& records);
void write_ablation_csv(std::ostream& os, const AblationReport& report);

} // namespace mmwce

#endif // MMWCE_HARNESS_HPP
