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

#include "mmwce/harness.hpp"

#include "mmwce/error.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

namespace mmwce {

// Seed stream tags; each random quantity draws from its own derived stream.
namespace {
enum SeedTag : std::uint64_t { kChannel = 1, kPilots = 2, kNoise = 3, kMask = 4, kBer = 5, kTracker = 6 };
} // namespace

// ---------------------------------------------------------------------------
// Variant
// ---------------------------------------------------------------------------

std::string Variant::name() const {
    switch (kind) {
    case Kind::rank_aware: return "rank_aware";
    case Kind::fixed_rank: return "fixed_rank(" + std::to_string(rank) + ")";
    case Kind::rank_oblivious: return "rank_oblivious";
    case Kind::coarse_only: return "coarse_only";
    case Kind::somp_baseline: return "somp_baseline";
    }
    return "?";
}

Variant Variant::parse(const std::string& name) {
    if (name == "rank_aware") return {Kind::rank_aware, 0};
    if (name == "rank_oblivious") return {Kind::rank_oblivious, 0};
    if (name == "coarse_only") return {Kind::coarse_only, 0};
    if (name == "somp_baseline") return {Kind::somp_baseline, 0};
    const std::string prefix = "fixed_rank(";
    if (name.size() > prefix.size() + 1 && name.compare(0, prefix.size(), prefix) == 0 && name.back() == ')') {
        const std::string digits = name.substr(prefix.size(), name.size() - prefix.size() - 1);
        if (!digits.empty() && std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            const auto k = std::stoull(digits);
            if (k >= 1) return {Kind::fixed_rank, static_cast<std::size_t>(k)};
        }
    }
    throw Error(Errc::config, "unknown estimator variant '" + name + "'");
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
    channel.validate();
    hybrid.validate(channel.n_bs, channel.n_ms);
    require(!snr_grid_db.empty(), Errc::config, "snr_grid_db must not be empty");
    for (double s : snr_grid_db) require(std::isfinite(s), Errc::config, "snr_grid_db entries must be finite");
    require(keep_fraction > 0.0 && keep_fraction <= 1.0, Errc::config, "keep_fraction must lie in (0, 1]");
    require(n_trials >= 1, Errc::config, "n_trials must be >= 1");
    require(time_steps >= 1, Errc::config, "time_steps must be >= 1");
    for (const auto& c : rank_schedule) {
        require(c.time >= 1 && c.time < time_steps, Errc::config,
                "rank_schedule time " + std::to_string(c.time) + " outside [1, time_steps)");
        require(c.clusters >= 1, Errc::config, "rank_schedule clusters must be >= 1");
    }
    require(threads >= 1, Errc::config, "threads must be >= 1");
    require(solver.energy_ratio > 0.0 && solver.energy_ratio < 1.0, Errc::config, "energy_ratio must lie in (0, 1)");
    require(solver.max_iters >= 1, Errc::config, "max_iters must be >= 1");
    require(solver.epsilon >= 0.0 && solver.mu >= 0.0 && solver.noise_variance >= 0.0, Errc::config,
            "epsilon, mu and noise_variance must be >= 0");
    require(!omp.sparsity_cap || *omp.sparsity_cap >= 1, Errc::config, "sparsity_cap must be >= 1");
    require(omp.batch_size >= 1, Errc::config, "batch_size must be >= 1");
    require(ber_symbols == 0 || ber_symbols >= 1000, Errc::config, "ber_symbols must be 0 or >= 1000");
    if (estimator_variant.kind == Variant::Kind::fixed_rank)
        require(estimator_variant.rank >= 1, Errc::config, "fixed_rank needs k >= 1");
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

double nmse(const CMatrix& h_true, const CMatrix& h_est) {
    require(h_true.rows() == h_est.rows() && h_true.cols() == h_est.cols(), Errc::shape, "nmse: shape mismatch");
    const double ref = h_true.squared_norm();
    require(ref > 0.0, Errc::undefined_metric, "nmse of a zero channel is undefined");
    return (h_true - h_est).squared_norm() / ref;
}

double to_db(double linear, double floor_db) {
    if (!(linear > 0.0)) return linear == 0.0 ? floor_db : std::numeric_limits<double>::quiet_NaN();
    return std::max(floor_db, 10.0 * std::log10(linear));
}

double recovery_probability(const std::vector<MetricRecord>& records, double threshold_db) {
    require(!records.empty(), Errc::precondition, "recovery_probability needs records");
    std::size_t hits = 0;
    for (const auto& r : records)
        if (r.error.empty() && r.nmse_db <= threshold_db) ++hits;
    return double(hits) / double(records.size());
}

double ber_link(const CMatrix& h_true, const CMatrix& h_est, double snr_db, std::size_t n_symbols, std::uint64_t seed,
                std::size_t n_streams) {
    require(n_symbols >= 1000, Errc::precondition, "ber_link needs at least 1000 symbols");
    require(h_true.rows() == h_est.rows() && h_true.cols() == h_est.cols(), Errc::shape, "ber_link: shape mismatch");
    require(n_streams >= 1, Errc::precondition, "n_streams must be >= 1");
    const std::size_t n_ms = h_true.rows();
    const std::size_t n_bs = h_true.cols();
    const std::size_t ns = std::min({n_streams, n_ms, n_bs});

    const SvdResult dec = svd(h_est);
    const CMatrix precoder = dec.v.cols_range(0, ns);           // n_bs x ns
    const CMatrix combiner_h = dec.u.cols_range(0, ns).adjoint();  // ns x n_ms
    const CMatrix effective = combiner_h * h_true * precoder;    // ns x ns

    const double snr = std::pow(10.0, snr_db / 10.0);
    const double noise_var = h_true.squared_norm() / (double(n_ms * n_bs) * snr);
    const double amp = 1.0 / std::sqrt(2.0 * double(ns));  // unit total transmit power

    Rng rng(seed);
    std::bernoulli_distribution bit(0.5);
    std::vector<int> bits(2 * ns);
    std::vector<cplx> s(ns), r(ns);
    std::size_t errors = 0;
    for (std::size_t k = 0; k < n_symbols; ++k) {
        for (std::size_t q = 0; q < ns; ++q) {
            bits[2 * q] = bit(rng);
            bits[2 * q + 1] = bit(rng);
            s[q] = amp * cplx(bits[2 * q] ? -1.0 : 1.0, bits[2 * q + 1] ? -1.0 : 1.0);
        }
        // r = U^H (H V s + n); U^H n keeps the per-stream variance since U has orthonormal columns.
        for (std::size_t q = 0; q < ns; ++q) {
            cplx acc{};
            for (std::size_t p = 0; p < ns; ++p) acc += effective(q, p) * s[p];
            r[q] = acc + complex_normal(rng, noise_var);
        }
        // Scalar equalization by the positive gain sigma_q(Hhat) leaves the QPSK decision unchanged.
        for (std::size_t q = 0; q < ns; ++q) {
            errors += static_cast<std::size_t>((r[q].real() < 0.0) != (bits[2 * q] != 0));
            errors += static_cast<std::size_t>((r[q].imag() < 0.0) != (bits[2 * q + 1] != 0));
        }
    }
    return double(errors) / double(2 * ns * n_symbols);
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

Workspace::Workspace(const ChannelParams& params)
    : dict(make_dictionary(params)), omp_dict(build_dictionary(dict)), ms_atoms(dict.a_ms) {}

namespace {

std::size_t zero_filled_rank(const ObservationSet& obs, double xi) {
    const CMatrix z = project_mask(obs.incomplete, obs.mask);
    if (z.squared_norm() == 0.0) return 1;
    return estimate_rank(z, xi).value;
}

InstanceResult phase_two(CompletionResult comp, const PilotBlock& block, const Workspace& ws, const OmpOptions& omp,
                         const RankEstimate& rank) {
    InstanceResult out;
    const CMatrix refined = refine_channel(comp, block);
    Phase2Result p2 = omp.measurement_dictionary ? estimate_phase2(comp.completed, block, ws.dict, rank, omp)
                                                 : estimate_phase2(refined, block, ws.dict, rank, omp, &ws.omp_dict);
    out.channel = std::move(p2.channel);
    out.sparse = std::move(p2.estimate);
    out.completion = std::move(comp);
    return out;
}

} // namespace

InstanceResult run_estimator(const Variant& variant, const ObservationSet& obs, const PilotBlock& block,
                             const ExperimentConfig& cfg, const Workspace& ws, RankTracker* tracker, Rng& rng) {
    const double xi = cfg.solver.energy_ratio;
    const std::size_t kmax = std::min(obs.incomplete.rows(), obs.incomplete.cols());

    switch (variant.kind) {
    case Variant::Kind::coarse_only: {
        InstanceResult out;
        out.channel = coarse_channel(obs, block);
        out.rank_est = zero_filled_rank(obs, xi);
        return out;
    }
    case Variant::Kind::somp_baseline: {
        InstanceResult out;
        const CMatrix coarse = coarse_channel(obs, block);
        out.rank_est = coarse.squared_norm() > 0.0 ? estimate_rank(coarse, xi).value : 1;
        OmpOptions o = cfg.omp;
        o.sparsity_cap = std::min(out.rank_est, ws.ms_atoms.cols());
        SparseGainEstimate est = somp_baseline(coarse, ws.ms_atoms, o);
        out.channel = ws.ms_atoms * est.gains;
        out.sparse = std::move(est);
        return out;
    }
    case Variant::Kind::rank_aware: {
        SolverOptions so = cfg.solver;
        if (cfg.noise_aware_rank) so.noise_variance = block.noise_var;
        const std::size_t rank = select_rank(obs, std::nullopt, tracker, rng, xi, so.noise_variance);
        CompletionResult comp = r1mc_complete(obs, rank, so);
        if (tracker) tracker->correct(comp.rank_estimate.value);
        const RankEstimate est = comp.rank_estimate;
        InstanceResult out = phase_two(std::move(comp), block, ws, cfg.omp, est);
        out.rank_est = est.value;
        return out;
    }
    case Variant::Kind::fixed_rank: {
        const std::size_t rank = std::min(variant.rank, kmax);
        CompletionResult comp = r1mc_complete(obs, rank, cfg.solver);
        RankEstimate est = comp.rank_estimate;
        est.value = rank;
        InstanceResult out = phase_two(std::move(comp), block, ws, cfg.omp, est);
        out.rank_est = rank;
        return out;
    }
    case Variant::Kind::rank_oblivious: {
        CompletionResult comp = r1mc_complete(obs, kmax, cfg.solver);
        RankEstimate est = comp.rank_estimate;
        est.value = kmax;
        // Without rank information the path budget falls back to the RF-chain count.
        OmpOptions o = cfg.omp;
        o.sparsity_cap = kmax;
        InstanceResult out = phase_two(std::move(comp), block, ws, o, est);
        out.rank_est = kmax;
        return out;
    }
    }
    throw Error(Errc::config, "unhandled variant");
}

std::vector<ChannelRealization> trial_channels(const ExperimentConfig& cfg, std::size_t trial) {
    Rng rng(derive_seed(cfg.master_seed, {kChannel, trial}));
    std::vector<ChannelRealization> out;
    out.reserve(cfg.time_steps);
    out.push_back(generate_channel(cfg.channel, rng, 0));
    if (cfg.time_steps > 1) {
        auto rest = evolve(out.front(), cfg.time_steps - 1, cfg.rank_schedule, rng);
        for (auto& r : rest) out.push_back(std::move(r));
    }
    return out;
}

TrialCell make_cell(const ExperimentConfig& cfg, const ChannelRealization& channel, std::size_t trial,
                    std::size_t snr_index, std::size_t t) {
    require(snr_index < cfg.snr_grid_db.size(), Errc::precondition, "snr index out of range");
    Rng pilot_rng(derive_seed(cfg.master_seed, {kPilots, trial, t}));
    PilotBlock block = make_pilot_block(cfg.hybrid, cfg.channel.n_bs, cfg.channel.n_ms, 0.0, pilot_rng);
    block.noise_var = noise_variance_for_snr(noiseless_observation(channel.matrix(), block), cfg.snr_grid_db[snr_index]);

    Rng noise_rng(derive_seed(cfg.master_seed, {kNoise, trial, snr_index, t}));
    ObservationSet obs = observe(channel, block, noise_rng);
    if (cfg.keep_fraction < 1.0) {
        Rng mask_rng(derive_seed(cfg.master_seed, {kMask, trial, t}));
        obs = subsample(obs, cfg.keep_fraction, mask_rng);
    }
    return TrialCell{std::move(block), std::move(obs)};
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

namespace {

std::string describe(const std::exception& e) {
    if (dynamic_cast<const Error*>(&e)) return e.what();
    return std::string("exception: ") + e.what();
}

// Records of one (snr, trial) item, t = 0 .. time_steps-1.
std::vector<MetricRecord> run_item(const ExperimentConfig& cfg, const Variant& variant, const Workspace& ws,
                                   std::size_t snr_index, std::size_t trial) {
    const std::vector<ChannelRealization> channels = trial_channels(cfg, trial);
    const std::size_t kmax = std::min(cfg.hybrid.m_ms, cfg.hybrid.pilot_length);
    RankTracker tracker = RankTracker::persistence(kmax);
    Rng tracker_rng(derive_seed(cfg.master_seed, {kTracker, trial, snr_index}));

    std::vector<MetricRecord> out;
    out.reserve(channels.size());
    for (std::size_t t = 0; t < channels.size(); ++t) {
        MetricRecord rec;
        rec.variant = variant.name();
        rec.snr_db = cfg.snr_grid_db[snr_index];
        rec.trial = trial;
        rec.t = t;
        const CMatrix& h = channels[t].matrix();
        rec.rank_true = numerical_rank(h);
        const auto start = std::chrono::steady_clock::now();
        try {
            const TrialCell cell = make_cell(cfg, channels[t], trial, snr_index, t);
            InstanceResult res = run_estimator(variant, cell.observation, cell.block, cfg, ws,
                                               variant.kind == Variant::Kind::rank_aware ? &tracker : nullptr,
                                               tracker_rng);
            rec.nmse = nmse(h, res.channel);
            rec.nmse_db = to_db(rec.nmse, cfg.nmse_floor_db);
            rec.recovered = rec.nmse_db <= cfg.recovery_threshold_db;
            rec.rank_est = res.rank_est;
            if (cfg.ber_symbols > 0)
                rec.ber = ber_link(h, res.channel, rec.snr_db, cfg.ber_symbols,
                                   derive_seed(cfg.master_seed, {kBer, trial, snr_index, t}), cfg.hybrid.n_streams);
        } catch (const std::exception& e) {
            rec.nmse = std::numeric_limits<double>::quiet_NaN();
            rec.nmse_db = std::numeric_limits<double>::quiet_NaN();
            rec.recovered = false;
            rec.error = describe(e);
        }
        if (cfg.record_runtime)
            rec.runtime_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        out.push_back(std::move(rec));
    }
    return out;
}

template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& body) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t w = 0; w < threads; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        body(i);
                    } catch (...) {
                        std::lock_guard lk(failure_mu);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
    }
    if (failure) std::rethrow_exception(failure);
}

} // namespace

std::vector<MetricRecord> run_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    const Workspace ws(cfg.channel);
    const std::size_t n_snr = cfg.snr_grid_db.size();
    const std::size_t items = n_snr * cfg.n_trials;
    std::vector<std::vector<MetricRecord>> slots(items);
    // Slot order (snr-major, then trial) is the canonical output order.
    parallel_for(items, cfg.threads, [&](std::size_t i) {
        slots[i] = run_item(cfg, cfg.estimator_variant, ws, i / cfg.n_trials, i % cfg.n_trials);
    });
    std::vector<MetricRecord> out;
    out.reserve(items * cfg.time_steps);
    for (auto& s : slots)
        for (auto& r : s) out.push_back(std::move(r));
    return out;
}

std::vector<MetricRecord> run_ablation(const ExperimentConfig& cfg, const std::vector<Variant>& variants) {
    require(!variants.empty(), Errc::config, "no variants to compare");
    std::vector<Variant> sorted = variants;
    std::sort(sorted.begin(), sorted.end(), [](const Variant& a, const Variant& b) { return a.name() < b.name(); });
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<MetricRecord> out;
    for (const auto& v : sorted) {
        ExperimentConfig c = cfg;
        c.estimator_variant = v;
        auto recs = run_sweep(c);
        out.insert(out.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
    }
    return out;
}

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

AblationReport ablation_report(const std::vector<MetricRecord>& records, std::size_t t_from) {
    std::vector<std::string> variants;
    for (const auto& r : records)
        if (std::find(variants.begin(), variants.end(), r.variant) == variants.end()) variants.push_back(r.variant);
    require(variants.size() >= 2, Errc::precondition, "ablation_report needs at least two variants");
    std::set<double> snrs;
    for (const auto& r : records) snrs.insert(r.snr_db);

    AblationReport rep;
    std::map<std::pair<std::string, double>, double> med;
    for (const auto& v : variants) {
        for (double snr : snrs) {
            AblationReport::Row row;
            row.variant = v;
            row.snr_db = snr;
            std::vector<double> vals;
            std::size_t steps = 0, hits = 0;
            for (const auto& r : records) {
                if (r.variant != v || r.snr_db != snr || r.t < t_from) continue;
                ++steps;
                if (!r.error.empty()) {
                    ++row.failures;
                    continue;
                }
                vals.push_back(r.nmse_db);
                if (r.rank_est == r.rank_true) ++hits;
            }
            if (steps == 0) continue;
            row.samples = vals.size();
            row.median_nmse_db = median(vals);
            row.rank_accuracy = double(hits) / double(steps);
            med[{v, snr}] = row.median_nmse_db;
            rep.rows.push_back(row);
        }
    }
    for (const auto& a : variants)
        for (const auto& b : variants) {
            if (a == b) continue;
            for (double snr : snrs) {
                const auto ia = med.find({a, snr});
                const auto ib = med.find({b, snr});
                if (ia == med.end() || ib == med.end()) continue;
                rep.gaps.push_back({a, b, snr, ib->second - ia->second});
            }
        }
    return rep;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

std::string num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string quoted(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + '"';
}

} // namespace

void write_records_csv(std::ostream& os, const std::vector<MetricRecord>& records) {
    os << "variant,snr_db,trial,t,nmse,nmse_db,recovered,ber,rank_true,rank_est,runtime_ms,error\n";
    for (const auto& r : records)
        os << quoted(r.variant) << ',' << num(r.snr_db) << ',' << r.trial << ',' << r.t << ',' << num(r.nmse) << ','
           << num(r.nmse_db) << ',' << (r.recovered ? 1 : 0) << ',' << (r.ber ? num(*r.ber) : std::string()) << ','
           << r.rank_true << ',' << r.rank_est << ',' << num(r.runtime_ms) << ',' << quoted(r.error) << '\n';
}

void write_ablation_csv(std::ostream& os, const AblationReport& report) {
    os << "kind,variant,reference,snr_db,median_nmse_db,gap_db,samples,failures,rank_accuracy\n";
    for (const auto& r : report.rows)
        os << "median," << quoted(r.variant) << ",," << num(r.snr_db) << ',' << num(r.median_nmse_db) << ",,"
           << r.samples << ',' << r.failures << ',' << num(r.rank_accuracy) << '\n';
    for (const auto& g : report.gaps)
        os << "gap," << quoted(g.variant) << ',' << quoted(g.reference) << ',' << num(g.snr_db) << ",," << num(g.gap_db)
           << ",,,\n";
}

} // namespace mmwce
