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

#include "mmwce/completion.hpp"

#include "mmwce/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <string>

namespace mmwce {

// ---------------------------------------------------------------------------
// Rank estimation
// ---------------------------------------------------------------------------

double RankEstimate::frobenius_norm() const {
    double e = 0.0;
    for (double s : singular_values) e += s * s;
    return std::sqrt(e);
}

RankEstimate estimate_rank_from_singular_values(std::vector<double> sv, double xi, double noise_floor) {
    require(xi > 0.0 && xi < 1.0, Errc::precondition, "energy ratio xi must lie in (0, 1)");
    require(noise_floor >= 0.0, Errc::precondition, "noise floor must be non-negative");
    require(!sv.empty(), Errc::degenerate_input, "no singular values");
    std::sort(sv.begin(), sv.end(), std::greater<>());
    double total = 0.0;
    for (double s : sv) total += s * s;
    require(total > 0.0, Errc::degenerate_input, "rank estimation of a zero matrix");

    std::vector<double> energy(sv.size());
    double debiased = 0.0;
    for (std::size_t i = 0; i < sv.size(); ++i) {
        energy[i] = std::max(0.0, sv[i] * sv[i] - noise_floor);
        debiased += energy[i];
    }

    RankEstimate est;
    est.energy_ratio = xi;
    std::size_t k = 1;
    if (debiased > 0.0) {
        double cum = 0.0;
        for (k = 0; k < sv.size();) {
            cum += energy[k++];
            if (cum >= xi * debiased) break;
        }
    }
    est.value = std::max<std::size_t>(k, 1);
    double kept = 0.0;
    for (std::size_t i = 0; i < est.value; ++i) kept += sv[i] * sv[i];
    est.error_factor = std::sqrt(std::min(1.0, kept / total));

    est.ratio_rule_value = 1;
    double best = 2.0;
    for (std::size_t i = 0; i + 1 < sv.size(); ++i) {
        if (sv[i] <= 0.0) break;
        const double r = sv[i + 1] / sv[i];
        if (r < best) {
            best = r;
            est.ratio_rule_value = i + 1;
        }
    }
    est.singular_values = std::move(sv);
    return est;
}

RankEstimate estimate_rank(const CMatrix& m, double xi, double noise_floor) {
    require(!m.empty(), Errc::degenerate_input, "rank estimation of an empty matrix");
    require(m.squared_norm() > 0.0, Errc::degenerate_input, "rank estimation of a zero matrix");
    return estimate_rank_from_singular_values(svd(m).s, xi, noise_floor);
}

double noise_rank_floor(std::size_t rows, std::size_t cols, double observed, double noise_var) {
    if (noise_var <= 0.0) return 0.0;
    const double edge = std::sqrt(double(rows)) + std::sqrt(double(cols));
    return observed * noise_var * edge * edge;
}

namespace {

// Zero-filling acts like extra noise of variance (1 - p) * E|Y|^2 per entry.
double zero_filled_floor(const CMatrix& zero_filled, double observed, double noise_var) {
    if (noise_var <= 0.0) return 0.0;
    const std::size_t rows = zero_filled.rows(), cols = zero_filled.cols();
    const double mean_sq = zero_filled.squared_norm() / (observed * double(rows * cols));
    const double signal = std::max(0.0, mean_sq - noise_var);
    return noise_rank_floor(rows, cols, observed, noise_var + (1.0 - observed) * signal);
}

} // namespace

double rank_error_bound(const RankEstimate& est) {
    if (!est.singular_values.empty()) {
        double total = 0.0, tail = 0.0;
        for (std::size_t i = 0; i < est.singular_values.size(); ++i) {
            const double e = est.singular_values[i] * est.singular_values[i];
            total += e;
            if (i >= est.value) tail += e;
        }
        if (total == 0.0) return 0.0;
        // Same quantity as sqrt(1 - alpha^2) * ||Y||_F without the cancellation in 1 - alpha^2.
        return std::sqrt(total) * std::sqrt(tail / total);
    }
    return std::sqrt(std::max(0.0, 1.0 - est.error_factor * est.error_factor)) * est.frobenius_norm();
}

// ---------------------------------------------------------------------------
// AR rank tracker
// ---------------------------------------------------------------------------

ArFit fit_ar_coefficients(std::span<const double> history, std::size_t order) {
    require(order >= 1, Errc::precondition, "AR order must be >= 1");
    require(history.size() >= 3 * order, Errc::precondition,
            "AR fit of order " + std::to_string(order) + " needs at least " + std::to_string(3 * order) +
                " samples, got " + std::to_string(history.size()));

    const std::size_t n = history.size() - order;
    CMatrix x(n, order);
    CMatrix y(n, 1);
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t j = 0; j < order; ++j) x(t, j) = history[t + order - 1 - j];
        y(t, 0) = history[t + order];
    }

    ArFit fit;
    CMatrix a;
    try {
        a = least_squares(x, y);
    } catch (const Error& e) {
        if (e.code() != Errc::degenerate_system) throw;
        fit.coefficients.assign(order, 0.0);
        fit.coefficients[0] = 1.0;
        fit.innovation_scale = 0.0;
        return fit;
    }
    fit.coefficients.resize(order);
    for (std::size_t j = 0; j < order; ++j) fit.coefficients[j] = a(j, 0).real();

    double ss = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        double pred = 0.0;
        for (std::size_t j = 0; j < order; ++j) pred += fit.coefficients[j] * x(t, j).real();
        const double r = y(t, 0).real() - pred;
        ss += r * r;
    }
    fit.innovation_scale = std::sqrt(ss / double(n));
    return fit;
}

RankTracker::RankTracker(std::size_t order, std::vector<double> coefficients, double innovation_scale,
                         std::size_t rank_cap)
    : order_(order), coefficients_(std::move(coefficients)), innovation_scale_(innovation_scale), rank_cap_(rank_cap) {
    require(order_ >= 1, Errc::config, "tracker order must be >= 1");
    require(coefficients_.size() == order_, Errc::config, "tracker needs exactly `order` coefficients");
    require(innovation_scale_ >= 0.0, Errc::config, "innovation scale must be >= 0");
    require(rank_cap_ >= 1, Errc::config, "rank cap must be >= 1");
    history_cap_ = std::max(history_cap_, order_);
}

RankTracker RankTracker::persistence(std::size_t rank_cap) { return RankTracker(1, {1.0}, 0.0, rank_cap); }

void RankTracker::correct(std::size_t rank) {
    history_.push_back(double(rank));
    while (history_.size() > history_cap_) history_.pop_front();
}

bool RankTracker::refit() {
    if (history_.size() < 3 * order_) return false;
    const std::vector<double> h(history_.begin(), history_.end());
    ArFit fit = fit_ar_coefficients(h, order_);
    coefficients_ = std::move(fit.coefficients);
    innovation_scale_ = fit.innovation_scale;
    return true;
}

std::optional<std::size_t> predict_rank(const RankTracker& tracker, Rng& rng) {
    const auto& h = tracker.history_;
    if (h.size() < tracker.order_) return std::nullopt;
    double pred = 0.0;
    for (std::size_t j = 0; j < tracker.order_; ++j) pred += tracker.coefficients_[j] * h[h.size() - 1 - j];
    if (tracker.innovation_scale_ > 0.0) {
        std::normal_distribution<double> z(0.0, 1.0);
        pred += tracker.innovation_scale_ * z(rng);
    }
    const double r = std::round(pred);
    if (!(r >= 1.0)) return std::size_t{1};
    return std::min(static_cast<std::size_t>(r), tracker.rank_cap_);
}

// ---------------------------------------------------------------------------
// R1MC solver
// ---------------------------------------------------------------------------

namespace {

struct Block {
    std::vector<cplx> u;
    std::vector<cplx> v;
    double weight = 0.0;
    int zero_sweeps = 0;
};

double vnorm(const std::vector<cplx>& x) {
    double s = 0.0;
    for (const auto& e : x) s += std::norm(e);
    return std::sqrt(s);
}

// out += w * u * v^H
void add_rank_one(CMatrix& out, double w, const Block& b) {
    if (w == 0.0) return;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        const cplx a = w * b.u[i];
        cplx* row = &out(i, 0);
        for (std::size_t j = 0; j < out.cols(); ++j) row[j] += a * std::conj(b.v[j]);
    }
}

CMatrix assemble(const std::vector<Block>& blocks, std::size_t rows, std::size_t cols) {
    CMatrix l(rows, cols);
    for (const auto& b : blocks) add_rank_one(l, b.weight, b);
    return l;
}

// 1/2 ||Yhat - L||^2 + Re tr(M^H (Yhat - L)) + mu * ||lambda||_1
double lagrangian(const CMatrix& yhat, const CMatrix& m, const CMatrix& l, const std::vector<Block>& blocks,
                  double mu) {
    const CMatrix d = yhat - l;
    double l1 = 0.0;
    for (const auto& b : blocks) l1 += std::abs(b.weight);
    return 0.5 * d.squared_norm() + inner(m, d).real() + mu * l1;
}

// One Gauss-Seidel sweep on target T; `l` holds sum of all blocks on entry and exit.
void bcd_sweep(const CMatrix& target, CMatrix& l, std::vector<Block>& blocks, double mu) {
    const std::size_t rows = target.rows();
    const std::size_t cols = target.cols();
    for (auto& b : blocks) {
        // Residual of every other block: T - (L - lambda_q u_q v_q^H).
        CMatrix yq = target - l;
        add_rank_one(yq, b.weight, b);

        std::vector<cplx> x(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            cplx s{};
            const cplx* row = &yq(i, 0);
            for (std::size_t j = 0; j < cols; ++j) s += row[j] * b.v[j];
            x[i] = s;
        }
        if (const double n = vnorm(x); n > 0.0)
            for (std::size_t i = 0; i < rows; ++i) b.u[i] = x[i] / n;

        std::vector<cplx> y(cols);
        for (std::size_t i = 0; i < rows; ++i) {
            const cplx ui = b.u[i];
            const cplx* row = &yq(i, 0);
            for (std::size_t j = 0; j < cols; ++j) y[j] += std::conj(row[j]) * ui;
        }
        if (const double n = vnorm(y); n > 0.0)
            for (std::size_t j = 0; j < cols; ++j) b.v[j] = y[j] / n;

        cplx a{};
        for (std::size_t i = 0; i < rows; ++i) {
            cplx s{};
            const cplx* row = &yq(i, 0);
            for (std::size_t j = 0; j < cols; ++j) s += row[j] * b.v[j];
            a += std::conj(b.u[i]) * s;
        }
        b.weight = soft_shrink(a.real(), mu);
        b.zero_sweeps = b.weight == 0.0 ? b.zero_sweeps + 1 : 0;

        l = target - yq;
        add_rank_one(l, b.weight, b);
    }
}

double max_norm_deviation(const std::vector<Block>& blocks) {
    double dev = 0.0;
    for (const auto& b : blocks) dev = std::max({dev, std::abs(vnorm(b.u) - 1.0), std::abs(vnorm(b.v) - 1.0)});
    return dev;
}

} // namespace

CompletionResult r1mc_complete(const ObservationSet& obs, std::optional<std::size_t> rank_hint,
                               const SolverOptions& opts) {
    const CMatrix& yt = obs.incomplete;
    const SamplingMask& mask = obs.mask;
    require(!yt.empty(), Errc::precondition, "empty observation");
    require(yt.rows() == mask.rows() && yt.cols() == mask.cols(), Errc::shape, "mask and observation shapes differ");
    require(mask.covers_all_rows_and_cols(), Errc::infeasible_mask, "mask must cover every row and column");
    require(opts.max_iters >= 1, Errc::config, "max_iters must be >= 1");
    const std::size_t rows = yt.rows();
    const std::size_t cols = yt.cols();
    const std::size_t kmax = std::min(rows, cols);
    if (rank_hint)
        require(*rank_hint >= 1 && *rank_hint <= kmax, Errc::precondition,
                "rank hint " + std::to_string(*rank_hint) + " outside [1, " + std::to_string(kmax) + "]");

    // Observed entries only; the zero-filled matrix.
    const CMatrix y_obs = project_mask(yt, mask);
    const double norm_obs = y_obs.frobenius_norm();

    CompletionResult res;
    if (norm_obs == 0.0) {
        res.completed = CMatrix(rows, cols);
        res.low_rank = CMatrix(rows, cols);
        res.rank_used = rank_hint.value_or(1);
        res.rank_estimate.singular_values.assign(kmax, 0.0);
        res.rank_estimate.energy_ratio = opts.energy_ratio;
        res.iterations = 1;
        res.converged = true;
        return res;
    }

    require(opts.noise_variance >= 0.0, Errc::config, "noise_variance must be non-negative");
    const double observed = double(mask.count()) / double(rows * cols);
    const double floor = noise_rank_floor(rows, cols, observed, opts.noise_variance);
    const SvdResult init = svd(y_obs);
    const std::size_t rank =
        rank_hint ? *rank_hint
                  : estimate_rank_from_singular_values(init.s, opts.energy_ratio,
                                                       zero_filled_floor(y_obs, observed, opts.noise_variance))
                        .value;
    res.rank_used = rank;

    const double eps = opts.epsilon > 0.0 ? opts.epsilon : 1e-6 * norm_obs;
    const double rel = 1.0 / std::sqrt(double(std::max(rows, cols)));
    const double rms = norm_obs / std::sqrt(double(mask.count()));
    const double mu = opts.mu > 0.0 ? opts.mu : rel * rms;
    const double dual_step = rel;
    const double nuclear_weight = opts.nuclear_weight >= 0.0 ? opts.nuclear_weight : 0.1 * init.s.front();

    std::vector<Block> blocks(rank);
    for (std::size_t q = 0; q < rank; ++q) {
        blocks[q].u.resize(rows);
        blocks[q].v.resize(cols);
        for (std::size_t i = 0; i < rows; ++i) blocks[q].u[i] = init.u(i, q);
        for (std::size_t j = 0; j < cols; ++j) blocks[q].v[j] = init.v(j, q);
        blocks[q].weight = init.s[q];
    }

    CMatrix yhat = y_obs;
    CMatrix mult(rows, cols);
    CMatrix l = assemble(blocks, rows, cols);
    const bool full_mask = mask.count() == rows * cols;
    const int stages = (opts.refine_without_l1 && !full_mask) ? 2 : 1;
    bool converged = false;

    for (int stage = 0; stage < stages; ++stage) {
        const double stage_mu = stage == 0 ? mu : 0.0;
        if (stage == 1) {
            res.support_after_l1 = blocks.size();
            mult = CMatrix(rows, cols);
            std::erase_if(blocks, [](const Block& b) { return b.weight == 0.0; });
            l = assemble(blocks, rows, cols);
        }
        converged = false;
        for (std::size_t it = 0; it < opts.max_iters; ++it) {
            TracePoint tp;
            tp.iteration = ++res.iterations;
            tp.stage = stage;
            tp.objective_before = lagrangian(yhat, mult, l, blocks, stage_mu);

            const CMatrix target = yhat + mult;
            bcd_sweep(target, l, blocks, stage_mu);
            tp.objective = lagrangian(yhat, mult, l, blocks, stage_mu);
            tp.max_norm_deviation = max_norm_deviation(blocks);

            std::erase_if(blocks, [](const Block& b) { return b.zero_sweeps >= 3; });

            // Yhat: observed entries re-imposed, the rest from the factorization.
            CMatrix next = l - mult;
            for (const auto& [i, j] : mask.observed()) next(i, j) = yt(i, j);
            if (stage == 0)
                for (const auto& [i, j] : mask.observed()) mult(i, j) += dual_step * (yt(i, j) - l(i, j));

            tp.change = (next - yhat).frobenius_norm();
            yhat = std::move(next);
            tp.feasibility = project_mask(l - yt, mask).frobenius_norm();
            tp.active_rank = blocks.size();
            res.trace.push_back(tp);

            const double feasibility = project_mask(yhat - yt, mask).frobenius_norm();
            if (feasibility <= eps && tp.change <= eps) {
                converged = true;
                break;
            }
        }
        if (stage == 0 && stages == 1) res.support_after_l1 = blocks.size();
        if (stage == 0 && stages == 2) {
            res.support_after_l1 = static_cast<std::size_t>(
                std::count_if(blocks.begin(), blocks.end(), [](const Block& b) { return b.weight != 0.0; }));
        }
    }

    res.completed = yhat;
    res.low_rank = l;
    res.converged = converged;
    res.final_residual = project_mask(yhat - yt, mask).frobenius_norm();
    res.fit_residual = project_mask(l - yt, mask).frobenius_norm();
    for (const auto& b : blocks) res.weights.push_back(b.weight);

    const SvdResult fin = svd(res.completed);
    if (fin.s.front() > 0.0) {
        res.rank_estimate = estimate_rank_from_singular_values(fin.s, opts.energy_ratio, floor);
    } else {
        res.rank_estimate.singular_values = fin.s;
        res.rank_estimate.energy_ratio = opts.energy_ratio;
    }
    double nuclear = 0.0;
    for (double s : fin.s) nuclear += s;
    res.nuclear_objective = nuclear_weight * nuclear;

    if (!opts.trace_path.empty()) {
        std::ofstream os(opts.trace_path);
        if (!os) throw Error(Errc::io, "cannot open trace file " + opts.trace_path);
        write_trace_csv(os, res.trace);
    }
    return res;
}

std::size_t select_rank(const ObservationSet& obs, std::optional<std::size_t> rank_hint, const RankTracker* tracker,
                        Rng& rng, double xi, double noise_variance) {
    const std::size_t kmax = std::min(obs.incomplete.rows(), obs.incomplete.cols());
    if (rank_hint) return std::clamp<std::size_t>(*rank_hint, 1, kmax);
    if (tracker) {
        if (auto p = predict_rank(*tracker, rng)) return std::clamp<std::size_t>(*p, 1, kmax);
    }
    const CMatrix zero_filled = project_mask(obs.incomplete, obs.mask);
    if (zero_filled.squared_norm() == 0.0) return 1;
    return estimate_rank(zero_filled, xi, zero_filled_floor(zero_filled, obs.mask.fraction(), noise_variance)).value;
}

CompletionResult complete_tracked(const ObservationSet& obs, RankTracker& tracker, const SolverOptions& opts,
                                  Rng& rng) {
    const std::size_t rank = select_rank(obs, std::nullopt, &tracker, rng, opts.energy_ratio, opts.noise_variance);
    CompletionResult res = r1mc_complete(obs, rank, opts);
    tracker.correct(res.rank_estimate.value);
    return res;
}

CMatrix refine_channel(const CompletionResult& completed, const PilotBlock& block) {
    return invert_frontend(completed.completed, block);
}

void write_trace_csv(std::ostream& os, std::span<const TracePoint> trace) {
    os << "iteration,stage,objective_before,objective,feasibility,change,active_rank,max_norm_deviation\n";
    os << std::setprecision(17);
    for (const auto& t : trace)
        os << t.iteration << ',' << t.stage << ',' << t.objective_before << ',' << t.objective << ','
           << t.feasibility << ',' << t.change << ',' << t.active_rank << ',' << t.max_norm_deviation << '\n';
}

} // namespace mmwce
