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

// Phase I of the estimator: rank estimation by energy retention, an AR rank
// tracker, and rank-one matrix completion (R1MC) solved by block coordinate
// descent on an augmented Lagrangian with l1-shrunk weights.

#ifndef MMWCE_COMPLETION_HPP
#define MMWCE_COMPLETION_HPP

#include "mmwce/frontend.hpp"
#include "mmwce/numerics.hpp"
#include "mmwce/random.hpp"

#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mmwce {

struct RankEstimate {
    std::size_t value = 1;
    std::vector<double> singular_values;
    double energy_ratio = 0.95;  ///< xi
    /// alpha = ||Y_R||_F / ||Y||_F, the Frobenius fraction kept by rank-R truncation.
    double error_factor = 1.0;
    /// Diagnostic: index k minimizing s[k] / s[k-1] (1-based rank).
    std::size_t ratio_rule_value = 1;

    double frobenius_norm() const;
};

/// Smallest k whose leading k squared singular values hold at least
/// xi of the total energy. Throws Errc::degenerate_input on a zero matrix.
/// A positive noise_floor is subtracted from every squared singular value
/// (clipped at zero) before the energy rule; if nothing survives the
/// estimate is 1. error_factor always uses the raw singular values.
RankEstimate estimate_rank(const CMatrix& m, double xi, double noise_floor = 0.0);
RankEstimate estimate_rank_from_singular_values(std::vector<double> singular_values, double xi,
                                                double noise_floor = 0.0);

/// Upper edge of the squared singular values of a rows x cols matrix of
/// i.i.d. noise with variance noise_var, of which a fraction `observed`
/// of entries is kept: observed * noise_var * (sqrt(rows) + sqrt(cols))^2.
double noise_rank_floor(std::size_t rows, std::size_t cols, double observed, double noise_var);

/// sqrt(1 - alpha^2) * ||Y||_F; equals the rank-R truncation error.
double rank_error_bound(const RankEstimate& estimate);

struct ArFit {
    std::vector<double> coefficients;  ///< a_1 multiplies the most recent value
    double innovation_scale = 0.0;     ///< b0, std of the regression residuals
};

/// Least-squares fit of x_t = sum_j a_j x_{t-j} + b0 Z_t. Requires at least
/// 3 * order samples. Degenerate (e.g. constant) histories fall back to the
/// persistence model a_1 = 1.
ArFit fit_ar_coefficients(std::span<const double> history, std::size_t order);

/// AR(order) predictor over the sequence of estimated ranks.
class RankTracker {
public:
    RankTracker(std::size_t order, std::vector<double> coefficients, double innovation_scale, std::size_t rank_cap);
    /// a_1 = 1, b0 = 0: predicts the previous rank.
    static RankTracker persistence(std::size_t rank_cap);

    std::size_t order() const noexcept { return order_; }
    const std::vector<double>& coefficients() const noexcept { return coefficients_; }
    double innovation_scale() const noexcept { return innovation_scale_; }
    std::size_t rank_cap() const noexcept { return rank_cap_; }
    const std::deque<double>& history() const noexcept { return history_; }

    /// Appends an observed (corrected) rank.
    void correct(std::size_t rank);
    /// Refits the coefficients on the stored history when it is long enough.
    bool refit();

private:
    friend std::optional<std::size_t> predict_rank(const RankTracker&, Rng&);

    std::size_t order_;
    std::vector<double> coefficients_;
    double innovation_scale_;
    std::size_t rank_cap_;
    std::deque<double> history_;
    std::size_t history_cap_ = 256;
};

/// round(sum_j a_j R_{t-j} + b0 Z_t) clamped to [1, rank_cap]; std::nullopt
/// on cold start (history shorter than the order).
std::optional<std::size_t> predict_rank(const RankTracker& tracker, Rng& rng);

struct SolverOptions {
    double epsilon = 0.0;          ///< stopping tolerance; 0 selects 1e-6 * ||Ytilde||_F
    double mu = 0.0;               ///< shrinkage threshold; 0 selects rms(observed) / sqrt(max(rows, cols))
    double nuclear_weight = -1.0;  ///< weight of ||Y||_* in the reported objective; < 0 selects 0.1 * s_max(Ytilde)
    std::size_t max_iters = 500;   ///< sweep cap per stage
    double energy_ratio = 0.95;    ///< xi for rank estimation
    double noise_variance = 0.0;   ///< per-entry noise variance; > 0 debiases rank estimates
    bool refine_without_l1 = true;
    std::string trace_path;        ///< CSV trace destination when non-empty
};

struct TracePoint {
    std::size_t iteration = 0;
    int stage = 0;                  ///< 0: l1 stage, 1: refinement with mu = 0
    double objective_before = 0.0;  ///< augmented Lagrangian before the BCD sweep
    double objective = 0.0;         ///< and after it
    double feasibility = 0.0;       ///< ||P_Omega(L - Ytilde)||_F of the factorization L
    double change = 0.0;            ///< ||Yhat_k - Yhat_{k-1}||_F
    std::size_t active_rank = 0;
    double max_norm_deviation = 0.0;  ///< max_q | ||u_q|| - 1 |, | ||v_q|| - 1 |
};

struct CompletionResult {
    CMatrix completed;           ///< Yhat*: observed entries kept, the rest from the factorization
    CMatrix low_rank;            ///< sum_q lambda_q u_q v_q^H
    RankEstimate rank_estimate;  ///< estimate_rank of the completed matrix
    std::size_t rank_used = 0;
    std::size_t support_after_l1 = 0;  ///< nonzero weights at the end of the l1 stage
    std::size_t iterations = 0;
    double final_residual = 0.0;  ///< ||P_Omega(Yhat* - Ytilde)||_F
    double fit_residual = 0.0;    ///< ||P_Omega(L - Ytilde)||_F
    double nuclear_objective = 0.0;
    bool converged = false;
    std::vector<double> weights;
    std::vector<TracePoint> trace;
};

/// R1MC by Gauss-Seidel block coordinate descent over blocks
/// {lambda_q, u_q, v_q}. Each block fits the residual of the others with
/// normalized power updates and a soft-shrunk weight, observed entries are
/// re-imposed, and a multiplier supported on the mask accumulates the
/// observed-entry misfit. With refine_without_l1 a second stage repeats the
/// sweeps with mu = 0 on the surviving blocks.
CompletionResult r1mc_complete(const ObservationSet& obs, std::optional<std::size_t> rank_hint,
                               const SolverOptions& opts);

/// Rank used by the solver: the hint if given, else the tracker prediction,
/// else estimate_rank of the zero-filled observation.
std::size_t select_rank(const ObservationSet& obs, std::optional<std::size_t> rank_hint, const RankTracker* tracker,
                        Rng& rng, double xi, double noise_variance = 0.0);

/// Predictor/corrector loop: completes with select_rank() and feeds
/// estimate_rank(Yhat*) back into the tracker.
CompletionResult complete_tracked(const ObservationSet& obs, RankTracker& tracker, const SolverOptions& opts,
                                  Rng& rng);

/// pinv(W^H) * Yhat* * pinv(F S).
CMatrix refine_channel(const CompletionResult& completed, const PilotBlock& block);

void write_trace_csv(std::ostream& os, std::span<const TracePoint> trace);

} // namespace mmwce

#endif // MMWCE_COMPLETION_HPP
