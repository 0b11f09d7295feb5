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

// Micro-benchmarks of the hot kernels: SVD, R1MC completion, OMP variants and
// a full estimator instance.

#include "mmwce/completion.hpp"
#include "mmwce/harness.hpp"
#include "mmwce/recovery.hpp"

#include <benchmark/benchmark.h>

using namespace mmwce;

namespace {

void BM_Svd(benchmark::State& state) {
    Rng rng(1);
    const CMatrix m = complex_normal_matrix(std::size_t(state.range(0)), std::size_t(state.range(1)), rng);
    for (auto _ : state) benchmark::DoNotOptimize(svd(m));
}
BENCHMARK(BM_Svd)->Args({8, 8})->Args({8, 32})->Args({32, 32})->Args({64, 64});

void BM_R1mc(benchmark::State& state) {
    Rng rng(2);
    const std::size_t n = std::size_t(state.range(0));
    const CMatrix y = complex_normal_matrix(n, 3, rng) * complex_normal_matrix(3, n, rng);
    const ObservationSet obs = subsample({y, SamplingMask::full(n, n), y, std::nullopt}, 0.4, rng);
    for (auto _ : state) benchmark::DoNotOptimize(r1mc_complete(obs, 3, SolverOptions{}));
}
BENCHMARK(BM_R1mc)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

struct OmpFixture {
    CMatrix atoms;
    CMatrix target;
    OmpOptions opts;

    OmpFixture() {
        const AngularDictionary d = make_dictionary(ChannelParams{});
        atoms = build_dictionary(d);
        Rng rng(3);
        CMatrix g(d.a_ms.cols(), d.a_bs.cols());
        for (int k = 0; k < 4; ++k) g(std::size_t(3 * k + 1), std::size_t(5 * k + 2)) = complex_normal(rng);
        target = vec(d.a_ms * g * d.a_bs.adjoint()) + complex_normal_matrix(atoms.rows(), 1, rng, 1e-4);
        opts.sparsity_cap = 16;
    }
};

void BM_BatchOmpPrepared(benchmark::State& state) {
    const OmpFixture f;
    const OmpDictionary prepared(f.atoms);
    for (auto _ : state) benchmark::DoNotOptimize(batch_omp(f.target, prepared, f.opts));
}
BENCHMARK(BM_BatchOmpPrepared)->Unit(benchmark::kMicrosecond);

void BM_BatchOmpWithGram(benchmark::State& state) {
    const OmpFixture f;
    for (auto _ : state) benchmark::DoNotOptimize(batch_omp(f.target, f.atoms, f.opts));
}
BENCHMARK(BM_BatchOmpWithGram)->Unit(benchmark::kMicrosecond);

void BM_NaiveOmp(benchmark::State& state) {
    const OmpFixture f;
    for (auto _ : state) benchmark::DoNotOptimize(naive_omp(f.target, f.atoms, f.opts));
}
BENCHMARK(BM_NaiveOmp)->Unit(benchmark::kMicrosecond);

void BM_EstimatorInstance(benchmark::State& state) {
    ExperimentConfig cfg;
    cfg.snr_grid_db = {15};
    const Workspace ws(cfg.channel);
    const auto channels = trial_channels(cfg, 0);
    const TrialCell cell = make_cell(cfg, channels[0], 0, 0, 0);
    const Variant v = Variant::parse("rank_aware");
    Rng rng(4);
    for (auto _ : state)
        benchmark::DoNotOptimize(run_estimator(v, cell.observation, cell.block, cfg, ws, nullptr, rng));
}
BENCHMARK(BM_EstimatorInstance)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
