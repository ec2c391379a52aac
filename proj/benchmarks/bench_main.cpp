#include <benchmark/benchmark.h>

#include "rdg/audit.hpp"
#include "rdg/dynamics.hpp"
#include "rdg/lyapunov.hpp"
#include "rdg/oracles.hpp"

using namespace rdg;

namespace {

const Graph& torus101() {
    static const Graph g = generate(spec::Torus{101, 101});
    return g;
}

void run_steps(benchmark::State& state, UpdateRule rule, DistortionModel dist) {
    const Graph& g = torus101();
    SimConfig cfg;
    cfg.rule = rule;
    cfg.seed = 1;
    Simulator sim(g, rule, {{0, 1.0}}, dist, 1, initial_state(g, cfg));
    for (auto _ : state) {
        sim.step();
        benchmark::DoNotOptimize(sim.state().now.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.node_count()));
}

void BM_StepDeGroot(benchmark::State& s) { run_steps(s, DeGroot{}, {}); }
void BM_StepEpsDeGroot(benchmark::State& s) { run_steps(s, EpsDeGroot{0.005}, {}); }
void BM_StepEpsDeGrootNoise(benchmark::State& s) {
    run_steps(s, EpsDeGroot{0.005}, {DistortionKind::uniform_noise, 0.0045, 0});
}
void BM_StepEpsDeGrootBias(benchmark::State& s) {
    run_steps(s, EpsDeGroot{0.005}, {DistortionKind::plus_bias, 0.0045, 0});
}
void BM_StepGranular(benchmark::State& s) { run_steps(s, GranularDeGroot{{0.0, 0.5, 1.0}}, {}); }

/// Lyapunov bookkeeping per step: tracker (incremental, full recompute
/// every `range(0)` steps) against a full evaluation each step.
void BM_LyapunovTracker(benchmark::State& state) {
    const Graph g = generate(spec::RandomRegular{2000, 3, 1});
    SimConfig cfg;
    cfg.rule = EpsDeGroot{0.02};
    cfg.seed = 2;
    Simulator sim(g, cfg.rule, {}, {}, 2, initial_state(g, cfg));
    for (int k = 0; k < 50; ++k) sim.step();
    LyapunovTracker tracker(g, {0, 0.981}, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        state.PauseTiming();
        sim.step();
        state.ResumeTiming();
        tracker.observe(sim.state());
    }
}

void BM_LyapunovFull(benchmark::State& state) {
    const Graph g = generate(spec::RandomRegular{2000, 3, 1});
    SimConfig cfg;
    cfg.rule = EpsDeGroot{0.02};
    cfg.seed = 2;
    Simulator sim(g, cfg.rule, {}, {}, 2, initial_state(g, cfg));
    for (int k = 0; k < 50; ++k) sim.step();
    const auto w = slot_weights<double>(g, 0, 0.981);
    for (auto _ : state) {
        state.PauseTiming();
        sim.step();
        state.ResumeTiming();
        benchmark::DoNotOptimize(lyapunov<double>(g, w, sim.state().prev, sim.state().now));
    }
}

void BM_WalkDistribution(benchmark::State& state) {
    const Graph g = generate(spec::Path{2001});
    for (auto _ : state) benchmark::DoNotOptimize(walk_distribution(g, 1000, static_cast<std::size_t>(state.range(0))));
}

void BM_DecayFitTorus(benchmark::State& state) {
    const Graph& g = torus101();
    for (auto _ : state) benchmark::DoNotOptimize(p_t_decay_fit(g, 0, 10, 100));
}

void BM_CheckA3(benchmark::State& state) {
    const auto p = eps_degroot_params(0.02, 0.019);
    double x = 0.3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(check_A3(x, 0.5, eps_degroot_value(x, 0.5, 0.02), p));
        x = x > 0.7 ? 0.3 : x + 1e-3;
    }
}

}  // namespace

BENCHMARK(BM_StepDeGroot)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_StepEpsDeGroot)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_StepEpsDeGrootNoise)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_StepEpsDeGrootBias)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_StepGranular)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_LyapunovTracker)->Arg(1)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_LyapunovFull)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_WalkDistribution)->Arg(100)->Arg(1000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_DecayFitTorus)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CheckA3);

BENCHMARK_MAIN();
