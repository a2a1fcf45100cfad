#include "graingraph/graph_build.hpp"
#include "graingraph/microsynth.hpp"
#include "graingraph/model.hpp"
#include "graingraph/pipeline.hpp"
#include "graingraph/scan.hpp"

#include <benchmark/benchmark.h>

#include <optional>

using namespace graingraph;

namespace {

ScanField synth_field(int side, int n_grains, std::uint64_t seed) {
    SynthConfig cfg;
    cfg.rows = side;
    cfg.cols = side;
    cfg.n_grains = n_grains;
    cfg.seed = seed;
    return assign_orientations(gen_voronoi(cfg).labels, cfg);
}

void bm_segment(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const ScanField field = synth_field(side, side * side / 400, 11);
    for (auto _ : state) {
        benchmark::DoNotOptimize(segment_grains(field, 5.0, Symmetry::Hexagonal));
    }
    state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(bm_segment)->Arg(128)->Arg(256)->Arg(512);

void bm_build_graph(benchmark::State& state) {
    const int n_grains = static_cast<int>(state.range(0));
    const ScanField field = synth_field(256, n_grains, 7);
    const GrainTable table = ingest_scan(field, IngestConfig{});
    const DiscretizationConfig disc =
        fit_discretization({table}, 10, 4, 0.2, PhiRangeMode::Fixed);
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_graph(table, disc, std::nullopt));
    }
}
BENCHMARK(bm_build_graph)->Arg(50)->Arg(200);

void bm_predict(benchmark::State& state) {
    const int n_grains = static_cast<int>(state.range(0));
    const ScanField field = synth_field(128, n_grains, 3);
    const GrainTable table = ingest_scan(field, IngestConfig{});
    const DiscretizationConfig disc =
        fit_discretization({table}, 10, 4, 0.2, PhiRangeMode::Fixed);
    const GrainGraph g = build_graph(table, disc, std::nullopt);
    ModelConfig mc;
    mc.layers = 2;
    mc.hidden_dim = 12;
    mc.head_hidden = 8;
    mc.seed = 5;
    ParamStore params = init_params(mc, g);
    for (auto _ : state) {
        benchmark::DoNotOptimize(predict(g, params, mc));
    }
}
BENCHMARK(bm_predict)->Arg(20)->Arg(60);

void bm_train_step(benchmark::State& state) {
    const ScanField field = synth_field(128, 40, 9);
    const GrainTable table = ingest_scan(field, IngestConfig{});
    const DiscretizationConfig disc =
        fit_discretization({table}, 10, 4, 0.2, PhiRangeMode::Fixed);
    const GrainGraph g = build_graph(table, disc, std::nullopt);
    ModelConfig mc;
    mc.layers = 2;
    mc.hidden_dim = 12;
    mc.head_hidden = 8;
    mc.seed = 5;
    ParamStore params = init_params(mc, g);
    std::mt19937_64 rng(1);
    for (auto _ : state) {
        Tape tape;
        Var pred = forward_on_tape(tape, g, params, mc, false, rng, nullptr);
        Var target = tape.constant(Tensor::scalar(150.0));
        Var loss = tape.square(tape.sub(pred, target));
        tape.backward(loss);
        benchmark::DoNotOptimize(tape.param_grads(params));
    }
}
BENCHMARK(bm_train_step);

} // namespace

BENCHMARK_MAIN();
