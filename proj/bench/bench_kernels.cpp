// Serial vs OpenMP kernels on the default scenario geometry.

#include <benchmark/benchmark.h>

#include "xcfo/kernels.hpp"
#include "xcfo/synthesis.hpp"

using namespace xcfo;

namespace {

struct Fixture {
    ScenarioConfig cfg = default_scenario();
    GroundTruth truth;
    std::vector<cvec> waveforms;
    cvec y;

    Fixture() {
        cfg.noise_var = 0.0;
        Rng rng = substream(1, 0, 0);
        truth = draw_ground_truth(cfg, rng);
        for (const auto& p : cfg.preambles) waveforms.push_back(assemble_preamble(p));
        y = synthesize_clean(cfg, truth);
    }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

template <auto Kernel>
void bm_accumulate(benchmark::State& state) {
    const auto& f = fixture();
    cvec out(f.y.size());
    for (auto _ : state) {
        std::fill(out.begin(), out.end(), cd{});
        Kernel(out, f.waveforms, f.truth.delays, f.truth.omegas, f.truth.alphas, f.cfg.frame_len);
        benchmark::DoNotOptimize(out.data());
    }
}

template <auto Kernel>
void bm_grid(benchmark::State& state) {
    const auto& f = fixture();
    cvec out(static_cast<std::size_t>(f.cfg.num_bs * f.cfg.num_frames * 2));
    for (auto _ : state) {
        Kernel(f.y, f.cfg.preambles, f.truth.delays, f.cfg.num_frames, f.cfg.frame_len, out);
        benchmark::DoNotOptimize(out.data());
    }
}

}  // namespace

BENCHMARK(bm_accumulate<kernels::accumulate_model_serial>)->Name("accumulate_model/serial");
BENCHMARK(bm_accumulate<kernels::accumulate_model_omp>)->Name("accumulate_model/omp");
BENCHMARK(bm_grid<kernels::correlation_grid_serial>)->Name("correlation_grid/serial");
BENCHMARK(bm_grid<kernels::correlation_grid_omp>)->Name("correlation_grid/omp");

BENCHMARK_MAIN();
