#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "streamforge/streaming.hpp"

using namespace streamforge;

// Engine overhead with zero synthetic delay: pure scheduling plus compute.
static void StreamEngine50Blocks(benchmark::State& state) {
    const RunConfig cfg = sfbench::desk_config();
    const NoiseSchedule sched = schedule_of(cfg);
    const SamplerGrid grid = grid_of(cfg, sched);
    Rng prng(5);
    const StudentParams p = make_student(cfg.k, cfg.d, cfg.d_c, 0.2, prng);
    MultimodalCondition c_static = sfbench::condition_of(cfg, 1);
    c_static.audio.clear();
    const Vec audio = sfbench::condition_of(cfg, 50 * cfg.block_size + 3).audio;

    StreamConfig scfg;
    scfg.num_blocks = 50;
    scfg.block_size = cfg.block_size;
    scfg.latent_dim = cfg.d;
    scfg.pipeline = state.range(0) == 0 ? PipelineMode::kSequential : PipelineMode::kPipelined;
    scfg.clock = ClockMode::kVirtual;

    for (auto _ : state) {
        AhisCache cache(3, 2);
        StreamResult sr =
            run_stream(p, c_static, audio, cache, grid, sched, Mat::identity(cfg.d), scfg, 11);
        benchmark::DoNotOptimize(sr.pixel_blocks.data());
    }
    state.SetItemsProcessed(state.iterations() * 50 * static_cast<std::int64_t>(cfg.block_size));
}
BENCHMARK(StreamEngine50Blocks)->Arg(0)->Arg(1);
