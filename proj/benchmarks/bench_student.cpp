#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "streamforge/student.hpp"

using namespace streamforge;

static void StudentBlockSample(benchmark::State& state) {
    const RunConfig cfg = sfbench::desk_config();
    const NoiseSchedule sched = schedule_of(cfg);
    const SamplerGrid grid = grid_of(cfg, sched);
    Rng prng(2);
    const StudentParams p = make_student(cfg.k, cfg.d, cfg.d_c, 0.2, prng);
    const MultimodalCondition c = sfbench::condition_of(cfg, cfg.frames);
    std::uint64_t i = 0;
    for (auto _ : state) {
        Rng rng = Rng::substream(8, "bench-block", i++);
        BlockSample bs = few_step_sample_block(p, c, {}, grid, sched, cfg.block_size, 0, rng,
                                               SampleMode::kDeterministic);
        benchmark::DoNotOptimize(bs.clean.a.data());
    }
}
BENCHMARK(StudentBlockSample);

static void StudentVideoRollout(benchmark::State& state) {
    const RunConfig cfg = sfbench::desk_config();
    const NoiseSchedule sched = schedule_of(cfg);
    const SamplerGrid grid = grid_of(cfg, sched);
    Rng prng(2);
    const StudentParams p = make_student(cfg.k, cfg.d, cfg.d_c, 0.2, prng);
    const MultimodalCondition c = sfbench::condition_of(cfg, cfg.frames);
    std::uint64_t i = 0;
    for (auto _ : state) {
        Rng rng = Rng::substream(9, "bench-roll", i++);
        UnboundedCache cache;
        RolloutResult ro = rollout_video(p, c, cfg.num_blocks(), cache, grid, sched,
                                         cfg.block_size, rng, SampleMode::kDeterministic);
        benchmark::DoNotOptimize(ro.video.frames.a.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.frames));
}
BENCHMARK(StudentVideoRollout);
