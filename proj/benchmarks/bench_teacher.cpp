#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "streamforge/trajectory.hpp"

using namespace streamforge;

static void TeacherPosterior(benchmark::State& state) {
    const RunConfig cfg = sfbench::desk_config();
    const GaussianWorld world = world_of(cfg);
    const NoiseSchedule sched = schedule_of(cfg);
    const MultimodalCondition c = sfbench::condition_of(cfg, cfg.frames);
    Rng rng(1);
    Mat x_t(cfg.frames, cfg.d);
    for (auto& v : x_t.a) v = rng.normal();
    for (auto _ : state) {
        auto out = world.teacher_x0(x_t, 0.5, c, sched);
        benchmark::DoNotOptimize(out.x0.a.data());
    }
}
BENCHMARK(TeacherPosterior);

static void TeacherOdeRollout48(benchmark::State& state) {
    const RunConfig cfg = sfbench::desk_config();
    const GaussianWorld world = world_of(cfg);
    const NoiseSchedule sched = schedule_of(cfg);
    const MultimodalCondition c = sfbench::condition_of(cfg, cfg.frames);
    std::uint64_t i = 0;
    for (auto _ : state) {
        Rng rng = Rng::substream(7, "bench-roll", i++);
        Trajectory t = teacher_ode_rollout(world, c, sched, rng);
        benchmark::DoNotOptimize(t.endpoint().a.data());
    }
}
BENCHMARK(TeacherOdeRollout48);
