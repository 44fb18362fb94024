#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "streamforge/distill.hpp"
#include "streamforge/trajectory.hpp"

using namespace streamforge;

// Bounds one might hope the posterior-mean oracle meets but which cannot
// hold; kept as failing assertions (WILL_FAIL in CMake) so the measured
// numbers stay visible instead of being silently dropped or loosened.

// A posterior-mean predictor driven through four coarse deterministic
// interpolation steps contracts every covariance mode to roughly 0.52x;
// that variance collapse is the few-step gap the distillation stage exists
// to close, so the 2x-teacher bound is out of reach at k=4.
TEST_CASE("oracle student frechet within 2x of teacher at the default k=4 grid") {
    const GaussianWorld w = make_world(8, 21, 4, 0.6, 1.0, 99);
    const NoiseSchedule sched = make_schedule(48);
    MultimodalCondition c;
    {
        Rng crng = Rng::substream(90, "cond");
        c.text_emb.resize(4);
        c.img_emb.resize(4);
        c.audio.resize(21);
        for (auto& v : c.text_emb) v = crng.normal();
        for (auto& v : c.img_emb) v = crng.normal();
        for (std::size_t f = 0; f < 21; ++f) c.audio[f] = std::sin(0.7 * static_cast<double>(f));
    }

    GaussianSummary analytic;
    analytic.mean = flatten(w.conditional_mean(c));
    analytic.cov = w.full_data_cov();

    const std::size_t n = 2000;
    std::vector<Vec> teacher_endpoints;
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = Rng::substream(91, "teacher", i);
        teacher_endpoints.push_back(flatten(teacher_ode_rollout(w, c, sched, rng).endpoint()));
    }
    const double fd_teacher = gaussian_frechet(fit_gaussian(teacher_endpoints), analytic);

    const SamplerGrid grid = make_sampler_grid({48, 36, 24, 12}, sched);
    const BlockPredictor oracle = oracle_predictor(w, sched, 3);
    std::vector<Vec> samples;
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = Rng::substream(92, "oracle", i);
        UnboundedCache cache;
        samples.push_back(flatten(
            rollout_video(oracle, c, 7, cache, grid, sched, 3, 8, rng, SampleMode::kDeterministic)
                .video.frames));
    }
    const double fd_oracle = gaussian_frechet(fit_gaussian(samples), analytic);

    MESSAGE("teacher 48-step FD = ", fd_teacher, "; oracle k=4 FD = ", fd_oracle,
            "; bound (2x teacher) = ", 2.0 * fd_teacher);
    CHECK(fd_oracle <= 2.0 * fd_teacher);
}

// On trajectory data the flow couples x_t to the endpoint tighter than the
// diffusion posterior does, so the posterior-mean oracle is not the loss
// floor: a converged student beats it ~5x, and the 100x margin over random
// parameters only appears for random scales well above unit.
TEST_CASE("teacher-posterior oracle beats random params by 100x on the ODE loss") {
    const GaussianWorld w = make_world(4, 6, 2, 0.6, 1.0, 41);
    const NoiseSchedule sched = make_schedule(12);
    const SamplerGrid grid = make_sampler_grid({12, 9, 6, 3}, sched);

    std::vector<MultimodalCondition> cs;
    {
        Rng rng = Rng::substream(5, "cond", 0);
        MultimodalCondition c;
        c.text_emb.resize(2);
        c.img_emb.resize(2);
        c.audio.resize(6);
        for (auto& v : c.text_emb) v = rng.normal();
        for (auto& v : c.img_emb) v = rng.normal();
        for (std::size_t f = 0; f < 6; ++f)
            c.audio[f] = std::sin(0.9 * static_cast<double>(f) + rng.uniform());
        cs.push_back(std::move(c));
    }
    const OdeDataset ds = build_ode_dataset(w, cs, sched, 8, 9);

    double oracle = 0.0, random_loss = 0.0;
    Rng rng(2);
    const StudentParams random_p = make_student(4, 4, 2, 1.0, rng);  // unit-scale random weights
    for (const Trajectory& t : ds.trajectories) {
        oracle += ode_loss_value(oracle_predictor(w, sched, 3), t, grid, sched, 3, 4) / 8.0;
        random_loss += ode_loss(random_p, t, grid, sched, 3, nullptr) / 8.0;
    }
    MESSAGE("oracle loss = ", oracle, "; unit-scale random loss = ", random_loss,
            "; ratio = ", random_loss / oracle);
    CHECK(oracle * 100.0 < random_loss);
}
