#pragma once

#include "streamforge/rng.hpp"
#include "streamforge/schedule.hpp"
#include "streamforge/types.hpp"
#include "streamforge/world.hpp"

namespace streamforge {

// Deterministic teacher denoising trajectory. states[i] is the latent at
// grid time t = 1 - i/N, so states[0] is the pure-noise draw and states[N]
// is the teacher's final x0 prediction.
struct Trajectory {
    std::vector<Mat> states;
    MultimodalCondition condition;

    std::size_t n_steps() const { return states.empty() ? 0 : states.size() - 1; }
    const Mat& endpoint() const { return states.back(); }
};

// Euler integration of the probability-flow ODE from t=1 to t=0 using the
// exact teacher posterior mean (velocity (x - x0hat)/t on the rectified
// schedule).
Trajectory teacher_ode_rollout(const GaussianWorld& world, const MultimodalCondition& c,
                               const NoiseSchedule& sched, const Mat& z);

// Convenience: draws z from rng, then rolls out.
Trajectory teacher_ode_rollout(const GaussianWorld& world, const MultimodalCondition& c,
                               const NoiseSchedule& sched, Rng& rng);

}  // namespace streamforge
