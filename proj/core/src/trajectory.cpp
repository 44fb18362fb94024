#include "streamforge/trajectory.hpp"

#include <stdexcept>

namespace streamforge {

Trajectory teacher_ode_rollout(const GaussianWorld& world, const MultimodalCondition& c,
                               const NoiseSchedule& sched, const Mat& z) {
    if (z.rows != world.frames() || z.cols != world.dim())
        throw std::invalid_argument("teacher_ode_rollout: noise shape mismatch");
    const std::size_t n = sched.n_steps;
    Trajectory traj;
    traj.condition = c;
    traj.states.reserve(n + 1);
    traj.states.push_back(z);

    Mat x = z;
    for (std::size_t j = n; j >= 1; --j) {
        const double t = sched.times[j];
        const double t_next = sched.times[j - 1];
        const Mat x0 = world.teacher_x0(x, t, c, sched).x0;
        // v = (x - x0hat) / t; Euler step with dt = t_next - t < 0.
        const double scale = (t_next - t) / t;
        for (std::size_t i = 0; i < x.a.size(); ++i) x.a[i] += scale * (x.a[i] - x0.a[i]);
        traj.states.push_back(x);
    }
    return traj;
}

Trajectory teacher_ode_rollout(const GaussianWorld& world, const MultimodalCondition& c,
                               const NoiseSchedule& sched, Rng& rng) {
    Mat z(world.frames(), world.dim());
    for (double& v : z.a) v = rng.normal();
    return teacher_ode_rollout(world, c, sched, z);
}

}  // namespace streamforge
