#include "streamforge/schedule.hpp"

#include <stdexcept>

namespace streamforge {

NoiseSchedule make_schedule(std::size_t n_steps) {
    if (n_steps < 2) throw std::invalid_argument("make_schedule: n_steps must be >= 2");
    NoiseSchedule s;
    s.n_steps = n_steps;
    s.times.resize(n_steps + 1);
    for (std::size_t i = 0; i <= n_steps; ++i)
        s.times[i] = static_cast<double>(i) / static_cast<double>(n_steps);
    return s;
}

Mat add_noise(const Mat& x0, double t, const Mat& eps, const NoiseSchedule& sched) {
    if (t < 0.0 || t > 1.0) throw std::invalid_argument("add_noise: t must be in [0, 1]");
    if (!x0.same_shape(eps)) throw std::invalid_argument("add_noise: shape mismatch");
    const double a = sched.alpha(t);
    const double s = sched.sigma(t);
    Mat out = x0;
    for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] = a * out.a[i] + s * eps.a[i];
    return out;
}

}  // namespace streamforge
