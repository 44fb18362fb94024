#pragma once

#include <cstddef>

#include "streamforge/linalg.hpp"
#include "streamforge/types.hpp"

namespace streamforge {

// Rectified-flow noise schedule on a uniform grid: alpha(t) = 1 - t,
// sigma(t) = t. Kept behind an interface point (alpha/sigma accessors) so a
// variance-preserving variant can be swapped in.
struct NoiseSchedule {
    std::size_t n_steps = 48;
    Vec times;  // n_steps + 1 ascending grid times in [0, 1]

    double alpha(double t) const { return 1.0 - t; }
    double sigma(double t) const { return t; }
};

// Uniform rectified-flow grid with n_steps >= 2.
NoiseSchedule make_schedule(std::size_t n_steps);

// alpha(t) * x0 + sigma(t) * eps. Throws std::invalid_argument for t outside
// [0, 1] or shape mismatch.
Mat add_noise(const Mat& x0, double t, const Mat& eps, const NoiseSchedule& sched);

}  // namespace streamforge
