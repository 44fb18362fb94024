#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "streamforge/config.hpp"

namespace streamforge {

// One row of the ablation matrix: which recipe components are active.
struct AblationArm {
    std::string name;
    bool curated = false;        // clean, filtered conditions vs the degraded mix
    bool converged_ode = false;  // full ODE convergence vs an early-stopped init
    bool aggressive_lr = false;  // recipe rates vs half of them
    bool tuned_cfg = false;      // raised audio guidance on the teacher score
};

struct AblationResult {
    std::string arm;
    double frechet = 0.0;
    double sync_confidence = 0.0;
    bool dmd_completed = false;
    std::size_t ode_steps = 0;
    bool ode_converged = false;
};

// The six-arm matrix: baseline, then one component added per row, plus the
// final configuration without curation.
std::vector<AblationArm> ablation_matrix();

// Trains one arm end to end (conditions -> ODE init -> DMD) and evaluates
// the best-EMA checkpoint on a shared held-out condition set.
AblationResult run_ablation_arm(const RunConfig& cfg, const AblationArm& arm, std::uint64_t seed);

std::vector<AblationResult> run_ablation(const RunConfig& cfg, std::uint64_t seed);

std::string ablation_csv(const std::vector<AblationResult>& rows, std::uint64_t seed);

// Raw float64 state blob for exact training resume (LTv1 stays float32 per
// the tensor-dump contract).
void state_write(const std::string& path, const Vec& data);
Vec state_read(const std::string& path);

}  // namespace streamforge
