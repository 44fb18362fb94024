#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "streamforge/critic.hpp"
#include "streamforge/eval.hpp"
#include "streamforge/guidance.hpp"
#include "streamforge/optim.hpp"
#include "streamforge/student.hpp"
#include "streamforge/trajectory.hpp"
#include "streamforge/world.hpp"

namespace streamforge {

// Exact block posterior wrapped as a student-shaped predictor.
BlockPredictor oracle_predictor(const GaussianWorld& world, const NoiseSchedule& sched,
                                std::size_t block_size);

struct OdeDataset {
    std::vector<Trajectory> trajectories;
};

// One seeded teacher rollout per (condition, replicate).
OdeDataset build_ode_dataset(const GaussianWorld& world,
                             const std::vector<MultimodalCondition>& conditions,
                             const NoiseSchedule& sched, std::size_t rollouts_per_condition,
                             std::uint64_t seed);

// Mean over the k subsampled grid timesteps and all blocks of
// ||g(x_t^b, t, c) - x0^b||^2, with teacher-forced context (the clean blocks
// of the trajectory endpoint).
double ode_loss(const StudentParams& params, const Trajectory& traj, const SamplerGrid& grid,
                const NoiseSchedule& sched, std::size_t block_size, StudentGrads* grads);

// Loss only, for an arbitrary predictor (oracle comparisons).
double ode_loss_value(const BlockPredictor& predict, const Trajectory& traj,
                      const SamplerGrid& grid, const NoiseSchedule& sched, std::size_t block_size,
                      std::size_t d);

struct ConvergenceCriterion {
    std::size_t window = 200;
    double rel_improvement = 1e-3;
};

struct TrainLogRow {
    std::size_t step = 0;
    double loss_g = 0.0;
    double loss_c = 0.0;
    double grad_norm_g = 0.0;
    bool has_eval = false;
    double eval_frechet = 0.0;
    double eval_sync = 0.0;
    bool ema_active = false;
};

struct TrainLog {
    std::vector<TrainLogRow> rows;
    bool converged = false;
    bool aborted = false;
    std::string diagnostic;
    std::size_t best_step = 0;
    double best_eval_frechet = 0.0;
    double final_eval_frechet = 0.0;
    bool peak_then_degrade = false;

    std::string to_csv() const;
};

struct OdeTrainResult {
    StudentParams params;
    TrainLog log;
};

// Resumable snapshot of the ODE training loop: parameters, optimizer
// moments and the convergence-window bookkeeping. Serialized as one flat
// LTv1 vector.
struct OdeCheckpoint {
    Vec params;
    Vec m;
    Vec v;
    std::size_t adam_t = 0;
    std::size_t step = 0;
    Vec window_losses;
    double prev_window_mean = 0.0;
    bool has_prev_window = false;

    Vec serialize() const;
    static OdeCheckpoint deserialize(const Vec& flat);
};

// AdamW descent on ode_loss until the windowed relative improvement falls
// below the criterion or max_steps is hit. The log records which one
// terminated training. Throws DivergenceError on non-finite loss. A resumed
// run replays exactly the trajectory of an uninterrupted one.
OdeTrainResult train_ode(StudentParams init, const OdeDataset& dataset, double lr,
                         ConvergenceCriterion conv, std::size_t max_steps, const SamplerGrid& grid,
                         const NoiseSchedule& sched, std::size_t block_size, std::uint64_t seed,
                         const OdeCheckpoint* resume = nullptr, OdeCheckpoint* out_state = nullptr);

struct DmdConfig {
    // Reference-scale defaults; the desk preset scales the rates by 1000
    // while keeping the 5:1 generator/critic ratio.
    double lr_generator = 4e-6;
    double lr_critic = 8e-7;
    std::size_t update_ratio = 5;  // critic updates per generator update
    std::size_t critic_warmup = 20;
    std::size_t lr_warmup_steps = 0;  // linear generator-LR ramp; keeps the 5:1 and 2x ratios
    double ema_decay = 0.99;
    std::size_t ema_start = 200;
    CfgScales teacher_cfg;  // teacher score query only; critic sees the raw condition
    double tau_min = 0.02;
    double tau_max = 0.98;
    std::size_t batch_size = 8;
    std::size_t total_steps = 300;  // generator updates
    double beta1 = 0.0;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
    bool normalize_score_diff = false;

    std::size_t num_blocks = 7;
    std::size_t block_size = 3;
    SampleMode rollout_mode = SampleMode::kDeterministic;

    std::size_t eval_every = 20;
    std::size_t eval_rollouts = 300;
    int sync_max_offset = 3;

    void validate() const;
};

// x0-parameterized score oracles used inside the DMD updates. Tests inject
// frozen or closed-form variants here.
using ScoreFn = std::function<Mat(const Mat& x_tau, double tau, const MultimodalCondition& c)>;

struct DmdHooks {
    ScoreFn teacher;
    ScoreFn critic;
};

// Teacher score with per-modality classifier-free guidance, built from one
// null query plus one single-modality query per channel.
ScoreFn make_teacher_score(const GaussianWorld& world, const NoiseSchedule& sched, CfgScales cfg);
ScoreFn make_critic_score(const CriticParams& critic);
DmdHooks make_dmd_hooks(const GaussianWorld& world, const NoiseSchedule& sched,
                        const CriticParams& critic, CfgScales cfg);

struct DmdStepStats {
    double proxy_loss = 0.0;  // mean ||s_theta - s_psi||^2 per element
    double grad_norm = 0.0;
    bool ok = true;  // false: non-finite rollout, step aborted (mode-collapse suspect)
};

// Averaged Eq.(2)-style generator gradient over a fresh on-policy batch:
// -(s_theta - s_psi) dx0hat/dphi with both score terms held constant.
DmdStepStats dmd_generator_gradient(const StudentParams& gen, const DmdHooks& hooks,
                                    const std::vector<MultimodalCondition>& conditions,
                                    const DmdConfig& cfg, const SamplerGrid& grid,
                                    const NoiseSchedule& sched, Rng& rng, StudentGrads& out);

DmdStepStats dmd_generator_step(StudentParams& gen, AdamW& opt, const DmdHooks& hooks,
                                const std::vector<MultimodalCondition>& conditions,
                                const DmdConfig& cfg, const SamplerGrid& grid,
                                const NoiseSchedule& sched, Rng& rng);

// One critic denoising-regression step on fresh generator rollouts
// (rollouts held constant).
double dmd_critic_step(CriticParams& critic, AdamW& opt, const StudentParams& gen,
                       const std::vector<MultimodalCondition>& conditions, const DmdConfig& cfg,
                       const SamplerGrid& grid, const NoiseSchedule& sched, Rng& rng);

// Mean squared Frechet distance between fitted rollout Gaussians and the
// analytic world Gaussian, averaged over conditions (flattened videos).
double eval_frechet_to_world(const StudentParams& params, const GaussianWorld& world,
                             const std::vector<MultimodalCondition>& conditions,
                             std::size_t num_blocks, std::size_t rollouts, const SamplerGrid& grid,
                             const NoiseSchedule& sched, SampleMode mode, std::uint64_t seed);

// Mean sync confidence between the condition audio envelope and generated
// motion across rollouts.
double eval_sync_to_audio(const StudentParams& params, const GaussianWorld& world,
                          const std::vector<MultimodalCondition>& conditions,
                          std::size_t num_blocks, std::size_t rollouts, const SamplerGrid& grid,
                          const NoiseSchedule& sched, SampleMode mode, int max_offset,
                          std::uint64_t seed);

struct DmdTrainResult {
    StudentParams generator;
    Vec ema;       // EMA parameter vector
    Vec best_ema;  // checkpoint with the lowest eval Frechet
    TrainLog log;
    std::size_t critic_steps_taken = 0;
};

// Two-phase loop: critic warmup, then alternating blocks of update_ratio
// critic steps and one generator step. EMA tracks the generator from
// ema_start onward (mirrors it before); periodic evals select the best-EMA
// checkpoint, operationalizing the short effective learning window.
DmdTrainResult train_dmd(StudentParams gen, CriticParams critic,
                         const std::vector<MultimodalCondition>& train_conditions,
                         const std::vector<MultimodalCondition>& eval_conditions,
                         const GaussianWorld& world, const DmdConfig& cfg, const SamplerGrid& grid,
                         const NoiseSchedule& sched, std::uint64_t seed);

struct ExposureBiasCurves {
    Vec teacher_forced;  // per-block Frechet vs the analytic block marginal
    Vec self_rollout;
    Vec gap;  // self_rollout - teacher_forced
};

// Per-block distribution drift under true-prefix contexts vs the model's
// own rollout contexts.
ExposureBiasCurves exposure_bias_probe(const StudentParams& params, const GaussianWorld& world,
                                       const std::vector<MultimodalCondition>& conditions,
                                       std::size_t num_blocks, std::size_t samples_per_condition,
                                       const SamplerGrid& grid, const NoiseSchedule& sched,
                                       SampleMode mode, std::uint64_t seed);

}  // namespace streamforge
