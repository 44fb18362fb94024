#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "streamforge/conditions.hpp"
#include "streamforge/distill.hpp"
#include "streamforge/streaming.hpp"

namespace streamforge {

// Fully resolved run configuration. Precedence: preset defaults, then
// config-file keys, then command-line flags. Every command echoes the
// resolved config into a manifest next to its artifacts.
struct RunConfig {
    // world
    std::size_t d = 8;
    std::size_t d_c = 4;
    std::size_t frames = 21;
    std::size_t block_size = 3;
    std::size_t n_steps = 48;
    double rho = 0.6;
    double base_var = 1.0;

    // student
    std::size_t k = 4;
    std::vector<std::size_t> grid_indices = {48, 36, 24, 12};
    double init_scale = 0.05;

    // conditions
    std::size_t n_conditions = 40;
    double clean_fraction = 0.8;
    double dim_fraction = 0.1;
    double noisy_fraction = 0.1;
    QualityThresholds thresholds;
    std::size_t n_eval_conditions = 3;
    bool filter_enabled = true;

    // ODE stage
    std::size_t rollouts_per_condition = 2;
    double ode_lr = 1e-2;
    std::size_t ode_max_steps = 6000;
    ConvergenceCriterion convergence;

    // DMD stage
    DmdConfig dmd;
    std::size_t critic_buckets = 8;
    std::size_t critic_init_samples = 24;  // per bucket
    double critic_init_ridge = 1e-3;

    // streaming
    std::size_t cache_sinks = 3;
    std::size_t cache_rolling = 2;
    std::size_t pre_context = 3;
    std::size_t look_ahead = 3;
    double denoise_delay_ms = 30.0;
    double decode_delay_ms = 20.0;
    double audio_cadence_ms = 0.0;
    double playback_fps = 16.0;
    std::size_t stream_blocks = 50;
    std::size_t pixel_dim = 8;
    PipelineMode pipeline = PipelineMode::kPipelined;
    ClockMode clock = ClockMode::kVirtual;

    // run
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    std::string preset = "desk";

    std::size_t num_blocks() const { return frames / block_size; }
};

// Applies one of {smoke, desk, paper-scale-doc}.
void apply_preset(RunConfig& cfg, const std::string& name);

// key = value lines, '#' comments. Unknown keys are an error.
void apply_config_file(RunConfig& cfg, const std::string& path);
void apply_kv(RunConfig& cfg, const std::string& key, const std::string& value);

// Deterministic manifest body (out_dir is echoed as "." so identical runs
// into different directories stay byte-identical).
std::string config_manifest(const RunConfig& cfg);
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// Derived objects.
NoiseSchedule schedule_of(const RunConfig& cfg);
SamplerGrid grid_of(const RunConfig& cfg, const NoiseSchedule& sched);
GaussianWorld world_of(const RunConfig& cfg);
Mat decoder_of(const RunConfig& cfg);
StreamConfig stream_config_of(const RunConfig& cfg);

// Parameter snapshots: LTv1 flat vector plus a sidecar text manifest
// carrying (k, d, d_c, grid).
void save_student(const std::string& dir, const std::string& name, const StudentParams& params,
                  const SamplerGrid& grid);
StudentParams load_student(const std::string& dir, const std::string& name);

// Condition bundles: one rank-2 tensor (n x (2 d_c + F)) plus flags in the
// manifest.
void save_conditions(const std::string& path, const std::vector<MultimodalCondition>& conditions);
std::vector<MultimodalCondition> load_conditions(const std::string& path, std::size_t d_c);

std::size_t env_thread_cap();

}  // namespace streamforge
