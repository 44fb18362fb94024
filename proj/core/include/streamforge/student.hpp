#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "streamforge/cache.hpp"
#include "streamforge/rng.hpp"
#include "streamforge/schedule.hpp"
#include "streamforge/types.hpp"

namespace streamforge {

// k sampler timestep indices on the teacher grid, strictly descending in t,
// starting at t = 1 (pure noise).
struct SamplerGrid {
    std::vector<std::size_t> indices;

    std::size_t k() const { return indices.size(); }
    double time_at(std::size_t i, const NoiseSchedule& sched) const { return sched.times[indices[i]]; }
};

SamplerGrid make_sampler_grid(std::vector<std::size_t> indices, const NoiseSchedule& sched);

// Uniform-stride default: {N, N - N/k, ..., N - (k-1)N/k}.
SamplerGrid default_sampler_grid(std::size_t k, const NoiseSchedule& sched);

// Block-wise causal x0 predictor. Per sampler step i the block prediction is
//   x0hat[f] = W_i x_t[f] + V_i pool(context) + U_i [c_text; c_img; audio[f]] + bias_i
// with pool = mean over all context frames (zero when the context is empty).
// Parameter count is independent of video length.
struct StudentParams {
    struct Step {
        Mat w;     // d x d
        Mat v;     // d x d
        Mat u;     // d x (2 d_c + 1)
        Vec bias;  // d
    };
    std::size_t k = 4;
    std::size_t d = 0;
    std::size_t d_c = 0;
    std::vector<Step> steps;

    std::size_t cond_feature_dim() const { return 2 * d_c + 1; }
};

StudentParams make_student(std::size_t k, std::size_t d, std::size_t d_c, double init_scale, Rng& rng);

// Flat parameter vector (optimizer / EMA / checkpoint layout).
Vec student_to_vec(const StudentParams& p);
void student_from_vec(StudentParams& p, const Vec& v);

// Gradients in the same layout as StudentParams.
struct StudentGrads {
    std::vector<StudentParams::Step> steps;
};
StudentGrads zero_student_grads(const StudentParams& p);
Vec student_grads_to_vec(const StudentGrads& g);
void scale_student_grads(StudentGrads& g, double s);
void accumulate_student_grads(StudentGrads& into, const StudentGrads& from);

// Mean over all context frames; zero vector when empty.
Vec pool_context(const std::vector<KVEntry>& context, std::size_t d);

// Forward pass for one block. Throws ContractViolation when the context
// contains the current or a future block.
Mat student_predict_x0(const StudentParams& params, const Mat& x_t_block, std::size_t step_index,
                       const std::vector<KVEntry>& context, const MultimodalCondition& c,
                       std::size_t block_index);

// Exact gradients of the affine forward map. upstream is dL/dx0hat;
// returns dL/dx_t alongside accumulated parameter gradients.
Mat student_backward(const StudentParams& params, const Mat& x_t_block, std::size_t step_index,
                     const std::vector<KVEntry>& context, const MultimodalCondition& c,
                     std::size_t block_index, const Mat& upstream, StudentGrads& grads);

// Any block-level x0 predictor (trained student, exact world oracle, ...).
using BlockPredictor =
    std::function<Mat(const Mat& x_t_block, double t, std::size_t step_index,
                      const std::vector<KVEntry>& context, const MultimodalCondition& c,
                      std::size_t block_index)>;

BlockPredictor student_predictor(const StudentParams& params);

enum class SampleMode { kDeterministic, kStochastic };

// Record of one block's sampling pass, enough to replay the chain backward.
struct BlockTape {
    std::vector<Mat> xs;    // x at each grid time, k entries
    std::vector<Mat> x0s;   // prediction at each grid time, k entries
    std::vector<double> r;  // k-1 carry coefficients: x_{i+1} = r_i x_i + c_i x0_i (+ noise)
    std::vector<double> cc;
    std::vector<KVEntry> context;
    std::size_t block_index = 0;
};

struct BlockSample {
    Mat clean;  // final x0hat
    BlockTape tape;
};

// k-step block sampler: start from pure noise, predict x0, then either
// deterministically interpolate to the next grid time or re-noise with a
// fresh draw. The final output is the last x0hat.
BlockSample few_step_sample_block(const BlockPredictor& predict, const MultimodalCondition& c,
                                  const std::vector<KVEntry>& context, const SamplerGrid& grid,
                                  const NoiseSchedule& sched, std::size_t block_size,
                                  std::size_t d, std::size_t block_index, Rng& rng,
                                  SampleMode mode);

BlockSample few_step_sample_block(const StudentParams& params, const MultimodalCondition& c,
                                  const std::vector<KVEntry>& context, const SamplerGrid& grid,
                                  const NoiseSchedule& sched, std::size_t block_size,
                                  std::size_t block_index, Rng& rng, SampleMode mode);

// Backpropagate an upstream gradient on the block's clean output through
// the recorded k-step chain. Context entries are treated as constants
// (gradients stop at the cache boundary).
void block_backward(const StudentParams& params, const BlockTape& tape,
                    const MultimodalCondition& c, const Mat& upstream, StudentGrads& grads);

struct RolloutResult {
    LatentVideo video;
    std::vector<BlockTape> tapes;
};

// Sequential block-by-block generation. After each block its clean latent
// is inserted into the cache; the context for block j is whatever the cache
// holds before j. Per-block randomness comes from rng.fork(j) so results do
// not depend on how callers interleave blocks.
RolloutResult rollout_video(const BlockPredictor& predict, const MultimodalCondition& c,
                            std::size_t num_blocks, ContextCache& cache, const SamplerGrid& grid,
                            const NoiseSchedule& sched, std::size_t block_size, std::size_t d,
                            Rng& rng, SampleMode mode, bool keep_tapes = false);

RolloutResult rollout_video(const StudentParams& params, const MultimodalCondition& c,
                            std::size_t num_blocks, ContextCache& cache, const SamplerGrid& grid,
                            const NoiseSchedule& sched, std::size_t block_size, Rng& rng,
                            SampleMode mode, bool keep_tapes = false);

// Full-video backward: slices the upstream per block and runs block_backward
// on each tape.
void rollout_backward(const StudentParams& params, const RolloutResult& rollout,
                      const MultimodalCondition& c, const Mat& upstream, StudentGrads& grads);

}  // namespace streamforge
