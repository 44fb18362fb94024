#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "streamforge/cache.hpp"
#include "streamforge/student.hpp"
#include "streamforge/types.hpp"
#include "streamforge/world.hpp"

namespace streamforge {

// Anchor-heavy identity sinks: the first S inserted blocks become permanent
// sink entries; the rest roll through a FIFO of capacity R. Total footprint
// never exceeds S + R. AHIS(0, R) degenerates to a plain sliding window.
class AhisCache final : public ContextCache {
  public:
    AhisCache(std::size_t sink_capacity, std::size_t rolling_capacity)
        : sink_cap_(sink_capacity), roll_cap_(rolling_capacity) {}

    void insert(KVEntry entry) override;
    std::vector<KVEntry> context() const override;
    std::size_t size() const override { return sinks_.size() + rolling_.size(); }
    void clear() override {
        sinks_.clear();
        rolling_.clear();
        has_last_ = false;
    }

    std::size_t capacity() const { return sink_cap_ + roll_cap_; }
    const std::vector<KVEntry>& sinks() const { return sinks_; }
    const std::deque<KVEntry>& rolling() const { return rolling_; }

  private:
    std::size_t sink_cap_, roll_cap_;
    std::vector<KVEntry> sinks_;
    std::deque<KVEntry> rolling_;
    std::size_t last_index_ = 0;
    bool has_last_ = false;
};

struct CachePolicy {
    enum class Kind { kAhis, kUnbounded };
    Kind kind = Kind::kAhis;
    std::size_t sinks = 3;
    std::size_t rolling = 2;

    static CachePolicy ahis(std::size_t s, std::size_t r) {
        return CachePolicy{Kind::kAhis, s, r};
    }
    static CachePolicy sliding(std::size_t r) { return CachePolicy{Kind::kAhis, 0, r}; }
    static CachePolicy unbounded() { return CachePolicy{Kind::kUnbounded, 0, 0}; }

    std::unique_ptr<ContextCache> make() const;
    std::string name() const;
};

// Overlapped audio windowing: block j's window covers frames
// [j*b - pre_context, (j+1)*b + look_ahead), zero-padded on the left edge
// and clamped at the stream end. A block is ready once every frame through
// (j+1)*b + look_ahead - 1 has arrived or the stream has ended.
class AudioWindower {
  public:
    AudioWindower(std::size_t frames_per_block, std::size_t pre_context, std::size_t look_ahead)
        : b_(frames_per_block), pre_(pre_context), look_(look_ahead) {}

    void push(double frame) {
        if (ended_) throw ContractViolation("AudioWindower: push after end of stream");
        buffer_.push_back(frame);
    }
    void end_stream() { ended_ = true; }

    bool ready(std::size_t block_index) const;
    std::optional<Vec> window(std::size_t block_index) const;

    std::size_t arrived() const { return buffer_.size(); }
    bool ended() const { return ended_; }
    const Vec& buffer() const { return buffer_; }

  private:
    std::size_t b_, pre_, look_;
    Vec buffer_;
    bool ended_ = false;
};

enum class PipelineMode { kSequential, kPipelined };
enum class ClockMode { kVirtual, kWall };

struct StageDelays {
    std::int64_t denoise_ns = 0;
    std::int64_t decode_ns = 0;
};

struct StageTiming {
    std::size_t block_index = 0;
    std::int64_t audio_ready_ns = 0;
    std::int64_t denoise_start_ns = 0;
    std::int64_t denoise_end_ns = 0;
    std::int64_t decode_start_ns = 0;
    std::int64_t decode_end_ns = 0;
    std::int64_t emit_ns = 0;
};

struct StreamReport {
    std::int64_t first_frame_latency_ns = 0;
    double throughput_fps = 0.0;
    std::int64_t steady_state_period_ns = 0;
    std::size_t stall_count = 0;

    std::string to_csv() const;
};

struct StreamConfig {
    std::size_t num_blocks = 0;
    std::size_t block_size = 3;
    std::size_t latent_dim = 8;
    StageDelays delays;
    std::int64_t audio_cadence_ns = 0;  // frame i arrives at i * cadence; 0 = prebuffered
    PipelineMode pipeline = PipelineMode::kPipelined;
    ClockMode clock = ClockMode::kVirtual;
    double playback_fps = 16.0;  // latent-equivalent fps for the stall deadline
    std::size_t pre_context = 3;
    std::size_t look_ahead = 3;
    std::size_t max_threads = 2;  // STREAMFORGE_THREADS cap
};

struct StreamResult {
    std::vector<Mat> pixel_blocks;  // by block index
    StreamReport report;
    std::vector<StageTiming> timings;
    std::vector<std::string> events;  // line-delimited (block_index, stage, t_start_ns, t_end_ns)
    std::size_t max_context_entries = 0;
};

// Deterministic linear decode (b x d) -> (b x p) after the configured
// synthetic delay.
Mat decode_block(const Mat& latent_block, const Mat& decoder, std::int64_t delay_ns = 0);

// Streams blocks as their audio windows become ready: denoise (few-step
// sample with the cache context), insert into the cache, decode, emit in
// block order. Pipelined mode overlaps block j's denoise with block j-1's
// decode through a depth-1 handoff; pixel outputs are independent of
// pipeline mode, clock mode and injected delays. The virtual clock runs the
// same schedule as discrete events, making every output byte-reproducible.
StreamResult run_stream(const BlockPredictor& predict, const MultimodalCondition& c_static,
                        const Vec& audio, ContextCache& cache, const SamplerGrid& grid,
                        const NoiseSchedule& sched, const Mat& decoder, const StreamConfig& scfg,
                        std::uint64_t seed);

StreamResult run_stream(const StudentParams& params, const MultimodalCondition& c_static,
                        const Vec& audio, ContextCache& cache, const SamplerGrid& grid,
                        const NoiseSchedule& sched, const Mat& decoder, const StreamConfig& scfg,
                        std::uint64_t seed);

// Per-block distance between the mean generated block (over rollouts) and
// the world conditional mean, for each cache policy. The toy analog of
// long-horizon identity drift.
struct DriftCurve {
    std::string policy;
    Vec per_block;  // RMS offset from mu_c per block
};

std::vector<DriftCurve> identity_drift_probe(const BlockPredictor& predict,
                                             const GaussianWorld& world,
                                             const MultimodalCondition& c, std::size_t num_blocks,
                                             std::size_t block_size,
                                             const std::vector<CachePolicy>& policies,
                                             std::size_t rollouts, const SamplerGrid& grid,
                                             const NoiseSchedule& sched, SampleMode mode,
                                             std::uint64_t seed);

}  // namespace streamforge
