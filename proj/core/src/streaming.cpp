#include "streamforge/streaming.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "streamforge/eval.hpp"

namespace streamforge {

void AhisCache::insert(KVEntry entry) {
    if (has_last_ && entry.block_index <= last_index_)
        throw ContractViolation("AhisCache: insert must be strictly newer than stored blocks");
    last_index_ = entry.block_index;
    has_last_ = true;
    if (sinks_.size() < sink_cap_) {
        sinks_.push_back(std::move(entry));
        return;
    }
    if (roll_cap_ == 0) return;  // pure-sink cache: later blocks are dropped
    rolling_.push_back(std::move(entry));
    if (rolling_.size() > roll_cap_) rolling_.pop_front();
}

std::vector<KVEntry> AhisCache::context() const {
    std::vector<KVEntry> out;
    out.reserve(size());
    for (const KVEntry& e : sinks_) out.push_back(e);
    for (const KVEntry& e : rolling_) out.push_back(e);
    return out;
}

std::unique_ptr<ContextCache> CachePolicy::make() const {
    if (kind == Kind::kUnbounded) return std::make_unique<UnboundedCache>();
    return std::make_unique<AhisCache>(sinks, rolling);
}

std::string CachePolicy::name() const {
    if (kind == Kind::kUnbounded) return "unbounded";
    std::ostringstream s;
    if (sinks == 0)
        s << "sliding(" << rolling << ")";
    else
        s << "ahis(" << sinks << "," << rolling << ")";
    return s.str();
}

bool AudioWindower::ready(std::size_t block_index) const {
    if (ended_) return (block_index + 1) * b_ <= buffer_.size();
    const std::size_t needed = (block_index + 1) * b_ + look_;
    return buffer_.size() >= needed;
}

std::optional<Vec> AudioWindower::window(std::size_t block_index) const {
    if (!ready(block_index)) return std::nullopt;
    const auto start =
        static_cast<long>(block_index * b_) - static_cast<long>(pre_);
    const long stop = static_cast<long>((block_index + 1) * b_ + look_);
    Vec w;
    w.reserve(static_cast<std::size_t>(stop - start));
    for (long f = start; f < stop; ++f) {
        if (f < 0) {
            w.push_back(0.0);  // left edge only
        } else if (f < static_cast<long>(buffer_.size())) {
            w.push_back(buffer_[static_cast<std::size_t>(f)]);
        }
        // right edge truncates at the final frame
    }
    return w;
}

Mat decode_block(const Mat& latent_block, const Mat& decoder, std::int64_t delay_ns) {
    if (decoder.cols != latent_block.cols)
        throw std::invalid_argument("decode_block: decoder input dim mismatch");
    if (delay_ns > 0) std::this_thread::sleep_for(std::chrono::nanoseconds(delay_ns));
    return latent_block * transpose(decoder);
}

std::string StreamReport::to_csv() const {
    std::ostringstream out;
    out << "first_frame_latency_ns,throughput_fps,steady_state_period_ns,stall_count\n";
    out << first_frame_latency_ns << ',' << format_double(throughput_fps) << ','
        << steady_state_period_ns << ',' << stall_count << '\n';
    return out.str();
}

namespace {

// Depth-bounded handoff between the denoise and decode workers.
class Handoff {
  public:
    explicit Handoff(std::size_t capacity) : capacity_(capacity) {}

    void push(std::size_t block) {
        std::unique_lock lk(mu_);
        not_full_.wait(lk, [&] { return items_.size() < capacity_; });
        items_.push_back(block);
        not_empty_.notify_one();
    }

    std::size_t pop() {
        std::unique_lock lk(mu_);
        not_empty_.wait(lk, [&] { return !items_.empty(); });
        const std::size_t block = items_.front();
        items_.pop_front();
        not_full_.notify_one();
        return block;
    }

  private:
    std::mutex mu_;
    std::condition_variable not_full_, not_empty_;
    std::deque<std::size_t> items_;
    std::size_t capacity_;
};

struct BlockWork {
    Mat latents;
    Mat pixels;
};

}  // namespace

StreamResult run_stream(const BlockPredictor& predict, const MultimodalCondition& c_static,
                        const Vec& audio, ContextCache& cache, const SamplerGrid& grid,
                        const NoiseSchedule& sched, const Mat& decoder, const StreamConfig& scfg,
                        std::uint64_t seed) {
    const std::size_t n = scfg.num_blocks;
    const std::size_t b = scfg.block_size;
    if (n == 0) throw std::invalid_argument("run_stream: num_blocks must be positive");
    if (audio.size() < n * b) throw std::invalid_argument("run_stream: audio shorter than the video");

    AudioWindower windower(b, scfg.pre_context, scfg.look_ahead);

    // Arrival schedule: frame i lands at i * cadence; the windower then
    // gates readiness. ready_at[j] is when the full window for block j is in.
    std::vector<std::int64_t> ready_at(n, 0);
    {
        std::size_t pushed = 0;
        for (std::size_t j = 0; j < n; ++j) {
            while (!windower.ready(j)) {
                if (pushed < audio.size()) {
                    windower.push(audio[pushed]);
                    ++pushed;
                    if (pushed == audio.size()) windower.end_stream();
                } else {
                    throw std::invalid_argument("run_stream: stream ended before block window");
                }
            }
            ready_at[j] = pushed == 0 ? 0
                                      : scfg.audio_cadence_ns * static_cast<std::int64_t>(pushed - 1);
        }
    }

    // Student condition: static embeddings plus the windowed audio stream.
    MultimodalCondition cond = c_static;
    cond.audio = windower.buffer();
    cond.audio.resize(std::max<std::size_t>(cond.audio.size(), n * b), 0.0);

    StreamResult result;
    result.pixel_blocks.resize(n);
    result.timings.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        result.timings[j].block_index = j;
        result.timings[j].audio_ready_ns = ready_at[j];
    }

    const std::uint64_t stream_seed = Rng::mix(seed, "stream");

    auto denoise_compute = [&](std::size_t j) {
        const std::vector<KVEntry> ctx = cache.context();
        result.max_context_entries = std::max(result.max_context_entries, ctx.size());
        if (const auto* ahis = dynamic_cast<const AhisCache*>(&cache);
            ahis != nullptr && ctx.size() > ahis->capacity())
            throw ContractViolation("run_stream: context exceeds the cache budget");
        Rng block_rng = Rng::substream(stream_seed, "block", j);
        BlockSample bs = few_step_sample_block(predict, cond, ctx, grid, sched, b, scfg.latent_dim,
                                               j, block_rng, SampleMode::kDeterministic);
        if (!all_finite(bs.clean))
            throw DivergenceError("run_stream: non-finite latents at block " + std::to_string(j));
        cache.insert(KVEntry{j, bs.clean});
        return bs.clean;
    };

    std::vector<BlockWork> work(n);

    if (scfg.clock == ClockMode::kVirtual) {
        // Discrete-event schedule; the math mirrors the wall-clock workers.
        const std::int64_t td = scfg.delays.denoise_ns;
        const std::int64_t tdec = scfg.delays.decode_ns;
        std::int64_t prev_deposit = 0, prev_decode_start = 0, prev_decode_end = 0, prev_emit = 0;
        for (std::size_t j = 0; j < n; ++j) {
            work[j].latents = denoise_compute(j);
            work[j].pixels = decode_block(work[j].latents, decoder, 0);
            auto& ts = result.timings[j];
            if (scfg.pipeline == PipelineMode::kSequential) {
                ts.denoise_start_ns = std::max(ready_at[j], prev_emit);
                ts.denoise_end_ns = ts.denoise_start_ns + td;
                ts.decode_start_ns = ts.denoise_end_ns;
                ts.decode_end_ns = ts.decode_start_ns + tdec;
                ts.emit_ns = ts.decode_end_ns;
                prev_emit = ts.emit_ns;
            } else {
                ts.denoise_start_ns = std::max(ready_at[j], prev_deposit);
                ts.denoise_end_ns = ts.denoise_start_ns + td;
                const std::int64_t deposit =
                    j == 0 ? ts.denoise_end_ns : std::max(ts.denoise_end_ns, prev_decode_start);
                ts.decode_start_ns = std::max(deposit, prev_decode_end);
                ts.decode_end_ns = ts.decode_start_ns + tdec;
                ts.emit_ns = ts.decode_end_ns;
                prev_deposit = deposit;
                prev_decode_start = ts.decode_start_ns;
                prev_decode_end = ts.decode_end_ns;
            }
        }
    } else {
        const auto t0 = std::chrono::steady_clock::now();
        auto now_ns = [&] {
            return std::chrono::duration_cast<std::chrono::nanoseconds>(
                       std::chrono::steady_clock::now() - t0)
                .count();
        };
        auto wait_until_ns = [&](std::int64_t target) {
            if (target > 0) std::this_thread::sleep_until(t0 + std::chrono::nanoseconds(target));
        };

        const bool threaded = scfg.pipeline == PipelineMode::kPipelined && scfg.max_threads >= 2;
        if (!threaded) {
            for (std::size_t j = 0; j < n; ++j) {
                auto& ts = result.timings[j];
                wait_until_ns(ready_at[j]);
                ts.denoise_start_ns = now_ns();
                work[j].latents = denoise_compute(j);
                if (scfg.delays.denoise_ns > 0)
                    std::this_thread::sleep_for(std::chrono::nanoseconds(scfg.delays.denoise_ns));
                ts.denoise_end_ns = now_ns();
                ts.decode_start_ns = ts.denoise_end_ns;
                work[j].pixels = decode_block(work[j].latents, decoder, scfg.delays.decode_ns);
                ts.decode_end_ns = now_ns();
                ts.emit_ns = ts.decode_end_ns;
            }
        } else {
            Handoff handoff(1);
            std::exception_ptr denoise_error;
            std::thread denoiser([&] {
                try {
                    for (std::size_t j = 0; j < n; ++j) {
                        auto& ts = result.timings[j];
                        wait_until_ns(ready_at[j]);
                        ts.denoise_start_ns = now_ns();
                        work[j].latents = denoise_compute(j);
                        if (scfg.delays.denoise_ns > 0)
                            std::this_thread::sleep_for(
                                std::chrono::nanoseconds(scfg.delays.denoise_ns));
                        ts.denoise_end_ns = now_ns();
                        handoff.push(j);
                    }
                } catch (...) {
                    denoise_error = std::current_exception();
                    handoff.push(n);  // poison pill
                }
            });
            for (std::size_t expected = 0; expected < n; ++expected) {
                const std::size_t j = handoff.pop();
                if (j == n) break;  // denoiser aborted
                auto& ts = result.timings[j];
                ts.decode_start_ns = now_ns();
                work[j].pixels = decode_block(work[j].latents, decoder, scfg.delays.decode_ns);
                ts.decode_end_ns = now_ns();
                ts.emit_ns = ts.decode_end_ns;
            }
            denoiser.join();
            if (denoise_error) std::rethrow_exception(denoise_error);
        }
    }

    for (std::size_t j = 0; j < n; ++j) result.pixel_blocks[j] = std::move(work[j].pixels);

    // Report from timestamps.
    auto& rep = result.report;
    rep.first_frame_latency_ns = result.timings[0].emit_ns;
    const std::int64_t last_emit = result.timings[n - 1].emit_ns;
    rep.throughput_fps = last_emit > 0
                             ? static_cast<double>(n * b) * 1e9 / static_cast<double>(last_emit)
                             : 0.0;
    if (n >= 2) {
        std::vector<std::int64_t> deltas;
        const std::size_t skip = std::min<std::size_t>(n / 5 + 1, n - 2);
        for (std::size_t j = skip + 1; j < n; ++j)
            deltas.push_back(result.timings[j].emit_ns - result.timings[j - 1].emit_ns);
        if (!deltas.empty()) {
            std::sort(deltas.begin(), deltas.end());
            rep.steady_state_period_ns = deltas[deltas.size() / 2];
        }
    }
    const double block_duration_ns = 1e9 * static_cast<double>(b) / scfg.playback_fps;
    for (std::size_t j = 1; j < n; ++j) {
        const double deadline =
            static_cast<double>(result.timings[0].emit_ns) + static_cast<double>(j) * block_duration_ns;
        if (static_cast<double>(result.timings[j].emit_ns) > deadline) ++rep.stall_count;
    }

    // Event log, deterministic order.
    for (const StageTiming& ts : result.timings) {
        auto line = [&](const char* stage, std::int64_t s, std::int64_t e) {
            std::ostringstream o;
            o << "block_index=" << ts.block_index << " stage=" << stage << " t_start_ns=" << s
              << " t_end_ns=" << e;
            result.events.push_back(o.str());
        };
        line("audio_ready", ts.audio_ready_ns, ts.audio_ready_ns);
        line("denoise", ts.denoise_start_ns, ts.denoise_end_ns);
        line("decode", ts.decode_start_ns, ts.decode_end_ns);
        line("emit", ts.emit_ns, ts.emit_ns);
    }
    return result;
}

StreamResult run_stream(const StudentParams& params, const MultimodalCondition& c_static,
                        const Vec& audio, ContextCache& cache, const SamplerGrid& grid,
                        const NoiseSchedule& sched, const Mat& decoder, const StreamConfig& scfg,
                        std::uint64_t seed) {
    StreamConfig cfg = scfg;
    cfg.latent_dim = params.d;
    return run_stream(student_predictor(params), c_static, audio, cache, grid, sched, decoder, cfg,
                      seed);
}

std::vector<DriftCurve> identity_drift_probe(const BlockPredictor& predict,
                                             const GaussianWorld& world,
                                             const MultimodalCondition& c, std::size_t num_blocks,
                                             std::size_t block_size,
                                             const std::vector<CachePolicy>& policies,
                                             std::size_t rollouts, const SamplerGrid& grid,
                                             const NoiseSchedule& sched, SampleMode mode,
                                             std::uint64_t seed) {
    std::vector<DriftCurve> out;
    for (const CachePolicy& policy : policies) {
        DriftCurve curve;
        curve.policy = policy.name();
        std::vector<Mat> block_sums(num_blocks, Mat(block_size, world.dim()));
        for (std::size_t r = 0; r < rollouts; ++r) {
            // Shared seeds across policies: paired comparisons.
            Rng rng = Rng::substream(seed, "drift-rollout", r);
            auto cache = policy.make();
            RolloutResult ro = rollout_video(predict, c, num_blocks, *cache, grid, sched,
                                             block_size, world.dim(), rng, mode, false);
            for (std::size_t j = 0; j < num_blocks; ++j) {
                const Mat blk = ro.video.block(j);
                for (std::size_t i = 0; i < blk.a.size(); ++i) block_sums[j].a[i] += blk.a[i];
            }
        }
        curve.per_block.resize(num_blocks);
        const double inv = 1.0 / static_cast<double>(rollouts);
        for (std::size_t j = 0; j < num_blocks; ++j) {
            const Mat mu = world.block_mean(c, j, block_size);
            double s = 0.0;
            for (std::size_t i = 0; i < mu.a.size(); ++i) {
                const double d = block_sums[j].a[i] * inv - mu.a[i];
                s += d * d;
            }
            curve.per_block[j] = std::sqrt(s / static_cast<double>(mu.a.size()));
        }
        out.push_back(std::move(curve));
    }
    return out;
}

}  // namespace streamforge
