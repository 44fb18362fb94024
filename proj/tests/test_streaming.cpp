#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "streamforge/distill.hpp"
#include "streamforge/errors.hpp"
#include "streamforge/streaming.hpp"

using namespace streamforge;

namespace {

constexpr std::size_t kD = 4;
constexpr std::size_t kDc = 2;
constexpr std::size_t kB = 3;

MultimodalCondition static_condition(std::uint64_t seed) {
    Rng rng = Rng::substream(seed, "static");
    MultimodalCondition c;
    c.text_emb.resize(kDc);
    c.img_emb.resize(kDc);
    for (auto& v : c.text_emb) v = rng.normal();
    for (auto& v : c.img_emb) v = rng.normal();
    return c;
}

Vec smooth_audio(std::size_t frames, std::uint64_t seed) {
    Rng rng = Rng::substream(seed, "audio");
    Vec a(frames);
    const double phase = rng.uniform();
    for (std::size_t f = 0; f < frames; ++f)
        a[f] = std::sin(0.41 * static_cast<double>(f) + phase) +
               0.5 * std::sin(0.13 * static_cast<double>(f));
    return a;
}

KVEntry entry(std::size_t block, double fill) {
    Mat f(kB, kD, fill);
    return KVEntry{block, std::move(f)};
}

}  // namespace

TEST_CASE("AHIS cache policy") {
    SUBCASE("first S blocks become sinks, the rest roll") {
        AhisCache cache(3, 2);
        for (std::size_t j = 0; j <= 6; ++j) cache.insert(entry(j, static_cast<double>(j)));
        REQUIRE(cache.sinks().size() == 3);
        REQUIRE(cache.rolling().size() == 2);
        CHECK(cache.sinks()[0].block_index == 0);
        CHECK(cache.sinks()[1].block_index == 1);
        CHECK(cache.sinks()[2].block_index == 2);
        CHECK(cache.rolling()[0].block_index == 5);
        CHECK(cache.rolling()[1].block_index == 6);

        const auto ctx = cache.context();
        REQUIRE(ctx.size() == 5);
        const std::size_t want[] = {0, 1, 2, 5, 6};
        for (std::size_t i = 0; i < 5; ++i) CHECK(ctx[i].block_index == want[i]);

        // ordering is stable across repeated reads
        const auto ctx2 = cache.context();
        for (std::size_t i = 0; i < 5; ++i) CHECK(ctx2[i].block_index == ctx[i].block_index);
    }
    SUBCASE("AHIS(0, R) degenerates to a sliding window") {
        AhisCache cache(0, 2);
        for (std::size_t j = 0; j < 9; ++j) cache.insert(entry(j, 0.0));
        const auto ctx = cache.context();
        REQUIRE(ctx.size() == 2);
        CHECK(ctx[0].block_index == 7);
        CHECK(ctx[1].block_index == 8);
    }
    SUBCASE("size never exceeds S + R for any insert sequence") {
        AhisCache cache(3, 2);
        for (std::size_t j = 0; j < 123; ++j) {
            cache.insert(entry(j, 0.0));
            CHECK(cache.size() <= 5);
        }
    }
    SUBCASE("out-of-order insert is a contract violation") {
        AhisCache cache(3, 2);
        cache.insert(entry(4, 0.0));
        CHECK_THROWS_AS(cache.insert(entry(4, 0.0)), ContractViolation);
        CHECK_THROWS_AS(cache.insert(entry(2, 0.0)), ContractViolation);
    }
    SUBCASE("sink features are byte-immutable across inserts") {
        AhisCache cache(2, 2);
        Rng rng(3);
        Mat f0(kB, kD), f1(kB, kD);
        for (auto& v : f0.a) v = rng.normal();
        for (auto& v : f1.a) v = rng.normal();
        cache.insert(KVEntry{0, f0});
        cache.insert(KVEntry{1, f1});
        for (std::size_t j = 2; j < 64; ++j) cache.insert(entry(j, static_cast<double>(j)));
        CHECK(std::memcmp(cache.sinks()[0].feature.a.data(), f0.a.data(),
                          f0.a.size() * sizeof(double)) == 0);
        CHECK(std::memcmp(cache.sinks()[1].feature.a.data(), f1.a.data(),
                          f1.a.size() * sizeof(double)) == 0);
    }
}

TEST_CASE("audio windower") {
    SUBCASE("block 0 window is left-padded with zeros") {
        AudioWindower w(3, 3, 3);
        for (int i = 0; i < 6; ++i) w.push(1.0 + i);
        REQUIRE(w.ready(0));
        const auto win = w.window(0);
        REQUIRE(win.has_value());
        REQUIRE(win->size() == 9);
        for (int i = 0; i < 3; ++i) CHECK((*win)[i] == 0.0);
        for (int i = 0; i < 6; ++i) CHECK((*win)[3 + i] == doctest::Approx(1.0 + i));
    }
    SUBCASE("a block is not ready until its look-ahead frame arrives") {
        AudioWindower w(3, 3, 3);
        for (int i = 0; i < 7; ++i) w.push(0.5);  // block 1 needs frames through index 8
        CHECK(!w.ready(1));
        CHECK(!w.window(1).has_value());
        w.push(0.5);
        CHECK(!w.ready(1));
        w.push(0.5);
        CHECK(w.ready(1));
    }
    SUBCASE("end of stream truncates the look-ahead") {
        AudioWindower w(3, 2, 3);
        for (int i = 0; i < 6; ++i) w.push(static_cast<double>(i));
        CHECK(!w.ready(1));
        w.end_stream();
        CHECK(w.ready(1));
        const auto win = w.window(1);
        REQUIRE(win.has_value());
        // covers [1, 9) clamped to 6 frames -> frames 1..5
        REQUIRE(win->size() == 5);
        for (int i = 0; i < 5; ++i) CHECK((*win)[i] == doctest::Approx(1.0 + i));
    }
    SUBCASE("readiness is monotone") {
        AudioWindower w(3, 3, 3);
        bool was_ready = false;
        for (int i = 0; i < 30; ++i) {
            w.push(0.1);
            if (was_ready) CHECK(w.ready(0));
            was_ready = w.ready(0);
        }
    }
}

TEST_CASE("decode_block") {
    Rng rng(5);
    Mat latents(kB, kD);
    for (auto& v : latents.a) v = rng.normal();

    SUBCASE("identity decoder echoes the latents") {
        CHECK(max_abs(decode_block(latents, Mat::identity(kD)) - latents) == 0.0);
    }
    SUBCASE("zero latents decode to zero pixels") {
        CHECK(max_abs(decode_block(Mat(kB, kD), Mat::identity(kD))) == 0.0);
    }
    SUBCASE("fixture map matches an independent matrix multiply") {
        Mat dec(2, kD);
        for (auto& v : dec.a) v = rng.normal();
        const Mat px = decode_block(latents, dec);
        REQUIRE(px.rows == kB);
        REQUIRE(px.cols == 2);
        for (std::size_t r = 0; r < kB; ++r)
            for (std::size_t p = 0; p < 2; ++p) {
                double want = 0.0;
                for (std::size_t k = 0; k < kD; ++k) want += dec(p, k) * latents(r, k);
                CHECK(px(r, p) == doctest::Approx(want).epsilon(1e-12));
            }
    }
}

TEST_CASE("virtual-clock stream obeys the pipeline algebra exactly") {
    Rng rng(7);
    const StudentParams p = make_student(4, kD, kDc, 0.2, rng);
    const NoiseSchedule sched = make_schedule(12);
    const SamplerGrid grid = make_sampler_grid({12, 9, 6, 3}, sched);
    const MultimodalCondition c = static_condition(8);
    const Vec audio = smooth_audio(200, 9);

    StreamConfig scfg;
    scfg.num_blocks = 50;
    scfg.block_size = kB;
    scfg.latent_dim = kD;
    scfg.delays.denoise_ns = 30'000'000;
    scfg.delays.decode_ns = 20'000'000;
    scfg.clock = ClockMode::kVirtual;

    scfg.pipeline = PipelineMode::kSequential;
    AhisCache cache_seq(3, 2);
    const StreamResult seq = run_stream(p, c, audio, cache_seq, grid, sched, Mat::identity(kD),
                                        scfg, 42);

    scfg.pipeline = PipelineMode::kPipelined;
    AhisCache cache_pipe(3, 2);
    const StreamResult pipe = run_stream(p, c, audio, cache_pipe, grid, sched, Mat::identity(kD),
                                         scfg, 42);

    CHECK(seq.report.steady_state_period_ns == 50'000'000);
    CHECK(pipe.report.steady_state_period_ns == 30'000'000);
    CHECK(seq.report.first_frame_latency_ns == 50'000'000);
    CHECK(pipe.report.first_frame_latency_ns == 50'000'000);

    // pixel outputs are independent of the pipeline mode, bit for bit
    REQUIRE(seq.pixel_blocks.size() == pipe.pixel_blocks.size());
    for (std::size_t j = 0; j < seq.pixel_blocks.size(); ++j)
        for (std::size_t i = 0; i < seq.pixel_blocks[j].a.size(); ++i)
            CHECK(seq.pixel_blocks[j].a[i] == pipe.pixel_blocks[j].a[i]);

    // emission order is strictly by block index with monotone timestamps
    for (std::size_t j = 1; j < pipe.timings.size(); ++j) {
        CHECK(pipe.timings[j].block_index == j);
        CHECK(pipe.timings[j].emit_ns > pipe.timings[j - 1].emit_ns);
    }
    // per-block stage timestamps are monotone
    for (const StageTiming& t : pipe.timings) {
        CHECK(t.audio_ready_ns <= t.denoise_start_ns);
        CHECK(t.denoise_start_ns <= t.denoise_end_ns);
        CHECK(t.denoise_end_ns <= t.decode_start_ns);
        CHECK(t.decode_start_ns <= t.decode_end_ns);
        CHECK(t.decode_end_ns <= t.emit_ns);
    }
    CHECK(seq.max_context_entries <= 5);
    CHECK(pipe.max_context_entries <= 5);
    CHECK(seq.report.stall_count == 0);

    // audio cadence shifts the first-frame latency by the window wait
    scfg.audio_cadence_ns = 1'000'000;
    AhisCache cache_c(3, 2);
    const StreamResult paced = run_stream(p, c, audio, cache_c, grid, sched, Mat::identity(kD),
                                          scfg, 42);
    // window for block 0 completes with frame 5, then one denoise + one decode
    CHECK(paced.report.first_frame_latency_ns == 5 * 1'000'000 + 50'000'000);
    for (std::size_t i = 0; i < paced.pixel_blocks[0].a.size(); ++i)
        CHECK(paced.pixel_blocks[0].a[i] == seq.pixel_blocks[0].a[i]);
}

TEST_CASE("wall-clock stream stays within 15 percent of the pipeline algebra") {
    Rng rng(11);
    const StudentParams p = make_student(4, kD, kDc, 0.2, rng);
    const NoiseSchedule sched = make_schedule(12);
    const SamplerGrid grid = make_sampler_grid({12, 9, 6, 3}, sched);
    const MultimodalCondition c = static_condition(12);
    const Vec audio = smooth_audio(100, 13);

    StreamConfig scfg;
    scfg.num_blocks = 24;
    scfg.block_size = kB;
    scfg.latent_dim = kD;
    scfg.delays.denoise_ns = 12'000'000;
    scfg.delays.decode_ns = 8'000'000;
    scfg.clock = ClockMode::kWall;

    scfg.pipeline = PipelineMode::kSequential;
    AhisCache cache_seq(3, 2);
    const StreamResult seq = run_stream(p, c, audio, cache_seq, grid, sched, Mat::identity(kD),
                                        scfg, 77);

    scfg.pipeline = PipelineMode::kPipelined;
    AhisCache cache_pipe(3, 2);
    const StreamResult pipe = run_stream(p, c, audio, cache_pipe, grid, sched, Mat::identity(kD),
                                         scfg, 77);

    const double seq_period = static_cast<double>(seq.report.steady_state_period_ns);
    const double pipe_period = static_cast<double>(pipe.report.steady_state_period_ns);
    INFO("sequential period = ", seq_period, " pipelined period = ", pipe_period);
    CHECK(std::fabs(seq_period - 20e6) < 0.15 * 20e6);
    CHECK(std::fabs(pipe_period - 12e6) < 0.15 * 12e6);

    // identical pixels across clock and pipeline modes
    StreamConfig vcfg = scfg;
    vcfg.clock = ClockMode::kVirtual;
    AhisCache cache_v(3, 2);
    const StreamResult virt = run_stream(p, c, audio, cache_v, grid, sched, Mat::identity(kD),
                                         vcfg, 77);
    for (std::size_t j = 0; j < virt.pixel_blocks.size(); ++j)
        for (std::size_t i = 0; i < virt.pixel_blocks[j].a.size(); ++i) {
            CHECK(virt.pixel_blocks[j].a[i] == pipe.pixel_blocks[j].a[i]);
            CHECK(virt.pixel_blocks[j].a[i] == seq.pixel_blocks[j].a[i]);
        }
}

TEST_CASE("streamed blocks equal the offline rollout under the same cache policy") {
    Rng rng(15);
    const StudentParams p = make_student(4, kD, kDc, 0.2, rng);
    const NoiseSchedule sched = make_schedule(12);
    const SamplerGrid grid = make_sampler_grid({12, 9, 6, 3}, sched);
    const MultimodalCondition c = static_condition(16);
    const Vec audio = smooth_audio(60, 17);

    StreamConfig scfg;
    scfg.num_blocks = 10;
    scfg.block_size = kB;
    scfg.latent_dim = kD;
    scfg.clock = ClockMode::kVirtual;

    AhisCache cache(3, 2);
    const StreamResult sr = run_stream(p, c, audio, cache, grid, sched, Mat::identity(kD), scfg, 5);

    MultimodalCondition full = c;
    full.audio = audio;
    AhisCache cache2(3, 2);
    Rng rollout_rng(Rng::mix(Rng::mix(5, "stream"), "unused"));
    // the engine derives per-block randomness from substream(seed, "stream") then "block"/j
    const std::uint64_t stream_seed = Rng::mix(5, "stream");
    for (std::size_t j = 0; j < scfg.num_blocks; ++j) {
        Rng block_rng = Rng::substream(stream_seed, "block", j);
        const auto ctx = cache2.context();
        const BlockSample bs = few_step_sample_block(p, full, ctx, grid, sched, kB, j, block_rng,
                                                     SampleMode::kDeterministic);
        cache2.insert(KVEntry{j, bs.clean});
        for (std::size_t i = 0; i < bs.clean.a.size(); ++i)
            CHECK(sr.pixel_blocks[j].a[i] == bs.clean.a[i]);
    }
}

TEST_CASE("event log is structured and ordered") {
    Rng rng(19);
    const StudentParams p = make_student(4, kD, kDc, 0.2, rng);
    const NoiseSchedule sched = make_schedule(12);
    const SamplerGrid grid = make_sampler_grid({12, 9, 6, 3}, sched);

    StreamConfig scfg;
    scfg.num_blocks = 3;
    scfg.block_size = kB;
    scfg.latent_dim = kD;
    scfg.clock = ClockMode::kVirtual;

    AhisCache cache(3, 2);
    const StreamResult sr = run_stream(p, static_condition(20), smooth_audio(30, 21), cache, grid,
                                       sched, Mat::identity(kD), scfg, 1);
    REQUIRE(sr.events.size() == 3 * 4);
    CHECK(sr.events[0].find("block_index=0 stage=audio_ready") == 0);
    CHECK(sr.events[1].find("block_index=0 stage=denoise") == 0);
    CHECK(sr.events[2].find("block_index=0 stage=decode") == 0);
    CHECK(sr.events[3].find("block_index=0 stage=emit") == 0);
    for (const auto& line : sr.events) {
        CHECK(line.find("t_start_ns=") != std::string::npos);
        CHECK(line.find("t_end_ns=") != std::string::npos);
    }
}

TEST_CASE("identity drift probe shapes and oracle flatness") {
    // the exact-oracle predictor needs the world's correlation to span the
    // whole probe horizon
    const std::size_t num_blocks = 20;
    const GaussianWorld w = make_world(kD, num_blocks * kB, kDc, 0.6, 1.0, 23);
    const NoiseSchedule sched = make_schedule(12);
    std::vector<std::size_t> fine;
    for (std::size_t i = 12; i >= 1; --i) fine.push_back(i);
    const SamplerGrid grid = make_sampler_grid(fine, sched);
    MultimodalCondition c = static_condition(24);
    c.audio = smooth_audio(num_blocks * kB, 25);

    const std::vector<CachePolicy> policies = {CachePolicy::ahis(3, 2), CachePolicy::sliding(5),
                                               CachePolicy::unbounded()};
    const auto curves = identity_drift_probe(oracle_predictor(w, sched, kB), w, c, num_blocks, kB,
                                             policies, 64, grid, sched,
                                             SampleMode::kDeterministic, 3);
    REQUIRE(curves.size() == 3);
    CHECK(curves[0].policy == "ahis(3,2)");
    CHECK(curves[1].policy == "sliding(5)");
    CHECK(curves[2].policy == "unbounded");
    for (const auto& curve : curves) {
        CHECK(curve.per_block.size() == num_blocks);
        // the exact model stays near mu_c everywhere: drift is sampling noise
        for (double v : curve.per_block) CHECK(v < 0.35);
    }
}
