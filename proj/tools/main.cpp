#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "streamforge/ablate.hpp"
#include "streamforge/config.hpp"
#include "streamforge/errors.hpp"
#include "streamforge/ltv.hpp"

namespace fs = std::filesystem;
using namespace streamforge;

namespace {

struct CommonArgs {
    std::string preset = "desk";
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--preset", args.preset, "Configuration preset (smoke|desk|paper-scale-doc)")
        ->check(CLI::IsMember({"smoke", "desk", "paper-scale-doc"}));
    cmd->add_option("--config", args.config_path, "key = value configuration file");
    cmd->add_option("--seed", args.seed, "Master seed; all randomness derives from it");
    cmd->add_option("--out", args.out, "Output directory");
    cmd->add_option("--set", args.sets, "Override a single config key, e.g. --set total_steps=50");
}

// Precedence: preset < config file < --set < --seed/--out flags.
RunConfig resolve(const CommonArgs& args) {
    RunConfig cfg;
    apply_preset(cfg, args.preset);
    if (!args.config_path.empty()) apply_config_file(cfg, args.config_path);
    for (const std::string& kv : args.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got: " + kv);
        apply_kv(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (args.seed) cfg.seed = *args.seed;
    if (args.out) cfg.out_dir = *args.out;
    return cfg;
}

void write_manifest(const RunConfig& cfg, const std::string& command,
                    const std::vector<std::string>& extra = {}) {
    std::ostringstream m;
    m << "command = " << command << "\n";
    m << config_manifest(cfg);
    for (const std::string& line : extra) m << line << "\n";
    write_text_file(cfg.out_dir + "/manifest.txt", m.str());
}

std::vector<MultimodalCondition> make_eval_conditions(const RunConfig& cfg) {
    Rng rng = Rng::substream(cfg.seed, "eval-conditions");
    return generate_conditions(rng, cfg.n_eval_conditions, DegradationMix{1.0, 0.0, 0.0}, cfg.d_c,
                               cfg.frames);
}

int cmd_gen_data(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    const GaussianWorld world = world_of(cfg);
    const NoiseSchedule sched = schedule_of(cfg);

    Rng cond_rng = Rng::substream(cfg.seed, "conditions");
    const auto pool = generate_conditions(
        cond_rng, cfg.n_conditions,
        DegradationMix{cfg.clean_fraction, cfg.dim_fraction, cfg.noisy_fraction}, cfg.d_c,
        cfg.frames);

    std::vector<MultimodalCondition> kept = pool;
    std::vector<std::string> entries;
    entries.push_back("pool_size = " + std::to_string(pool.size()));
    if (cfg.filter_enabled) {
        const FilterResult fr = filter_conditions(pool, cfg.thresholds);
        kept = fr.kept;
        entries.push_back("kept = " + std::to_string(fr.kept.size()));
        entries.push_back("rejected = " + std::to_string(fr.rejected.size()));
    }
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const ConditionQuality q = score_condition(pool[i]);
        std::ostringstream line;
        line << "entry " << i << " brightness=" << format_double(q.brightness)
             << " sharpness=" << format_double(q.sharpness)
             << " snr_db=" << format_double(q.audio_snr_db);
        entries.push_back(line.str());
    }
    if (kept.empty()) throw std::runtime_error("gen-data: every condition was filtered out");

    save_conditions(cfg.out_dir + "/conditions.ltv", kept);
    save_conditions(cfg.out_dir + "/eval_conditions.ltv", make_eval_conditions(cfg));

    const OdeDataset ds = build_ode_dataset(world, kept, sched, cfg.rollouts_per_condition,
                                            Rng::mix(cfg.seed, "ode-data"));
    for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "traj_%05zu.ltv", i);
        ltv_write(cfg.out_dir + "/" + name, ltv_from_mats(ds.trajectories[i].states));
    }
    entries.push_back("trajectories = " + std::to_string(ds.trajectories.size()));
    write_manifest(cfg, "gen-data", entries);
    std::printf("gen-data: %zu conditions kept, %zu trajectories -> %s\n", kept.size(),
                ds.trajectories.size(), cfg.out_dir.c_str());
    return 0;
}

OdeDataset load_dataset(const RunConfig& cfg, const std::string& data_dir,
                        std::vector<MultimodalCondition>& conditions) {
    conditions = load_conditions(data_dir + "/conditions.ltv", cfg.d_c);
    OdeDataset ds;
    for (std::size_t ci = 0; ci < conditions.size(); ++ci) {
        for (std::size_t r = 0; r < cfg.rollouts_per_condition; ++r) {
            char name[64];
            std::snprintf(name, sizeof(name), "traj_%05zu.ltv",
                          ci * cfg.rollouts_per_condition + r);
            Trajectory t;
            t.states = mats_from_ltv(ltv_read(data_dir + "/" + name));
            t.condition = conditions[ci];
            ds.trajectories.push_back(std::move(t));
        }
    }
    return ds;
}

int cmd_train_ode(const RunConfig& cfg, const std::string& data_dir, const std::string& resume_path,
                  std::size_t stop_after) {
    fs::create_directories(cfg.out_dir);
    const NoiseSchedule sched = schedule_of(cfg);
    const SamplerGrid grid = grid_of(cfg, sched);

    std::vector<MultimodalCondition> conditions;
    const OdeDataset ds = load_dataset(cfg, data_dir, conditions);

    Rng init_rng = Rng::substream(cfg.seed, "student-init");
    StudentParams init = make_student(cfg.k, cfg.d, cfg.d_c, cfg.init_scale, init_rng);

    OdeCheckpoint resume_state;
    const OdeCheckpoint* resume = nullptr;
    if (!resume_path.empty()) {
        resume_state = OdeCheckpoint::deserialize(state_read(resume_path));
        resume = &resume_state;
    }
    const std::size_t max_steps = stop_after > 0 ? stop_after : cfg.ode_max_steps;

    OdeCheckpoint out_state;
    const OdeTrainResult res =
        train_ode(std::move(init), ds, cfg.ode_lr, cfg.convergence, max_steps, grid, sched,
                  cfg.block_size, Rng::mix(cfg.seed, "ode-train"), resume, &out_state);

    save_student(cfg.out_dir, "student_ode", res.params, grid);
    state_write(cfg.out_dir + "/student_ode.state", out_state.serialize());
    write_text_file(cfg.out_dir + "/trainlog_ode.csv", res.log.to_csv());
    write_manifest(cfg, "train-ode",
                   {std::string("converged = ") + (res.log.converged ? "1" : "0"),
                    "steps = " + std::to_string(out_state.step)});

    if (!res.log.converged && stop_after == 0) {
        std::fprintf(stderr, "train-ode: stopped at the step cap without converging\n");
        return 3;
    }
    std::printf("train-ode: %s after %zu steps -> %s\n",
                res.log.converged ? "converged" : "checkpointed", out_state.step,
                cfg.out_dir.c_str());
    return 0;
}

int cmd_train_dmd(const RunConfig& cfg, const std::string& data_dir, const std::string& init_dir) {
    fs::create_directories(cfg.out_dir);
    const NoiseSchedule sched = schedule_of(cfg);
    const SamplerGrid grid = grid_of(cfg, sched);
    const GaussianWorld world = world_of(cfg);

    const auto conditions = load_conditions(data_dir + "/conditions.ltv", cfg.d_c);
    std::vector<MultimodalCondition> eval_conditions;
    if (fs::exists(data_dir + "/eval_conditions.ltv"))
        eval_conditions = load_conditions(data_dir + "/eval_conditions.ltv", cfg.d_c);
    else
        eval_conditions = make_eval_conditions(cfg);

    StudentParams gen = load_student(init_dir, "student_ode");

    DmdConfig dmd_cfg = cfg.dmd;
    dmd_cfg.num_blocks = cfg.num_blocks();
    dmd_cfg.block_size = cfg.block_size;

    Rng critic_rng = Rng::substream(cfg.seed, "critic-init");
    CriticParams critic =
        critic_init_from_world(world, sched, conditions, cfg.critic_buckets,
                               cfg.critic_init_samples, cfg.critic_init_ridge, critic_rng);

    const DmdTrainResult res = train_dmd(std::move(gen), std::move(critic), conditions,
                                         eval_conditions, world, dmd_cfg, grid, sched,
                                         Rng::mix(cfg.seed, "dmd-train"));

    save_student(cfg.out_dir, "student_dmd_final", res.generator, grid);
    StudentParams ema = res.generator;
    student_from_vec(ema, res.ema);
    save_student(cfg.out_dir, "student_dmd_ema", ema, grid);
    StudentParams best = res.generator;
    student_from_vec(best, res.best_ema);
    save_student(cfg.out_dir, "student_dmd_best_ema", best, grid);
    write_text_file(cfg.out_dir + "/trainlog_dmd.csv", res.log.to_csv());
    write_manifest(cfg, "train-dmd",
                   {"critic_steps = " + std::to_string(res.critic_steps_taken),
                    "best_step = " + std::to_string(res.log.best_step),
                    "best_eval_frechet = " + format_double(res.log.best_eval_frechet),
                    "final_eval_frechet = " + format_double(res.log.final_eval_frechet),
                    std::string("peak_then_degrade = ") + (res.log.peak_then_degrade ? "1" : "0")});

    if (res.log.aborted) {
        std::fprintf(stderr, "train-dmd: aborted: %s\n", res.log.diagnostic.c_str());
        return 4;
    }
    std::printf("train-dmd: best eval frechet %.4f at step %zu -> %s\n",
                res.log.best_eval_frechet, res.log.best_step, cfg.out_dir.c_str());
    return 0;
}

Vec stream_audio_of(const RunConfig& cfg, const std::string& audio_path) {
    if (!audio_path.empty()) return vec_from_ltv(ltv_read(audio_path));
    Rng rng = Rng::substream(cfg.seed, "stream-audio");
    const auto conds =
        generate_conditions(rng, 1, DegradationMix{1.0, 0.0, 0.0}, cfg.d_c,
                            cfg.stream_blocks * cfg.block_size + cfg.look_ahead);
    return conds[0].audio;
}

int run_stream_command(const RunConfig& cfg, const std::string& ckpt_dir,
                       const std::string& ckpt_name, const std::string& audio_path, bool bench) {
    fs::create_directories(cfg.out_dir);
    const NoiseSchedule sched = schedule_of(cfg);
    const SamplerGrid grid = grid_of(cfg, sched);
    const StudentParams params = load_student(ckpt_dir, ckpt_name);
    const Mat decoder = decoder_of(cfg);
    const Vec audio = stream_audio_of(cfg, audio_path);

    Rng cond_rng = Rng::substream(cfg.seed, "stream-static-cond");
    const auto static_conds =
        generate_conditions(cond_rng, 1, DegradationMix{1.0, 0.0, 0.0}, cfg.d_c, 1);
    MultimodalCondition c_static = static_conds[0];
    c_static.audio.clear();

    const StreamConfig scfg = stream_config_of(cfg);

    auto run_mode = [&](PipelineMode mode, ClockMode clock) {
        StreamConfig m = scfg;
        m.pipeline = mode;
        m.clock = clock;
        AhisCache cache(cfg.cache_sinks, cfg.cache_rolling);
        return run_stream(params, c_static, audio, cache, grid, sched, decoder, m, cfg.seed);
    };

    auto stack_pixels = [&](const std::vector<Mat>& blocks) {
        Mat all(cfg.stream_blocks * cfg.block_size, decoder.rows);
        for (std::size_t j = 0; j < blocks.size(); ++j)
            for (std::size_t r = 0; r < cfg.block_size; ++r)
                for (std::size_t p = 0; p < decoder.rows; ++p)
                    all(j * cfg.block_size + r, p) = blocks[j](r, p);
        return all;
    };

    if (!bench) {
        const StreamResult sr = run_mode(scfg.pipeline, scfg.clock);
        ltv_write(cfg.out_dir + "/pixels.ltv", ltv_from_mat(stack_pixels(sr.pixel_blocks)));
        std::ostringstream events;
        for (const std::string& line : sr.events) events << line << '\n';
        write_text_file(cfg.out_dir + "/events.log", events.str());
        write_text_file(cfg.out_dir + "/stream_report.csv", sr.report.to_csv());
        write_manifest(cfg, "stream",
                       {"max_context_entries = " + std::to_string(sr.max_context_entries)});
        std::printf("stream: %zu blocks, first-frame latency %.1f ms, %.2f fps, %zu stalls\n",
                    cfg.stream_blocks,
                    static_cast<double>(sr.report.first_frame_latency_ns) / 1e6,
                    sr.report.throughput_fps, sr.report.stall_count);
        return 0;
    }

    // bench: wall-clock measurement of both pipeline modes
    const StreamResult seq = run_mode(PipelineMode::kSequential, ClockMode::kWall);
    const StreamResult pipe = run_mode(PipelineMode::kPipelined, ClockMode::kWall);

    bool identical = seq.pixel_blocks.size() == pipe.pixel_blocks.size();
    for (std::size_t j = 0; identical && j < seq.pixel_blocks.size(); ++j)
        identical = seq.pixel_blocks[j].a == pipe.pixel_blocks[j].a;

    ltv_write(cfg.out_dir + "/pixels.ltv", ltv_from_mat(stack_pixels(pipe.pixel_blocks)));
    std::ostringstream events;
    for (const std::string& line : pipe.events) events << line << '\n';
    write_text_file(cfg.out_dir + "/events.log", events.str());

    // Measured wall-clock values; this file is inherently not byte-stable.
    std::ostringstream csv;
    csv << "mode,first_frame_latency_ns,throughput_fps,steady_state_period_ns,stall_count,"
           "identical_pixels\n";
    csv << "sequential," << seq.report.first_frame_latency_ns << ','
        << format_double(seq.report.throughput_fps) << ',' << seq.report.steady_state_period_ns
        << ',' << seq.report.stall_count << ',' << (identical ? 1 : 0) << '\n';
    csv << "pipelined," << pipe.report.first_frame_latency_ns << ','
        << format_double(pipe.report.throughput_fps) << ',' << pipe.report.steady_state_period_ns
        << ',' << pipe.report.stall_count << ',' << (identical ? 1 : 0) << '\n';
    write_text_file(cfg.out_dir + "/bench_timings.csv", csv.str());
    write_manifest(cfg, "bench", {std::string("identical_pixels = ") + (identical ? "1" : "0")});

    const double speedup = static_cast<double>(seq.report.steady_state_period_ns) /
                           static_cast<double>(pipe.report.steady_state_period_ns);
    std::printf("bench: sequential %.2f ms/block, pipelined %.2f ms/block, speedup %.3fx, "
                "pixels identical: %s\n",
                static_cast<double>(seq.report.steady_state_period_ns) / 1e6,
                static_cast<double>(pipe.report.steady_state_period_ns) / 1e6, speedup,
                identical ? "yes" : "NO");
    if (!identical) {
        std::fprintf(stderr, "bench: pipeline modes disagree on pixel output\n");
        return 5;
    }
    return 0;
}

int cmd_ablate(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    const auto rows = run_ablation(cfg, cfg.seed);
    write_text_file(cfg.out_dir + "/ablation.csv", ablation_csv(rows, cfg.seed));

    std::vector<ReportRow> report;
    for (const AblationResult& r : rows) {
        report.push_back({r.arm, "frechet", r.frechet, 2 * cfg.dmd.eval_rollouts, cfg.seed});
        report.push_back({r.arm, "sync_confidence", r.sync_confidence,
                          std::max<std::size_t>(16, cfg.dmd.eval_rollouts / 4), cfg.seed});
    }
    write_text_file(cfg.out_dir + "/eval_report.csv", report_csv(report));
    write_manifest(cfg, "ablate", {"arms = " + std::to_string(rows.size())});

    for (const AblationResult& r : rows)
        std::printf("%-28s frechet %8.4f   sync %7.4f\n", r.arm.c_str(), r.frechet,
                    r.sync_confidence);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Block-autoregressive diffusion distillation and streaming testbed"};
    app.require_subcommand(1);

    CommonArgs gen_args, ode_args, dmd_args, stream_args, bench_args, ablate_args;

    CLI::App* gen = app.add_subcommand("gen-data", "Generate conditions and teacher trajectories");
    add_common(gen, gen_args);

    CLI::App* ode = app.add_subcommand("train-ode", "Trajectory-regression initialization");
    add_common(ode, ode_args);
    std::string ode_data, ode_resume;
    std::size_t ode_stop_after = 0;
    ode->add_option("--data", ode_data, "Directory produced by gen-data")->required();
    ode->add_option("--resume", ode_resume, "Resume from a .state snapshot");
    ode->add_option("--stop-after", ode_stop_after,
                    "Stop after N steps and write a resumable snapshot");

    CLI::App* dmd = app.add_subcommand("train-dmd", "On-policy distribution matching distillation");
    add_common(dmd, dmd_args);
    std::string dmd_data, dmd_init;
    dmd->add_option("--data", dmd_data, "Directory produced by gen-data")->required();
    dmd->add_option("--init", dmd_init, "Directory holding the student_ode checkpoint")->required();

    CLI::App* stream = app.add_subcommand("stream", "Run the streaming engine (virtual clock)");
    add_common(stream, stream_args);
    std::string stream_ckpt, stream_ckpt_name = "student_dmd_best_ema", stream_audio;
    stream->add_option("--ckpt", stream_ckpt, "Checkpoint directory")->required();
    stream->add_option("--ckpt-name", stream_ckpt_name, "Checkpoint base name");
    stream->add_option("--audio", stream_audio, "LTv1 audio vector (generated when omitted)");

    CLI::App* bench = app.add_subcommand("bench", "Wall-clock pipeline benchmark");
    add_common(bench, bench_args);
    std::string bench_ckpt, bench_ckpt_name = "student_dmd_best_ema", bench_audio;
    bench->add_option("--ckpt", bench_ckpt, "Checkpoint directory")->required();
    bench->add_option("--ckpt-name", bench_ckpt_name, "Checkpoint base name");
    bench->add_option("--audio", bench_audio, "LTv1 audio vector (generated when omitted)");

    CLI::App* ablate = app.add_subcommand("ablate", "Run the six-arm recipe ablation matrix");
    add_common(ablate, ablate_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_data(resolve(gen_args));
        if (ode->parsed())
            return cmd_train_ode(resolve(ode_args), ode_data, ode_resume, ode_stop_after);
        if (dmd->parsed()) return cmd_train_dmd(resolve(dmd_args), dmd_data, dmd_init);
        if (stream->parsed())
            return run_stream_command(resolve(stream_args), stream_ckpt, stream_ckpt_name,
                                      stream_audio, false);
        if (bench->parsed())
            return run_stream_command(resolve(bench_args), bench_ckpt, bench_ckpt_name,
                                      bench_audio, true);
        if (ablate->parsed()) return cmd_ablate(resolve(ablate_args));
    } catch (const DivergenceError& e) {
        std::fprintf(stderr, "error: training diverged: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
