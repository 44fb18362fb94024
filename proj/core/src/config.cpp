#include "streamforge/config.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "streamforge/eval.hpp"
#include "streamforge/ltv.hpp"

namespace streamforge {

void apply_preset(RunConfig& cfg, const std::string& name) {
    cfg.preset = name;
    if (name == "desk") {
        cfg = RunConfig{};  // the struct defaults are the desk preset
        cfg.preset = name;
        cfg.dmd.lr_generator = 4e-3;  // reference rates x1000 at toy curvature
        cfg.dmd.lr_critic = 8e-4;
        cfg.dmd.total_steps = 500;
        cfg.dmd.lr_warmup_steps = 100;
        cfg.dmd.batch_size = 24;
        cfg.dmd.eval_every = 25;
        cfg.dmd.eval_rollouts = 256;
        cfg.dmd.teacher_cfg = CfgScales{1.0, 1.0, 1.0};
        cfg.dmd.num_blocks = 7;
        cfg.dmd.block_size = 3;
    } else if (name == "smoke") {
        cfg = RunConfig{};
        cfg.preset = name;
        cfg.d = 4;
        cfg.d_c = 2;
        cfg.frames = 6;
        cfg.n_steps = 12;
        cfg.grid_indices = {12, 9, 6, 3};
        cfg.n_conditions = 10;
        cfg.n_eval_conditions = 2;
        cfg.ode_max_steps = 4000;
        cfg.convergence.window = 100;
        cfg.dmd.lr_generator = 4e-3;
        cfg.dmd.lr_critic = 8e-4;
        cfg.dmd.lr_warmup_steps = 10;
        cfg.dmd.total_steps = 30;
        cfg.dmd.batch_size = 4;
        cfg.dmd.eval_every = 10;
        cfg.dmd.eval_rollouts = 64;
        cfg.dmd.teacher_cfg = CfgScales{1.0, 1.0, 1.0};
        cfg.dmd.num_blocks = 2;
        cfg.dmd.block_size = 3;
        cfg.dmd.sync_max_offset = 1;
        cfg.critic_init_samples = 12;
        cfg.stream_blocks = 12;
        cfg.pixel_dim = 4;
        cfg.denoise_delay_ms = 5.0;
        cfg.decode_delay_ms = 3.0;
    } else if (name == "paper-scale-doc") {
        // Desk-sized world with the reference-scale hyperparameters; documents
        // the recipe rather than converging quickly at toy curvature.
        cfg = RunConfig{};
        cfg.preset = name;
        cfg.ode_lr = 4e-5;
        cfg.ode_max_steps = 20000;
        cfg.dmd.lr_generator = 4e-6;
        cfg.dmd.lr_critic = 8e-7;
        cfg.dmd.batch_size = 64;
        cfg.dmd.total_steps = 1000;
        cfg.dmd.teacher_cfg = CfgScales{1.0, 1.0, 6.0};
    } else {
        throw std::invalid_argument("unknown preset: " + name);
    }
}

static std::vector<std::size_t> parse_index_list(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(static_cast<std::size_t>(std::stoull(tok)));
    }
    return out;
}

void apply_kv(RunConfig& cfg, const std::string& key, const std::string& value) {
    auto u64 = [&] { return static_cast<std::size_t>(std::stoull(value)); };
    auto f64 = [&] { return std::stod(value); };
    auto b01 = [&] { return value == "1" || value == "true" || value == "on"; };

    if (key == "d") cfg.d = u64();
    else if (key == "d_c") cfg.d_c = u64();
    else if (key == "frames") cfg.frames = u64();
    else if (key == "block_size") cfg.block_size = u64();
    else if (key == "n_steps") cfg.n_steps = u64();
    else if (key == "rho") cfg.rho = f64();
    else if (key == "base_var") cfg.base_var = f64();
    else if (key == "k") cfg.k = u64();
    else if (key == "grid") cfg.grid_indices = parse_index_list(value);
    else if (key == "init_scale") cfg.init_scale = f64();
    else if (key == "n_conditions") cfg.n_conditions = u64();
    else if (key == "clean_fraction") cfg.clean_fraction = f64();
    else if (key == "dim_fraction") cfg.dim_fraction = f64();
    else if (key == "noisy_fraction") cfg.noisy_fraction = f64();
    else if (key == "min_brightness") cfg.thresholds.min_brightness = f64();
    else if (key == "min_sharpness") cfg.thresholds.min_sharpness = f64();
    else if (key == "min_snr_db") cfg.thresholds.min_snr_db = f64();
    else if (key == "n_eval_conditions") cfg.n_eval_conditions = u64();
    else if (key == "filter_enabled") cfg.filter_enabled = b01();
    else if (key == "rollouts_per_condition") cfg.rollouts_per_condition = u64();
    else if (key == "ode_lr") cfg.ode_lr = f64();
    else if (key == "ode_max_steps") cfg.ode_max_steps = u64();
    else if (key == "conv_window") cfg.convergence.window = u64();
    else if (key == "conv_rel_eps") cfg.convergence.rel_improvement = f64();
    else if (key == "dmd_lr_generator") cfg.dmd.lr_generator = f64();
    else if (key == "dmd_lr_critic") cfg.dmd.lr_critic = f64();
    else if (key == "update_ratio") cfg.dmd.update_ratio = u64();
    else if (key == "critic_warmup") cfg.dmd.critic_warmup = u64();
    else if (key == "lr_warmup_steps") cfg.dmd.lr_warmup_steps = u64();
    else if (key == "ema_decay") cfg.dmd.ema_decay = f64();
    else if (key == "ema_start") cfg.dmd.ema_start = u64();
    else if (key == "teacher_cfg_text") cfg.dmd.teacher_cfg.text = f64();
    else if (key == "teacher_cfg_img") cfg.dmd.teacher_cfg.img = f64();
    else if (key == "teacher_cfg_audio") cfg.dmd.teacher_cfg.audio = f64();
    else if (key == "tau_min") cfg.dmd.tau_min = f64();
    else if (key == "tau_max") cfg.dmd.tau_max = f64();
    else if (key == "batch_size") cfg.dmd.batch_size = u64();
    else if (key == "total_steps") cfg.dmd.total_steps = u64();
    else if (key == "normalize_score_diff") cfg.dmd.normalize_score_diff = b01();
    else if (key == "eval_every") cfg.dmd.eval_every = u64();
    else if (key == "eval_rollouts") cfg.dmd.eval_rollouts = u64();
    else if (key == "sync_max_offset") cfg.dmd.sync_max_offset = static_cast<int>(std::stol(value));
    else if (key == "critic_buckets") cfg.critic_buckets = u64();
    else if (key == "critic_init_samples") cfg.critic_init_samples = u64();
    else if (key == "critic_init_ridge") cfg.critic_init_ridge = f64();
    else if (key == "cache_sinks") cfg.cache_sinks = u64();
    else if (key == "cache_rolling") cfg.cache_rolling = u64();
    else if (key == "pre_context") cfg.pre_context = u64();
    else if (key == "look_ahead") cfg.look_ahead = u64();
    else if (key == "denoise_delay_ms") cfg.denoise_delay_ms = f64();
    else if (key == "decode_delay_ms") cfg.decode_delay_ms = f64();
    else if (key == "audio_cadence_ms") cfg.audio_cadence_ms = f64();
    else if (key == "playback_fps") cfg.playback_fps = f64();
    else if (key == "stream_blocks") cfg.stream_blocks = u64();
    else if (key == "pixel_dim") cfg.pixel_dim = u64();
    else if (key == "pipeline")
        cfg.pipeline = value == "sequential" ? PipelineMode::kSequential : PipelineMode::kPipelined;
    else if (key == "clock")
        cfg.clock = value == "wall" ? ClockMode::kWall : ClockMode::kVirtual;
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "out") cfg.out_dir = value;
    else if (key == "preset") apply_preset(cfg, value);
    else throw std::invalid_argument("unknown config key: " + key);
}

static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file: " + path);
    std::string line;
    while (std::getline(f, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line is not key = value: " + line);
        apply_kv(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

std::string config_manifest(const RunConfig& cfg) {
    std::ostringstream o;
    auto kv = [&](const std::string& k, const std::string& v) { o << k << " = " << v << "\n"; };
    auto kvu = [&](const std::string& k, std::size_t v) { kv(k, std::to_string(v)); };
    auto kvf = [&](const std::string& k, double v) { kv(k, format_double(v)); };

    kv("preset", cfg.preset);
    kv("out", ".");
    kv("seed", std::to_string(cfg.seed));
    kvu("d", cfg.d);
    kvu("d_c", cfg.d_c);
    kvu("frames", cfg.frames);
    kvu("block_size", cfg.block_size);
    kvu("n_steps", cfg.n_steps);
    kvf("rho", cfg.rho);
    kvf("base_var", cfg.base_var);
    kvu("k", cfg.k);
    {
        std::ostringstream g;
        for (std::size_t i = 0; i < cfg.grid_indices.size(); ++i)
            g << (i ? "," : "") << cfg.grid_indices[i];
        kv("grid", g.str());
    }
    kvf("init_scale", cfg.init_scale);
    kvu("n_conditions", cfg.n_conditions);
    kvf("clean_fraction", cfg.clean_fraction);
    kvf("dim_fraction", cfg.dim_fraction);
    kvf("noisy_fraction", cfg.noisy_fraction);
    kvf("min_brightness", cfg.thresholds.min_brightness);
    kvf("min_sharpness", cfg.thresholds.min_sharpness);
    kvf("min_snr_db", cfg.thresholds.min_snr_db);
    kvu("n_eval_conditions", cfg.n_eval_conditions);
    kv("filter_enabled", cfg.filter_enabled ? "1" : "0");
    kvu("rollouts_per_condition", cfg.rollouts_per_condition);
    kvf("ode_lr", cfg.ode_lr);
    kvu("ode_max_steps", cfg.ode_max_steps);
    kvu("conv_window", cfg.convergence.window);
    kvf("conv_rel_eps", cfg.convergence.rel_improvement);
    kvf("dmd_lr_generator", cfg.dmd.lr_generator);
    kvf("dmd_lr_critic", cfg.dmd.lr_critic);
    kvu("update_ratio", cfg.dmd.update_ratio);
    kvu("critic_warmup", cfg.dmd.critic_warmup);
    kvu("lr_warmup_steps", cfg.dmd.lr_warmup_steps);
    kvf("ema_decay", cfg.dmd.ema_decay);
    kvu("ema_start", cfg.dmd.ema_start);
    kvf("teacher_cfg_text", cfg.dmd.teacher_cfg.text);
    kvf("teacher_cfg_img", cfg.dmd.teacher_cfg.img);
    kvf("teacher_cfg_audio", cfg.dmd.teacher_cfg.audio);
    kvf("tau_min", cfg.dmd.tau_min);
    kvf("tau_max", cfg.dmd.tau_max);
    kvu("batch_size", cfg.dmd.batch_size);
    kvu("total_steps", cfg.dmd.total_steps);
    kv("normalize_score_diff", cfg.dmd.normalize_score_diff ? "1" : "0");
    kvu("eval_every", cfg.dmd.eval_every);
    kvu("eval_rollouts", cfg.dmd.eval_rollouts);
    kv("sync_max_offset", std::to_string(cfg.dmd.sync_max_offset));
    kvu("critic_buckets", cfg.critic_buckets);
    kvu("critic_init_samples", cfg.critic_init_samples);
    kvf("critic_init_ridge", cfg.critic_init_ridge);
    kvu("cache_sinks", cfg.cache_sinks);
    kvu("cache_rolling", cfg.cache_rolling);
    kvu("pre_context", cfg.pre_context);
    kvu("look_ahead", cfg.look_ahead);
    kvf("denoise_delay_ms", cfg.denoise_delay_ms);
    kvf("decode_delay_ms", cfg.decode_delay_ms);
    kvf("audio_cadence_ms", cfg.audio_cadence_ms);
    kvf("playback_fps", cfg.playback_fps);
    kvu("stream_blocks", cfg.stream_blocks);
    kvu("pixel_dim", cfg.pixel_dim);
    kv("pipeline", cfg.pipeline == PipelineMode::kSequential ? "sequential" : "pipelined");
    kv("clock", cfg.clock == ClockMode::kWall ? "wall" : "virtual");
    return o.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

NoiseSchedule schedule_of(const RunConfig& cfg) { return make_schedule(cfg.n_steps); }

SamplerGrid grid_of(const RunConfig& cfg, const NoiseSchedule& sched) {
    return make_sampler_grid(cfg.grid_indices, sched);
}

GaussianWorld world_of(const RunConfig& cfg) {
    return make_world(cfg.d, cfg.frames, cfg.d_c, cfg.rho, cfg.base_var,
                      Rng::mix(cfg.seed, "world"));
}

Mat decoder_of(const RunConfig& cfg) {
    if (cfg.pixel_dim == cfg.d) return Mat::identity(cfg.d);
    Rng rng = Rng::substream(cfg.seed, "decoder");
    Mat dec(cfg.pixel_dim, cfg.d);
    const double s = 1.0 / std::sqrt(static_cast<double>(cfg.d));
    for (auto& x : dec.a) x = s * rng.normal();
    return dec;
}

StreamConfig stream_config_of(const RunConfig& cfg) {
    StreamConfig s;
    s.num_blocks = cfg.stream_blocks;
    s.block_size = cfg.block_size;
    s.latent_dim = cfg.d;
    s.delays.denoise_ns = static_cast<std::int64_t>(cfg.denoise_delay_ms * 1e6);
    s.delays.decode_ns = static_cast<std::int64_t>(cfg.decode_delay_ms * 1e6);
    s.audio_cadence_ns = static_cast<std::int64_t>(cfg.audio_cadence_ms * 1e6);
    s.pipeline = cfg.pipeline;
    s.clock = cfg.clock;
    s.playback_fps = cfg.playback_fps;
    s.pre_context = cfg.pre_context;
    s.look_ahead = cfg.look_ahead;
    s.max_threads = env_thread_cap();
    return s;
}

void save_student(const std::string& dir, const std::string& name, const StudentParams& params,
                  const SamplerGrid& grid) {
    std::filesystem::create_directories(dir);
    ltv_write(dir + "/" + name + ".ltv", ltv_from_vec(student_to_vec(params)));
    std::ostringstream m;
    m << "k = " << params.k << "\n";
    m << "d = " << params.d << "\n";
    m << "d_c = " << params.d_c << "\n";
    std::ostringstream g;
    for (std::size_t i = 0; i < grid.indices.size(); ++i) g << (i ? "," : "") << grid.indices[i];
    m << "grid = " << g.str() << "\n";
    write_text_file(dir + "/" + name + ".manifest.txt", m.str());
}

StudentParams load_student(const std::string& dir, const std::string& name) {
    const std::string manifest_path = dir + "/" + name + ".manifest.txt";
    if (!std::filesystem::exists(manifest_path))
        throw std::runtime_error("checkpoint manifest not found: " + manifest_path);
    std::size_t k = 0, d = 0, d_c = 0;
    {
        std::istringstream in(read_text_file(manifest_path));
        std::string line;
        while (std::getline(in, line)) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key == "k") k = std::stoull(value);
            else if (key == "d") d = std::stoull(value);
            else if (key == "d_c") d_c = std::stoull(value);
        }
    }
    if (k == 0 || d == 0 || d_c == 0)
        throw std::runtime_error("checkpoint manifest incomplete: " + manifest_path);
    Rng dummy(0);
    StudentParams p = make_student(k, d, d_c, 0.0, dummy);
    student_from_vec(p, vec_from_ltv(ltv_read(dir + "/" + name + ".ltv")));
    return p;
}

void save_conditions(const std::string& path, const std::vector<MultimodalCondition>& conditions) {
    if (conditions.empty()) throw std::invalid_argument("save_conditions: empty list");
    const std::size_t d_c = conditions[0].text_emb.size();
    const std::size_t f = conditions[0].audio.size();
    Mat packed(conditions.size(), 2 * d_c + f);
    for (std::size_t i = 0; i < conditions.size(); ++i) {
        const auto& c = conditions[i];
        for (std::size_t j = 0; j < d_c; ++j) packed(i, j) = c.text_emb[j];
        for (std::size_t j = 0; j < d_c; ++j) packed(i, d_c + j) = c.img_emb[j];
        for (std::size_t j = 0; j < f; ++j) packed(i, 2 * d_c + j) = c.audio[j];
    }
    ltv_write(path, ltv_from_mat(packed));
}

std::vector<MultimodalCondition> load_conditions(const std::string& path, std::size_t d_c) {
    const Mat packed = mat_from_ltv(ltv_read(path));
    if (packed.cols < 2 * d_c) throw std::runtime_error("load_conditions: packed width too small");
    const std::size_t f = packed.cols - 2 * d_c;
    std::vector<MultimodalCondition> out(packed.rows);
    for (std::size_t i = 0; i < packed.rows; ++i) {
        auto& c = out[i];
        c.text_emb.resize(d_c);
        c.img_emb.resize(d_c);
        c.audio.resize(f);
        for (std::size_t j = 0; j < d_c; ++j) c.text_emb[j] = packed(i, j);
        for (std::size_t j = 0; j < d_c; ++j) c.img_emb[j] = packed(i, d_c + j);
        for (std::size_t j = 0; j < f; ++j) c.audio[j] = packed(i, 2 * d_c + j);
    }
    return out;
}

std::size_t env_thread_cap() {
    const char* env = std::getenv("STREAMFORGE_THREADS");
    if (env == nullptr) return 2;
    const long v = std::strtol(env, nullptr, 10);
    return v < 1 ? 1 : static_cast<std::size_t>(v);
}

}  // namespace streamforge
