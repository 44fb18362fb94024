#include "streamforge/ablate.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "streamforge/eval.hpp"

namespace streamforge {

std::vector<AblationArm> ablation_matrix() {
    return {
        {"baseline", false, false, false, false},
        {"+curated-conditions", true, false, false, false},
        {"+converged-ode-init", true, true, false, false},
        {"+aggressive-lr", true, true, true, false},
        {"+tuned-teacher-cfg", true, true, true, true},
        {"final-without-curation", false, true, true, true},
    };
}

// The degraded pool leans on dim reference embeddings and noisy audio, the
// two failure-mode inputs the curation stage exists to remove.
static DegradationMix degraded_mix() { return DegradationMix{0.2, 0.4, 0.4}; }

static std::vector<MultimodalCondition> arm_conditions(const RunConfig& cfg,
                                                       const AblationArm& arm,
                                                       std::uint64_t seed) {
    if (arm.curated) {
        Rng rng = Rng::substream(seed, "ablate-cond-clean");
        auto pool = generate_conditions(rng, cfg.n_conditions, DegradationMix{1.0, 0.0, 0.0},
                                        cfg.d_c, cfg.frames);
        return filter_conditions(pool, cfg.thresholds).kept;
    }
    Rng rng = Rng::substream(seed, "ablate-cond-degraded");
    return generate_conditions(rng, cfg.n_conditions, degraded_mix(), cfg.d_c, cfg.frames);
}

AblationResult run_ablation_arm(const RunConfig& cfg, const AblationArm& arm, std::uint64_t seed) {
    const NoiseSchedule sched = schedule_of(cfg);
    const SamplerGrid grid = grid_of(cfg, sched);
    const GaussianWorld world = world_of(cfg);

    const auto train_conditions = arm_conditions(cfg, arm, seed);
    if (train_conditions.empty()) throw std::runtime_error("ablation arm has no conditions");

    Rng eval_rng = Rng::substream(seed, "ablate-eval-cond");
    const auto eval_conditions = generate_conditions(eval_rng, cfg.n_eval_conditions,
                                                     DegradationMix{1.0, 0.0, 0.0}, cfg.d_c,
                                                     cfg.frames);

    const OdeDataset dataset = build_ode_dataset(world, train_conditions, sched,
                                                 cfg.rollouts_per_condition,
                                                 Rng::mix(seed, "ablate-ode-data"));

    Rng init_rng = Rng::substream(seed, "student-init");
    StudentParams init = make_student(cfg.k, cfg.d, cfg.d_c, cfg.init_scale, init_rng);

    // "insufficient init": roughly 5% of a typical convergence run
    const std::size_t ode_steps =
        arm.converged_ode ? cfg.ode_max_steps
                          : std::max<std::size_t>(40, cfg.ode_max_steps / 100);
    OdeTrainResult ode = train_ode(std::move(init), dataset, cfg.ode_lr, cfg.convergence,
                                   ode_steps, grid, sched, cfg.block_size,
                                   Rng::mix(seed, "ablate-ode"));

    DmdConfig dmd_cfg = cfg.dmd;
    dmd_cfg.num_blocks = cfg.num_blocks();
    dmd_cfg.block_size = cfg.block_size;
    if (!arm.aggressive_lr) {
        dmd_cfg.lr_generator *= 0.5;
        dmd_cfg.lr_critic *= 0.5;
    }
    dmd_cfg.teacher_cfg = arm.tuned_cfg ? CfgScales{1.0, 1.0, 2.0} : CfgScales{1.0, 1.0, 1.0};

    Rng critic_rng = Rng::substream(seed, "ablate-critic-init");
    CriticParams critic = critic_init_from_world(world, sched, train_conditions,
                                                 cfg.critic_buckets, cfg.critic_init_samples,
                                                 cfg.critic_init_ridge, critic_rng);

    DmdTrainResult dmd = train_dmd(std::move(ode.params), std::move(critic), train_conditions,
                                   eval_conditions, world, dmd_cfg, grid, sched,
                                   Rng::mix(seed, "ablate-dmd"));

    StudentParams best = dmd.generator;
    student_from_vec(best, dmd.best_ema);

    AblationResult res;
    res.arm = arm.name;
    res.ode_steps = ode.log.rows.empty() ? 0 : ode.log.rows.back().step;
    res.ode_converged = ode.log.converged;
    res.dmd_completed = !dmd.log.aborted;
    res.frechet = eval_frechet_to_world(best, world, eval_conditions, cfg.num_blocks(),
                                        2 * cfg.dmd.eval_rollouts, grid, sched,
                                        cfg.dmd.rollout_mode, Rng::mix(seed, "ablate-final"));
    res.sync_confidence = eval_sync_to_audio(best, world, eval_conditions, cfg.num_blocks(),
                                             std::max<std::size_t>(16, cfg.dmd.eval_rollouts / 4),
                                             grid, sched, cfg.dmd.rollout_mode,
                                             cfg.dmd.sync_max_offset,
                                             Rng::mix(seed, "ablate-final-sync"));
    return res;
}

std::vector<AblationResult> run_ablation(const RunConfig& cfg, std::uint64_t seed) {
    std::vector<AblationResult> rows;
    for (const AblationArm& arm : ablation_matrix()) rows.push_back(run_ablation_arm(cfg, arm, seed));
    return rows;
}

std::string ablation_csv(const std::vector<AblationResult>& rows, std::uint64_t seed) {
    std::ostringstream out;
    out << "arm,frechet,sync_confidence,ode_steps,ode_converged,dmd_completed,seed\n";
    for (const AblationResult& r : rows)
        out << r.arm << ',' << format_double(r.frechet) << ',' << format_double(r.sync_confidence)
            << ',' << r.ode_steps << ',' << (r.ode_converged ? 1 : 0) << ','
            << (r.dmd_completed ? 1 : 0) << ',' << seed << '\n';
    return out.str();
}

static const char kStateMagic[4] = {'S', 'F', 'S', 'T'};

void state_write(const std::string& path, const Vec& data) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("state_write: cannot open " + path);
    f.write(kStateMagic, 4);
    const std::uint64_t n = data.size();
    f.write(reinterpret_cast<const char*>(&n), 8);
    f.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!f) throw std::runtime_error("state_write: write failed for " + path);
}

Vec state_read(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("state_read: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kStateMagic, 4) != 0)
        throw std::runtime_error("state_read: bad magic in " + path);
    std::uint64_t n = 0;
    f.read(reinterpret_cast<char*>(&n), 8);
    Vec data(n);
    f.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!f) throw std::runtime_error("state_read: truncated state in " + path);
    return data;
}

}  // namespace streamforge
