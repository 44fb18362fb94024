#include "streamforge/distill.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "streamforge/errors.hpp"

namespace streamforge {

BlockPredictor oracle_predictor(const GaussianWorld& world, const NoiseSchedule& sched,
                                std::size_t block_size) {
    return [&world, &sched, block_size](const Mat& x_t, double t, std::size_t /*step*/,
                                        const std::vector<KVEntry>& ctx,
                                        const MultimodalCondition& c, std::size_t block_index) {
        return world.block_posterior_x0(x_t, t, block_index, block_size, ctx, c, sched);
    };
}

OdeDataset build_ode_dataset(const GaussianWorld& world,
                             const std::vector<MultimodalCondition>& conditions,
                             const NoiseSchedule& sched, std::size_t rollouts_per_condition,
                             std::uint64_t seed) {
    if (conditions.empty()) throw std::invalid_argument("build_ode_dataset: empty conditions");
    OdeDataset ds;
    ds.trajectories.reserve(conditions.size() * rollouts_per_condition);
    for (std::size_t ci = 0; ci < conditions.size(); ++ci) {
        for (std::size_t r = 0; r < rollouts_per_condition; ++r) {
            Rng rng = Rng::substream(seed, "ode-dataset", ci * rollouts_per_condition + r);
            ds.trajectories.push_back(teacher_ode_rollout(world, conditions[ci], sched, rng));
        }
    }
    return ds;
}

// Teacher-forced context for block j: the clean blocks 0..j-1 of the
// trajectory endpoint.
static std::vector<KVEntry> endpoint_context(const Mat& endpoint, std::size_t block_size,
                                             std::size_t block_index) {
    std::vector<KVEntry> ctx;
    for (std::size_t p = 0; p < block_index; ++p) {
        Mat feat(block_size, endpoint.cols);
        for (std::size_t r = 0; r < block_size; ++r)
            for (std::size_t k = 0; k < endpoint.cols; ++k)
                feat(r, k) = endpoint(p * block_size + r, k);
        ctx.push_back(KVEntry{p, std::move(feat)});
    }
    return ctx;
}

static Mat slice_block(const Mat& video, std::size_t block_size, std::size_t j) {
    Mat b(block_size, video.cols);
    for (std::size_t r = 0; r < block_size; ++r)
        for (std::size_t k = 0; k < video.cols; ++k) b(r, k) = video(j * block_size + r, k);
    return b;
}

double ode_loss(const StudentParams& params, const Trajectory& traj, const SamplerGrid& grid,
                const NoiseSchedule& sched, std::size_t block_size, StudentGrads* grads) {
    const std::size_t n = sched.n_steps;
    const Mat& x0 = traj.endpoint();
    const std::size_t num_blocks = x0.rows / block_size;
    const double norm = 1.0 / static_cast<double>(grid.k() * num_blocks);

    double loss = 0.0;
    for (std::size_t i = 0; i < grid.k(); ++i) {
        const std::size_t grid_idx = grid.indices[i];
        if (grid_idx > n) throw std::invalid_argument("ode_loss: grid index off the trajectory");
        const Mat& x_t = traj.states[n - grid_idx];
        for (std::size_t j = 0; j < num_blocks; ++j) {
            const std::vector<KVEntry> ctx = endpoint_context(x0, block_size, j);
            const Mat x_t_block = slice_block(x_t, block_size, j);
            const Mat target = slice_block(x0, block_size, j);
            const Mat pred =
                student_predict_x0(params, x_t_block, i, ctx, traj.condition, j);
            Mat diff = pred - target;
            loss += norm * frobenius_dot(diff, diff);
            if (grads != nullptr) {
                for (auto& v : diff.a) v *= 2.0 * norm;
                student_backward(params, x_t_block, i, ctx, traj.condition, j, diff, *grads);
            }
        }
    }
    return loss;
}

double ode_loss_value(const BlockPredictor& predict, const Trajectory& traj,
                      const SamplerGrid& grid, const NoiseSchedule& sched, std::size_t block_size,
                      std::size_t /*d*/) {
    const std::size_t n = sched.n_steps;
    const Mat& x0 = traj.endpoint();
    const std::size_t num_blocks = x0.rows / block_size;
    const double norm = 1.0 / static_cast<double>(grid.k() * num_blocks);

    double loss = 0.0;
    for (std::size_t i = 0; i < grid.k(); ++i) {
        const double t = grid.time_at(i, sched);
        const Mat& x_t = traj.states[n - grid.indices[i]];
        for (std::size_t j = 0; j < num_blocks; ++j) {
            const std::vector<KVEntry> ctx = endpoint_context(x0, block_size, j);
            const Mat pred = predict(slice_block(x_t, block_size, j), t, i, ctx, traj.condition, j);
            const Mat diff = pred - slice_block(x0, block_size, j);
            loss += norm * frobenius_dot(diff, diff);
        }
    }
    return loss;
}

std::string TrainLog::to_csv() const {
    std::ostringstream out;
    out << "step,loss_g,loss_c,grad_norm_g,eval_frechet,eval_sync,ema_active\n";
    for (const TrainLogRow& r : rows) {
        out << r.step << ',' << format_double(r.loss_g) << ',' << format_double(r.loss_c) << ','
            << format_double(r.grad_norm_g) << ',';
        if (r.has_eval)
            out << format_double(r.eval_frechet) << ',' << format_double(r.eval_sync);
        else
            out << ',';
        out << ',' << (r.ema_active ? 1 : 0) << '\n';
    }
    return out.str();
}

Vec OdeCheckpoint::serialize() const {
    Vec out;
    out.push_back(static_cast<double>(step));
    out.push_back(static_cast<double>(adam_t));
    out.push_back(has_prev_window ? 1.0 : 0.0);
    out.push_back(prev_window_mean);
    out.push_back(static_cast<double>(params.size()));
    out.push_back(static_cast<double>(window_losses.size()));
    out.insert(out.end(), params.begin(), params.end());
    out.insert(out.end(), m.begin(), m.end());
    out.insert(out.end(), v.begin(), v.end());
    out.insert(out.end(), window_losses.begin(), window_losses.end());
    return out;
}

OdeCheckpoint OdeCheckpoint::deserialize(const Vec& flat) {
    if (flat.size() < 6) throw std::invalid_argument("OdeCheckpoint: truncated state");
    OdeCheckpoint ck;
    ck.step = static_cast<std::size_t>(flat[0]);
    ck.adam_t = static_cast<std::size_t>(flat[1]);
    ck.has_prev_window = flat[2] != 0.0;
    ck.prev_window_mean = flat[3];
    const auto n = static_cast<std::size_t>(flat[4]);
    const auto nw = static_cast<std::size_t>(flat[5]);
    if (flat.size() != 6 + 3 * n + nw) throw std::invalid_argument("OdeCheckpoint: size mismatch");
    auto it = flat.begin() + 6;
    ck.params.assign(it, it + n);
    it += n;
    ck.m.assign(it, it + n);
    it += n;
    ck.v.assign(it, it + n);
    it += n;
    ck.window_losses.assign(it, it + nw);
    return ck;
}

OdeTrainResult train_ode(StudentParams init, const OdeDataset& dataset, double lr,
                         ConvergenceCriterion conv, std::size_t max_steps, const SamplerGrid& grid,
                         const NoiseSchedule& sched, std::size_t block_size, std::uint64_t seed,
                         const OdeCheckpoint* resume, OdeCheckpoint* out_state) {
    if (dataset.trajectories.empty()) throw std::invalid_argument("train_ode: empty dataset");

    OdeTrainResult res;
    res.params = std::move(init);
    Vec flat = student_to_vec(res.params);

    Vec window_losses;
    double prev_window_mean = std::numeric_limits<double>::infinity();
    bool has_prev_window = false;
    std::size_t start_step = 1;

    AdamW opt = [&] {
        const AdamW::Options options{lr, 0.9, 0.999, 1e-8, 0.0};
        if (resume == nullptr) return AdamW(flat.size(), options);
        if (resume->params.size() != flat.size())
            throw std::invalid_argument("train_ode: resume state does not match the student");
        flat = resume->params;
        student_from_vec(res.params, flat);
        window_losses = resume->window_losses;
        prev_window_mean = resume->prev_window_mean;
        has_prev_window = resume->has_prev_window;
        start_step = resume->step + 1;
        return AdamW(options, resume->m, resume->v, static_cast<int>(resume->adam_t));
    }();

    std::vector<std::size_t> order(dataset.trajectories.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t order_epoch = static_cast<std::size_t>(-1);
    auto reshuffle = [&](std::size_t epoch) {
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng = Rng::substream(seed, "ode-shuffle", epoch);
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);
        order_epoch = epoch;
    };

    std::size_t last_step = start_step - 1;
    for (std::size_t step = start_step; step <= max_steps; ++step) {
        last_step = step;
        const std::size_t epoch = (step - 1) / order.size();
        if (epoch != order_epoch) reshuffle(epoch);
        const Trajectory& traj = dataset.trajectories[order[(step - 1) % order.size()]];

        StudentGrads grads = zero_student_grads(res.params);
        const double loss = ode_loss(res.params, traj, grid, sched, block_size, &grads);
        if (!std::isfinite(loss))
            throw DivergenceError("train_ode: non-finite loss at step " + std::to_string(step));
        const Vec gvec = student_grads_to_vec(grads);
        opt.step(flat, gvec);
        student_from_vec(res.params, flat);

        TrainLogRow row;
        row.step = step;
        row.loss_g = loss;
        row.grad_norm_g = norm2(gvec);
        res.log.rows.push_back(row);

        window_losses.push_back(loss);
        if (window_losses.size() == conv.window) {
            double mean = 0.0;
            for (double l : window_losses) mean += l;
            mean /= static_cast<double>(conv.window);
            window_losses.clear();
            if (has_prev_window) {
                const double rel = (prev_window_mean - mean) / std::max(prev_window_mean, 1e-300);
                if (rel < conv.rel_improvement) {
                    res.log.converged = true;
                    break;
                }
            }
            prev_window_mean = mean;
            has_prev_window = true;
        }
    }

    if (out_state != nullptr) {
        out_state->params = flat;
        out_state->m = opt.first_moment();
        out_state->v = opt.second_moment();
        out_state->adam_t = static_cast<std::size_t>(opt.steps_taken());
        out_state->step = last_step;
        out_state->window_losses = window_losses;
        out_state->prev_window_mean = prev_window_mean;
        out_state->has_prev_window = has_prev_window;
    }
    return res;
}

void DmdConfig::validate() const {
    if (lr_generator <= 0.0 || lr_critic <= 0.0)
        throw std::invalid_argument("DmdConfig: learning rates must be > 0");
    if (update_ratio < 1) throw std::invalid_argument("DmdConfig: update_ratio must be >= 1");
    if (ema_decay <= 0.0 || ema_decay >= 1.0)
        throw std::invalid_argument("DmdConfig: ema_decay must be in (0, 1)");
    if (tau_min <= 0.0 || tau_max >= 1.0 || tau_min >= tau_max)
        throw std::invalid_argument("DmdConfig: tau range must satisfy 0 < min < max < 1");
    if (batch_size == 0 || total_steps == 0)
        throw std::invalid_argument("DmdConfig: batch_size and total_steps must be positive");
}

ScoreFn make_teacher_score(const GaussianWorld& world, const NoiseSchedule& sched, CfgScales cfg) {
    return [&world, &sched, cfg](const Mat& x_tau, double tau, const MultimodalCondition& c) {
        const MultimodalCondition null_c =
            MultimodalCondition::null_condition(c.text_emb.size(), c.audio.size());
        const Mat pred_null = world.teacher_x0(x_tau, tau, null_c, sched).x0;
        const std::vector<Mat> preds = {
            world.teacher_x0(x_tau, tau, c.only(0), sched).x0,
            world.teacher_x0(x_tau, tau, c.only(1), sched).x0,
            world.teacher_x0(x_tau, tau, c.only(2), sched).x0,
        };
        return cfg_combine(pred_null, preds, {cfg.text, cfg.img, cfg.audio});
    };
}

ScoreFn make_critic_score(const CriticParams& critic) {
    return [&critic](const Mat& x_tau, double tau, const MultimodalCondition& c) {
        return critic_predict_x0(critic, x_tau, tau, c);
    };
}

DmdHooks make_dmd_hooks(const GaussianWorld& world, const NoiseSchedule& sched,
                        const CriticParams& critic, CfgScales cfg) {
    return DmdHooks{make_teacher_score(world, sched, cfg), make_critic_score(critic)};
}

DmdStepStats dmd_generator_gradient(const StudentParams& gen, const DmdHooks& hooks,
                                    const std::vector<MultimodalCondition>& conditions,
                                    const DmdConfig& cfg, const SamplerGrid& grid,
                                    const NoiseSchedule& sched, Rng& rng, StudentGrads& out) {
    DmdStepStats stats;
    std::size_t used = 0;
    const std::size_t elems = cfg.num_blocks * cfg.block_size * gen.d;

    for (std::size_t bi = 0; bi < cfg.batch_size; ++bi) {
        const MultimodalCondition& c = conditions[rng.below(conditions.size())];
        Rng rollout_rng = rng.fork(bi);
        UnboundedCache cache;
        RolloutResult ro = rollout_video(gen, c, cfg.num_blocks, cache, grid, sched,
                                         cfg.block_size, rollout_rng, cfg.rollout_mode, true);
        if (!all_finite(ro.video.frames)) {
            stats.ok = false;
            continue;
        }

        const double tau = rng.uniform(cfg.tau_min, cfg.tau_max);
        Mat eps(ro.video.frames.rows, ro.video.frames.cols);
        for (auto& e : eps.a) e = rng.normal();
        const Mat x_tau = add_noise(ro.video.frames, tau, eps, sched);

        const Mat s_teacher = hooks.teacher(x_tau, tau, c);
        const Mat s_critic = hooks.critic(x_tau, tau, c);

        Mat diff = s_teacher - s_critic;
        stats.proxy_loss += frobenius_dot(diff, diff) / static_cast<double>(elems);

        Mat upstream = diff;
        for (auto& v : upstream.a) v = -v;
        if (cfg.normalize_score_diff) {
            double mean_abs = 0.0;
            for (double v : diff.a) mean_abs += std::fabs(v);
            mean_abs /= static_cast<double>(diff.a.size());
            if (mean_abs > 1e-300)
                for (auto& v : upstream.a) v /= mean_abs;
        }
        rollout_backward(gen, ro, c, upstream, out);
        ++used;
    }

    if (used == 0) {
        stats.ok = false;
        return stats;
    }
    scale_student_grads(out, 1.0 / static_cast<double>(used));
    stats.proxy_loss /= static_cast<double>(used);
    const Vec gvec = student_grads_to_vec(out);
    stats.grad_norm = norm2(gvec);
    if (!all_finite(gvec)) stats.ok = false;
    return stats;
}

DmdStepStats dmd_generator_step(StudentParams& gen, AdamW& opt, const DmdHooks& hooks,
                                const std::vector<MultimodalCondition>& conditions,
                                const DmdConfig& cfg, const SamplerGrid& grid,
                                const NoiseSchedule& sched, Rng& rng) {
    StudentGrads grads = zero_student_grads(gen);
    DmdStepStats stats = dmd_generator_gradient(gen, hooks, conditions, cfg, grid, sched, rng, grads);
    if (!stats.ok) return stats;  // abort step, leave parameters untouched
    Vec flat = student_to_vec(gen);
    opt.step(flat, student_grads_to_vec(grads));
    student_from_vec(gen, flat);
    return stats;
}

double dmd_critic_step(CriticParams& critic, AdamW& opt, const StudentParams& gen,
                       const std::vector<MultimodalCondition>& conditions, const DmdConfig& cfg,
                       const SamplerGrid& grid, const NoiseSchedule& sched, Rng& rng) {
    std::vector<CriticSample> batch;
    batch.reserve(cfg.batch_size);
    for (std::size_t bi = 0; bi < cfg.batch_size; ++bi) {
        const MultimodalCondition& c = conditions[rng.below(conditions.size())];
        Rng rollout_rng = rng.fork(bi);
        UnboundedCache cache;
        RolloutResult ro = rollout_video(gen, c, cfg.num_blocks, cache, grid, sched,
                                         cfg.block_size, rollout_rng, cfg.rollout_mode, false);
        if (!all_finite(ro.video.frames))
            throw DivergenceError("dmd_critic_step: non-finite generator rollout");
        CriticSample s;
        s.tau = rng.uniform(cfg.tau_min, cfg.tau_max);
        Mat eps(ro.video.frames.rows, ro.video.frames.cols);
        for (auto& e : eps.a) e = rng.normal();
        s.x_tau = add_noise(ro.video.frames, s.tau, eps, sched);
        s.c = c;
        s.target_x0 = ro.video.frames;
        batch.push_back(std::move(s));
    }
    CriticGrads grads = zero_critic_grads(critic);
    const double loss = critic_loss_and_grad(critic, batch, grads);
    if (!std::isfinite(loss)) throw DivergenceError("dmd_critic_step: non-finite loss");
    Vec flat = critic_to_vec(critic);
    opt.step(flat, critic_grads_to_vec(grads));
    critic_from_vec(critic, flat);
    return loss;
}

double eval_frechet_to_world(const StudentParams& params, const GaussianWorld& world,
                             const std::vector<MultimodalCondition>& conditions,
                             std::size_t num_blocks, std::size_t rollouts, const SamplerGrid& grid,
                             const NoiseSchedule& sched, SampleMode mode, std::uint64_t seed) {
    if (conditions.empty()) throw std::invalid_argument("eval_frechet_to_world: no conditions");
    const std::size_t block_size = world.frames() / num_blocks;
    double total = 0.0;
    for (std::size_t ci = 0; ci < conditions.size(); ++ci) {
        const MultimodalCondition& c = conditions[ci];
        std::vector<Vec> samples;
        samples.reserve(rollouts);
        for (std::size_t r = 0; r < rollouts; ++r) {
            Rng rng = Rng::substream(seed, "eval-frechet", ci * rollouts + r);
            UnboundedCache cache;
            RolloutResult ro = rollout_video(params, c, num_blocks, cache, grid, sched, block_size,
                                             rng, mode, false);
            samples.push_back(flatten(ro.video.frames));
        }
        GaussianSummary fitted = fit_gaussian(samples);
        GaussianSummary analytic;
        analytic.mean = flatten(world.conditional_mean(c));
        analytic.cov = world.full_data_cov();
        analytic.count = rollouts;
        total += gaussian_frechet(fitted, analytic);
    }
    return total / static_cast<double>(conditions.size());
}

double eval_sync_to_audio(const StudentParams& params, const GaussianWorld& world,
                          const std::vector<MultimodalCondition>& conditions,
                          std::size_t num_blocks, std::size_t rollouts, const SamplerGrid& grid,
                          const NoiseSchedule& sched, SampleMode mode, int max_offset,
                          std::uint64_t seed) {
    const std::size_t block_size = world.frames() / num_blocks;
    double total = 0.0;
    std::size_t n = 0;
    for (std::size_t ci = 0; ci < conditions.size(); ++ci) {
        const MultimodalCondition& c = conditions[ci];
        const Vec env = audio_envelope(
            Vec(c.audio.begin(), c.audio.begin() + static_cast<long>(world.frames())));
        for (std::size_t r = 0; r < rollouts; ++r) {
            Rng rng = Rng::substream(seed, "eval-sync", ci * rollouts + r);
            UnboundedCache cache;
            RolloutResult ro =
                rollout_video(params, c, num_blocks, cache, grid, sched, block_size, rng, mode, false);
            total += sync_metric(env, motion_series(ro.video.frames), max_offset).confidence;
            ++n;
        }
    }
    return n == 0 ? 0.0 : total / static_cast<double>(n);
}

DmdTrainResult train_dmd(StudentParams gen, CriticParams critic,
                         const std::vector<MultimodalCondition>& train_conditions,
                         const std::vector<MultimodalCondition>& eval_conditions,
                         const GaussianWorld& world, const DmdConfig& cfg, const SamplerGrid& grid,
                         const NoiseSchedule& sched, std::uint64_t seed) {
    cfg.validate();
    if (train_conditions.empty()) throw std::invalid_argument("train_dmd: no training conditions");

    DmdTrainResult res;
    res.generator = std::move(gen);
    DmdHooks hooks = make_dmd_hooks(world, sched, critic, cfg.teacher_cfg);

    AdamW gen_opt(student_to_vec(res.generator).size(),
                  AdamW::Options{cfg.lr_generator, cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay});
    AdamW critic_opt(critic_to_vec(critic).size(),
                     AdamW::Options{cfg.lr_critic, cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay});

    res.ema = student_to_vec(res.generator);
    res.best_ema = res.ema;
    res.log.best_eval_frechet = std::numeric_limits<double>::infinity();

    Rng critic_rng = Rng::substream(seed, "dmd-critic");
    Rng gen_rng = Rng::substream(seed, "dmd-generator");

    for (std::size_t w = 0; w < cfg.critic_warmup; ++w) {
        dmd_critic_step(critic, critic_opt, res.generator, train_conditions, cfg, grid, sched,
                        critic_rng);
        ++res.critic_steps_taken;
    }

    auto run_eval = [&](std::size_t step, TrainLogRow& row, bool ema_active) {
        StudentParams ema_params = res.generator;
        student_from_vec(ema_params, res.ema);
        const std::uint64_t eval_seed = Rng::mix(seed, "dmd-eval", step);
        row.eval_frechet =
            eval_frechet_to_world(ema_params, world, eval_conditions, cfg.num_blocks,
                                  cfg.eval_rollouts, grid, sched, cfg.rollout_mode, eval_seed);
        row.eval_sync = eval_sync_to_audio(ema_params, world, eval_conditions, cfg.num_blocks,
                                           std::max<std::size_t>(8, cfg.eval_rollouts / 8), grid,
                                           sched, cfg.rollout_mode, cfg.sync_max_offset, eval_seed);
        row.has_eval = true;
        row.ema_active = ema_active;
        res.log.final_eval_frechet = row.eval_frechet;
        if (row.eval_frechet < res.log.best_eval_frechet) {
            res.log.best_eval_frechet = row.eval_frechet;
            res.log.best_step = step;
            res.best_ema = res.ema;
        }
    };

    std::size_t bad_steps = 0;
    for (std::size_t step = 1; step <= cfg.total_steps; ++step) {
        double critic_loss = 0.0;
        for (std::size_t r = 0; r < cfg.update_ratio; ++r) {
            critic_loss = dmd_critic_step(critic, critic_opt, res.generator, train_conditions, cfg,
                                          grid, sched, critic_rng);
            ++res.critic_steps_taken;
        }
        if (cfg.lr_warmup_steps > 0)
            gen_opt.set_lr(cfg.lr_generator *
                           std::min(1.0, static_cast<double>(step) /
                                             static_cast<double>(cfg.lr_warmup_steps)));
        const DmdStepStats stats = dmd_generator_step(res.generator, gen_opt, hooks,
                                                      train_conditions, cfg, grid, sched, gen_rng);
        if (!stats.ok) {
            ++bad_steps;
            res.log.diagnostic = "mode-collapse suspect: non-finite rollout at step " +
                                 std::to_string(step);
            if (bad_steps >= 3) {
                res.log.aborted = true;
                break;
            }
        } else {
            bad_steps = 0;
        }

        const bool ema_active = step >= cfg.ema_start;
        if (ema_active)
            ema_update(res.ema, student_to_vec(res.generator), cfg.ema_decay);
        else
            res.ema = student_to_vec(res.generator);

        TrainLogRow row;
        row.step = step;
        row.loss_g = stats.proxy_loss;
        row.loss_c = critic_loss;
        row.grad_norm_g = stats.grad_norm;
        row.ema_active = ema_active;
        if (step % cfg.eval_every == 0 || step == cfg.total_steps) run_eval(step, row, ema_active);
        res.log.rows.push_back(row);
    }

    res.log.peak_then_degrade =
        std::isfinite(res.log.best_eval_frechet) &&
        res.log.final_eval_frechet > res.log.best_eval_frechet;
    return res;
}

static GaussianSummary analytic_block_summary(const GaussianWorld& world,
                                              const MultimodalCondition& c, std::size_t j,
                                              std::size_t block_size) {
    GaussianSummary g;
    g.mean = flatten(world.block_mean(c, j, block_size));
    g.cov = world.block_data_cov(j, block_size);
    g.count = 0;
    return g;
}

ExposureBiasCurves exposure_bias_probe(const StudentParams& params, const GaussianWorld& world,
                                       const std::vector<MultimodalCondition>& conditions,
                                       std::size_t num_blocks, std::size_t samples_per_condition,
                                       const SamplerGrid& grid, const NoiseSchedule& sched,
                                       SampleMode mode, std::uint64_t seed) {
    if (conditions.empty()) throw std::invalid_argument("exposure_bias_probe: no conditions");
    const std::size_t block_size = world.frames() / num_blocks;

    ExposureBiasCurves curves;
    curves.teacher_forced.assign(num_blocks, 0.0);
    curves.self_rollout.assign(num_blocks, 0.0);
    curves.gap.assign(num_blocks, 0.0);

    for (std::size_t ci = 0; ci < conditions.size(); ++ci) {
        const MultimodalCondition& c = conditions[ci];

        // Self-rollout arm: one full rollout per sample, sliced per block.
        std::vector<std::vector<Vec>> self_blocks(num_blocks);
        for (std::size_t s = 0; s < samples_per_condition; ++s) {
            Rng rng = Rng::substream(seed, "ebp-self", ci * samples_per_condition + s);
            UnboundedCache cache;
            RolloutResult ro = rollout_video(params, c, num_blocks, cache, grid, sched, block_size,
                                             rng, mode, false);
            for (std::size_t j = 0; j < num_blocks; ++j)
                self_blocks[j].push_back(flatten(ro.video.block(j)));
        }

        // Teacher-forced arm: contexts are clean prefixes of true world draws.
        std::vector<std::vector<Vec>> forced_blocks(num_blocks);
        for (std::size_t s = 0; s < samples_per_condition; ++s) {
            Rng rng = Rng::substream(seed, "ebp-forced", ci * samples_per_condition + s);
            const Mat truth = world.sample(c, rng);
            for (std::size_t j = 0; j < num_blocks; ++j) {
                std::vector<KVEntry> ctx = endpoint_context(truth, block_size, j);
                Rng block_rng = rng.fork(j);
                BlockSample bs = few_step_sample_block(student_predictor(params), c, ctx, grid,
                                                       sched, block_size, params.d, j, block_rng,
                                                       mode);
                forced_blocks[j].push_back(flatten(bs.clean));
            }
        }

        for (std::size_t j = 0; j < num_blocks; ++j) {
            const GaussianSummary target = analytic_block_summary(world, c, j, block_size);
            curves.teacher_forced[j] += gaussian_frechet(fit_gaussian(forced_blocks[j]), target);
            curves.self_rollout[j] += gaussian_frechet(fit_gaussian(self_blocks[j]), target);
        }
    }

    const double inv = 1.0 / static_cast<double>(conditions.size());
    for (std::size_t j = 0; j < num_blocks; ++j) {
        curves.teacher_forced[j] *= inv;
        curves.self_rollout[j] *= inv;
        curves.gap[j] = curves.self_rollout[j] - curves.teacher_forced[j];
    }
    return curves;
}

}  // namespace streamforge
