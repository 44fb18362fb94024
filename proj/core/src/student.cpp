#include "streamforge/student.hpp"

#include <cmath>
#include <stdexcept>

namespace streamforge {

SamplerGrid make_sampler_grid(std::vector<std::size_t> indices, const NoiseSchedule& sched) {
    if (indices.empty()) throw std::invalid_argument("sampler grid: empty");
    if (indices.front() != sched.n_steps)
        throw std::invalid_argument("sampler grid: first entry must be t = 1 (index N)");
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] > sched.n_steps)
            throw std::invalid_argument("sampler grid: index beyond the teacher grid");
        if (i > 0 && indices[i] >= indices[i - 1])
            throw std::invalid_argument("sampler grid: indices must be strictly descending");
    }
    SamplerGrid g;
    g.indices = std::move(indices);
    return g;
}

SamplerGrid default_sampler_grid(std::size_t k, const NoiseSchedule& sched) {
    if (k == 0 || k > sched.n_steps)
        throw std::invalid_argument("default_sampler_grid: k out of range");
    std::vector<std::size_t> idx;
    const std::size_t stride = sched.n_steps / k;
    for (std::size_t i = 0; i < k; ++i) idx.push_back(sched.n_steps - i * stride);
    return make_sampler_grid(std::move(idx), sched);
}

StudentParams make_student(std::size_t k, std::size_t d, std::size_t d_c, double init_scale,
                           Rng& rng) {
    StudentParams p;
    p.k = k;
    p.d = d;
    p.d_c = d_c;
    p.steps.resize(k);
    for (auto& st : p.steps) {
        st.w = Mat(d, d);
        st.v = Mat(d, d);
        st.u = Mat(d, p.cond_feature_dim());
        st.bias.assign(d, 0.0);
        for (auto& x : st.w.a) x = init_scale * rng.normal();
        for (auto& x : st.v.a) x = init_scale * rng.normal();
        for (auto& x : st.u.a) x = init_scale * rng.normal();
    }
    return p;
}

Vec student_to_vec(const StudentParams& p) {
    Vec v;
    for (const auto& st : p.steps) {
        v.insert(v.end(), st.w.a.begin(), st.w.a.end());
        v.insert(v.end(), st.v.a.begin(), st.v.a.end());
        v.insert(v.end(), st.u.a.begin(), st.u.a.end());
        v.insert(v.end(), st.bias.begin(), st.bias.end());
    }
    return v;
}

void student_from_vec(StudentParams& p, const Vec& v) {
    std::size_t i = 0;
    for (auto& st : p.steps) {
        for (auto& x : st.w.a) x = v[i++];
        for (auto& x : st.v.a) x = v[i++];
        for (auto& x : st.u.a) x = v[i++];
        for (auto& x : st.bias) x = v[i++];
    }
    if (i != v.size()) throw std::invalid_argument("student_from_vec: length mismatch");
}

StudentGrads zero_student_grads(const StudentParams& p) {
    StudentGrads g;
    g.steps.resize(p.steps.size());
    for (std::size_t i = 0; i < p.steps.size(); ++i) {
        g.steps[i].w = Mat(p.d, p.d);
        g.steps[i].v = Mat(p.d, p.d);
        g.steps[i].u = Mat(p.d, p.cond_feature_dim());
        g.steps[i].bias.assign(p.d, 0.0);
    }
    return g;
}

Vec student_grads_to_vec(const StudentGrads& g) {
    Vec v;
    for (const auto& st : g.steps) {
        v.insert(v.end(), st.w.a.begin(), st.w.a.end());
        v.insert(v.end(), st.v.a.begin(), st.v.a.end());
        v.insert(v.end(), st.u.a.begin(), st.u.a.end());
        v.insert(v.end(), st.bias.begin(), st.bias.end());
    }
    return v;
}

void scale_student_grads(StudentGrads& g, double s) {
    for (auto& st : g.steps) {
        for (auto& x : st.w.a) x *= s;
        for (auto& x : st.v.a) x *= s;
        for (auto& x : st.u.a) x *= s;
        for (auto& x : st.bias) x *= s;
    }
}

void accumulate_student_grads(StudentGrads& into, const StudentGrads& from) {
    for (std::size_t i = 0; i < into.steps.size(); ++i) {
        auto& a = into.steps[i];
        const auto& b = from.steps[i];
        for (std::size_t j = 0; j < a.w.a.size(); ++j) a.w.a[j] += b.w.a[j];
        for (std::size_t j = 0; j < a.v.a.size(); ++j) a.v.a[j] += b.v.a[j];
        for (std::size_t j = 0; j < a.u.a.size(); ++j) a.u.a[j] += b.u.a[j];
        for (std::size_t j = 0; j < a.bias.size(); ++j) a.bias[j] += b.bias[j];
    }
}

Vec pool_context(const std::vector<KVEntry>& context, std::size_t d) {
    Vec pool(d, 0.0);
    std::size_t n = 0;
    for (const KVEntry& e : context) {
        for (std::size_t r = 0; r < e.feature.rows; ++r) {
            for (std::size_t k = 0; k < d; ++k) pool[k] += e.feature(r, k);
            ++n;
        }
    }
    if (n > 0)
        for (auto& x : pool) x /= static_cast<double>(n);
    return pool;
}

static void check_context_causal(const std::vector<KVEntry>& context, std::size_t block_index) {
    for (const KVEntry& e : context)
        if (e.block_index >= block_index)
            throw ContractViolation("student context contains the current or a future block");
}

static Vec cond_features(const MultimodalCondition& c, std::size_t d_c, std::size_t frame) {
    Vec q(2 * d_c + 1);
    for (std::size_t i = 0; i < d_c; ++i) q[i] = c.text_emb[i];
    for (std::size_t i = 0; i < d_c; ++i) q[d_c + i] = c.img_emb[i];
    if (frame >= c.audio.size())
        throw std::invalid_argument("student: audio shorter than the requested frame");
    q[2 * d_c] = c.audio[frame];
    return q;
}

Mat student_predict_x0(const StudentParams& params, const Mat& x_t_block, std::size_t step_index,
                       const std::vector<KVEntry>& context, const MultimodalCondition& c,
                       std::size_t block_index) {
    if (step_index >= params.k) throw std::invalid_argument("student: step_index out of range");
    if (x_t_block.cols != params.d) throw std::invalid_argument("student: latent dim mismatch");
    check_context_causal(context, block_index);

    const auto& st = params.steps[step_index];
    const Vec pool = pool_context(context, params.d);
    const Vec vpool = matvec(st.v, pool);
    const std::size_t b = x_t_block.rows;

    Mat out(b, params.d);
    for (std::size_t r = 0; r < b; ++r) {
        Vec xr(params.d);
        for (std::size_t k = 0; k < params.d; ++k) xr[k] = x_t_block(r, k);
        const Vec wx = matvec(st.w, xr);
        const Vec uq = matvec(st.u, cond_features(c, params.d_c, block_index * b + r));
        for (std::size_t k = 0; k < params.d; ++k)
            out(r, k) = wx[k] + vpool[k] + uq[k] + st.bias[k];
    }
    return out;
}

Mat student_backward(const StudentParams& params, const Mat& x_t_block, std::size_t step_index,
                     const std::vector<KVEntry>& context, const MultimodalCondition& c,
                     std::size_t block_index, const Mat& upstream, StudentGrads& grads) {
    if (step_index >= params.k) throw std::invalid_argument("student: step_index out of range");
    check_context_causal(context, block_index);
    auto& g = grads.steps[step_index];
    const auto& st = params.steps[step_index];
    const Vec pool = pool_context(context, params.d);
    const std::size_t b = x_t_block.rows;

    Mat input_grad(b, params.d);
    for (std::size_t r = 0; r < b; ++r) {
        Vec gr(params.d), xr(params.d);
        for (std::size_t k = 0; k < params.d; ++k) {
            gr[k] = upstream(r, k);
            xr[k] = x_t_block(r, k);
        }
        const Vec q = cond_features(c, params.d_c, block_index * b + r);
        add_outer(g.w, gr, xr);
        add_outer(g.v, gr, pool);
        add_outer(g.u, gr, q);
        for (std::size_t k = 0; k < params.d; ++k) g.bias[k] += gr[k];
        // dL/dx = W^T g
        for (std::size_t k = 0; k < params.d; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < params.d; ++i) s += st.w(i, k) * gr[i];
            input_grad(r, k) = s;
        }
    }
    return input_grad;
}

BlockPredictor student_predictor(const StudentParams& params) {
    return [&params](const Mat& x_t, double /*t*/, std::size_t step, const std::vector<KVEntry>& ctx,
                     const MultimodalCondition& c, std::size_t block_index) {
        return student_predict_x0(params, x_t, step, ctx, c, block_index);
    };
}

BlockSample few_step_sample_block(const BlockPredictor& predict, const MultimodalCondition& c,
                                  const std::vector<KVEntry>& context, const SamplerGrid& grid,
                                  const NoiseSchedule& sched, std::size_t block_size,
                                  std::size_t d, std::size_t block_index, Rng& rng,
                                  SampleMode mode) {
    const std::size_t k = grid.k();
    BlockSample out;
    out.tape.context = context;
    out.tape.block_index = block_index;

    Mat x(block_size, d);
    for (double& v : x.a) v = rng.normal();

    for (std::size_t i = 0; i < k; ++i) {
        const double t = grid.time_at(i, sched);
        out.tape.xs.push_back(x);
        const Mat x0 = predict(x, t, i, context, c, block_index);
        out.tape.x0s.push_back(x0);
        if (i + 1 == k) break;

        const double t_next = grid.time_at(i + 1, sched);
        const double a = sched.alpha(t);
        const double s = sched.sigma(t);
        const double an = sched.alpha(t_next);
        const double sn = sched.sigma(t_next);
        if (mode == SampleMode::kDeterministic) {
            // x <- a' x0 + s' (x - a x0) / s
            const double r_coef = sn / s;
            const double c_coef = an - sn * a / s;
            for (std::size_t j = 0; j < x.a.size(); ++j)
                x.a[j] = r_coef * x.a[j] + c_coef * x0.a[j];
            out.tape.r.push_back(r_coef);
            out.tape.cc.push_back(c_coef);
        } else {
            for (std::size_t j = 0; j < x.a.size(); ++j)
                x.a[j] = an * x0.a[j] + sn * rng.normal();
            out.tape.r.push_back(0.0);
            out.tape.cc.push_back(an);
        }
    }
    out.clean = out.tape.x0s.back();
    return out;
}

BlockSample few_step_sample_block(const StudentParams& params, const MultimodalCondition& c,
                                  const std::vector<KVEntry>& context, const SamplerGrid& grid,
                                  const NoiseSchedule& sched, std::size_t block_size,
                                  std::size_t block_index, Rng& rng, SampleMode mode) {
    return few_step_sample_block(student_predictor(params), c, context, grid, sched, block_size,
                                 params.d, block_index, rng, mode);
}

void block_backward(const StudentParams& params, const BlockTape& tape,
                    const MultimodalCondition& c, const Mat& upstream, StudentGrads& grads) {
    const std::size_t k = tape.x0s.size();
    Mat g_hat = upstream;       // dL/dx0hat_i
    Mat g_x(upstream.rows, upstream.cols);  // dL/dx_{i+1}, zero at the top

    for (std::size_t ii = k; ii-- > 0;) {
        if (ii + 1 < k) {
            // x_{i+1} = r_i x_i + c_i x0hat_i  =>  dL/dx0hat_i = c_i dL/dx_{i+1}
            g_hat = tape.cc[ii] * g_x;
        }
        const Mat gx_pred = student_backward(params, tape.xs[ii], ii, tape.context, c,
                                             tape.block_index, g_hat, grads);
        if (ii + 1 < k) {
            Mat total = gx_pred;
            for (std::size_t j = 0; j < total.a.size(); ++j) total.a[j] += tape.r[ii] * g_x.a[j];
            g_x = total;
        } else {
            g_x = gx_pred;
        }
    }
}

RolloutResult rollout_video(const BlockPredictor& predict, const MultimodalCondition& c,
                            std::size_t num_blocks, ContextCache& cache, const SamplerGrid& grid,
                            const NoiseSchedule& sched, std::size_t block_size, std::size_t d,
                            Rng& rng, SampleMode mode, bool keep_tapes) {
    if (c.audio.size() < num_blocks * block_size)
        throw std::invalid_argument("rollout_video: audio shorter than the video");
    RolloutResult out;
    out.video = LatentVideo(Mat(num_blocks * block_size, d), block_size);
    const std::uint64_t base = rng.next_u64();
    for (std::size_t j = 0; j < num_blocks; ++j) {
        Rng block_rng = Rng::substream(base, "block", j);
        const std::vector<KVEntry> ctx = cache.context();
        BlockSample bs =
            few_step_sample_block(predict, c, ctx, grid, sched, block_size, d, j, block_rng, mode);
        out.video.set_block(j, bs.clean);
        cache.insert(KVEntry{j, bs.clean});
        if (keep_tapes) out.tapes.push_back(std::move(bs.tape));
    }
    return out;
}

RolloutResult rollout_video(const StudentParams& params, const MultimodalCondition& c,
                            std::size_t num_blocks, ContextCache& cache, const SamplerGrid& grid,
                            const NoiseSchedule& sched, std::size_t block_size, Rng& rng,
                            SampleMode mode, bool keep_tapes) {
    return rollout_video(student_predictor(params), c, num_blocks, cache, grid, sched, block_size,
                         params.d, rng, mode, keep_tapes);
}

void rollout_backward(const StudentParams& params, const RolloutResult& rollout,
                      const MultimodalCondition& c, const Mat& upstream, StudentGrads& grads) {
    const std::size_t b = rollout.video.block_size;
    const std::size_t d = rollout.video.dim();
    if (upstream.rows != rollout.video.num_frames() || upstream.cols != d)
        throw std::invalid_argument("rollout_backward: upstream shape mismatch");
    for (const BlockTape& tape : rollout.tapes) {
        Mat up(b, d);
        for (std::size_t r = 0; r < b; ++r)
            for (std::size_t k = 0; k < d; ++k) up(r, k) = upstream(tape.block_index * b + r, k);
        block_backward(params, tape, c, up, grads);
    }
}

}  // namespace streamforge
