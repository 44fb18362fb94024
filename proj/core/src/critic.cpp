#include "streamforge/critic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace streamforge {

std::size_t CriticParams::bucket_of(double tau) const {
    if (tau <= 0.0 || tau >= 1.0) throw std::invalid_argument("critic: tau must be in (0, 1)");
    const auto b = static_cast<std::size_t>(tau * static_cast<double>(n_buckets));
    return std::min(b, n_buckets - 1);
}

CriticParams make_critic(std::size_t n_buckets, std::size_t d, std::size_t d_c) {
    CriticParams p;
    p.n_buckets = n_buckets;
    p.d = d;
    p.d_c = d_c;
    p.buckets.resize(n_buckets);
    for (auto& b : p.buckets) {
        b.w = Mat(d, d);
        b.v = Mat(d, d);
        b.u = Mat(d, p.cond_feature_dim());
        b.bias.assign(d, 0.0);
    }
    return p;
}

Vec critic_to_vec(const CriticParams& p) {
    Vec v;
    for (const auto& b : p.buckets) {
        v.insert(v.end(), b.w.a.begin(), b.w.a.end());
        v.insert(v.end(), b.v.a.begin(), b.v.a.end());
        v.insert(v.end(), b.u.a.begin(), b.u.a.end());
        v.insert(v.end(), b.bias.begin(), b.bias.end());
    }
    return v;
}

void critic_from_vec(CriticParams& p, const Vec& v) {
    std::size_t i = 0;
    for (auto& b : p.buckets) {
        for (auto& x : b.w.a) x = v[i++];
        for (auto& x : b.v.a) x = v[i++];
        for (auto& x : b.u.a) x = v[i++];
        for (auto& x : b.bias) x = v[i++];
    }
    if (i != v.size()) throw std::invalid_argument("critic_from_vec: length mismatch");
}

CriticGrads zero_critic_grads(const CriticParams& p) {
    CriticGrads g;
    g.buckets.resize(p.n_buckets);
    for (auto& b : g.buckets) {
        b.w = Mat(p.d, p.d);
        b.v = Mat(p.d, p.d);
        b.u = Mat(p.d, p.cond_feature_dim());
        b.bias.assign(p.d, 0.0);
    }
    return g;
}

Vec critic_grads_to_vec(const CriticGrads& g) {
    Vec v;
    for (const auto& b : g.buckets) {
        v.insert(v.end(), b.w.a.begin(), b.w.a.end());
        v.insert(v.end(), b.v.a.begin(), b.v.a.end());
        v.insert(v.end(), b.u.a.begin(), b.u.a.end());
        v.insert(v.end(), b.bias.begin(), b.bias.end());
    }
    return v;
}

static Vec frame_features(const MultimodalCondition& c, std::size_t d_c, std::size_t frame) {
    Vec q(2 * d_c + 1);
    for (std::size_t i = 0; i < d_c; ++i) q[i] = c.text_emb[i];
    for (std::size_t i = 0; i < d_c; ++i) q[d_c + i] = c.img_emb[i];
    if (frame >= c.audio.size()) throw std::invalid_argument("critic: audio too short");
    q[2 * d_c] = c.audio[frame];
    return q;
}

static Vec mean_pool_rows(const Mat& x) {
    Vec pool(x.cols, 0.0);
    for (std::size_t r = 0; r < x.rows; ++r)
        for (std::size_t k = 0; k < x.cols; ++k) pool[k] += x(r, k);
    for (auto& v : pool) v /= static_cast<double>(x.rows);
    return pool;
}

Mat critic_predict_x0(const CriticParams& params, const Mat& x_tau, double tau,
                      const MultimodalCondition& c) {
    if (x_tau.cols != params.d) throw std::invalid_argument("critic: latent dim mismatch");
    const auto& b = params.buckets[params.bucket_of(tau)];
    const Vec pool = mean_pool_rows(x_tau);
    const Vec vpool = matvec(b.v, pool);
    Mat out(x_tau.rows, params.d);
    for (std::size_t r = 0; r < x_tau.rows; ++r) {
        Vec xr(params.d);
        for (std::size_t k = 0; k < params.d; ++k) xr[k] = x_tau(r, k);
        const Vec wx = matvec(b.w, xr);
        const Vec uq = matvec(b.u, frame_features(c, params.d_c, r));
        for (std::size_t k = 0; k < params.d; ++k) out(r, k) = wx[k] + vpool[k] + uq[k] + b.bias[k];
    }
    return out;
}

void critic_backward(const CriticParams& params, const Mat& x_tau, double tau,
                     const MultimodalCondition& c, const Mat& upstream, CriticGrads& grads) {
    auto& g = grads.buckets[params.bucket_of(tau)];
    const Vec pool = mean_pool_rows(x_tau);
    for (std::size_t r = 0; r < x_tau.rows; ++r) {
        Vec gr(params.d), xr(params.d);
        for (std::size_t k = 0; k < params.d; ++k) {
            gr[k] = upstream(r, k);
            xr[k] = x_tau(r, k);
        }
        add_outer(g.w, gr, xr);
        add_outer(g.v, gr, pool);
        add_outer(g.u, gr, frame_features(c, params.d_c, r));
        for (std::size_t k = 0; k < params.d; ++k) g.bias[k] += gr[k];
    }
}

double critic_loss_and_grad(const CriticParams& params, const std::vector<CriticSample>& batch,
                            CriticGrads& grads) {
    if (batch.empty()) throw std::invalid_argument("critic_loss_and_grad: empty batch");
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    for (const CriticSample& s : batch) {
        const Mat pred = critic_predict_x0(params, s.x_tau, s.tau, s.c);
        Mat diff = pred - s.target_x0;
        loss += inv_n * frobenius_dot(diff, diff);
        for (auto& x : diff.a) x *= 2.0 * inv_n;
        critic_backward(params, s.x_tau, s.tau, s.c, diff, grads);
    }
    return loss;
}

CriticParams critic_init_from_world(const GaussianWorld& world, const NoiseSchedule& sched,
                                    const std::vector<MultimodalCondition>& conditions,
                                    std::size_t n_buckets, std::size_t samples_per_bucket,
                                    double ridge, Rng& rng) {
    if (conditions.empty())
        throw std::invalid_argument("critic_init_from_world: conditions must be nonempty");
    const std::size_t d = world.dim();
    const std::size_t d_c = world.cond_dim();
    CriticParams p = make_critic(n_buckets, d, d_c);
    const std::size_t feat = 2 * d + p.cond_feature_dim() + 1;  // [x; pool; q; 1]

    for (std::size_t bucket = 0; bucket < n_buckets; ++bucket) {
        Mat xtx(feat, feat);
        Mat xty(feat, d);
        const double lo = static_cast<double>(bucket) / static_cast<double>(n_buckets);
        const double hi = static_cast<double>(bucket + 1) / static_cast<double>(n_buckets);
        for (std::size_t s = 0; s < samples_per_bucket; ++s) {
            const MultimodalCondition& c = conditions[s % conditions.size()];
            const Mat x0 = world.sample(c, rng);
            const double tau = std::clamp(rng.uniform(lo, hi), 1e-4, 1.0 - 1e-4);
            Mat eps(world.frames(), d);
            for (auto& e : eps.a) e = rng.normal();
            const Mat x_tau = add_noise(x0, tau, eps, sched);
            const Vec pool = mean_pool_rows(x_tau);
            for (std::size_t f = 0; f < world.frames(); ++f) {
                Vec phi(feat);
                for (std::size_t k = 0; k < d; ++k) phi[k] = x_tau(f, k);
                for (std::size_t k = 0; k < d; ++k) phi[d + k] = pool[k];
                const Vec q = frame_features(c, d_c, f);
                for (std::size_t k = 0; k < q.size(); ++k) phi[2 * d + k] = q[k];
                phi[feat - 1] = 1.0;
                add_outer(xtx, phi, phi);
                Vec y(d);
                for (std::size_t k = 0; k < d; ++k) y[k] = x0(f, k);
                add_outer(xty, phi, y);
            }
        }
        for (std::size_t i = 0; i < feat; ++i) xtx(i, i) += ridge;
        const Mat theta = cholesky_solve(xtx, xty);  // feat x d
        auto& bk = p.buckets[bucket];
        for (std::size_t k = 0; k < d; ++k) {
            for (std::size_t j = 0; j < d; ++j) {
                bk.w(k, j) = theta(j, k);
                bk.v(k, j) = theta(d + j, k);
            }
            for (std::size_t j = 0; j < p.cond_feature_dim(); ++j) bk.u(k, j) = theta(2 * d + j, k);
            bk.bias[k] = theta(feat - 1, k);
        }
    }
    return p;
}

}  // namespace streamforge
