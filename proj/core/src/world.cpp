#include "streamforge/world.hpp"

#include <cmath>
#include <stdexcept>

#include "streamforge/cache.hpp"
#include "streamforge/errors.hpp"

namespace streamforge {

GaussianWorld::GaussianWorld(std::size_t d, std::size_t frames, std::size_t d_c, Mat m_text,
                             Mat m_img, Vec m_audio, double rho, double base_var)
    : d_(d),
      frames_(frames),
      d_c_(d_c),
      m_text_(std::move(m_text)),
      m_img_(std::move(m_img)),
      m_audio_(std::move(m_audio)),
      rho_(rho),
      base_var_(base_var) {
    if (d_ == 0 || frames_ == 0) throw ConfigError("GaussianWorld: empty shape");
    if (std::fabs(rho_) >= 1.0)
        throw ConfigError("GaussianWorld: |rho| must be < 1 for an SPD covariance");
    if (base_var_ < 0.0) throw ConfigError("GaussianWorld: base_var must be >= 0");
    if (m_text_.rows != d_ || m_text_.cols != d_c_ || m_img_.rows != d_ || m_img_.cols != d_c_ ||
        m_audio_.size() != d_)
        throw ConfigError("GaussianWorld: condition map shape mismatch");

    corr_ = Mat(frames_, frames_);
    for (std::size_t f = 0; f < frames_; ++f)
        for (std::size_t g = 0; g < frames_; ++g)
            corr_(f, g) = std::pow(rho_, std::fabs(static_cast<double>(f) - static_cast<double>(g)));
    corr_eig_ = jacobi_eigh(corr_);
    corr_chol_ = cholesky(corr_);
}

Mat GaussianWorld::conditional_mean(const MultimodalCondition& c) const {
    if (c.text_emb.size() != d_c_ || c.img_emb.size() != d_c_)
        throw std::invalid_argument("conditional_mean: embedding dimension mismatch");
    if (c.audio.size() < frames_)
        throw std::invalid_argument("conditional_mean: audio shorter than frame count");
    const Vec static_part = [&] {
        Vec s = matvec(m_text_, c.text_emb);
        const Vec i = matvec(m_img_, c.img_emb);
        for (std::size_t k = 0; k < d_; ++k) s[k] += i[k];
        return s;
    }();
    Mat mu(frames_, d_);
    for (std::size_t f = 0; f < frames_; ++f)
        for (std::size_t k = 0; k < d_; ++k) mu(f, k) = static_part[k] + m_audio_[k] * c.audio[f];
    return mu;
}

Mat GaussianWorld::block_mean(const MultimodalCondition& c, std::size_t block_index,
                              std::size_t block_size) const {
    const Vec static_part = [&] {
        Vec s = matvec(m_text_, c.text_emb);
        const Vec i = matvec(m_img_, c.img_emb);
        for (std::size_t k = 0; k < d_; ++k) s[k] += i[k];
        return s;
    }();
    Mat mu(block_size, d_);
    for (std::size_t r = 0; r < block_size; ++r) {
        const std::size_t f = block_index * block_size + r;
        if (f >= c.audio.size()) throw std::invalid_argument("block_mean: audio too short");
        for (std::size_t k = 0; k < d_; ++k) mu(r, k) = static_part[k] + m_audio_[k] * c.audio[f];
    }
    return mu;
}

GaussianWorld::TeacherOut GaussianWorld::teacher_x0(const Mat& x_t, double t,
                                                    const MultimodalCondition& c,
                                                    const NoiseSchedule& sched) const {
    if (t < 0.0 || t > 1.0) throw std::invalid_argument("teacher_x0: t must be in [0, 1]");
    if (x_t.rows != frames_ || x_t.cols != d_)
        throw std::invalid_argument("teacher_x0: latent shape mismatch");
    const double a = sched.alpha(t);
    const double s = sched.sigma(t);
    const Mat mu = conditional_mean(c);
    TeacherOut out;
    if (a == 0.0) {
        // Degenerate timestep: x_t carries no signal, posterior mean is mu_c.
        out.x0 = mu;
        out.degenerate = true;
        return out;
    }
    const double v = base_var_;
    const Mat gain = spectral([&](double lam) {
        return a * v * lam / (a * a * v * lam + s * s);
    });
    Mat centered = x_t;
    for (std::size_t i = 0; i < centered.a.size(); ++i) centered.a[i] -= a * mu.a[i];
    out.x0 = mu + gain * centered;
    return out;
}

Mat GaussianWorld::score(const Mat& x_t, double t, const MultimodalCondition& c,
                         const NoiseSchedule& sched) const {
    if (t <= 0.0 || t > 1.0) throw std::invalid_argument("score: t must be in (0, 1]");
    const double a = sched.alpha(t);
    const double s = sched.sigma(t);
    const double v = base_var_;
    const Mat mu = conditional_mean(c);
    const Mat prec = spectral([&](double lam) { return 1.0 / (a * a * v * lam + s * s); });
    Mat centered = x_t;
    for (std::size_t i = 0; i < centered.a.size(); ++i) centered.a[i] -= a * mu.a[i];
    return -1.0 * (prec * centered);
}

Mat GaussianWorld::sample(const MultimodalCondition& c, Rng& rng) const {
    const Mat mu = conditional_mean(c);
    const double sd = std::sqrt(base_var_);
    Mat z(frames_, d_);
    for (double& x : z.a) x = rng.normal();
    Mat out = mu;
    if (sd > 0.0) {
        const Mat lz = corr_chol_ * z;
        for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] += sd * lz.a[i];
    }
    return out;
}

Mat GaussianWorld::block_posterior_x0(const Mat& x_t_block, double t, std::size_t block_index,
                                      std::size_t block_size, const std::vector<KVEntry>& context,
                                      const MultimodalCondition& c,
                                      const NoiseSchedule& sched) const {
    const std::size_t b = block_size;
    if (x_t_block.rows != b || x_t_block.cols != d_)
        throw std::invalid_argument("block_posterior_x0: block shape mismatch");

    // Context frame indices and stacked clean values.
    std::vector<std::size_t> ctx_frames;
    for (const KVEntry& e : context) {
        if (e.block_index >= block_index)
            throw ContractViolation("block_posterior_x0: context from a non-past block");
        for (std::size_t r = 0; r < b; ++r) ctx_frames.push_back(e.block_index * b + r);
    }
    const std::size_t ns = ctx_frames.size();

    const Mat mu_j = block_mean(c, block_index, b);

    Mat m_cond = mu_j;  // conditional mean given context
    Mat cond_corr(b, b);
    {
        for (std::size_t r = 0; r < b; ++r)
            for (std::size_t q = 0; q < b; ++q)
                cond_corr(r, q) = corr_(block_index * b + r, block_index * b + q);
    }

    if (ns > 0 && base_var_ > 0.0) {
        Mat c_ss(ns, ns), c_js(b, ns);
        for (std::size_t i = 0; i < ns; ++i)
            for (std::size_t j = 0; j < ns; ++j) c_ss(i, j) = corr_(ctx_frames[i], ctx_frames[j]);
        for (std::size_t r = 0; r < b; ++r)
            for (std::size_t j = 0; j < ns; ++j) c_js(r, j) = corr_(block_index * b + r, ctx_frames[j]);

        // G = C_JS C_SS^{-1}
        const Mat g = transpose(cholesky_solve(c_ss, transpose(c_js)));

        Mat ctx_centered(ns, d_);
        {
            std::size_t row = 0;
            for (const KVEntry& e : context) {
                const Mat mu_e = block_mean(c, e.block_index, b);
                for (std::size_t r = 0; r < b; ++r, ++row)
                    for (std::size_t k = 0; k < d_; ++k)
                        ctx_centered(row, k) = e.feature(r, k) - mu_e(r, k);
            }
        }
        m_cond = mu_j + g * ctx_centered;
        cond_corr = cond_corr - g * transpose(c_js);
    }

    const double a = sched.alpha(t);
    const double s = sched.sigma(t);
    if (a == 0.0) return m_cond;

    const double v = base_var_;
    // K = a v Ctil (a^2 v Ctil + s^2 I)^{-1}; both factors commute.
    Mat obs = cond_corr;
    for (auto& x : obs.a) x *= a * a * v;
    for (std::size_t i = 0; i < b; ++i) obs(i, i) += s * s;
    Mat num = cond_corr;
    for (auto& x : num.a) x *= a * v;
    const Mat k = cholesky_solve(obs, num);

    Mat centered = x_t_block;
    for (std::size_t i = 0; i < centered.a.size(); ++i) centered.a[i] -= a * m_cond.a[i];
    return m_cond + k * centered;
}

Mat GaussianWorld::marginal_frame_cov(double t, const NoiseSchedule& sched) const {
    const double a = sched.alpha(t);
    const double s = sched.sigma(t);
    Mat r = corr_;
    for (auto& x : r.a) x *= a * a * base_var_;
    for (std::size_t i = 0; i < frames_; ++i) r(i, i) += s * s;
    return r;
}

static Mat kron_with_identity(const Mat& frame_cov, std::size_t d) {
    const std::size_t n = frame_cov.rows * d;
    Mat full(n, n);
    for (std::size_t f = 0; f < frame_cov.rows; ++f)
        for (std::size_t g = 0; g < frame_cov.cols; ++g) {
            const double v = frame_cov(f, g);
            if (v == 0.0) continue;
            for (std::size_t k = 0; k < d; ++k) full(f * d + k, g * d + k) = v;
        }
    return full;
}

Mat GaussianWorld::full_data_cov() const {
    Mat fc = corr_;
    for (auto& x : fc.a) x *= base_var_;
    return kron_with_identity(fc, d_);
}

Mat GaussianWorld::full_marginal_cov(double t, const NoiseSchedule& sched) const {
    return kron_with_identity(marginal_frame_cov(t, sched), d_);
}

Mat GaussianWorld::block_data_cov(std::size_t block_index, std::size_t block_size) const {
    Mat fc(block_size, block_size);
    for (std::size_t r = 0; r < block_size; ++r)
        for (std::size_t q = 0; q < block_size; ++q)
            fc(r, q) = base_var_ * corr_(block_index * block_size + r, block_index * block_size + q);
    return kron_with_identity(fc, d_);
}

GaussianWorld make_world(std::size_t d, std::size_t frames, std::size_t d_c, double rho,
                         double base_var, std::uint64_t seed) {
    Rng rng = Rng::substream(seed, "world-maps");
    const double text_scale = 1.0 / std::sqrt(static_cast<double>(d_c));
    Mat m_text(d, d_c), m_img(d, d_c);
    for (auto& x : m_text.a) x = text_scale * rng.normal();
    for (auto& x : m_img.a) x = text_scale * rng.normal();
    Vec m_audio(d);
    for (auto& x : m_audio) x = 0.8 * rng.normal();
    return GaussianWorld(d, frames, d_c, std::move(m_text), std::move(m_img), std::move(m_audio),
                         rho, base_var);
}

}  // namespace streamforge
