#pragma once

#include <cstdint>
#include <vector>

#include "streamforge/linalg.hpp"
#include "streamforge/rng.hpp"
#include "streamforge/schedule.hpp"
#include "streamforge/types.hpp"

namespace streamforge {

struct KVEntry;  // student.hpp

// Closed-form conditional-Gaussian data distribution standing in for the
// data that the frozen teacher scores. The conditional mean is linear in
// the condition; the covariance is an AR(1) frame correlation Kroneckered
// with base_var * I_d, i.e. Cov(x[f,i], x[g,j]) = base_var * rho^|f-g| * [i==j].
// Everything downstream (posterior mean, score, marginals, block
// conditionals) is exact.
class GaussianWorld {
  public:
    GaussianWorld(std::size_t d, std::size_t frames, std::size_t d_c, Mat m_text, Mat m_img,
                  Vec m_audio, double rho, double base_var);

    std::size_t dim() const { return d_; }
    std::size_t frames() const { return frames_; }
    std::size_t cond_dim() const { return d_c_; }
    double rho() const { return rho_; }
    double base_var() const { return base_var_; }

    // mu_c as an F x d matrix: row f = M_text c_text + M_img c_img + M_audio audio[f].
    Mat conditional_mean(const MultimodalCondition& c) const;

    // Mean restricted to the frames of one block.
    Mat block_mean(const MultimodalCondition& c, std::size_t block_index, std::size_t block_size) const;

    struct TeacherOut {
        Mat x0;
        bool degenerate = false;  // t == 1 exactly: returns mu_c
    };

    // Exact posterior mean E[x0 | x_t, c] in x0 parameterization.
    TeacherOut teacher_x0(const Mat& x_t, double t, const MultimodalCondition& c,
                          const NoiseSchedule& sched) const;

    // Analytic score of the noised marginal q_t = N(alpha mu, alpha^2 Sigma + sigma^2 I).
    Mat score(const Mat& x_t, double t, const MultimodalCondition& c, const NoiseSchedule& sched) const;

    // Exact draw from N(mu_c, Sigma).
    Mat sample(const MultimodalCondition& c, Rng& rng) const;

    // Exact posterior mean of one block given clean context blocks and the
    // noisy block observation; the "perfect oracle" block predictor.
    Mat block_posterior_x0(const Mat& x_t_block, double t, std::size_t block_index,
                           std::size_t block_size, const std::vector<KVEntry>& context,
                           const MultimodalCondition& c, const NoiseSchedule& sched) const;

    // AR(1) frame correlation matrix C (F x F).
    const Mat& frame_correlation() const { return corr_; }

    // Frame-level covariance of the noised marginal: alpha^2 v C + sigma^2 I (F x F).
    Mat marginal_frame_cov(double t, const NoiseSchedule& sched) const;

    // Dense (F*d) x (F*d) covariance matrices, frame-major flattening.
    Mat full_data_cov() const;
    Mat full_marginal_cov(double t, const NoiseSchedule& sched) const;

    // Dense b*d x b*d marginal covariance of one block.
    Mat block_data_cov(std::size_t block_index, std::size_t block_size) const;

    double trace_cov() const { return base_var_ * static_cast<double>(frames_ * d_); }

  private:
    std::size_t d_, frames_, d_c_;
    Mat m_text_, m_img_;  // d x d_c
    Vec m_audio_;         // d
    double rho_, base_var_;

    Mat corr_;       // C, F x F
    Eigh corr_eig_;  // C = Q diag(lam) Q^T
    Mat corr_chol_;  // lower L with L L^T = C

    // Q diag(g(lam)) Q^T for a spectral function g.
    template <typename G>
    Mat spectral(G g) const {
        const std::size_t n = frames_;
        Mat r(n, n);
        for (std::size_t k = 0; k < n; ++k) {
            const double gk = g(corr_eig_.w[k]);
            if (gk == 0.0) continue;
            for (std::size_t i = 0; i < n; ++i) {
                const double s = gk * corr_eig_.v(i, k);
                if (s == 0.0) continue;
                for (std::size_t j = 0; j < n; ++j) r(i, j) += s * corr_eig_.v(j, k);
            }
        }
        return r;
    }
};

// World with seeded random condition maps at sensible scales.
GaussianWorld make_world(std::size_t d, std::size_t frames, std::size_t d_c, double rho,
                         double base_var, std::uint64_t seed);

}  // namespace streamforge
