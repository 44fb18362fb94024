#pragma once

#include <vector>

#include "streamforge/linalg.hpp"
#include "streamforge/rng.hpp"
#include "streamforge/schedule.hpp"
#include "streamforge/types.hpp"
#include "streamforge/world.hpp"

namespace streamforge {

// Trainable score network in x0 parameterization. Same affine family as the
// student but non-causal: a full-video predictor whose pooling term sees
// every frame, with separate weights per tau bucket (uniform buckets on (0,1)).
//   s_psi[f] = W_b x[f] + V_b pool(x) + U_b [c_text; c_img; audio[f]] + bias_b
struct CriticParams {
    struct Bucket {
        Mat w;     // d x d
        Mat v;     // d x d
        Mat u;     // d x (2 d_c + 1)
        Vec bias;  // d
    };
    std::size_t n_buckets = 8;
    std::size_t d = 0;
    std::size_t d_c = 0;
    std::vector<Bucket> buckets;

    std::size_t cond_feature_dim() const { return 2 * d_c + 1; }
    std::size_t bucket_of(double tau) const;
};

CriticParams make_critic(std::size_t n_buckets, std::size_t d, std::size_t d_c);

Vec critic_to_vec(const CriticParams& p);
void critic_from_vec(CriticParams& p, const Vec& v);

struct CriticGrads {
    std::vector<CriticParams::Bucket> buckets;
};
CriticGrads zero_critic_grads(const CriticParams& p);
Vec critic_grads_to_vec(const CriticGrads& g);

Mat critic_predict_x0(const CriticParams& params, const Mat& x_tau, double tau,
                      const MultimodalCondition& c);

// Accumulates parameter gradients for upstream dL/ds_psi.
void critic_backward(const CriticParams& params, const Mat& x_tau, double tau,
                     const MultimodalCondition& c, const Mat& upstream, CriticGrads& grads);

// One denoising regression sample for the critic.
struct CriticSample {
    Mat x_tau;
    double tau = 0.5;
    MultimodalCondition c;
    Mat target_x0;
};

// Mean over samples of ||s_psi(x_tau, tau, c) - target||^2 and its gradient.
double critic_loss_and_grad(const CriticParams& params, const std::vector<CriticSample>& batch,
                            CriticGrads& grads);

// Per-bucket ridge regression of x0 on noised world draws: the toy analog
// of starting DMD from a pretrained denoiser rather than a blank network.
CriticParams critic_init_from_world(const GaussianWorld& world, const NoiseSchedule& sched,
                                    const std::vector<MultimodalCondition>& conditions,
                                    std::size_t n_buckets, std::size_t samples_per_bucket,
                                    double ridge, Rng& rng);

}  // namespace streamforge
