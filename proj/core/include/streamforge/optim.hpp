#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "streamforge/linalg.hpp"

namespace streamforge {

// AdamW with decoupled weight decay over a flat parameter vector.
class AdamW {
  public:
    struct Options {
        double lr = 1e-3;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
        double weight_decay = 0.0;
    };

    AdamW(std::size_t n, Options opt) : opt_(opt), m_(n, 0.0), v_(n, 0.0) {}

    AdamW(Options opt, Vec m, Vec v, int t) : opt_(opt), m_(std::move(m)), v_(std::move(v)), t_(t) {
        if (m_.size() != v_.size()) throw std::invalid_argument("AdamW: moment size mismatch");
    }

    const Options& options() const { return opt_; }
    void set_lr(double lr) { opt_.lr = lr; }
    const Vec& first_moment() const { return m_; }
    const Vec& second_moment() const { return v_; }
    int steps_taken() const { return t_; }

    void step(Vec& params, const Vec& grads) {
        if (params.size() != m_.size() || grads.size() != m_.size())
            throw std::invalid_argument("AdamW: size mismatch");
        ++t_;
        const double bc1 = 1.0 - std::pow(opt_.beta1, t_);
        const double bc2 = 1.0 - std::pow(opt_.beta2, t_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = opt_.beta1 * m_[i] + (1.0 - opt_.beta1) * grads[i];
            v_[i] = opt_.beta2 * v_[i] + (1.0 - opt_.beta2) * grads[i] * grads[i];
            const double mhat = m_[i] / bc1;
            const double vhat = v_[i] / bc2;
            params[i] -= opt_.lr * (mhat / (std::sqrt(vhat) + opt_.eps) +
                                    opt_.weight_decay * params[i]);
        }
    }

  private:
    Options opt_;
    Vec m_, v_;
    int t_ = 0;
};

// ema <- decay * ema + (1 - decay) * params, elementwise.
inline void ema_update(Vec& ema, const Vec& params, double decay) {
    if (ema.size() != params.size()) throw std::invalid_argument("ema_update: size mismatch");
    for (std::size_t i = 0; i < ema.size(); ++i)
        ema[i] = decay * ema[i] + (1.0 - decay) * params[i];
}

}  // namespace streamforge
