#include "streamforge/conditions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace streamforge {

static constexpr double kTwoPi = 6.283185307179586476925286766559;

// Generation keeps audio inside DFT modes 1..F/6; the SNR scorer low-passes
// at F/4, so clean audio has an exactly empty residual band.
static std::size_t gen_cutoff(std::size_t frames) { return std::max<std::size_t>(1, frames / 6); }
static std::size_t score_cutoff(std::size_t frames) { return std::max<std::size_t>(2, frames / 4); }

std::vector<MultimodalCondition> generate_conditions(Rng& rng, std::size_t n,
                                                     const DegradationMix& mix, std::size_t d_c,
                                                     std::size_t frames) {
    const double sum = mix.clean_fraction + mix.dim_fraction + mix.noisy_fraction;
    if (mix.clean_fraction < 0.0 || mix.dim_fraction < 0.0 || mix.noisy_fraction < 0.0 ||
        std::fabs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("generate_conditions: fractions must be >= 0 and sum to 1");

    const auto n_clean = static_cast<std::size_t>(std::llround(mix.clean_fraction * n));
    const auto n_dim = static_cast<std::size_t>(std::llround(mix.dim_fraction * n));

    std::vector<MultimodalCondition> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        MultimodalCondition c;
        c.text_emb.resize(d_c);
        c.img_emb.resize(d_c);
        for (auto& x : c.text_emb) x = 1.0 + 0.25 * rng.normal();
        for (auto& x : c.img_emb) x = 1.0 + 0.25 * rng.normal();

        c.audio.assign(frames, 0.0);
        const std::size_t k_max = gen_cutoff(frames);
        for (std::size_t m = 1; m <= k_max; ++m) {
            const double amp = 1.0 / static_cast<double>(m);
            const double phase = kTwoPi * rng.uniform();
            for (std::size_t f = 0; f < frames; ++f)
                c.audio[f] += amp * std::cos(kTwoPi * static_cast<double>(m * f) /
                                                 static_cast<double>(frames) +
                                             phase);
        }

        if (i >= n_clean && i < n_clean + n_dim) {
            for (auto& x : c.img_emb) x *= 0.1;
        } else if (i >= n_clean + n_dim) {
            for (auto& x : c.audio) x += rng.normal();
        }
        out.push_back(std::move(c));
    }
    return out;
}

Vec lowpass_dft(const Vec& series, std::size_t cutoff_mode) {
    const std::size_t n = series.size();
    Vec out(n, 0.0);
    for (std::size_t m = 0; m <= cutoff_mode && m < n; ++m) {
        double re = 0.0, im = 0.0;
        for (std::size_t f = 0; f < n; ++f) {
            const double ang = kTwoPi * static_cast<double>(m * f) / static_cast<double>(n);
            re += series[f] * std::cos(ang);
            im -= series[f] * std::sin(ang);
        }
        // Real signal: mirror every non-DC, non-Nyquist mode.
        const bool mirrored = m != 0 && !(n % 2 == 0 && m == n / 2);
        const double scale = (mirrored ? 2.0 : 1.0) / static_cast<double>(n);
        for (std::size_t f = 0; f < n; ++f) {
            const double ang = kTwoPi * static_cast<double>(m * f) / static_cast<double>(n);
            out[f] += scale * (re * std::cos(ang) - im * std::sin(ang));
        }
    }
    return out;
}

static double variance(const Vec& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return var / static_cast<double>(v.size());
}

ConditionQuality score_condition(const MultimodalCondition& c) {
    ConditionQuality q;
    if (!c.img_emb.empty()) {
        q.brightness = 0.0;
        for (double x : c.img_emb) q.brightness += x;
        q.brightness /= static_cast<double>(c.img_emb.size());
        q.sharpness = variance(c.img_emb);
    }

    if (!c.audio.empty()) {
        const Vec smooth = lowpass_dft(c.audio, score_cutoff(c.audio.size()));
        Vec residual(c.audio.size());
        for (std::size_t i = 0; i < residual.size(); ++i) residual[i] = c.audio[i] - smooth[i];
        const double signal_var = variance(smooth);
        const double noise_var = variance(residual);
        if (noise_var <= 1e-12 * std::max(1.0, signal_var))
            q.audio_snr_db = std::numeric_limits<double>::infinity();
        else
            q.audio_snr_db = 10.0 * std::log10(signal_var / noise_var);
    }
    return q;
}

FilterResult filter_conditions(const std::vector<MultimodalCondition>& conditions,
                               const QualityThresholds& thr) {
    FilterResult r;
    for (const MultimodalCondition& c : conditions) {
        const ConditionQuality q = score_condition(c);
        std::string reason;
        if (q.brightness < thr.min_brightness)
            reason = "brightness";
        else if (q.sharpness < thr.min_sharpness)
            reason = "sharpness";
        else if (q.audio_snr_db < thr.min_snr_db)
            reason = "snr";
        if (reason.empty())
            r.kept.push_back(c);
        else
            r.rejected.push_back(RejectedCondition{c, q, reason});
    }
    return r;
}

ConditionRefiner identity_refiner() {
    return [](const MultimodalCondition& c) { return c; };
}

}  // namespace streamforge
