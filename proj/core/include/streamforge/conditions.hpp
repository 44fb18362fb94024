#pragma once

#include <functional>
#include <string>
#include <vector>

#include "streamforge/rng.hpp"
#include "streamforge/types.hpp"

namespace streamforge {

struct ConditionQuality {
    double brightness = 0.0;  // mean of img_emb entries
    double sharpness = 0.0;   // variance of img_emb entries
    double audio_snr_db = 0.0;  // +inf sentinel when no broadband residual exists
};

struct DegradationMix {
    double clean_fraction = 1.0;
    double dim_fraction = 0.0;    // img_emb scaled by 0.1
    double noisy_fraction = 0.0;  // heavy white noise added to the audio
};

struct QualityThresholds {
    double min_brightness = 0.5;
    double min_sharpness = 0.0;  // reported but not gating by default
    double min_snr_db = 10.0;
};

// Clean conditions carry unit-scale embeddings and smooth band-limited
// audio; degraded variants reproduce the failure-mode inputs (dim reference
// image, noisy audio track).
std::vector<MultimodalCondition> generate_conditions(Rng& rng, std::size_t n,
                                                     const DegradationMix& mix, std::size_t d_c,
                                                     std::size_t frames);

ConditionQuality score_condition(const MultimodalCondition& c);

struct RejectedCondition {
    MultimodalCondition condition;
    ConditionQuality quality;
    std::string reason;  // first failing metric: brightness | sharpness | snr
};

struct FilterResult {
    std::vector<MultimodalCondition> kept;
    std::vector<RejectedCondition> rejected;
};

// Order-preserving partition: keep iff every score meets its threshold.
FilterResult filter_conditions(const std::vector<MultimodalCondition>& conditions,
                               const QualityThresholds& thresholds);

// Reserved refinement hook (identity by default); stands in for prompt
// rewriting / reference-image regeneration, which live outside this artifact.
using ConditionRefiner = std::function<MultimodalCondition(const MultimodalCondition&)>;
ConditionRefiner identity_refiner();

// Band-limited low-pass reconstruction used by the SNR estimate: keep DFT
// modes 0..cutoff and resynthesize.
Vec lowpass_dft(const Vec& series, std::size_t cutoff_mode);

}  // namespace streamforge
