#pragma once

#include <stdexcept>
#include <vector>

#include "streamforge/linalg.hpp"

namespace streamforge {

// Classifier-free guidance in x0 space with one scale per supplied
// modality: pred_null + sum_m scale_m * (pred_m - pred_null).
inline Mat cfg_combine(const Mat& pred_null, const std::vector<Mat>& preds,
                       const std::vector<double>& scales) {
    if (preds.size() != scales.size())
        throw std::invalid_argument("cfg_combine: one scale per supplied modality");
    Mat out = pred_null;
    for (std::size_t m = 0; m < preds.size(); ++m) {
        if (!preds[m].same_shape(pred_null))
            throw std::invalid_argument("cfg_combine: prediction shape mismatch");
        const double s = scales[m];
        for (std::size_t i = 0; i < out.a.size(); ++i)
            out.a[i] += s * (preds[m].a[i] - pred_null.a[i]);
    }
    return out;
}

// Per-modality guidance scales for the teacher score query.
struct CfgScales {
    double text = 1.0;
    double img = 1.0;
    double audio = 1.0;
};

}  // namespace streamforge
