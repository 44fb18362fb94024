#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "streamforge/linalg.hpp"

namespace streamforge {

struct GaussianSummary {
    Vec mean;
    Mat cov;  // symmetric, eigenvalues clamped at -1e-8 -> 0 downstream
    std::size_t count = 0;
};

// Sample mean and unbiased covariance, symmetrized. Needs >= 2 samples.
GaussianSummary fit_gaussian(const std::vector<Vec>& samples);

// Squared 2-Wasserstein distance between Gaussians:
//   ||mu1 - mu2||^2 + tr(S1 + S2 - 2 (S1^{1/2} S2 S1^{1/2})^{1/2}),
// the mathematical core of FID/FVD. Matrix square roots go through the
// symmetric eigendecomposition.
double gaussian_frechet(const GaussianSummary& a, const GaussianSummary& b);

struct SyncResult {
    double confidence = 0.0;  // peak correlation minus the median over offsets
    int offset = 0;           // argmax offset; ties resolve to the smallest |offset|
};

// Normalized cross-correlation between an audio envelope and a motion
// series over integer offsets in [-max_offset, max_offset]. Positive offset
// means the motion lags the audio. Throws for constant inputs.
SyncResult sync_metric(const Vec& audio_envelope, const Vec& motion, int max_offset);

// Per-frame Euclidean displacement ||x[f] - x[f-1]||, with a leading zero so
// the series length matches the frame count.
Vec motion_series(const Mat& frames);

// Absolute first difference of the audio drive, same length convention.
Vec audio_envelope(const Vec& audio);

struct PercentileReport {
    std::map<std::string, double> mean_percentile;
    bool degenerate = false;  // zero pooled variance: everything reports 50
};

// Pools all methods' scores, z-scores against the pooled distribution and
// maps each z to its standard-normal percentile (0-100); reports per-method
// means. use_empirical_rank switches to the rank-based percentile variant.
PercentileReport zscore_percentiles(const std::map<std::string, Vec>& scores,
                                    bool use_empirical_rank = false);

struct ReportRow {
    std::string method;
    std::string metric;
    double value = 0.0;
    std::size_t n = 0;
    std::uint64_t seed = 0;
};

// Deterministic CSV with the fixed column order (method, metric, value, n, seed).
std::string report_csv(const std::vector<ReportRow>& rows);
std::vector<ReportRow> parse_report_csv(const std::string& csv);

// Shared numeric formatting for all CSV/manifest output (round-trippable,
// locale-independent).
std::string format_double(double v);

}  // namespace streamforge
