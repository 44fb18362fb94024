#include "streamforge/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace streamforge {

GaussianSummary fit_gaussian(const std::vector<Vec>& samples) {
    if (samples.size() < 2) throw std::invalid_argument("fit_gaussian: need at least 2 samples");
    const std::size_t dim = samples[0].size();
    GaussianSummary g;
    g.count = samples.size();
    g.mean.assign(dim, 0.0);
    for (const Vec& s : samples) {
        if (s.size() != dim) throw std::invalid_argument("fit_gaussian: ragged samples");
        for (std::size_t i = 0; i < dim; ++i) g.mean[i] += s[i];
    }
    for (auto& m : g.mean) m /= static_cast<double>(samples.size());

    g.cov = Mat(dim, dim);
    Vec centered(dim);
    for (const Vec& s : samples) {
        for (std::size_t i = 0; i < dim; ++i) centered[i] = s[i] - g.mean[i];
        add_outer(g.cov, centered, centered);
    }
    const double denom = static_cast<double>(samples.size() - 1);
    for (auto& v : g.cov.a) v /= denom;
    g.cov = symmetrize(g.cov);
    return g;
}

double gaussian_frechet(const GaussianSummary& a, const GaussianSummary& b) {
    if (a.mean.size() != b.mean.size())
        throw std::invalid_argument("gaussian_frechet: dimension mismatch");
    const std::size_t n = a.mean.size();

    double mean_term = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a.mean[i] - b.mean[i];
        mean_term += d * d;
    }

    const Mat s1h = sym_sqrt(a.cov);
    const Mat inner = s1h * b.cov * s1h;
    const Eigh e = jacobi_eigh(symmetrize(inner));

    double tr1 = 0.0, tr2 = 0.0, tr_cross = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        tr1 += a.cov(i, i);
        tr2 += b.cov(i, i);
        tr_cross += std::sqrt(std::max(0.0, e.w[i]));
    }
    return std::max(0.0, mean_term + tr1 + tr2 - 2.0 * tr_cross);
}

static void normalize_in_place(Vec& s) {
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= static_cast<double>(s.size());
    double var = 0.0;
    for (double v : s) var += (v - mean) * (v - mean);
    var /= static_cast<double>(s.size());
    if (var < 1e-24) throw std::invalid_argument("sync_metric: constant series has no correlation");
    const double inv_sd = 1.0 / std::sqrt(var);
    for (double& v : s) v = (v - mean) * inv_sd;
}

SyncResult sync_metric(const Vec& audio_env, const Vec& motion, int max_offset) {
    if (audio_env.size() != motion.size())
        throw std::invalid_argument("sync_metric: series length mismatch");
    const int t = static_cast<int>(audio_env.size());
    if (max_offset < 0 || t <= 2 * max_offset)
        throw std::invalid_argument("sync_metric: series too short for max_offset");

    Vec a = audio_env, m = motion;
    normalize_in_place(a);
    normalize_in_place(m);

    // corr(o) = mean over the overlap of a[t] * m[t + o]
    std::vector<double> corr;
    corr.reserve(2 * max_offset + 1);
    for (int o = -max_offset; o <= max_offset; ++o) {
        double s = 0.0;
        int count = 0;
        for (int i = 0; i < t; ++i) {
            const int j = i + o;
            if (j < 0 || j >= t) continue;
            s += a[i] * m[j];
            ++count;
        }
        corr.push_back(s / static_cast<double>(count));
    }

    int best = 0;
    for (int i = 1; i < static_cast<int>(corr.size()); ++i) {
        const int oi = i - max_offset;
        const int ob = best - max_offset;
        if (corr[i] > corr[best] ||
            (corr[i] == corr[best] &&
             (std::abs(oi) < std::abs(ob) || (std::abs(oi) == std::abs(ob) && oi < ob))))
            best = i;
    }

    std::vector<double> sorted = corr;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    const double median =
        sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);

    SyncResult r;
    r.offset = best - max_offset;
    r.confidence = corr[best] - median;
    return r;
}

Vec motion_series(const Mat& frames) {
    Vec m(frames.rows, 0.0);
    for (std::size_t f = 1; f < frames.rows; ++f) {
        double s = 0.0;
        for (std::size_t k = 0; k < frames.cols; ++k) {
            const double d = frames(f, k) - frames(f - 1, k);
            s += d * d;
        }
        m[f] = std::sqrt(s);
    }
    return m;
}

Vec audio_envelope(const Vec& audio) {
    Vec e(audio.size(), 0.0);
    for (std::size_t f = 1; f < audio.size(); ++f) e[f] = std::fabs(audio[f] - audio[f - 1]);
    return e;
}

static double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

PercentileReport zscore_percentiles(const std::map<std::string, Vec>& scores,
                                    bool use_empirical_rank) {
    Vec pooled;
    for (const auto& [method, vals] : scores) pooled.insert(pooled.end(), vals.begin(), vals.end());
    if (pooled.empty()) throw std::invalid_argument("zscore_percentiles: no scores");

    double mu = 0.0;
    for (double v : pooled) mu += v;
    mu /= static_cast<double>(pooled.size());
    double var = 0.0;
    for (double v : pooled) var += (v - mu) * (v - mu);
    var /= static_cast<double>(pooled.size());

    PercentileReport rep;
    if (var <= 0.0) {
        rep.degenerate = true;
        for (const auto& [method, vals] : scores) rep.mean_percentile[method] = 50.0;
        return rep;
    }
    const double sd = std::sqrt(var);

    Vec sorted_pool;
    if (use_empirical_rank) {
        sorted_pool = pooled;
        std::sort(sorted_pool.begin(), sorted_pool.end());
    }

    auto percentile = [&](double x) {
        if (!use_empirical_rank) return 100.0 * std_normal_cdf((x - mu) / sd);
        const auto lo = std::lower_bound(sorted_pool.begin(), sorted_pool.end(), x);
        const auto hi = std::upper_bound(sorted_pool.begin(), sorted_pool.end(), x);
        const double below = static_cast<double>(lo - sorted_pool.begin());
        const double equal = static_cast<double>(hi - lo);
        return 100.0 * (below + 0.5 * equal) / static_cast<double>(sorted_pool.size());
    };

    for (const auto& [method, vals] : scores) {
        double s = 0.0;
        for (double v : vals) s += percentile(v);
        rep.mean_percentile[method] = vals.empty() ? 50.0 : s / static_cast<double>(vals.size());
    }
    return rep;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string report_csv(const std::vector<ReportRow>& rows) {
    std::ostringstream out;
    out << "method,metric,value,n,seed\n";
    for (const ReportRow& r : rows)
        out << r.method << ',' << r.metric << ',' << format_double(r.value) << ',' << r.n << ','
            << r.seed << '\n';
    return out.str();
}

std::vector<ReportRow> parse_report_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    std::vector<ReportRow> rows;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        std::istringstream ls(line);
        ReportRow r;
        std::string value, n, seed;
        std::getline(ls, r.method, ',');
        std::getline(ls, r.metric, ',');
        std::getline(ls, value, ',');
        std::getline(ls, n, ',');
        std::getline(ls, seed, ',');
        r.value = std::stod(value);
        r.n = static_cast<std::size_t>(std::stoull(n));
        r.seed = std::stoull(seed);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace streamforge
