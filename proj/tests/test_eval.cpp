#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "streamforge/eval.hpp"
#include "streamforge/rng.hpp"

using namespace streamforge;

TEST_CASE("fit_gaussian basics") {
    SUBCASE("two opposite samples have zero mean") {
        const GaussianSummary g = fit_gaussian({{1.0, -2.0}, {-1.0, 2.0}});
        CHECK(g.mean[0] == 0.0);
        CHECK(g.mean[1] == 0.0);
        CHECK(g.count == 2);
    }
    SUBCASE("constant samples have zero covariance") {
        const GaussianSummary g = fit_gaussian({{3.0, 1.0}, {3.0, 1.0}, {3.0, 1.0}});
        CHECK(max_abs(g.cov) == 0.0);
    }
    SUBCASE("fixture matches the direct formula") {
        const std::vector<Vec> xs = {{1.0, 2.0}, {3.0, 0.0}, {-1.0, 1.0}};
        const GaussianSummary g = fit_gaussian(xs);
        CHECK(g.mean[0] == doctest::Approx(1.0));
        CHECK(g.mean[1] == doctest::Approx(1.0));
        // unbiased covariance by hand: sum of outer products / (n-1)
        CHECK(g.cov(0, 0) == doctest::Approx((0.0 + 4.0 + 4.0) / 2.0));
        CHECK(g.cov(1, 1) == doctest::Approx((1.0 + 1.0 + 0.0) / 2.0));
        CHECK(g.cov(0, 1) == doctest::Approx((0.0 + -2.0 + 0.0) / 2.0));
        CHECK(g.cov(0, 1) == g.cov(1, 0));
    }
    SUBCASE("fewer than two samples is an error") {
        CHECK_THROWS_AS(fit_gaussian({{1.0}}), std::invalid_argument);
    }
}

TEST_CASE("gaussian_frechet closed-form cases") {
    SUBCASE("identical summaries give zero") {
        Rng rng(3);
        Mat a(4, 4);
        for (auto& v : a.a) v = rng.normal();
        GaussianSummary g;
        g.mean = {0.1, -0.4, 2.0, 1.0};
        g.cov = symmetrize(transpose(a) * a);
        CHECK(gaussian_frechet(g, g) < 1e-8);
    }
    SUBCASE("equal covariances reduce to the squared mean distance") {
        GaussianSummary a, b;
        a.mean = {0.0, 0.0};
        b.mean = {3.0, -4.0};
        a.cov = b.cov = Mat::identity(2);
        a.cov(0, 1) = a.cov(1, 0) = b.cov(0, 1) = b.cov(1, 0) = 0.3;
        CHECK(gaussian_frechet(a, b) == doctest::Approx(25.0).epsilon(1e-10));
    }
    SUBCASE("commuting diagonal case equals sum of root differences squared") {
        GaussianSummary a, b;
        a.mean = b.mean = {0.0, 0.0};
        a.cov = Mat::diag({1.0, 4.0});
        b.cov = Mat::diag({9.0, 1.0});
        // (1-3)^2 + (2-1)^2 = 5, via the general eigendecomposition path
        CHECK(std::fabs(gaussian_frechet(a, b) - 5.0) < 1e-8);
    }
    SUBCASE("symmetric in its arguments") {
        Rng rng(5);
        auto random_summary = [&](std::uint64_t) {
            Mat m(3, 3);
            for (auto& v : m.a) v = rng.normal();
            GaussianSummary g;
            g.mean = {rng.normal(), rng.normal(), rng.normal()};
            g.cov = symmetrize(transpose(m) * m);
            return g;
        };
        for (int i = 0; i < 5; ++i) {
            const GaussianSummary a = random_summary(i), b = random_summary(i + 100);
            CHECK(std::fabs(gaussian_frechet(a, b) - gaussian_frechet(b, a)) < 1e-8);
        }
    }
    SUBCASE("strictly increasing under mean translation") {
        Rng rng(7);
        Mat m(3, 3);
        for (auto& v : m.a) v = rng.normal();
        GaussianSummary a, b;
        a.mean = b.mean = {0.0, 0.0, 0.0};
        a.cov = symmetrize(transpose(m) * m);
        b.cov = Mat::identity(3);
        double prev = gaussian_frechet(a, b);
        for (double step : {0.5, 1.0, 2.0, 4.0}) {
            b.mean = {step, 0.0, 0.0};
            const double cur = gaussian_frechet(a, b);
            CHECK(cur > prev);
            prev = cur;
        }
    }
    SUBCASE("dimension mismatch throws") {
        GaussianSummary a, b;
        a.mean = {0.0};
        a.cov = Mat::identity(1);
        b.mean = {0.0, 0.0};
        b.cov = Mat::identity(2);
        CHECK_THROWS_AS(gaussian_frechet(a, b), std::invalid_argument);
    }
}

TEST_CASE("sync_metric recovers offsets and rejects degenerate input") {
    Rng rng(11);
    Vec audio(64);
    for (std::size_t i = 0; i < audio.size(); ++i)
        audio[i] = std::sin(0.37 * static_cast<double>(i)) + 0.25 * rng.normal();

    SUBCASE("identical series peak at offset zero") {
        const SyncResult r = sync_metric(audio, audio, 5);
        CHECK(r.offset == 0);
        CHECK(r.confidence > 0.5);
    }
    SUBCASE("offset equivariance: a k-frame delay reports offset k") {
        for (int k = -3; k <= 3; ++k) {
            Vec motion(audio.size(), 0.0);
            for (std::size_t i = 0; i < audio.size(); ++i) {
                const long src = static_cast<long>(i) - k;
                if (src >= 0 && src < static_cast<long>(audio.size()))
                    motion[i] = audio[static_cast<std::size_t>(src)];
            }
            const SyncResult r = sync_metric(audio, motion, 5);
            CHECK(r.offset == k);
        }
    }
    SUBCASE("independent noise has low confidence") {
        Rng noise_rng(13);
        for (int rep = 0; rep < 4; ++rep) {
            Vec a(600), m(600);
            for (auto& v : a) v = noise_rng.normal();
            for (auto& v : m) v = noise_rng.normal();
            CHECK(sync_metric(a, m, 4).confidence < 0.2);
        }
    }
    SUBCASE("constant series is a zero-variance error") {
        const Vec constant(32, 1.5);
        CHECK_THROWS_AS(sync_metric(constant, audio, 3), std::invalid_argument);
    }
    SUBCASE("series too short for the offset range") {
        const Vec tiny = {1.0, 2.0, 0.5, 1.5};
        CHECK_THROWS_AS(sync_metric(tiny, tiny, 2), std::invalid_argument);
    }
}

TEST_CASE("motion series and audio envelope conventions") {
    Mat frames(3, 2);
    frames(0, 0) = 0.0;
    frames(0, 1) = 0.0;
    frames(1, 0) = 3.0;
    frames(1, 1) = 4.0;
    frames(2, 0) = 3.0;
    frames(2, 1) = 4.0;
    const Vec m = motion_series(frames);
    CHECK(m.size() == 3);
    CHECK(m[0] == 0.0);
    CHECK(m[1] == doctest::Approx(5.0));
    CHECK(m[2] == 0.0);

    const Vec env = audio_envelope({1.0, -1.0, 2.0});
    CHECK(env[0] == 0.0);
    CHECK(env[1] == doctest::Approx(2.0));
    CHECK(env[2] == doctest::Approx(3.0));
}

TEST_CASE("zscore percentiles") {
    SUBCASE("pooled {1,2,3}: the middle score maps to percentile 50") {
        const PercentileReport rep = zscore_percentiles({{"m", {1.0, 2.0, 3.0}}});
        // mean of the three percentiles is 50 by symmetry; the middle one is exactly 50
        const PercentileReport mid = zscore_percentiles({{"m", {2.0}}, {"pool", {1.0, 3.0}}});
        CHECK(mid.mean_percentile.at("m") == doctest::Approx(50.0).epsilon(1e-9));
        CHECK(rep.mean_percentile.at("m") == doctest::Approx(50.0).epsilon(1e-6));
    }
    SUBCASE("pooled mean percentile is close to 50 for n >= 100") {
        Rng rng(17);
        Vec a(150), b(150);
        for (auto& v : a) v = rng.normal() * 2.0 + 1.0;
        for (auto& v : b) v = rng.normal() * 2.0 + 1.3;
        const PercentileReport rep = zscore_percentiles({{"a", a}, {"b", b}});
        const double pooled_mean =
            0.5 * (rep.mean_percentile.at("a") + rep.mean_percentile.at("b"));
        CHECK(std::fabs(pooled_mean - 50.0) < 2.0);
    }
    SUBCASE("identical distributions score within noise of each other") {
        Rng rng(19);
        Vec a(400), b(400);
        for (auto& v : a) v = rng.normal();
        for (auto& v : b) v = rng.normal();
        const PercentileReport rep = zscore_percentiles({{"a", a}, {"b", b}});
        CHECK(std::fabs(rep.mean_percentile.at("a") - rep.mean_percentile.at("b")) < 5.0);
    }
    SUBCASE("zero pooled variance degenerates to 50 with a flag") {
        const PercentileReport rep = zscore_percentiles({{"a", {1.0, 1.0}}, {"b", {1.0}}});
        CHECK(rep.degenerate);
        CHECK(rep.mean_percentile.at("a") == 50.0);
        CHECK(rep.mean_percentile.at("b") == 50.0);
    }
    SUBCASE("percentiles are monotone in the raw score") {
        Rng rng(23);
        Vec pool(50);
        for (auto& v : pool) v = rng.normal();
        const PercentileReport lo = zscore_percentiles({{"x", {-0.5}}, {"pool", pool}});
        const PercentileReport hi = zscore_percentiles({{"x", {0.5}}, {"pool", pool}});
        CHECK(lo.mean_percentile.at("x") < hi.mean_percentile.at("x"));
    }
    SUBCASE("empirical-rank variant is available") {
        const PercentileReport rep =
            zscore_percentiles({{"m", {1.0, 2.0, 3.0, 4.0}}}, /*use_empirical_rank=*/true);
        CHECK(rep.mean_percentile.at("m") == doctest::Approx(50.0));
    }
}

TEST_CASE("report CSV is deterministic and round-trips") {
    SUBCASE("empty input emits only the header") {
        CHECK(report_csv({}) == "method,metric,value,n,seed\n");
    }
    SUBCASE("rows round-trip through the reader") {
        std::vector<ReportRow> rows = {
            {"ours", "frechet", 1.25, 2000, 7},
            {"baseline", "sync", -0.125, 64, 7},
        };
        const std::string csv = report_csv(rows);
        CHECK(csv.find("method,metric,value,n,seed\n") == 0);
        const auto back = parse_report_csv(csv);
        REQUIRE(back.size() == 2);
        CHECK(back[0].method == "ours");
        CHECK(back[0].metric == "frechet");
        CHECK(back[0].value == 1.25);
        CHECK(back[0].n == 2000);
        CHECK(back[1].value == -0.125);
        CHECK(back[1].seed == 7);
        CHECK(report_csv(back) == csv);
    }
}
