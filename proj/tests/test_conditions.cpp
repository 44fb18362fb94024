#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "streamforge/conditions.hpp"

using namespace streamforge;

TEST_CASE("generate_conditions fractions and reproducibility") {
    SUBCASE("fractions must sum to one") {
        Rng rng(1);
        CHECK_THROWS_AS(generate_conditions(rng, 10, DegradationMix{0.5, 0.2, 0.2}, 4, 21),
                        std::invalid_argument);
        CHECK_THROWS_AS(generate_conditions(rng, 10, DegradationMix{1.2, -0.2, 0.0}, 4, 21),
                        std::invalid_argument);
    }
    SUBCASE("an all-clean batch passes the default filters") {
        Rng rng(2);
        const auto cs = generate_conditions(rng, 100, DegradationMix{1.0, 0.0, 0.0}, 4, 21);
        REQUIRE(cs.size() == 100);
        const FilterResult fr = filter_conditions(cs, QualityThresholds{});
        CHECK(fr.kept.size() == 100);
        CHECK(fr.rejected.empty());
    }
    SUBCASE("dim conditions score brightness 10x lower than clean") {
        Rng rng_a(3), rng_b(3);
        const auto clean = generate_conditions(rng_a, 8, DegradationMix{1.0, 0.0, 0.0}, 4, 21);
        const auto dim = generate_conditions(rng_b, 8, DegradationMix{0.0, 1.0, 0.0}, 4, 21);
        for (std::size_t i = 0; i < 8; ++i) {
            const double bc = score_condition(clean[i]).brightness;
            const double bd = score_condition(dim[i]).brightness;
            CHECK(bd == doctest::Approx(0.1 * bc).epsilon(1e-9));
        }
    }
    SUBCASE("seeded generation is reproducible") {
        Rng a(4), b(4);
        const auto ca = generate_conditions(a, 12, DegradationMix{0.5, 0.25, 0.25}, 4, 21);
        const auto cb = generate_conditions(b, 12, DegradationMix{0.5, 0.25, 0.25}, 4, 21);
        for (std::size_t i = 0; i < ca.size(); ++i) {
            CHECK(ca[i].text_emb == cb[i].text_emb);
            CHECK(ca[i].img_emb == cb[i].img_emb);
            CHECK(ca[i].audio == cb[i].audio);
        }
    }
}

TEST_CASE("score_condition") {
    SUBCASE("zero image embedding scores zero brightness") {
        MultimodalCondition c = MultimodalCondition::null_condition(4, 21);
        const ConditionQuality q = score_condition(c);
        CHECK(q.brightness == 0.0);
        CHECK(q.sharpness == 0.0);
    }
    SUBCASE("pure band-limited audio reports the +inf snr sentinel") {
        Rng rng(5);
        const auto cs = generate_conditions(rng, 4, DegradationMix{1.0, 0.0, 0.0}, 4, 21);
        for (const auto& c : cs) {
            const ConditionQuality q = score_condition(c);
            CHECK(std::isinf(q.audio_snr_db));
            CHECK(q.audio_snr_db > 0.0);
        }
    }
    SUBCASE("noisy audio scores a finite, low snr") {
        Rng rng(6);
        const auto cs = generate_conditions(rng, 8, DegradationMix{0.0, 0.0, 1.0}, 4, 21);
        for (const auto& c : cs) {
            const ConditionQuality q = score_condition(c);
            CHECK(std::isfinite(q.audio_snr_db));
            CHECK(q.audio_snr_db < 10.0);
        }
    }
    SUBCASE("fixture embedding matches the hand computation") {
        MultimodalCondition c;
        c.text_emb = {0.0, 0.0};
        c.img_emb = {1.0, 3.0};
        c.audio = {0.5, 0.5, 0.5, 0.5};
        const ConditionQuality q = score_condition(c);
        CHECK(q.brightness == doctest::Approx(2.0));
        CHECK(q.sharpness == doctest::Approx(1.0));  // population variance of {1, 3}
    }
}

TEST_CASE("filter_conditions is a pure, order-preserving partition") {
    Rng rng(7);
    auto mixed = generate_conditions(rng, 30, DegradationMix{0.4, 0.3, 0.3}, 4, 21);

    SUBCASE("empty input gives empty outputs") {
        const FilterResult fr = filter_conditions({}, QualityThresholds{});
        CHECK(fr.kept.empty());
        CHECK(fr.rejected.empty());
    }
    SUBCASE("partition matches per-item threshold evaluation and preserves order") {
        const QualityThresholds thr{};
        const FilterResult fr = filter_conditions(mixed, thr);
        CHECK(fr.kept.size() + fr.rejected.size() == mixed.size());

        std::size_t ki = 0, ri = 0;
        for (const auto& c : mixed) {
            const ConditionQuality q = score_condition(c);
            const bool pass = q.brightness >= thr.min_brightness &&
                              q.sharpness >= thr.min_sharpness && q.audio_snr_db >= thr.min_snr_db;
            if (pass) {
                REQUIRE(ki < fr.kept.size());
                CHECK(fr.kept[ki].img_emb == c.img_emb);
                ++ki;
            } else {
                REQUIRE(ri < fr.rejected.size());
                CHECK(fr.rejected[ri].condition.img_emb == c.img_emb);
                CHECK((fr.rejected[ri].reason == "brightness" ||
                       fr.rejected[ri].reason == "sharpness" || fr.rejected[ri].reason == "snr"));
                ++ri;
            }
        }
    }
    SUBCASE("raising a threshold never grows the kept set") {
        QualityThresholds base{};
        const FilterResult fr_base = filter_conditions(mixed, base);
        for (double extra : {0.1, 0.3, 1.0}) {
            QualityThresholds harder = base;
            harder.min_brightness += extra;
            const FilterResult fr_hard = filter_conditions(mixed, harder);
            CHECK(fr_hard.kept.size() <= fr_base.kept.size());
        }
        QualityThresholds snr_harder = base;
        snr_harder.min_snr_db = std::numeric_limits<double>::infinity();
        // only the exact-sentinel conditions survive an infinite snr bar
        const FilterResult fr_inf = filter_conditions(mixed, snr_harder);
        for (const auto& c : fr_inf.kept) CHECK(std::isinf(score_condition(c).audio_snr_db));
    }
    SUBCASE("rejection reasons name the first failing metric") {
        Rng r2(8);
        const auto dim = generate_conditions(r2, 4, DegradationMix{0.0, 1.0, 0.0}, 4, 21);
        const FilterResult fr = filter_conditions(dim, QualityThresholds{});
        REQUIRE(fr.rejected.size() == 4);
        for (const auto& rej : fr.rejected) CHECK(rej.reason == "brightness");
    }
}

TEST_CASE("identity refiner returns its input unchanged") {
    Rng rng(9);
    const auto cs = generate_conditions(rng, 1, DegradationMix{1.0, 0.0, 0.0}, 4, 21);
    const ConditionRefiner refine = identity_refiner();
    const MultimodalCondition out = refine(cs[0]);
    CHECK(out.text_emb == cs[0].text_emb);
    CHECK(out.img_emb == cs[0].img_emb);
    CHECK(out.audio == cs[0].audio);
}

TEST_CASE("lowpass_dft reconstructs band-limited series exactly") {
    Rng rng(10);
    const std::size_t n = 21;
    Vec s(n, 0.0);
    for (std::size_t m = 1; m <= 3; ++m) {
        const double phase = rng.uniform() * 6.283185307179586;
        for (std::size_t f = 0; f < n; ++f)
            s[f] += std::cos(6.283185307179586 * static_cast<double>(m * f) / n + phase) /
                    static_cast<double>(m);
    }
    const Vec rec = lowpass_dft(s, 5);
    for (std::size_t f = 0; f < n; ++f) CHECK(rec[f] == doctest::Approx(s[f]).epsilon(1e-9));
}
