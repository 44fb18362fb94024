#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "streamforge/eval.hpp"

using namespace streamforge;

static void GaussianFrechet168(benchmark::State& state) {
    const std::size_t dim = 168;
    Rng rng(3);
    GaussianSummary a, b;
    a.mean.assign(dim, 0.0);
    b.mean.assign(dim, 0.1);
    Mat m(dim, dim);
    for (auto& v : m.a) v = rng.normal() / std::sqrt(static_cast<double>(dim));
    a.cov = symmetrize(transpose(m) * m) + Mat::identity(dim);
    for (auto& v : m.a) v = rng.normal() / std::sqrt(static_cast<double>(dim));
    b.cov = symmetrize(transpose(m) * m) + Mat::identity(dim);
    for (auto _ : state) {
        const double fd = gaussian_frechet(a, b);
        benchmark::DoNotOptimize(fd);
    }
}
BENCHMARK(GaussianFrechet168)->Unit(benchmark::kMillisecond);

static void FitGaussian2000x168(benchmark::State& state) {
    const std::size_t dim = 168;
    Rng rng(4);
    std::vector<Vec> samples(2000, Vec(dim));
    for (auto& s : samples)
        for (auto& v : s) v = rng.normal();
    for (auto _ : state) {
        GaussianSummary g = fit_gaussian(samples);
        benchmark::DoNotOptimize(g.cov.a.data());
    }
}
BENCHMARK(FitGaussian2000x168)->Unit(benchmark::kMillisecond);
