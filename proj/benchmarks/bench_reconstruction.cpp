// Microbenchmarks for the reconstruction hot paths: the moment likelihood
// solve, the two maximum-entropy solves, and the whole pipeline.

#include <benchmark/benchmark.h>

#include <vector>

#include <photrec/maxent.hpp>
#include <photrec/moment_maxlik.hpp>
#include <photrec/pipeline.hpp>

namespace {

const std::vector<double> kEtas = {0.01, 0.02, 0.03, 0.04, 0.05};

std::vector<photrec::ChannelFrequency> noisy_channels(double m1, double m2)
{
    // Fixed small jitter stands in for sampling noise; keeps the benchmark
    // deterministic while exercising the same code path as a real fit.
    const double jitter[] = {3e-4, -2e-4, 1e-4, -4e-4, 2e-4};
    std::vector<photrec::ChannelFrequency> channels;
    for (std::size_t i = 0; i < kEtas.size(); ++i) {
        const photrec::Efficiency eta(kEtas[i]);
        channels.push_back({eta, photrec::model_off_probability(m1, m2, eta) + jitter[i]});
    }
    return channels;
}

void BM_estimate_moments(benchmark::State& state)
{
    const auto channels = noisy_channels(1.0, 2.0);
    for (auto _ : state)
        benchmark::DoNotOptimize(photrec::estimate_moments(channels));
}
BENCHMARK(BM_estimate_moments);

void BM_solve_moments_coherent(benchmark::State& state)
{
    const double mu = static_cast<double>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(photrec::solve_moments(mu, mu * mu + mu));
}
BENCHMARK(BM_solve_moments_coherent)->Arg(1)->Arg(2)->Arg(3);

void BM_solve_povm(benchmark::State& state)
{
    const auto truth = photrec::coherent_distribution(1.0);
    std::vector<photrec::PovmChannel> channels;
    for (double e : kEtas) {
        const photrec::Efficiency eta(e);
        channels.push_back({eta, truth.off_probability_exact(eta)});
    }
    for (auto _ : state)
        benchmark::DoNotOptimize(photrec::solve_povm(channels));
}
BENCHMARK(BM_solve_povm);

void BM_run_pipeline(benchmark::State& state)
{
    photrec::ExperimentConfig cfg;
    cfg.state.kind = "coherent";
    cfg.state.mean_photons = 1.0;
    cfg.efficiencies = kEtas;
    cfg.shots_per_channel = 1000000;
    cfg.seed = 7;
    for (auto _ : state)
        benchmark::DoNotOptimize(photrec::run_pipeline(cfg));
}
BENCHMARK(BM_run_pipeline);

} // namespace

BENCHMARK_MAIN();
