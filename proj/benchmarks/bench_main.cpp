#include <benchmark/benchmark.h>

#include "spikeprune/prune.hpp"
#include "spikeprune/synops.hpp"
#include "spikeprune/train.hpp"

using namespace spikeprune;

namespace {

SyntheticDatasetSpec small_spec(int n) {
    SyntheticDatasetSpec spec;
    spec.n_samples = n;
    spec.seed = 7;
    return spec;
}

SpikingNetwork desk_net() {
    NetworkArch arch;
    Rng rng(123);
    return make_network(arch, {2, 16, 16}, 4, rng);
}

void bm_forward_t(benchmark::State& state) {
    Dataset data = generate_dataset(small_spec(8));
    SpikingNetwork net = desk_net();
    int i = 0;
    for (auto _ : state) {
        auto res = forward_t(net, data.sample(i++ % data.size()));
        benchmark::DoNotOptimize(res.logits);
    }
}
BENCHMARK(bm_forward_t);

void bm_loss_and_grad(benchmark::State& state) {
    Dataset data = generate_dataset(small_spec(8));
    SpikingNetwork net = desk_net();
    BpttContext ctx(net, 2.0, SpikeMode::Hard);
    GradBuffers grads = GradBuffers::like(net);
    int i = 0;
    for (auto _ : state) {
        grads.zero();
        double loss = ctx.loss_and_grad(data.sample(i % data.size()), data.labels[i % data.size()],
                                        grads);
        benchmark::DoNotOptimize(loss);
        ++i;
    }
}
BENCHMARK(bm_loss_and_grad);

void bm_synops_subset(benchmark::State& state) {
    Dataset data = generate_dataset(small_spec(128));
    SpikingNetwork net = desk_net();
    SubsetSpec subset;
    subset.size = 64;
    for (auto _ : state) {
        auto report = synops_average(net, data, subset);
        benchmark::DoNotOptimize(report.total);
    }
}
BENCHMARK(bm_synops_subset);

void bm_apply_policy(benchmark::State& state) {
    SpikingNetwork net = desk_net();
    PruningPolicy policy{{0.3, 0.5, 0.2}};
    for (auto _ : state) {
        auto pruned = apply_policy(net, policy);
        benchmark::DoNotOptimize(pruned.first.layers.size());
    }
}
BENCHMARK(bm_apply_policy);

}  // namespace

BENCHMARK_MAIN();
