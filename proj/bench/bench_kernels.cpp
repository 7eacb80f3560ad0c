// Parallel/vectorised kernels against their serial reference versions.
// Run: codecat_bench [--benchmark_filter=...]; OMP_NUM_THREADS sets threads.

#include "codecat/embedding.hpp"
#include "codecat/kernels.hpp"
#include "codecat/model.hpp"
#include "codecat/rng.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

using namespace codecat;

namespace {

RowMatrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    RowMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform01() - 0.5;
    return m;
}

std::vector<double> random_vector(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform01() - 0.5;
    return v;
}

// Default network shape: 60 tokens x 100 dims, kernel 3, 250 filters.
struct ConvInput {
    RowMatrix inputs;
    std::vector<double> weights, bias;
    ConvInput() {
        Rng rng(1);
        inputs = random_matrix(rng, 60, 100);
        weights = random_vector(rng, 3 * 100 * 250);
        bias = random_vector(rng, 250);
    }
};

void BM_ConvEigen(benchmark::State& state) {
    const ConvInput in;
    RowMatrix out;
    for (auto _ : state) {
        kernels::conv1d_relu(in.inputs, in.weights, in.bias, 3, 1, out);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_ConvEigen);

void BM_ConvReference(benchmark::State& state) {
    const ConvInput in;
    RowMatrix out;
    for (auto _ : state) {
        kernels::reference::conv1d_relu(in.inputs, in.weights, in.bias, 3, 1, out);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_ConvReference);

std::vector<Sentence> sentences(std::size_t count) {
    Rng rng(2);
    std::vector<Sentence> out(count);
    for (auto& s : out) {
        s.resize(40 + rng.uniform_below(80));
        // Roughly Zipfian over 3000 types, like identifier frequencies.
        for (auto& t : s) t = static_cast<TokenId>(1 + std::pow(3000.0, rng.uniform01()));
    }
    return out;
}

void BM_CooccurrenceSharded(benchmark::State& state) {
    const auto s = sentences(static_cast<std::size_t>(state.range(0)));
    GloveConfig config;
    for (auto _ : state) benchmark::DoNotOptimize(build_cooccurrence(s, config).entries.size());
}
BENCHMARK(BM_CooccurrenceSharded)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_CooccurrenceSerial(benchmark::State& state) {
    const auto s = sentences(static_cast<std::size_t>(state.range(0)));
    GloveConfig config;
    for (auto _ : state) benchmark::DoNotOptimize(build_cooccurrence_serial(s, config).entries.size());
}
BENCHMARK(BM_CooccurrenceSerial)->Arg(1000)->Unit(benchmark::kMillisecond);

struct BatchInput {
    ClassifierModel model;
    std::vector<TrainingExample> batch;
    BatchInput() {
        ClassifierConfig c;
        c.num_categories = 5;
        c.filters = 64;
        c.lstm_units = 32;
        c.hide_u = 128;
        model = init_model(c, random_embedding(500, c.embed_dims, 3), 4);
        Rng rng(5);
        for (int i = 0; i < 128; ++i) {
            std::vector<TokenId> ids(c.seq_len);
            for (auto& t : ids) t = static_cast<TokenId>(rng.uniform_below(500));
            batch.push_back({ids, rng.uniform_below(5)});
        }
    }
};

void BM_BatchGradientParallel(benchmark::State& state) {
    const BatchInput in;
    for (auto _ : state) benchmark::DoNotOptimize(batch_gradient(in.model, in.batch, true, 1).mean_loss);
}
BENCHMARK(BM_BatchGradientParallel)->Unit(benchmark::kMillisecond);

void BM_BatchGradientSerial(benchmark::State& state) {
    const BatchInput in;
    for (auto _ : state) benchmark::DoNotOptimize(batch_gradient_serial(in.model, in.batch, true, 1).mean_loss);
}
BENCHMARK(BM_BatchGradientSerial)->Unit(benchmark::kMillisecond);

void BM_ForwardEigen(benchmark::State& state) {
    const BatchInput in;
    for (auto _ : state) benchmark::DoNotOptimize(forward(in.model, in.batch[0].ids).predicted);
}
BENCHMARK(BM_ForwardEigen);

void BM_ForwardReference(benchmark::State& state) {
    const BatchInput in;
    for (auto _ : state) {
        benchmark::DoNotOptimize(kernels::reference::forward_probabilities(in.model, in.batch[0].ids).data());
    }
}
BENCHMARK(BM_ForwardReference);

}  // namespace

BENCHMARK_MAIN();
