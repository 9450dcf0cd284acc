// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <vector>

#include "segforge/kernels.hpp"
#include "segforge/random.hpp"

namespace k = segforge::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
    segforge::Rng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = segforge::uniform_real(rng, -1, 1);
    return v;
}

// range(0): frames. 64 filters over 25 joints, as in a full-size graph block.
k::ConvShape conv_shape(const benchmark::State& state) {
    return {64, 64, static_cast<std::size_t>(state.range(0)), 25, 3, 1};
}

template <auto Fn>
void conv_forward(benchmark::State& state) {
    const auto s = conv_shape(state);
    const auto x = random_vec(s.input_size(), 1), w = random_vec(s.weight_size(), 2), b = random_vec(64, 3);
    std::vector<double> y(s.output_size());
    for (auto _ : state) {
        Fn(x, w, b, y, s);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.output_size()));
}

template <auto Fn>
void conv_grad_weight(benchmark::State& state) {
    const auto s = conv_shape(state);
    const auto x = random_vec(s.input_size(), 1), dy = random_vec(s.output_size(), 2);
    std::vector<double> dw(s.weight_size());
    for (auto _ : state) {
        Fn(dy, x, dw, s);
        benchmark::DoNotOptimize(dw.data());
    }
}

template <auto Fn>
void graph_forward(benchmark::State& state) {
    const k::GraphShape s{64 * static_cast<std::size_t>(state.range(0)), 25};
    const auto x = random_vec(s.rows * s.joints, 1), g = random_vec(s.joints * s.joints, 2);
    std::vector<double> y(x.size());
    for (auto _ : state) {
        Fn(x, g, y, s);
        benchmark::DoNotOptimize(y.data());
    }
}

template <auto Fn>
void matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const k::MatmulShape s{64, 64, n};
    const auto a = random_vec(s.m * s.k, 1), b = random_vec(s.k * s.n, 2);
    std::vector<double> c(s.m * s.n);
    for (auto _ : state) {
        Fn(a, b, c, s);
        benchmark::DoNotOptimize(c.data());
    }
}

}  // namespace

BENCHMARK(conv_forward<k::serial::conv1d_forward>)->Name("conv_forward/serial")->Arg(64)->Arg(256);
BENCHMARK(conv_forward<k::parallel::conv1d_forward>)->Name("conv_forward/parallel")->Arg(64)->Arg(256);
BENCHMARK(conv_grad_weight<k::serial::conv1d_grad_weight>)->Name("conv_grad_weight/serial")->Arg(64)->Arg(256);
BENCHMARK(conv_grad_weight<k::parallel::conv1d_grad_weight>)->Name("conv_grad_weight/parallel")->Arg(64)->Arg(256);
BENCHMARK(graph_forward<k::serial::graph_forward>)->Name("graph_forward/serial")->Arg(64)->Arg(256);
BENCHMARK(graph_forward<k::parallel::graph_forward>)->Name("graph_forward/parallel")->Arg(64)->Arg(256);
BENCHMARK(matmul<k::serial::matmul>)->Name("matmul/serial")->Arg(1600)->Arg(6400);
BENCHMARK(matmul<k::parallel::matmul>)->Name("matmul/parallel")->Arg(1600)->Arg(6400);

BENCHMARK_MAIN();
