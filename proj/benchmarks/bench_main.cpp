#include <benchmark/benchmark.h>

#include "ninr/ninr.hpp"

namespace {

ninr::Tensor random_tensor(ninr::Shape shape, std::uint64_t seed) {
  ninr::RngStream rng(seed);
  ninr::Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.normal();
  return t;
}

void BM_GemmNN(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const ninr::Tensor a = random_tensor({n, n}, 1), b = random_tensor({n, n}, 2);
  ninr::Tensor c({n, n});
  for (auto _ : state) {
    ninr::kernels::gemm_nn(n, n, n, a.data().data(), b.data().data(), c.data().data());
    benchmark::DoNotOptimize(c.data().data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_GemmNN)->Arg(128)->Arg(512)->Arg(1024);

ninr::NetworkSpec fc_spec(std::size_t hidden, bool nin) {
  ninr::NetworkSpec s;
  s.input_shape = {784};
  s.layers.push_back(ninr::LayerSpec::dense(784, hidden, ninr::Activation::relu));
  s.layers.push_back(ninr::LayerSpec::dense(hidden, 10));
  if (nin) {
    ninr::NINConfig c;
    c.dist.sigma_eps = 10.0;
    s.nin = c;
  }
  return s;
}

// One SGD step worth of work on a 784-h-10 net, batch 128.
void BM_ForwardBackward(benchmark::State& state) {
  const ninr::Network net(fc_spec(static_cast<std::size_t>(state.range(0)), state.range(1) != 0));
  ninr::RngStream rng(3);
  const ninr::Params params = ninr::init_params(net, rng);
  const ninr::Tensor x = random_tensor({128, 784}, 4);
  ninr::Tensor y({128});
  for (std::size_t i = 0; i < 128; ++i) y[i] = static_cast<double>(i % 10);
  for (auto _ : state) {
    const ninr::ForwardResult fr = net.forward_with_noise(params, x, net.draw_noise(128, rng), rng,
                                                          ninr::Mode::train, true);
    ninr::Gradients g = net.backward(params, *fr.cache, y);
    benchmark::DoNotOptimize(g.params.layers.data());
  }
  state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_ForwardBackward)->Args({256, 0})->Args({256, 1})->Args({1024, 1});

void BM_ToyStep(benchmark::State& state) {
  ninr::LinearToyState s;
  s.w0 = 1.0;
  s.w1 = 1.0;
  s.w_ni = 0.1;
  s.sigma_eps = 3.0;
  s.eta = 0.05;
  for (auto _ : state) {
    s = ninr::toy_step(s);
    benchmark::DoNotOptimize(s.w1);
  }
}
BENCHMARK(BM_ToyStep);

}  // namespace
BENCHMARK_MAIN();
