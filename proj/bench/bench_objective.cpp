// Serial reference vs OpenMP objective, and replicate sampling by worker count.

#include <benchmark/benchmark.h>

#include <random>

#include "topk/eval.hpp"
#include "topk/objective.hpp"

using namespace topk;

namespace {

constexpr std::size_t kM = 8;
constexpr std::size_t kD = 3;
constexpr std::size_t kN = 50'000;

void fill(Model& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : model.params()) v = u(rng);
}

struct Fixture {
  Model model{ModelKind::as, kM, kD, 5};
  Dataset data;
  ObjectivePlan plan;

  Fixture() {
    fill(model, 1);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z;
    CovariateTensor x(kN, kM, kD);
    for (std::size_t i = 0; i < kN; ++i)
      for (AltId j = 1; j <= kM; ++j)
        for (std::size_t f = 0; f < kD; ++f) x.at(i, j, f) = z(rng);
    data = replicate_sample(model, kN, 1, 3, &x)[0];
    plan = make_plan(model.layout(), data);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

const Penalties kPen{1e-5, 1e-3, false};

void BM_ObjectiveSerial(benchmark::State& state) {
  const auto& f = fixture();
  std::vector<double> grad(f.model.params().size());
  for (auto _ : state) {
    benchmark::DoNotOptimize(objective_serial(f.model, f.plan, kPen, grad).total());
  }
  state.SetItemsProcessed(state.iterations() * kN);
}
BENCHMARK(BM_ObjectiveSerial)->Unit(benchmark::kMillisecond);

void BM_ObjectiveParallel(benchmark::State& state) {
  const auto& f = fixture();
  std::vector<double> grad(f.model.params().size());
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(objective_parallel(f.model, f.plan, kPen, grad, workers).total());
  }
  state.SetItemsProcessed(state.iterations() * kN);
}
BENCHMARK(BM_ObjectiveParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Replicates(benchmark::State& state) {
  Model model(ModelKind::cld, kM, 0, 5);
  fill(model, 4);
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(replicate_sample(model, 10'000, 16, 5, nullptr, {false, workers}));
  }
}
BENCHMARK(BM_Replicates)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
