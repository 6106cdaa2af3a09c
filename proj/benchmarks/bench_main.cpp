#include <benchmark/benchmark.h>

#include <sstream>

#include "permdrift/drift.hpp"
#include "permdrift/model.hpp"
#include "permdrift/rng.hpp"
#include "permdrift/synth.hpp"

using namespace permdrift;

namespace {

PermissionRegistry registry(std::size_t n) {
  std::vector<PermissionMeta> perms(n);
  for (std::size_t i = 0; i < n; ++i) {
    perms[i].name = "P" + std::to_string(i);
    perms[i].year_introduced = 2008;
  }
  return PermissionRegistry(std::move(perms));
}

Dataset one_year(const PermissionRegistry& reg, std::size_t n) {
  DriftSchedule s;
  s.kind = DriftKind::Recurring;
  s.years = {2010};
  s.n_per_year = n;
  Concept c;
  c.benign_rates.assign(reg.size(), 0.1);
  c.malware_rates.assign(reg.size(), 0.1);
  c.malware_rates[0] = 0.9;
  c.malware_rates[1] = 0.6;
  s.concepts = {c};
  return generate(s, reg, 1);
}

void BM_ForestFit(benchmark::State& state) {
  const auto reg = registry(166);
  const auto data = one_year(reg, static_cast<std::size_t>(state.range(0)));
  ForestParams p;
  p.n_trees = 20;
  for (auto _ : state) benchmark::DoNotOptimize(train_forest(data, p));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForestFit)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_KsExact(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  std::vector<double> a(n), b(n);
  for (auto& x : a) x = rng.uniform();
  for (auto& x : b) x = rng.uniform() + 0.2;
  PermutationOptions opts;
  opts.exact_limit = 1e18;
  for (auto _ : state) benchmark::DoNotOptimize(ks_test(a, b, PValueMethod::Permutation, opts));
}
BENCHMARK(BM_KsExact)->Arg(12)->Arg(50)->Arg(200);

void BM_KsMonteCarlo(benchmark::State& state) {
  Rng rng(4);
  std::vector<double> a(12), b(12);
  for (auto& x : a) x = rng.uniform();
  for (auto& x : b) x = rng.uniform();
  PermutationOptions opts;
  opts.exact_limit = 0;
  opts.monte_carlo_draws = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(ks_test(a, b, PValueMethod::Permutation, opts));
}
BENCHMARK(BM_KsMonteCarlo)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_LoadSamples(benchmark::State& state) {
  const auto reg = registry(166);
  std::ostringstream out;
  write_samples(out, one_year(reg, 5000));
  const std::string text = out.str();
  for (auto _ : state) {
    std::istringstream in(text);
    benchmark::DoNotOptimize(read_samples(in, reg));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_LoadSamples)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
