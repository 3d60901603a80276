// OpenMP kernels against their serial references at the default model size.

#include <benchmark/benchmark.h>

#include "btpk/announce.hpp"
#include "btpk/brnn.hpp"
#include "btpk/corpus.hpp"

namespace {

using namespace btpk;

struct Fixture {
  BrnnModel model;
  std::vector<Example> batch;
  std::vector<std::size_t> sentence;
  std::vector<ScanJob> jobs;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    const auto data = generate_synthetic(SyntheticSpec::default_spec(), 1);
    ModelConfig c;  // dims 128
    BrnnModel m = init_model(c, build_vocab(data, 1), Tagset::default_tagset());
    std::vector<Example> batch;
    for (const auto& s : data)
      if (batch.size() < c.batch_size) batch.push_back(encode(m, s));
    std::vector<std::string> words{"well", ",", "you", "know", ",", "Dune", "movie",
                                   "is", "my", "favourite", ".", "honestly"};
    auto ids = m.vocab().encode(words);
    std::vector<ScanJob> jobs;
    for (const auto& g : enumerate_grams(ids.size(), 3, GramSpan{5, 5}))
      for (Side s : {Side::Both, Side::Forward, Side::Backward}) jobs.push_back({g, s});
    return Fixture{std::move(m), std::move(batch), std::move(ids), std::move(jobs)};
  }();
  return f;
}

template <double (*Kernel)(const BrnnModel&, std::span<const Example>, std::span<double>)>
void BM_BatchGradient(benchmark::State& state) {
  const Fixture& f = fixture();
  std::vector<double> grad(f.model.params().size());
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(f.model, f.batch, grad));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.batch.size()));
}

template <ScanResult (*Kernel)(const BrnnModel&, std::span<const std::size_t>, const EntitySpan&,
                               std::span<const ScanJob>)>
void BM_Scan(benchmark::State& state) {
  const Fixture& f = fixture();
  const EntitySpan target{5, 5, "video"};
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(f.model, f.sentence, target, f.jobs));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.jobs.size()));
}

BENCHMARK(BM_BatchGradient<batch_gradient_serial>)->Name("batch_gradient/serial")->UseRealTime();
BENCHMARK(BM_BatchGradient<batch_gradient>)->Name("batch_gradient/openmp")->UseRealTime();
BENCHMARK(BM_Scan<scan_interventions_serial>)->Name("scan_interventions/serial")->UseRealTime();
BENCHMARK(BM_Scan<scan_interventions>)->Name("scan_interventions/openmp")->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
