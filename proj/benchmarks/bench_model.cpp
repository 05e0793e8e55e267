#include <benchmark/benchmark.h>

#include "see/data.hpp"
#include "see/inference.hpp"
#include "see/model.hpp"
#include "see/training.hpp"

namespace {

see::ModelConfig desk() { return see::ModelConfig{}; }

see::Dataset desk_data(std::size_t count) {
  see::SyntheticSpec spec;
  spec.sample_count = count;
  return see::gen_synthetic(spec);
}

void BM_DecoderForward(benchmark::State& state) {
  const see::Model m = see::init_model(desk(), 0);
  const see::Dataset d = desk_data(1);
  const auto& s = d.samples[0];
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.decode(nullptr, 1, s.news, s.evidences[0]));
  }
}
BENCHMARK(BM_DecoderForward);

void BM_DecoderForwardBackward(benchmark::State& state) {
  see::Model m = see::init_model(desk(), 0);
  const see::Dataset d = desk_data(1);
  const auto& s = d.samples[0];
  for (auto _ : state) {
    see::Tape tape;
    const see::Tensor out = m.decode(&tape, 1, s.news, s.evidences[0]);
    tape.backward(see::sum(&tape, out));
    for (auto& p : see::list_parameters(m.params())) p.tensor.zero_grad();
  }
}
BENCHMARK(BM_DecoderForwardBackward);

void BM_StageOneBatch(benchmark::State& state) {
  see::Model m = see::init_model(desk(), 0);
  const see::Dataset d = desk_data(12);
  for (auto _ : state) {
    see::Tape tape;
    tape.backward(see::stage_one_batch_loss(&tape, m, d.samples));
    for (auto& p : see::list_parameters(m.params())) p.tensor.zero_grad();
  }
}
BENCHMARK(BM_StageOneBatch)->Unit(benchmark::kMillisecond);

void BM_Infer(benchmark::State& state) {
  const see::Model m = see::init_model(desk(), 0);
  const see::Dataset d = desk_data(64);
  const double tau = static_cast<double>(state.range(0)) / 100.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(see::batch_infer(d.samples, m, tau));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(d.samples.size()));
}
BENCHMARK(BM_Infer)->Arg(0)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
