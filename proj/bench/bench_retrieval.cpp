#include <benchmark/benchmark.h>

#include "dawn/eval.hpp"
#include "dawn/retrieval.hpp"

namespace {

using namespace dawn;

const eval::IrCorpus& corpus() {
  static const auto c = eval::generate_ir_corpus(7);
  return c;
}

const retrieval::Index& index() {
  static const retrieval::Index i(corpus().manifests);
  return i;
}

void BM_ScoreAll(benchmark::State& state) {
  auto exec = state.range(0) ? retrieval::Execution::parallel : retrieval::Execution::serial;
  const auto& queries = corpus().queries;
  std::size_t q = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(retrieval::score_all(index(), queries[q++ % queries.size()].text, exec));
  }
  state.SetLabel(state.range(0) ? "parallel" : "serial");
}
BENCHMARK(BM_ScoreAll)->Arg(0)->Arg(1);

void BM_RetrieveTop5(benchmark::State& state) {
  auto exec = state.range(0) ? retrieval::Execution::parallel : retrieval::Execution::serial;
  const auto& queries = corpus().queries;
  std::size_t q = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(retrieval::retrieve(index(), queries[q++ % queries.size()].text, 5, {}, exec));
  }
  state.SetLabel(state.range(0) ? "parallel" : "serial");
}
BENCHMARK(BM_RetrieveTop5)->Arg(0)->Arg(1);

void BM_IrEval(benchmark::State& state) {
  auto exec = state.range(0) ? retrieval::Execution::parallel : retrieval::Execution::serial;
  retrieval::LexicalOverlapReranker lexical;
  for (auto _ : state) benchmark::DoNotOptimize(eval::run_ir_eval(corpus(), lexical, exec));
  state.SetLabel(state.range(0) ? "parallel" : "serial");
}
BENCHMARK(BM_IrEval)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Embed(benchmark::State& state) {
  const auto& queries = corpus().queries;
  std::size_t q = 0;
  for (auto _ : state) benchmark::DoNotOptimize(retrieval::embed(queries[q++ % queries.size()].text));
}
BENCHMARK(BM_Embed);

}  // namespace

BENCHMARK_MAIN();
