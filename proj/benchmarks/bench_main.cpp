#include <benchmark/benchmark.h>

#include "gld/dgm.hpp"
#include "gld/embedder.hpp"
#include "gld/rng.hpp"
#include "gld/synthetic.hpp"
#include "gld/tmn.hpp"
#include "gld/trainer.hpp"

namespace {

Eigen::MatrixXd random_matrix(gld::Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

void BM_Mmd(benchmark::State& state) {
  gld::Rng rng(1);
  const auto n = state.range(0);
  const auto a = random_matrix(rng, 64, n);
  const auto b = random_matrix(rng, 64, n);
  const gld::KernelConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(gld::mmd(a, b, cfg));
  state.SetComplexityN(n);
}
BENCHMARK(BM_Mmd)->RangeMultiplier(2)->Range(8, 128)->Complexity();

void BM_MmdGradient(benchmark::State& state) {
  gld::Rng rng(2);
  gld::ad::Parameter a(random_matrix(rng, 64, state.range(0)));
  gld::ad::Parameter b(random_matrix(rng, 64, state.range(0)));
  const gld::KernelConfig cfg;
  for (auto _ : state) {
    gld::ad::Tape tape;
    tape.backward(gld::mmd(tape.param(a), tape.param(b), cfg));
  }
}
BENCHMARK(BM_MmdGradient)->Arg(16)->Arg(64);

void BM_TmnInfer(benchmark::State& state) {
  gld::Rng rng(3);
  const int d = static_cast<int>(state.range(0));
  gld::TmnState tmn;
  tmn.input_dim = d;
  for (int a = 0; a < 6; ++a) tmn.author.banks.push_back({random_matrix(rng, d, 10), gld::BankKind::author, static_cast<std::size_t>(a)});
  for (int s = 0; s < 5; ++s) tmn.domain.banks.push_back({random_matrix(rng, d, 10), gld::BankKind::domain, static_cast<std::size_t>(s)});
  tmn.author.attention = gld::AttentionParams::init(d, 1.0, rng);
  tmn.domain.attention = gld::AttentionParams::init(d, 1.0, rng);
  const Eigen::VectorXd z = random_matrix(rng, d, 1);
  for (auto _ : state) benchmark::DoNotOptimize(gld::tmn_forward_infer(z, tmn));
}
BENCHMARK(BM_TmnInfer)->Arg(64)->Arg(256);

void BM_ToyEmbed(benchmark::State& state) {
  const gld::EmbedderConfig cfg;
  const gld::Embedder embedder(cfg);
  std::string varied;
  for (std::int64_t i = 0; i < state.range(0); ++i) varied += static_cast<char>('a' + (i * 7) % 26);
  for (auto _ : state) benchmark::DoNotOptimize(embedder.embed(varied));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_ToyEmbed)->Arg(256)->Arg(4000);

void BM_TrainBatch(benchmark::State& state) {
  const auto corpus = gld::make_synthetic_corpus(gld::small_generalization_spec(4));
  gld::TrainConfig cfg;
  cfg.embedder.dim = 64;
  cfg.batch_size = 32;
  const auto embeddings = gld::embed_corpus(corpus, cfg.embedder);
  gld::Model model = gld::initialize_model(corpus, embeddings, cfg);
  const auto batches = gld::make_batches(corpus, 1, cfg.batch_size);
  std::size_t b = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gld::batch_forward(model, corpus, embeddings, batches[b], true));
    b = (b + 1) % batches.size();
  }
}
BENCHMARK(BM_TrainBatch);

}  // namespace

BENCHMARK_MAIN();
