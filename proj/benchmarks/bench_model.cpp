// Sentence-level forward/backward cost at paper-scale and desk-scale dims.
#include <benchmark/benchmark.h>

#include "pretrand/rng.hpp"
#include "pretrand/tagger.hpp"

using namespace pretrand;

namespace {

struct Fixture {
  TaggerModel<float> model;
  Sentence sentence;
};

Fixture make_fixture(const ModelDims& dims, bool with_random) {
  std::vector<std::string> words{"<pad>", "<unk>", "the", "cat", "sat",
                                 "on",    "mat",   "a",   "dog", "ran"};
  std::vector<std::uint32_t> chars{0xFFFFFFFFu};
  for (char c = 'a'; c <= 'z'; ++c) chars.push_back(static_cast<std::uint32_t>(c));
  Vocab vocab = Vocab::from_lists(words, chars);
  TagSet tags = TagSet::from_names({"D", "N", "V", "P", "X"});
  Rng rng(3);
  Fixture f{TaggerModel<float>::make_base(std::move(vocab), std::move(tags),
                                          dims, rng),
            {}};
  if (with_random) f.model.attach_random_branch(rng);
  for (const char* w : {"the", "cat", "sat", "on", "a", "mat", "dog"})
    f.sentence.push_back(Token{w, 1});
  return f;
}

}  // namespace

static void BM_SentenceForward(benchmark::State& state) {
  ModelDims dims;
  dims.word_dim = static_cast<std::size_t>(state.range(0));
  dims.char_dim = 16;
  dims.char_hidden = dims.word_dim / 4;
  dims.hidden = static_cast<std::size_t>(state.range(1));
  dims.k = dims.hidden / 2;
  Fixture f = make_fixture(dims, true);
  for (auto _ : state) {
    Tape<float> t;
    t.set_grad_enabled(false);
    ForwardTrace trace = f.model.forward(t, f.sentence);
    benchmark::DoNotOptimize(t.val(trace.logits.back()).data.data());
  }
}
BENCHMARK(BM_SentenceForward)->Args({32, 32})->Args({300, 200});

static void BM_SentenceForwardBackward(benchmark::State& state) {
  ModelDims dims;
  dims.word_dim = static_cast<std::size_t>(state.range(0));
  dims.char_dim = 16;
  dims.char_hidden = dims.word_dim / 4;
  dims.hidden = static_cast<std::size_t>(state.range(1));
  dims.k = dims.hidden / 2;
  Fixture f = make_fixture(dims, true);
  ParamRefs<float> params = f.model.parameters();
  for (auto _ : state) {
    Tape<float> t;
    ForwardTrace trace = f.model.forward(t, f.sentence);
    Var loss = f.model.sentence_loss(t, trace, f.sentence);
    t.backward(loss);
    benchmark::DoNotOptimize(t.val(loss).at(0));
    zero_grads(params);
  }
}
BENCHMARK(BM_SentenceForwardBackward)->Args({32, 32})->Args({300, 200});
