#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pretrand/corpus.hpp"
#include "pretrand/parameter.hpp"
#include "pretrand/rng.hpp"
#include "pretrand/tape.hpp"
#include "pretrand/utf8.hpp"

namespace pretrand {

// Single LSTM cell with stacked gate blocks, order: input, forget, cell,
// output. W is [4H x in], U is [4H x H], bias [4H]. Hidden and cell states
// start at zero for every sequence; the forget-gate bias block starts at 1
// so memory is initially retained.
//
// Forward methods are non-const throughout the model: a backward pass on the
// tape accumulates into the parameters' grad buffers.
template <typename T>
struct LstmCell {
  Parameter<T> W, U, b;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;

  void init(const std::string& prefix, std::size_t in_dim, std::size_t h_dim,
            Rng& rng) {
    input_dim = in_dim;
    hidden_dim = h_dim;
    W = Parameter<T>(prefix + ".W", Tensor<T>::zeros({4 * h_dim, in_dim}));
    U = Parameter<T>(prefix + ".U", Tensor<T>::zeros({4 * h_dim, h_dim}));
    b = Parameter<T>(prefix + ".b", Tensor<T>::zeros({4 * h_dim}));
    rng.fill_glorot(W.value, in_dim, h_dim);
    rng.fill_glorot(U.value, h_dim, h_dim);
    for (std::size_t i = h_dim; i < 2 * h_dim; ++i) b.value.at(i) = T(1);
  }

  ParamRefs<T> params() { return {&W, &U, &b}; }

  // One step: returns (h', c').
  std::pair<Var, Var> step(Tape<T>& t, Var x, Var h, Var c) {
    Var pre = t.add(t.add(t.matvec(t.leaf(W), x), t.matvec(t.leaf(U), h)),
                    t.leaf(b));
    std::size_t H = hidden_dim;
    Var i = t.sigmoid(t.slice(pre, 0, H));
    Var f = t.sigmoid(t.slice(pre, H, 2 * H));
    Var g = t.tanh_op(t.slice(pre, 2 * H, 3 * H));
    Var o = t.sigmoid(t.slice(pre, 3 * H, 4 * H));
    Var c2 = t.add(t.mul(f, c), t.mul(i, g));
    Var h2 = t.mul(o, t.tanh_op(c2));
    return {h2, c2};
  }

  // Hidden state at every position, aligned to xs. With reverse=true the
  // sequence is consumed right-to-left, so out[0] is the final state of the
  // backward reading.
  std::vector<Var> run(Tape<T>& t, const std::vector<Var>& xs, bool reverse) {
    std::vector<Var> out(xs.size());
    Var h = t.zeros({hidden_dim});
    Var c = t.zeros({hidden_dim});
    for (std::size_t n = 0; n < xs.size(); ++n) {
      std::size_t i = reverse ? xs.size() - 1 - n : n;
      auto [h2, c2] = step(t, xs[i], h, c);
      h = h2;
      c = c2;
      out[i] = h;
    }
    return out;
  }
};

// Character-level encoder: embeds the raw (cased) codepoints of a surface
// and runs an LSTM over them in both directions; the token's character
// representation is the concatenation of the two final hidden states.
template <typename T>
struct CharEncoder {
  Parameter<T> emb;  // [|Vc| x Dc]
  LstmCell<T> fwd, bwd;
  std::size_t emb_dim = 0;
  std::size_t hidden_dim = 0;  // per direction

  std::size_t out_dim() const { return 2 * hidden_dim; }

  void init(const Vocab& vocab, std::size_t e_dim, std::size_t h_dim, Rng& rng) {
    emb_dim = e_dim;
    hidden_dim = h_dim;
    emb = Parameter<T>("char_emb", Tensor<T>::zeros({vocab.char_count(), e_dim}));
    rng.fill_uniform(emb.value, -0.25, 0.25);
    fwd.init("char_fwd", e_dim, h_dim, rng);
    bwd.init("char_bwd", e_dim, h_dim, rng);
  }

  ParamRefs<T> params() {
    ParamRefs<T> ps{&emb};
    for (auto* p : fwd.params()) ps.push_back(p);
    for (auto* p : bwd.params()) ps.push_back(p);
    return ps;
  }

  Var encode(Tape<T>& t, const Vocab& vocab, const std::string& surface) {
    std::vector<std::uint32_t> cps = utf8_decode(surface);
    if (cps.empty()) cps.push_back(0);  // defensive: map to char UNK
    std::vector<Var> xs;
    xs.reserve(cps.size());
    for (std::uint32_t cp : cps) xs.push_back(t.lookup(emb, vocab.char_id(cp)));
    std::vector<Var> f = fwd.run(t, xs, false);
    std::vector<Var> b = bwd.run(t, xs, true);
    return t.concat({f.back(), b.front()});
  }
};

// Shared token representation: word embedding over the lower-cased form
// concatenated with the char-level encoding of the cased surface. Both
// branches of the model consume this one output.
template <typename T>
struct TokenEncoder {
  Parameter<T> word_emb;  // [|V| x Dw]
  CharEncoder<T> chars;
  std::size_t word_dim = 0;

  std::size_t out_dim() const { return word_dim + chars.out_dim(); }

  void init(const Vocab& vocab, std::size_t w_dim, std::size_t char_dim,
            std::size_t char_hidden, Rng& rng) {
    word_dim = w_dim;
    word_emb = Parameter<T>("word_emb", Tensor<T>::zeros({vocab.word_count(), w_dim}));
    rng.fill_uniform(word_emb.value, -0.25, 0.25);
    for (std::size_t j = 0; j < w_dim; ++j) word_emb.value.at(Vocab::kPad, j) = T(0);
    chars.init(vocab, char_dim, char_hidden, rng);
  }

  ParamRefs<T> params() {
    ParamRefs<T> ps{&word_emb};
    for (auto* p : chars.params()) ps.push_back(p);
    return ps;
  }

  struct Coverage {
    std::size_t covered = 0;
    std::size_t total = 0;  // real words, PAD/UNK excluded
    double ratio() const { return total ? double(covered) / double(total) : 0.0; }
  };

  // Overwrites rows for words the pretrained table covers; everything else
  // keeps its random init. The PAD row stays zero.
  Coverage load_pretrained(const Vocab& vocab, const PretrainedVectors& vectors) {
    PR_CHECK(vectors.dim == word_dim,
             "pretrained vectors have dim " << vectors.dim << ", embeddings want "
                                            << word_dim);
    Coverage cov;
    for (std::size_t id = 2; id < vocab.word_count(); ++id) {
      ++cov.total;
      const std::vector<double>* vec = vectors.find(vocab.words[id]);
      if (!vec) continue;
      ++cov.covered;
      for (std::size_t j = 0; j < word_dim; ++j)
        word_emb.value.at(id, j) = static_cast<T>((*vec)[j]);
    }
    return cov;
  }

  // Grows the embedding tables after a vocabulary extension. New word rows
  // come from the pretrained table when covered, else Uniform(-0.25, 0.25);
  // new char rows are always random.
  void extend(const VocabExtension& ext, std::size_t first_new_word_id,
              const PretrainedVectors* vectors, Rng& rng) {
    if (!ext.new_words.empty()) {
      word_emb.append_rows(ext.new_words.size());
      for (std::size_t n = 0; n < ext.new_words.size(); ++n) {
        std::size_t id = first_new_word_id + n;
        const std::vector<double>* vec =
            vectors ? vectors->find(ext.new_words[n]) : nullptr;
        for (std::size_t j = 0; j < word_dim; ++j) {
          word_emb.value.at(id, j) =
              vec ? static_cast<T>((*vec)[j])
                  : static_cast<T>(rng.uniform(-0.25, 0.25));
        }
      }
    }
    if (!ext.new_chars.empty()) {
      std::size_t first = chars.emb.value.rows();
      chars.emb.append_rows(ext.new_chars.size());
      for (std::size_t n = 0; n < ext.new_chars.size(); ++n) {
        for (std::size_t j = 0; j < chars.emb_dim; ++j) {
          chars.emb.value.at(first + n, j) =
              static_cast<T>(rng.uniform(-0.25, 0.25));
        }
      }
    }
  }

  Var embed(Tape<T>& t, const Vocab& vocab, const std::string& surface) {
    Var w = t.lookup(word_emb, vocab.word_id(surface));
    Var c = chars.encode(t, vocab, surface);
    return t.concat({w, c});
  }
};

}  // namespace pretrand
