#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "pretrand/corpus.hpp"
#include "pretrand/encoder.hpp"
#include "pretrand/parameter.hpp"
#include "pretrand/rng.hpp"
#include "pretrand/tape.hpp"

namespace pretrand {

// Sentence-level biLSTM feature extractor: per-token output is the
// concatenation of the forward and backward hidden states (dimension 2H).
template <typename T>
struct BiLstm {
  LstmCell<T> fwd, bwd;
  std::size_t hidden_dim = 0;  // per direction

  std::size_t out_dim() const { return 2 * hidden_dim; }

  void init(const std::string& prefix, std::size_t in_dim, std::size_t h_dim,
            Rng& rng) {
    hidden_dim = h_dim;
    fwd.init(prefix + "_fwd", in_dim, h_dim, rng);
    bwd.init(prefix + "_bwd", in_dim, h_dim, rng);
  }

  ParamRefs<T> params() {
    ParamRefs<T> ps;
    for (auto* p : fwd.params()) ps.push_back(p);
    for (auto* p : bwd.params()) ps.push_back(p);
    return ps;
  }

  // Per-token [2H] vectors, forward block first, then backward.
  std::vector<Var> run(Tape<T>& t, const std::vector<Var>& xs) {
    std::vector<Var> f = fwd.run(t, xs, false);
    std::vector<Var> b = bwd.run(t, xs, true);
    std::vector<Var> out;
    out.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out.push_back(t.concat({f[i], b[i]}));
    return out;
  }
};

// Fully-connected classifier head: logits = W x + b.
template <typename T>
struct Linear {
  Parameter<T> W;  // [C x in]
  Parameter<T> b;  // [C]

  void init(const std::string& prefix, std::size_t in_dim, std::size_t out_dim,
            Rng& rng) {
    W = Parameter<T>(prefix + ".W", Tensor<T>::zeros({out_dim, in_dim}));
    b = Parameter<T>(prefix + ".b", Tensor<T>::zeros({out_dim}));
    rng.fill_glorot(W.value, in_dim, out_dim);
  }

  ParamRefs<T> params() { return {&W, &b}; }

  Var apply(Tape<T>& t, Var x) { return t.add(t.matvec(t.leaf(W), x), t.leaf(b)); }
};

// How the two branches' logits are combined. The toggles map 1:1 to the
// ablation rows: use_vectors off drops the learned per-class scales,
// use_norm off merges raw logits.
struct MergeConfig {
  bool use_norm = true;
  double p = 2.0;
  bool use_vectors = true;
};

// Per-branch scale injection for invariance tests: each branch's logits are
// multiplied by the given factor before normalization.
template <typename T>
struct ForwardOptions {
  T main_scale = T(1);
  T rand_scale = T(1);
  bool base_only = false;  // ignore the random branch even if present
};

// Everything a forward pass produces, with handles into the tape so callers
// can build losses (logits) or record activations (trunk states).
struct ForwardTrace {
  std::vector<Var> inputs;        // token representations x_i
  std::vector<Var> trunk_states;  // main-branch extractor outputs, [2H] each
  std::vector<Var> rand_states;   // random-branch extractor outputs, [2k] each
  std::vector<Var> logits;        // final per-token logits (merged if two branches)
};

struct ModelDims {
  std::size_t word_dim = 300;
  std::size_t char_dim = 50;
  std::size_t char_hidden = 100;  // per direction
  std::size_t hidden = 200;       // main extractor, per direction
  std::size_t k = 200;            // random extractor, per direction
};

template <typename T>
std::vector<double> softmax_probs(const Tensor<T>& logits) {
  double mx = -HUGE_VAL;
  for (T v : logits.data) mx = std::max(mx, static_cast<double>(v));
  std::vector<double> p(logits.numel());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(static_cast<double>(logits.at(i)) - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

// The full tagging network: shared token encoder, main branch
// (extractor + head, carrying pre-trained weights after a transfer), and an
// optional randomly initialized branch whose logits are merged in after
// independent normalization, scaled by the learned per-class vectors.
template <typename T>
struct TaggerModel {
  static constexpr T kNormEps = static_cast<T>(1e-12);

  Vocab vocab;
  TagSet tags;
  ModelDims dims;
  MergeConfig merge;

  TokenEncoder<T> encoder;
  BiLstm<T> trunk;   // main extractor
  Linear<T> head;    // main classifier
  bool has_random = false;
  BiLstm<T> rand_trunk;
  Linear<T> rand_head;
  Parameter<T> u, v;  // per-class merge scales, init 1

  std::size_t num_classes() const { return tags.size(); }

  // RNG draw order is fixed and documented: encoder (word emb, char emb,
  // char fwd, char bwd), trunk fwd, trunk bwd, head, then — when attached —
  // random trunk fwd, random trunk bwd, random head.
  static TaggerModel make_base(Vocab vocab, TagSet tags, const ModelDims& dims,
                               Rng& rng) {
    TaggerModel m;
    m.vocab = std::move(vocab);
    m.tags = std::move(tags);
    m.dims = dims;
    PR_CHECK(m.tags.size() >= 2, "tag-set needs at least 2 tags");
    m.encoder.init(m.vocab, dims.word_dim, dims.char_dim, dims.char_hidden, rng);
    m.trunk.init("trunk", m.encoder.out_dim(), dims.hidden, rng);
    m.head.init("head", m.trunk.out_dim(), m.tags.size(), rng);
    return m;
  }

  void attach_random_branch(Rng& rng) {
    PR_CHECK(!has_random, "random branch already attached");
    rand_trunk.init("rand", encoder.out_dim(), dims.k, rng);
    rand_head.init("rand_head", rand_trunk.out_dim(), tags.size(), rng);
    u = Parameter<T>("merge.u", Tensor<T>::full({tags.size()}, T(1)));
    v = Parameter<T>("merge.v", Tensor<T>::full({tags.size()}, T(1)));
    has_random = true;
  }

  ParamRefs<T> pretrained_parameters() {
    ParamRefs<T> ps = encoder.params();
    for (auto* p : trunk.params()) ps.push_back(p);
    for (auto* p : head.params()) ps.push_back(p);
    return ps;
  }

  ParamRefs<T> random_parameters() {
    ParamRefs<T> ps;
    if (!has_random) return ps;
    for (auto* p : rand_trunk.params()) ps.push_back(p);
    for (auto* p : rand_head.params()) ps.push_back(p);
    ps.push_back(&u);
    ps.push_back(&v);
    return ps;
  }

  ParamRefs<T> parameters() {
    ParamRefs<T> ps = pretrained_parameters();
    for (auto* p : random_parameters()) ps.push_back(p);
    return ps;
  }

  ForwardTrace forward(Tape<T>& t, const Sentence& sentence,
                       const ForwardOptions<T>& opt = {}) {
    PR_CHECK(!sentence.empty(), "forward on an empty sentence");
    ForwardTrace trace;
    trace.inputs.reserve(sentence.size());
    for (const Token& tok : sentence)
      trace.inputs.push_back(encoder.embed(t, vocab, tok.surface));
    trace.trunk_states = trunk.run(t, trace.inputs);
    bool merged = has_random && !opt.base_only;
    if (merged) trace.rand_states = rand_trunk.run(t, trace.inputs);
    trace.logits.reserve(sentence.size());
    for (std::size_t i = 0; i < sentence.size(); ++i) {
      Var main_logits = head.apply(t, trace.trunk_states[i]);
      if (opt.main_scale != T(1)) main_logits = t.scale(main_logits, opt.main_scale);
      if (!merged) {
        trace.logits.push_back(main_logits);
        continue;
      }
      Var rand_logits = rand_head.apply(t, trace.rand_states[i]);
      if (opt.rand_scale != T(1)) rand_logits = t.scale(rand_logits, opt.rand_scale);
      if (merge.use_norm) {
        main_logits = t.lp_normalize(main_logits, static_cast<T>(merge.p), kNormEps);
        rand_logits = t.lp_normalize(rand_logits, static_cast<T>(merge.p), kNormEps);
      }
      if (merge.use_vectors) {
        main_logits = t.mul(t.leaf(u), main_logits);
        rand_logits = t.mul(t.leaf(v), rand_logits);
      }
      trace.logits.push_back(t.add(main_logits, rand_logits));
    }
    return trace;
  }

  // Mean token SCE over the sentence's logits.
  Var sentence_loss(Tape<T>& t, const ForwardTrace& trace, const Sentence& s) {
    std::vector<Var> losses;
    losses.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
      losses.push_back(t.softmax_cross_entropy(trace.logits[i], s[i].tag));
    return t.sum_scalars(losses);
  }

  // Argmax decoding; exact ties go to the lowest tag id.
  std::vector<std::size_t> predict(const Sentence& sentence,
                                   const ForwardOptions<T>& opt = {}) {
    Tape<T> t;
    t.set_grad_enabled(false);
    ForwardTrace trace = forward(t, sentence, opt);
    std::vector<std::size_t> out;
    out.reserve(sentence.size());
    for (Var lg : trace.logits) {
      const Tensor<T>& L = t.val(lg);
      std::size_t best = 0;
      for (std::size_t j = 1; j < L.numel(); ++j)
        if (L.at(j) > L.at(best)) best = j;
      out.push_back(best);
    }
    return out;
  }

  // Per-token softmax distributions (used by ensembles).
  std::vector<std::vector<double>> predict_probs(const Sentence& sentence) {
    Tape<T> t;
    t.set_grad_enabled(false);
    ForwardTrace trace = forward(t, sentence);
    std::vector<std::vector<double>> out;
    out.reserve(sentence.size());
    for (Var lg : trace.logits) out.push_back(softmax_probs(t.val(lg)));
    return out;
  }

  struct ParamCount {
    std::string component;
    std::size_t scalars = 0;
  };

  // Exact trainable-scalar counts per component plus totals. The random
  // branch total is reported both with and against the shared base so the
  // overhead of attaching it is exact by construction.
  std::vector<ParamCount> count_params() {
    std::vector<ParamCount> rows;
    auto add = [&rows](const std::string& name, const ParamRefs<T>& ps) {
      std::size_t n = 0;
      for (auto* p : ps) n += p->numel();
      rows.push_back({name, n});
    };
    add("word_emb", {&encoder.word_emb});
    add("char_encoder", encoder.chars.params());
    add("trunk", trunk.params());
    add("head", head.params());
    if (has_random) {
      add("rand_trunk", rand_trunk.params());
      add("rand_head", rand_head.params());
      add("merge_vectors", {&u, &v});
    }
    std::size_t base = 0, total = 0;
    for (const auto& r : rows) {
      total += r.scalars;
      if (r.component == "word_emb" || r.component == "char_encoder" ||
          r.component == "trunk" || r.component == "head")
        base += r.scalars;
    }
    rows.push_back({"total_base", base});
    if (has_random) rows.push_back({"total_random", total - base});
    rows.push_back({"total", total});
    return rows;
  }

  std::size_t total_param_count() {
    std::size_t n = 0;
    for (auto* p : parameters()) n += p->numel();
    return n;
  }
};

}  // namespace pretrand
