#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "pretrand/checkpoint.hpp"
#include "pretrand/corpus.hpp"
#include "pretrand/csv.hpp"
#include "pretrand/tagger.hpp"
#include "pretrand/tape.hpp"
#include "pretrand/train_config.hpp"

namespace pretrand {

// Seed-derivation offsets, fixed so independent runs are reproducible in any
// execution order: member m of a run draws its init RNG from
// derive(seed, 10*m + kSeedInit) and its batch-shuffle RNG from
// derive(seed, 10*m + kSeedShuffle). The dev-holdout carve and the
// learning-curve subsampling are run-level, not per-member.
inline constexpr std::uint64_t kSeedInit = 1;
inline constexpr std::uint64_t kSeedShuffle = 2;
inline constexpr std::uint64_t kSeedHoldout = 3;
inline constexpr std::uint64_t kSeedCurve = 4;
inline constexpr std::uint64_t kSeedMemberStride = 10;

// ---- evaluation -----------------------------------------------------------

struct EvalClass {
  std::string tag;
  std::size_t gold = 0;
  std::size_t correct = 0;
  double accuracy() const { return gold ? double(correct) / double(gold) : 0.0; }
};

struct EvalResult {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy = 0.0;
  std::vector<EvalClass> per_class;  // one entry per tag id, model order
};

namespace detail {

template <typename PredictFn>
EvalResult evaluate_sentences(const TagSet& tags, const std::vector<Sentence>& split,
                              PredictFn&& predict) {
  EvalResult r;
  r.per_class.resize(tags.size());
  for (std::size_t i = 0; i < tags.size(); ++i) r.per_class[i].tag = tags.names[i];
  for (const Sentence& s : split) {
    if (s.empty()) continue;
    std::vector<std::size_t> pred = predict(s);
    for (std::size_t i = 0; i < s.size(); ++i) {
      std::size_t gold = s[i].tag;
      PR_CHECK(gold < tags.size(), "gold tag id " << gold << " outside the tag-set");
      ++r.total;
      ++r.per_class[gold].gold;
      if (pred[i] == gold) {
        ++r.correct;
        ++r.per_class[gold].correct;
      }
    }
  }
  PR_CHECK(r.total > 0, "evaluation split has no tokens");
  r.accuracy = double(r.correct) / double(r.total);
  return r;
}

}  // namespace detail

// Token accuracy plus per-gold-class counts. Sentences carry tag ids, so the
// split must be encoded against the model's own tag-set.
template <typename T>
EvalResult evaluate(TaggerModel<T>& model, const std::vector<Sentence>& split) {
  return detail::evaluate_sentences(model.tags, split,
                                    [&](const Sentence& s) { return model.predict(s); });
}

// Checked variant for externally loaded splits.
template <typename T>
EvalResult evaluate(TaggerModel<T>& model, const TaggedCorpus& split) {
  PR_CHECK(split.tags == model.tags,
           "tag-set mismatch: corpus tags do not match the model's");
  return evaluate(model, split.sentences);
}

// ---- ensembles ------------------------------------------------------------

// Two independently trained models; prediction is the mean of their softmax
// distributions per token. Members never share parameters.
template <typename T>
struct EnsembleModel {
  std::vector<TaggerModel<T>> members;

  const TagSet& tags() const {
    PR_CHECK(!members.empty(), "empty ensemble");
    return members.front().tags;
  }

  std::vector<std::vector<double>> predict_probs(const Sentence& s) {
    PR_CHECK(members.size() == 2, "ensemble needs exactly 2 members");
    PR_CHECK(members[0].tags == members[1].tags, "ensemble members disagree on tags");
    auto a = members[0].predict_probs(s);
    auto b = members[1].predict_probs(s);
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t c = 0; c < a[i].size(); ++c)
        a[i][c] = 0.5 * (a[i][c] + b[i][c]);
    return a;
  }

  std::vector<std::size_t> predict(const Sentence& s) {
    auto probs = predict_probs(s);
    std::vector<std::size_t> out;
    out.reserve(probs.size());
    for (const auto& p : probs) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < p.size(); ++c)
        if (p[c] > p[best]) best = c;  // exact ties go to the lowest tag id
      out.push_back(best);
    }
    return out;
  }
};

template <typename T>
EvalResult evaluate(EnsembleModel<T>& ens, const std::vector<Sentence>& split) {
  return detail::evaluate_sentences(ens.tags(), split,
                                    [&](const Sentence& s) { return ens.predict(s); });
}

template <typename T>
EvalResult evaluate(EnsembleModel<T>& ens, const TaggedCorpus& split) {
  PR_CHECK(split.tags == ens.tags(),
           "tag-set mismatch: corpus tags do not match the ensemble's");
  return evaluate(ens, split.sentences);
}

// ---- metrics --------------------------------------------------------------

struct MetricRow {
  std::string scheme;
  std::string split;
  std::uint64_t seed = 0;
  int epoch = 0;
  double accuracy = 0.0;
};

inline constexpr const char* kMetricHeader = "scheme,split,seed,epoch,accuracy";

inline void write_metric_csv(std::ostream& os, const std::vector<MetricRow>& rows,
                             bool header = true) {
  if (header) os << kMetricHeader << "\n";
  for (const MetricRow& r : rows)
    csv_write_row(os, {r.scheme, r.split, std::to_string(r.seed),
                       std::to_string(r.epoch), fmt_double(r.accuracy)});
}

// ---- the epoch loop -------------------------------------------------------

struct PhaseOptions {
  int epochs = 0;
  bool early_stop = false;  // patience on dev accuracy + best-epoch restore
  std::string label;        // metric rows' scheme column
  int* epoch_counter = nullptr;  // global numbering across phases
};

// Shuffled mini-batch SGD with momentum; the batch loss is the token-mean of
// the summed sentence losses, so the lr scale is batch-size independent.
// With early_stop the model is returned at its best dev-accuracy epoch —
// which may be the starting parameters, epoch 0 — never simply the last.
template <typename T>
TrainMeta run_epochs(TaggerModel<T>& model, const std::vector<Sentence>& train,
                     const std::vector<Sentence>& dev, const TrainConfig& cfg,
                     const PhaseOptions& opt, Rng& shuffle_rng,
                     std::vector<MetricRow>* rows = nullptr,
                     std::ostream* log = nullptr) {
  PR_CHECK(!train.empty(), "training split is empty");
  PR_CHECK(!dev.empty(), "dev split is empty");
  ParamRefs<T> params = model.parameters();
  TrainMeta meta;
  int local_counter = 0;
  int& epoch_no = opt.epoch_counter ? *opt.epoch_counter : local_counter;

  std::vector<Tensor<T>> best_values;
  double best_acc = -1.0;
  int best_epoch = epoch_no;
  auto snapshot = [&]() {
    best_values.clear();
    best_values.reserve(params.size());
    for (Parameter<T>* p : params) best_values.push_back(p->value);
  };
  if (opt.early_stop) {
    best_acc = evaluate(model, dev).accuracy;
    snapshot();
  }

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int e = 0; e < opt.epochs; ++e) {
    shuffle_rng.shuffle(order);
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size();
         start += (std::size_t)cfg.batch_sentences, ++batch_no) {
      std::size_t stop = std::min(order.size(), start + (std::size_t)cfg.batch_sentences);
      try {
        Tape<T> tape;
        std::vector<Var> losses;
        std::size_t tokens = 0;
        for (std::size_t i = start; i < stop; ++i) {
          const Sentence& s = train[order[i]];
          if (s.empty()) continue;
          ForwardTrace trace = model.forward(tape, s);
          losses.push_back(model.sentence_loss(tape, trace, s));
          tokens += s.size();
        }
        if (losses.empty()) continue;
        Var loss = tape.scale(tape.sum_scalars(losses), T(1) / static_cast<T>(tokens));
        tape.backward(loss);
        if (cfg.clip_norm > 0.0) clip_global_norm(params, cfg.clip_norm);
        sgd_step(params, static_cast<T>(cfg.lr), static_cast<T>(cfg.momentum));
      } catch (const Error& err) {
        throw Error("training aborted at epoch " + std::to_string(epoch_no + 1) +
                    ", batch " + std::to_string(batch_no + 1) + ": " + err.what());
      }
    }
    ++epoch_no;
    ++meta.epochs_run;
    double acc;
    try {
      acc = evaluate(model, dev).accuracy;
    } catch (const Error& err) {
      throw Error("dev evaluation failed after epoch " + std::to_string(epoch_no) +
                  ": " + err.what());
    }
    if (rows) rows->push_back({opt.label, "dev", cfg.seed, epoch_no, acc});
    if (log)
      (*log) << "[" << opt.label << "] epoch " << epoch_no << " dev_accuracy="
             << fmt_double(acc) << "\n";
    if (opt.early_stop) {
      if (acc > best_acc) {
        best_acc = acc;
        best_epoch = epoch_no;
        snapshot();
      } else if (epoch_no - best_epoch >= cfg.patience) {
        if (log)
          (*log) << "[" << opt.label << "] stopping: no dev improvement in "
                 << cfg.patience << " epochs\n";
        break;
      }
    } else {
      best_acc = acc;
      best_epoch = epoch_no;
    }
  }

  if (opt.early_stop && !best_values.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_values[i];
  }
  meta.best_epoch = (std::uint64_t)best_epoch;
  meta.best_dev_accuracy = best_acc < 0.0 ? 0.0 : best_acc;
  return meta;
}

// ---- random++ warm-up -----------------------------------------------------

// Trains the random branch and the merge vectors for a fixed number of
// epochs while every pre-trained parameter — embeddings, trunk and head —
// is frozen; all freeze flags are cleared afterwards for joint training.
// The config flag random_pp_train_embeddings leaves the shared token encoder
// trainable during the warm-up instead.
template <typename T>
TrainMeta run_random_pp(TaggerModel<T>& model, const std::vector<Sentence>& train,
                        const std::vector<Sentence>& dev, const TrainConfig& cfg,
                        Rng& shuffle_rng, const std::string& label,
                        int* epoch_counter, std::vector<MetricRow>* rows = nullptr,
                        std::ostream* log = nullptr) {
  PR_CHECK(model.has_random, "random++ warm-up needs the random branch attached");
  for (Parameter<T>* p : model.pretrained_parameters()) p->frozen = true;
  if (cfg.random_pp_train_embeddings)
    for (Parameter<T>* p : model.encoder.params()) p->frozen = false;
  PhaseOptions phase{cfg.random_pp_epochs, /*early_stop=*/false, label, epoch_counter};
  TrainMeta meta = run_epochs(model, train, dev, cfg, phase, shuffle_rng, rows, log);
  for (Parameter<T>* p : model.parameters()) p->frozen = false;
  return meta;
}

// ---- data plumbing --------------------------------------------------------

inline TaggedCorpus make_corpus(const TagSet& tags, std::vector<Sentence> sentences) {
  TaggedCorpus c;
  c.tags = tags;
  c.sentences = std::move(sentences);
  for (const Sentence& s : c.sentences) c.token_count += s.size();
  return c;
}

// Seeded dev carve for corpora that ship without a dev split: moves a
// fraction of the training sentences (at least one, never all) into dev,
// keeping both splits in corpus order.
inline void carve_holdout(std::vector<Sentence>& train, std::vector<Sentence>& dev,
                          double fraction, std::uint64_t seed) {
  PR_CHECK(train.size() >= 2,
           "cannot hold out a dev split from " << train.size() << " sentence(s)");
  std::vector<std::size_t> idx(train.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(idx);
  std::size_t n_dev = (std::size_t)std::ceil(fraction * (double)train.size());
  n_dev = std::max<std::size_t>(1, std::min(n_dev, train.size() - 1));
  std::vector<std::size_t> dev_idx(idx.begin(), idx.begin() + (std::ptrdiff_t)n_dev);
  std::vector<std::size_t> train_idx(idx.begin() + (std::ptrdiff_t)n_dev, idx.end());
  std::sort(dev_idx.begin(), dev_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::vector<Sentence> new_train, new_dev;
  new_train.reserve(train_idx.size());
  new_dev.reserve(dev_idx.size());
  for (std::size_t i : train_idx) new_train.push_back(std::move(train[i]));
  for (std::size_t i : dev_idx) new_dev.push_back(std::move(train[i]));
  train = std::move(new_train);
  dev = std::move(new_dev);
}

inline ModelDims dims_from(const TrainConfig& cfg, std::size_t hidden_override = 0) {
  ModelDims d;
  d.word_dim = (std::size_t)cfg.word_dim;
  d.char_dim = (std::size_t)cfg.char_dim;
  d.char_hidden = (std::size_t)cfg.char_hidden;
  d.hidden = hidden_override ? hidden_override : (std::size_t)cfg.hidden;
  d.k = (std::size_t)cfg.k;
  return d;
}

inline int precision_bytes_of(const TrainConfig& cfg) {
  return cfg.precision == "f64" ? 8 : 4;
}

// Runs tasks with at most `threads` workers. Tasks must touch disjoint
// state; the first failure (by task index) is rethrown after all workers
// finish, so error behavior does not depend on scheduling.
inline void run_tasks(std::vector<std::function<void()>>& tasks, int threads) {
  if (threads <= 1 || tasks.size() <= 1) {
    for (auto& t : tasks) t();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr first_error;
  std::size_t first_error_index = tasks.size();
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        tasks[i]();
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < first_error_index) {
          first_error_index = i;
          first_error = std::current_exception();
        }
      }
    }
  };
  std::size_t n = std::min<std::size_t>((std::size_t)threads, tasks.size());
  std::vector<std::thread> pool;
  pool.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---- scheme assembly ------------------------------------------------------

// Builds member `member_index` of a run: either a fresh model over the
// target vocabulary, or the init checkpoint's model re-headed for the target
// tag-set (with the vocabulary optionally extended, and — for the two-branch
// scheme — the random branch attached). Pretrained vectors fill fresh
// embedding rows only; rows carried over from the checkpoint are kept.
template <typename T>
TaggerModel<T> assemble_target_model(const Checkpoint* init, const TagSet& tags,
                                     const TaggedCorpus& train_corpus,
                                     const TrainConfig& cfg, int member_index,
                                     const PretrainedVectors* vectors,
                                     std::ostream* log) {
  const SchemeKind kind = cfg.scheme.kind;
  const bool fresh = kind == SchemeKind::Random200 || kind == SchemeKind::Random400 ||
                     kind == SchemeKind::Ensemble2Rand ||
                     (kind == SchemeKind::EnsemblePretRand && member_index == 1);
  Rng rng(Rng::derive(cfg.seed, kSeedMemberStride * (std::uint64_t)member_index + kSeedInit));

  if (fresh) {
    std::size_t hidden = (std::size_t)cfg.hidden +
                         (kind == SchemeKind::Random400 ? (std::size_t)cfg.k : 0);
    Vocab vocab = build_vocab(train_corpus, (std::size_t)cfg.min_count);
    TaggerModel<T> model =
        TaggerModel<T>::make_base(std::move(vocab), tags, dims_from(cfg, hidden), rng);
    if (vectors) {
      auto cov = model.encoder.load_pretrained(model.vocab, *vectors);
      if (log)
        (*log) << "pretrained vectors cover " << cov.covered << "/" << cov.total
               << " words\n";
    }
    return model;
  }

  PR_CHECK(init, "scheme " << scheme_name(kind) << " requires an init checkpoint");
  PR_CHECK(init->members.size() == 1,
           "init checkpoint holds an ensemble; expected a single base model");
  const MemberState& src = init->members[0];
  PR_CHECK(!src.has_random,
           "init checkpoint already carries a random branch; expected a base model");
  TaggerModel<T> model = model_from_member<T>(src);
  PR_CHECK(model.dims.word_dim == (std::size_t)cfg.word_dim &&
               model.dims.char_dim == (std::size_t)cfg.char_dim &&
               model.dims.char_hidden == (std::size_t)cfg.char_hidden &&
               model.dims.hidden == (std::size_t)cfg.hidden,
           "checkpoint dimensions (word " << model.dims.word_dim << ", char "
               << model.dims.char_dim << ", char_hidden " << model.dims.char_hidden
               << ", hidden " << model.dims.hidden << ") do not match the config");

  // Fresh classifier head over the target tag-set.
  model.tags = tags;
  model.head.init("head", model.trunk.out_dim(), model.tags.size(), rng);

  if (cfg.extend_vocab) {
    VocabExtension ext = extend_vocab(model.vocab, train_corpus);
    std::size_t first_new = model.vocab.word_count() - ext.new_words.size();
    model.encoder.extend(ext, first_new, vectors, rng);
    if (log && (!ext.new_words.empty() || !ext.new_chars.empty()))
      (*log) << "vocabulary extended by " << ext.new_words.size() << " words, "
             << ext.new_chars.size() << " chars\n";
  }

  if (kind == SchemeKind::PretRand) {
    model.dims.k = (std::size_t)cfg.k;
    model.merge.use_norm = cfg.scheme.l2_norm;
    model.merge.p = cfg.p;
    model.merge.use_vectors = cfg.scheme.learn_vect;
    model.attach_random_branch(rng);
  }
  return model;
}

// ---- pretraining ----------------------------------------------------------

template <typename T>
struct PretrainResult {
  Checkpoint checkpoint;
  EvalResult dev_eval;
  std::vector<MetricRow> rows;
  TaggerModel<T> model;
  TrainMeta meta;
};

// Trains a base model on the source corpus to its best-dev epoch. When the
// dataset has no dev split, a seeded fraction of train is carved off as one.
template <typename T>
PretrainResult<T> pretrain(const Dataset& source, const TrainConfig& cfg,
                           const PretrainedVectors* vectors = nullptr,
                           std::ostream* log = nullptr) {
  cfg.validate();
  PR_CHECK(!source.train.sentences.empty(), "pretrain: training corpus is empty");
  std::vector<Sentence> train_s = source.train.sentences;
  std::vector<Sentence> dev_s;
  if (source.has_dev()) {
    dev_s = source.dev.sentences;
  } else {
    carve_holdout(train_s, dev_s, cfg.dev_holdout, Rng::derive(cfg.seed, kSeedHoldout));
    if (log)
      (*log) << "no dev split: held out " << dev_s.size() << " of "
             << source.train.sentences.size() << " training sentences\n";
  }

  PretrainResult<T> res;
  Rng init_rng(Rng::derive(cfg.seed, kSeedInit));
  Vocab vocab = build_vocab(make_corpus(source.tags, train_s), (std::size_t)cfg.min_count);
  res.model = TaggerModel<T>::make_base(std::move(vocab), source.tags, dims_from(cfg),
                                        init_rng);
  if (vectors) {
    auto cov = res.model.encoder.load_pretrained(res.model.vocab, *vectors);
    if (log)
      (*log) << "pretrained vectors cover " << cov.covered << "/" << cov.total
             << " words\n";
  }

  Rng shuffle_rng(Rng::derive(cfg.seed, kSeedShuffle));
  int epoch_counter = 0;
  PhaseOptions phase{cfg.max_epochs, /*early_stop=*/true, "pretrain", &epoch_counter};
  res.meta = run_epochs(res.model, train_s, dev_s, cfg, phase, shuffle_rng, &res.rows, log);
  res.dev_eval = evaluate(res.model, dev_s);

  res.checkpoint.precision_bytes = precision_bytes_of(cfg);
  res.checkpoint.config_kv = cfg.to_kv();
  res.checkpoint.members.push_back(member_from_model(res.model, res.meta));
  return res;
}

// ---- fine-tuning (scheme dispatch) ------------------------------------------

template <typename T>
struct FinetuneResult {
  Checkpoint checkpoint;
  EvalResult dev_eval;  // ensemble-level for two-member schemes
  std::vector<MetricRow> rows;
  std::vector<TaggerModel<T>> models;
  std::vector<TrainMeta> metas;
};

// Trains the configured scheme on the target corpus. Single-model schemes
// produce a one-member checkpoint; ensembles train two independent members
// (optionally in parallel — results are identical either way, since every
// member derives its own RNGs) and evaluate their averaged predictions.
template <typename T>
FinetuneResult<T> finetune(const Checkpoint* init, const Dataset& target,
                           const TrainConfig& cfg,
                           const PretrainedVectors* vectors = nullptr,
                           std::ostream* log = nullptr, int threads = 1) {
  cfg.validate();
  PR_CHECK(!target.train.sentences.empty(), "finetune: training corpus is empty");
  const SchemeKind kind = cfg.scheme.kind;
  if (scheme_needs_init(kind))
    PR_CHECK(init != nullptr,
             "scheme " << scheme_name(kind) << " requires an init checkpoint");
  else
    PR_CHECK(init == nullptr, "scheme " << scheme_name(kind)
                                        << " takes no init checkpoint");

  std::vector<Sentence> train_s = target.train.sentences;
  std::vector<Sentence> dev_s;
  if (target.has_dev()) {
    dev_s = target.dev.sentences;
  } else {
    carve_holdout(train_s, dev_s, cfg.dev_holdout, Rng::derive(cfg.seed, kSeedHoldout));
    if (log)
      (*log) << "no dev split: held out " << dev_s.size() << " of "
             << target.train.sentences.size() << " training sentences\n";
  }
  TaggedCorpus train_corpus = make_corpus(target.tags, train_s);

  const int n_members = scheme_is_ensemble(kind) ? 2 : 1;
  FinetuneResult<T> res;
  res.models.resize((std::size_t)n_members);
  res.metas.resize((std::size_t)n_members);
  std::vector<std::vector<MetricRow>> member_rows((std::size_t)n_members);
  std::vector<std::ostringstream> member_logs((std::size_t)n_members);

  auto run_member = [&](int m) {
    std::ostream* mlog = log ? &member_logs[(std::size_t)m] : nullptr;
    TaggerModel<T> model = assemble_target_model<T>(init, target.tags, train_corpus,
                                                    cfg, m, vectors, mlog);
    std::string label = scheme_name(kind);
    if (n_members == 2) label += "/m" + std::to_string(m);
    Rng shuffle_rng(
        Rng::derive(cfg.seed, kSeedMemberStride * (std::uint64_t)m + kSeedShuffle));
    int epoch_counter = 0;
    TrainMeta total;
    if (kind == SchemeKind::PretRand && cfg.scheme.random_pp &&
        cfg.random_pp_epochs > 0) {
      TrainMeta warm = run_random_pp(model, train_corpus.sentences, dev_s, cfg,
                                     shuffle_rng, label, &epoch_counter,
                                     &member_rows[(std::size_t)m], mlog);
      total.epochs_run += warm.epochs_run;
    }
    PhaseOptions joint{cfg.max_epochs, /*early_stop=*/true, label, &epoch_counter};
    TrainMeta jm = run_epochs(model, train_corpus.sentences, dev_s, cfg, joint,
                              shuffle_rng, &member_rows[(std::size_t)m], mlog);
    total.epochs_run += jm.epochs_run;
    total.best_epoch = jm.best_epoch;
    total.best_dev_accuracy = jm.best_dev_accuracy;
    res.metas[(std::size_t)m] = total;
    res.models[(std::size_t)m] = std::move(model);
  };

  std::vector<std::function<void()>> tasks;
  for (int m = 0; m < n_members; ++m) tasks.push_back([&, m]() { run_member(m); });
  run_tasks(tasks, threads);

  if (log)
    for (const auto& ml : member_logs) (*log) << ml.str();
  for (auto& mr : member_rows)
    res.rows.insert(res.rows.end(), mr.begin(), mr.end());

  if (n_members == 1) {
    res.dev_eval = evaluate(res.models[0], dev_s);
  } else {
    EnsembleModel<T> ens;
    ens.members = std::move(res.models);
    res.dev_eval = evaluate(ens, dev_s);
    res.models = std::move(ens.members);
  }

  res.checkpoint.precision_bytes = precision_bytes_of(cfg);
  res.checkpoint.config_kv = cfg.to_kv();
  for (int m = 0; m < n_members; ++m)
    res.checkpoint.members.push_back(
        member_from_model(res.models[(std::size_t)m], res.metas[(std::size_t)m]));
  return res;
}

// ---- learning curve ---------------------------------------------------------

// Seeded nested subsets: the first ceil(f*N) entries of one fixed shuffled
// order, re-sorted to corpus order — so smaller fractions are subsets of
// larger ones and fraction 1.0 is the identity (a curve point at 1.0 equals
// a direct finetune run with the same seed).
inline std::vector<std::size_t> curve_subset_indices(std::size_t n, double fraction,
                                                     std::uint64_t seed) {
  PR_CHECK(n > 0, "curve: corpus is empty");
  PR_USAGE_CHECK(fraction > 0.0 && fraction <= 1.0,
                 "curve fraction must be in (0,1], got " << fraction);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(Rng::derive(seed, kSeedCurve));
  rng.shuffle(idx);
  std::size_t m = (std::size_t)std::ceil(fraction * (double)n);
  m = std::max<std::size_t>(1, std::min(m, n));
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

struct CurvePoint {
  double fraction = 0.0;
  std::string scheme;
  double dev_accuracy = 0.0;
};

template <typename T>
std::vector<CurvePoint> learning_curve(const Checkpoint* init, const Dataset& target,
                                       const std::vector<Scheme>& schemes,
                                       const std::vector<double>& fractions,
                                       const TrainConfig& cfg,
                                       const PretrainedVectors* vectors = nullptr,
                                       std::ostream* log = nullptr, int threads = 1) {
  PR_CHECK(!schemes.empty(), "curve: no schemes given");
  PR_CHECK(!fractions.empty(), "curve: no fractions given");
  PR_CHECK(!target.train.sentences.empty(), "curve: training corpus is empty");

  struct Point {
    double fraction;
    Scheme scheme;
  };
  std::vector<Point> points;
  for (double f : fractions)
    for (const Scheme& s : schemes) points.push_back({f, s});

  std::vector<CurvePoint> out(points.size());
  std::vector<std::ostringstream> point_logs(points.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t i = 0; i < points.size(); ++i) {
    tasks.push_back([&, i]() {
      const Point& pt = points[i];
      std::vector<std::size_t> idx =
          curve_subset_indices(target.train.sentences.size(), pt.fraction, cfg.seed);
      PR_CHECK(!idx.empty(), "curve fraction " << pt.fraction
                                               << " yields zero sentences");
      Dataset sub;
      sub.tags = target.tags;
      std::vector<Sentence> sel;
      sel.reserve(idx.size());
      for (std::size_t j : idx) sel.push_back(target.train.sentences[j]);
      sub.train = make_corpus(target.tags, std::move(sel));
      sub.dev = target.dev;
      TrainConfig sub_cfg = cfg;
      sub_cfg.scheme = pt.scheme;
      const Checkpoint* use = scheme_needs_init(pt.scheme.kind) ? init : nullptr;
      std::ostream* plog = log ? &point_logs[i] : nullptr;
      if (plog)
        (*plog) << "curve point fraction=" << fmt_double(pt.fraction) << " scheme="
                << scheme_name(pt.scheme.kind) << " (" << idx.size() << " sentences)\n";
      FinetuneResult<T> r = finetune<T>(use, sub, sub_cfg, vectors, plog, 1);
      out[i] = {pt.fraction, scheme_name(pt.scheme.kind), r.dev_eval.accuracy};
    });
  }
  run_tasks(tasks, threads);
  if (log)
    for (const auto& pl : point_logs) (*log) << pl.str();
  return out;
}

}  // namespace pretrand
