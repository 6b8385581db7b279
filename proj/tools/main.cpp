// pretrand: train, evaluate and inspect sequence-labeling models over
// CoNLL-format corpora.
//
// stdout carries machine-readable results only (CSV or key=value lines);
// progress, warnings and the resolved configuration of every run go to
// stderr. Exit codes: 0 success, 1 usage error, 2 data/runtime error.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pretrand/analysis.hpp"
#include "pretrand/checkpoint.hpp"
#include "pretrand/corpus.hpp"
#include "pretrand/csv.hpp"
#include "pretrand/errors.hpp"
#include "pretrand/train_config.hpp"
#include "pretrand/training.hpp"

namespace {

using namespace pretrand;

// Missing relative input paths fall back to $PRETRAND_DATA_DIR/<path>.
// Outputs are never remapped.
std::string resolve_input(const std::string& path) {
  namespace fs = std::filesystem;
  if (path.empty()) return path;
  std::error_code ec;
  if (fs::exists(path, ec)) return path;
  const char* base = std::getenv("PRETRAND_DATA_DIR");
  if (base != nullptr && *base != '\0' && fs::path(path).is_relative()) {
    fs::path joined = fs::path(base) / path;
    if (fs::exists(joined, ec)) {
      std::cerr << "resolved " << path << " -> " << joined.string() << "\n";
      return joined.string();
    }
  }
  return path;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(csv);
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

// ---- shared training flags --------------------------------------------------

struct TrainFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> k;
  std::optional<double> p_norm;
  std::optional<double> lr;
  std::optional<double> momentum;
  std::optional<int> batch;
  std::optional<int> max_epochs;
  std::optional<int> patience;
  std::optional<int> random_pp_epochs;
  bool no_learn_vect = false;
  bool no_random_pp = false;
  bool no_l2_norm = false;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--config", f.config_path,
                  "key=value config file; '#' starts a comment");
  cmd->add_option("--seed", f.seed, "run seed (default 1)");
  cmd->add_option("--k", f.k, "random-branch width per direction (default 200)");
  cmd->add_option("--p-norm", f.p_norm, "norm order for the branch merge (default 2)");
  cmd->add_option("--lr", f.lr, "SGD learning rate (default 0.015)");
  cmd->add_option("--momentum", f.momentum, "SGD momentum (default 0.9)");
  cmd->add_option("--batch", f.batch, "sentences per batch (default 8)");
  cmd->add_option("--max-epochs", f.max_epochs, "epoch cap (default 100)");
  cmd->add_option("--patience", f.patience,
                  "early-stop patience in epochs (default 10)");
  cmd->add_option("--random-pp-epochs", f.random_pp_epochs,
                  "random-branch warm-up epochs (default 5)");
  cmd->add_flag("--no-learn-vect", f.no_learn_vect,
                "ablation: keep the merge weighting vectors fixed at 1");
  cmd->add_flag("--no-random-pp", f.no_random_pp,
                "ablation: skip the random-branch warm-up phase");
  cmd->add_flag("--no-l2-norm", f.no_l2_norm, "ablation: merge raw logits");
}

// Defaults, then the config file, then explicit flags; toggles last.
TrainConfig resolve_config(const TrainFlags& f, const std::string& scheme) {
  TrainConfig cfg;
  if (!f.config_path.empty()) {
    std::string path = resolve_input(f.config_path);
    std::ifstream in(path, std::ios::binary);
    PR_USAGE_CHECK(in, "--config: cannot open " << path);
    std::ostringstream text;
    text << in.rdbuf();
    try {
      apply_config_text(cfg, text.str());
    } catch (const UsageError& e) {
      throw UsageError(path + ": " + e.what());
    }
  }
  if (!scheme.empty()) cfg.scheme.kind = parse_scheme(scheme);
  if (f.seed) cfg.seed = *f.seed;
  if (f.k) cfg.k = *f.k;
  if (f.p_norm) cfg.p = *f.p_norm;
  if (f.lr) cfg.lr = *f.lr;
  if (f.momentum) cfg.momentum = *f.momentum;
  if (f.batch) cfg.batch_sentences = *f.batch;
  if (f.max_epochs) cfg.max_epochs = *f.max_epochs;
  if (f.patience) cfg.patience = *f.patience;
  if (f.random_pp_epochs) cfg.random_pp_epochs = *f.random_pp_epochs;
  if (f.no_learn_vect) cfg.scheme.learn_vect = false;
  if (f.no_random_pp) cfg.scheme.random_pp = false;
  if (f.no_l2_norm) cfg.scheme.l2_norm = false;
  cfg.validate();
  return cfg;
}

void log_config(const TrainConfig& cfg, int threads) {
  std::cerr << "resolved config:\n";
  for (const auto& [key, value] : cfg.to_kv()) std::cerr << key << "=" << value << "\n";
  std::cerr << "threads=" << threads << "\n";
}

// ---- precision dispatch ------------------------------------------------------

template <typename Fn>
int with_precision(const std::string& precision, Fn&& fn) {
  if (precision == "f64") return fn(static_cast<double*>(nullptr));
  return fn(static_cast<float*>(nullptr));
}

template <typename Fn>
int with_checkpoint_precision(const Checkpoint& ckpt, Fn&& fn) {
  if (ckpt.precision_bytes == 8) return fn(static_cast<double*>(nullptr));
  return fn(static_cast<float*>(nullptr));
}

// ---- shared helpers -----------------------------------------------------------

TagSet checkpoint_tags(const Checkpoint& ckpt) {
  PR_CHECK(!ckpt.members.empty(), "checkpoint has no members");
  return TagSet::from_names(ckpt.members.front().tag_names);
}

EvalResult eval_checkpoint(const Checkpoint& ckpt, const TaggedCorpus& data) {
  EvalResult r;
  with_checkpoint_precision(ckpt, [&](auto* tag) {
    using T = std::remove_pointer_t<decltype(tag)>;
    auto models = models_from_checkpoint<T>(ckpt);
    if (models.size() == 2) {
      EnsembleModel<T> ens{std::move(models)};
      r = evaluate(ens, data);
    } else {
      r = evaluate(models.front(), data);
    }
    return 0;
  });
  return r;
}

ActivationMatrix record_from(const Checkpoint& ckpt, std::size_t member,
                             const std::vector<Sentence>& split,
                             const std::string& layer, const std::string& source_id) {
  PR_USAGE_CHECK(member < ckpt.members.size(),
                 "--member " << member << ": checkpoint has " << ckpt.members.size()
                             << " member(s)");
  ActivationMatrix am;
  with_checkpoint_precision(ckpt, [&](auto* tag) {
    using T = std::remove_pointer_t<decltype(tag)>;
    auto model = model_from_member<T>(ckpt.members[member]);
    am = record_activations(model, split, layer, source_id);
    return 0;
  });
  return am;
}

void write_metrics_file(const std::string& path, const std::vector<MetricRow>& rows) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::binary);
  PR_CHECK(out, "cannot write metrics file " << path);
  write_metric_csv(out, rows);
}

// ---- subcommand argument bags --------------------------------------------------

struct PretrainArgs {
  TrainFlags tf;
  std::string train, dev, out, metrics, vectors;
  int threads = 1;
};

struct FinetuneArgs {
  TrainFlags tf;
  std::string scheme, init, train, dev, out, metrics, vectors;
  int threads = 1;
};

struct EvalArgs {
  std::string model, data;
};

struct CurveArgs {
  TrainFlags tf;
  std::string schemes, fractions, init, train, dev, vectors;
  int threads = 1;
};

struct CorrelationArgs {
  std::string model_a, model_b, layer_a = "trunk", layer_b = "trunk", data;
  std::size_t member_a = 0, member_b = 0;
};

struct TopWordsArgs {
  std::string model, data, layer = "trunk";
  std::size_t member = 0;
  std::size_t unit = 0;
  std::size_t k = 10;
};

struct UniqueUnitsArgs {
  std::string model, data;
  std::size_t member = 0;
  double threshold = 0.4;
};

struct WeightHistArgs {
  std::string model, blocks;
  std::size_t member = 0;
  std::size_t bins = 50;
};

struct PerClassArgs {
  std::string model_a, model_b, data;
};

struct CountParamsArgs {
  TrainFlags tf;
  std::string model, scheme, train;
};

struct InspectArgs {
  std::string model;
};

// ---- runners --------------------------------------------------------------------

int run_pretrain(const PretrainArgs& a) {
  TrainConfig cfg = resolve_config(a.tf, "");
  log_config(cfg, a.threads);
  Dataset data = load_dataset(resolve_input(a.train), resolve_input(a.dev), "");
  PretrainedVectors vecs;
  const PretrainedVectors* vp = nullptr;
  if (!a.vectors.empty()) {
    vecs = load_vectors(resolve_input(a.vectors), (std::size_t)cfg.word_dim, &std::cerr);
    vp = &vecs;
  }
  return with_precision(cfg.precision, [&](auto* tag) {
    using T = std::remove_pointer_t<decltype(tag)>;
    PretrainResult<T> res = pretrain<T>(data, cfg, vp, &std::cerr);
    write_metrics_file(a.metrics, res.rows);
    save_checkpoint(res.checkpoint, a.out);
    std::cout << "dev_accuracy=" << fmt_double(res.dev_eval.accuracy) << "\n";
    std::cout << "epochs_run=" << res.meta.epochs_run << "\n";
    std::cout << "best_epoch=" << res.meta.best_epoch << "\n";
    std::cout << "checkpoint=" << a.out << "\n";
    return 0;
  });
}

int run_finetune(const FinetuneArgs& a) {
  TrainConfig cfg = resolve_config(a.tf, a.scheme);
  const SchemeKind kind = cfg.scheme.kind;
  if (scheme_needs_init(kind))
    PR_USAGE_CHECK(!a.init.empty(), "--init: scheme " << scheme_name(kind)
                                                      << " requires an init checkpoint");
  else
    PR_USAGE_CHECK(a.init.empty(), "--init: scheme " << scheme_name(kind)
                                                     << " takes no init checkpoint");
  log_config(cfg, a.threads);

  Dataset data = load_dataset(resolve_input(a.train), resolve_input(a.dev), "");
  Checkpoint init;
  const Checkpoint* ip = nullptr;
  if (!a.init.empty()) {
    init = load_checkpoint(resolve_input(a.init));
    ip = &init;
  }
  PretrainedVectors vecs;
  const PretrainedVectors* vp = nullptr;
  if (!a.vectors.empty()) {
    vecs = load_vectors(resolve_input(a.vectors), (std::size_t)cfg.word_dim, &std::cerr);
    vp = &vecs;
  }
  return with_precision(cfg.precision, [&](auto* tag) {
    using T = std::remove_pointer_t<decltype(tag)>;
    FinetuneResult<T> res = finetune<T>(ip, data, cfg, vp, &std::cerr, a.threads);
    write_metrics_file(a.metrics, res.rows);
    if (!a.out.empty()) save_checkpoint(res.checkpoint, a.out);
    std::cout << "scheme=" << scheme_name(kind) << "\n";
    std::cout << "dev_accuracy=" << fmt_double(res.dev_eval.accuracy) << "\n";
    for (std::size_t m = 0; m < res.metas.size(); ++m) {
      std::cout << "member" << m << "_epochs_run=" << res.metas[m].epochs_run << "\n";
      std::cout << "member" << m << "_best_epoch=" << res.metas[m].best_epoch << "\n";
      std::cout << "member" << m
                << "_best_dev_accuracy=" << fmt_double(res.metas[m].best_dev_accuracy)
                << "\n";
    }
    if (!a.out.empty()) std::cout << "checkpoint=" << a.out << "\n";
    return 0;
  });
}

int run_eval(const EvalArgs& a) {
  Checkpoint ckpt = load_checkpoint(resolve_input(a.model));
  TaggedCorpus data =
      load_conll(resolve_input(a.data), TagsetPolicy::fixed_set(checkpoint_tags(ckpt)));
  EvalResult r = eval_checkpoint(ckpt, data);
  std::cout << "accuracy=" << fmt_double(r.accuracy) << "\n";
  std::cout << "correct=" << r.correct << "\n";
  std::cout << "total=" << r.total << "\n";
  return 0;
}

int run_curve(const CurveArgs& a) {
  TrainConfig cfg = resolve_config(a.tf, "");
  log_config(cfg, a.threads);

  std::vector<Scheme> schemes;
  bool any_needs_init = false;
  for (const std::string& name : split_list(a.schemes)) {
    Scheme s = cfg.scheme;
    s.kind = parse_scheme(name);
    any_needs_init = any_needs_init || scheme_needs_init(s.kind);
    schemes.push_back(s);
  }
  PR_USAGE_CHECK(!schemes.empty(), "--schemes: empty list");

  std::vector<double> fractions;
  for (const std::string& part : split_list(a.fractions)) {
    try {
      fractions.push_back(parse_double(part));
    } catch (const Error& e) {
      throw UsageError(std::string("--fractions: ") + e.what());
    }
  }
  PR_USAGE_CHECK(!fractions.empty(), "--fractions: empty list");

  if (any_needs_init)
    PR_USAGE_CHECK(!a.init.empty(), "--init: at least one scheme requires an init checkpoint");
  else
    PR_USAGE_CHECK(a.init.empty(), "--init: none of the schemes takes an init checkpoint");

  Dataset data = load_dataset(resolve_input(a.train), resolve_input(a.dev), "");
  Checkpoint init;
  const Checkpoint* ip = nullptr;
  if (!a.init.empty()) {
    init = load_checkpoint(resolve_input(a.init));
    ip = &init;
  }
  PretrainedVectors vecs;
  const PretrainedVectors* vp = nullptr;
  if (!a.vectors.empty()) {
    vecs = load_vectors(resolve_input(a.vectors), (std::size_t)cfg.word_dim, &std::cerr);
    vp = &vecs;
  }
  return with_precision(cfg.precision, [&](auto* tag) {
    using T = std::remove_pointer_t<decltype(tag)>;
    std::vector<CurvePoint> points =
        learning_curve<T>(ip, data, schemes, fractions, cfg, vp, &std::cerr, a.threads);
    csv_write_row(std::cout, {"fraction", "scheme", "dev_accuracy"});
    for (const CurvePoint& p : points)
      csv_write_row(std::cout,
                    {fmt_double(p.fraction), p.scheme, fmt_double(p.dev_accuracy)});
    return 0;
  });
}

int run_correlations(const CorrelationArgs& a) {
  Checkpoint ca = load_checkpoint(resolve_input(a.model_a));
  Checkpoint cb_storage;
  const Checkpoint* cb = &ca;
  if (!a.model_b.empty() && a.model_b != a.model_a) {
    cb_storage = load_checkpoint(resolve_input(a.model_b));
    cb = &cb_storage;
  }
  TaggedCorpus probe = load_conll(resolve_input(a.data), TagsetPolicy::build_from_data());
  ActivationMatrix ma = record_from(ca, a.member_a, probe.sentences, a.layer_a, a.model_a);
  ActivationMatrix mb = record_from(*cb, a.member_b, probe.sentences, a.layer_b,
                                    a.model_b.empty() ? a.model_a : a.model_b);
  CorrelationMatrix m = pearson_matrix(ma, mb);
  if (m.any_degenerate)
    std::cerr << "warning: constant activation rows present (coefficient forced to 0)\n";
  if (m.rows == m.cols)
    std::cerr << "diagonal_dominance=" << fmt_double(diagonal_dominance(m).fraction)
              << "\n";
  write_correlation_csv(std::cout, m);
  return 0;
}

int run_top_words(const TopWordsArgs& a) {
  Checkpoint ckpt = load_checkpoint(resolve_input(a.model));
  TaggedCorpus probe = load_conll(resolve_input(a.data), TagsetPolicy::build_from_data());
  ActivationMatrix am = record_from(ckpt, a.member, probe.sentences, a.layer, a.model);
  std::vector<WordActivation> words = top_k_words(am, a.unit, a.k);
  write_top_words_csv(std::cout, a.unit, words);
  return 0;
}

int run_unique_units(const UniqueUnitsArgs& a) {
  Checkpoint ckpt = load_checkpoint(resolve_input(a.model));
  TaggedCorpus probe = load_conll(resolve_input(a.data), TagsetPolicy::build_from_data());
  ActivationMatrix rand_am =
      record_from(ckpt, a.member, probe.sentences, "rand_trunk", a.model);
  ActivationMatrix pre_am = record_from(ckpt, a.member, probe.sentences, "trunk", a.model);
  UniqueUnitsReport rep = unique_units(rand_am, pre_am, a.threshold);
  std::cout << "total=" << rep.total << "\n";
  std::cout << "unique=" << rep.units.size() << "\n";
  std::cout << "fraction=" << fmt_double(rep.fraction) << "\n";
  std::cout << "units=";
  for (std::size_t i = 0; i < rep.units.size(); ++i)
    std::cout << (i ? "," : "") << rep.units[i];
  std::cout << "\n";
  return 0;
}

int run_weight_hist(const WeightHistArgs& a) {
  Checkpoint ckpt = load_checkpoint(resolve_input(a.model));
  PR_USAGE_CHECK(a.member < ckpt.members.size(),
                 "--member " << a.member << ": checkpoint has " << ckpt.members.size()
                             << " member(s)");
  std::vector<std::string> names = split_list(a.blocks);
  PR_USAGE_CHECK(!names.empty(), "--blocks: empty list");
  std::vector<Histogram> hists =
      weight_distribution(ckpt.members[a.member], names, a.bins);
  write_histogram_csv(std::cout, hists);
  return 0;
}

int run_per_class(const PerClassArgs& a) {
  Checkpoint ca = load_checkpoint(resolve_input(a.model_a));
  Checkpoint cb = load_checkpoint(resolve_input(a.model_b));
  TaggedCorpus data =
      load_conll(resolve_input(a.data), TagsetPolicy::fixed_set(checkpoint_tags(ca)));
  EvalResult ea = eval_checkpoint(ca, data);
  EvalResult eb = eval_checkpoint(cb, data);
  PerClassDelta pcd = per_class_delta(ea, eb);
  if (!pcd.excluded.empty()) {
    std::cerr << "excluded (no gold tokens):";
    for (const std::string& tag : pcd.excluded) std::cerr << " " << tag;
    std::cerr << "\n";
  }
  write_per_class_csv(std::cout, pcd);
  return 0;
}

int run_count_params(const CountParamsArgs& a) {
  PR_USAGE_CHECK(a.model.empty() != a.train.empty(),
                 "pass exactly one of --model (a checkpoint) or --train (a corpus "
                 "to size a fresh model against)");
  csv_write_row(std::cout, {"member", "component", "scalars"});
  if (!a.model.empty()) {
    Checkpoint ckpt = load_checkpoint(resolve_input(a.model));
    with_checkpoint_precision(ckpt, [&](auto* tag) {
      using T = std::remove_pointer_t<decltype(tag)>;
      auto models = models_from_checkpoint<T>(ckpt);
      for (std::size_t m = 0; m < models.size(); ++m)
        for (const auto& row : models[m].count_params())
          csv_write_row(std::cout, {std::to_string(m), row.component,
                                    std::to_string(row.scalars)});
      return 0;
    });
    return 0;
  }
  TrainConfig cfg = resolve_config(a.tf, a.scheme);
  Dataset data = load_dataset(resolve_input(a.train), "", "");
  Vocab vocab = build_vocab(data.train, (std::size_t)cfg.min_count);
  return with_precision(cfg.precision, [&](auto* tag) {
    using T = std::remove_pointer_t<decltype(tag)>;
    Rng rng(Rng::derive(cfg.seed, kSeedInit));
    std::size_t hidden_override =
        cfg.scheme.kind == SchemeKind::Random400 ? (std::size_t)(cfg.hidden + cfg.k) : 0;
    auto model = TaggerModel<T>::make_base(std::move(vocab), data.tags,
                                           dims_from(cfg, hidden_override), rng);
    if (cfg.scheme.kind == SchemeKind::PretRand) {
      model.dims.k = (std::size_t)cfg.k;
      model.attach_random_branch(rng);
    }
    for (const auto& row : model.count_params())
      csv_write_row(std::cout, {"0", row.component, std::to_string(row.scalars)});
    return 0;
  });
}

int run_inspect(const InspectArgs& a) {
  Checkpoint ckpt = load_checkpoint(resolve_input(a.model));
  std::cout << "version=" << Checkpoint::kVersion << "\n";
  std::cout << "precision=" << (ckpt.precision_bytes == 8 ? "f64" : "f32") << "\n";
  std::cout << "members=" << ckpt.members.size() << "\n";
  for (const auto& [key, value] : ckpt.config_kv)
    std::cout << "config." << key << "=" << value << "\n";
  for (std::size_t m = 0; m < ckpt.members.size(); ++m) {
    const MemberState& ms = ckpt.members[m];
    std::string p = "member" + std::to_string(m) + ".";
    std::cout << p << "tags=" << ms.tag_names.size() << "\n";
    std::cout << p << "words=" << ms.vocab_words.size() << "\n";
    std::cout << p << "chars=" << ms.vocab_chars.size() << "\n";
    std::cout << p << "word_dim=" << ms.dims.word_dim << "\n";
    std::cout << p << "char_dim=" << ms.dims.char_dim << "\n";
    std::cout << p << "char_hidden=" << ms.dims.char_hidden << "\n";
    std::cout << p << "hidden=" << ms.dims.hidden << "\n";
    std::cout << p << "k=" << ms.dims.k << "\n";
    std::cout << p << "has_random=" << (ms.has_random ? 1 : 0) << "\n";
    std::cout << p << "use_norm=" << (ms.merge.use_norm ? 1 : 0) << "\n";
    std::cout << p << "p=" << fmt_double(ms.merge.p) << "\n";
    std::cout << p << "use_vectors=" << (ms.merge.use_vectors ? 1 : 0) << "\n";
    std::size_t scalars = 0;
    for (const NamedBlock& b : ms.blocks) scalars += b.values.size();
    std::cout << p << "blocks=" << ms.blocks.size() << "\n";
    std::cout << p << "scalars=" << scalars << "\n";
    std::cout << p << "epochs_run=" << ms.meta.epochs_run << "\n";
    std::cout << p << "best_epoch=" << ms.meta.best_epoch << "\n";
    std::cout << p << "best_dev_accuracy=" << fmt_double(ms.meta.best_dev_accuracy)
              << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PretRand sequence-labeling engine: two-branch transfer training, "
               "baselines and unit analysis over CoNLL corpora"};
  app.require_subcommand(1);
  int rc = 0;

  PretrainArgs pre;
  CLI::App* pretrain_cmd =
      app.add_subcommand("pretrain", "Train a base model on the source corpus");
  pretrain_cmd->add_option("--train", pre.train, "source training corpus (CoNLL)")
      ->required();
  pretrain_cmd->add_option("--dev", pre.dev,
                           "source dev corpus; held out from --train when absent");
  pretrain_cmd->add_option("--out", pre.out, "checkpoint to write")->required();
  pretrain_cmd->add_option("--metrics", pre.metrics, "write per-epoch accuracy CSV here");
  pretrain_cmd->add_option("--vectors", pre.vectors, "pretrained word vectors (text)");
  pretrain_cmd->add_option("--threads", pre.threads, "worker threads (default 1)")
      ->check(CLI::PositiveNumber);
  add_train_flags(pretrain_cmd, pre.tf);
  pretrain_cmd->callback([&] { rc = run_pretrain(pre); });

  FinetuneArgs fin;
  CLI::App* finetune_cmd =
      app.add_subcommand("finetune", "Train a target-task scheme, from scratch or "
                                     "from a pretrained checkpoint");
  finetune_cmd
      ->add_option("--scheme", fin.scheme,
                   "random-200 | random-400 | standard-finetune | ensemble-2rand | "
                   "ensemble-pretrand | pretrand")
      ->required();
  finetune_cmd->add_option("--init", fin.init, "source checkpoint (transfer schemes)");
  finetune_cmd->add_option("--train", fin.train, "target training corpus (CoNLL)")
      ->required();
  finetune_cmd->add_option("--dev", fin.dev,
                           "target dev corpus; held out from --train when absent");
  finetune_cmd->add_option("--out", fin.out, "checkpoint to write");
  finetune_cmd->add_option("--metrics", fin.metrics, "write per-epoch accuracy CSV here");
  finetune_cmd->add_option("--vectors", fin.vectors, "pretrained word vectors (text)");
  finetune_cmd->add_option("--threads", fin.threads,
                           "worker threads for ensemble members (default 1)")
      ->check(CLI::PositiveNumber);
  add_train_flags(finetune_cmd, fin.tf);
  finetune_cmd->callback([&] { rc = run_finetune(fin); });

  EvalArgs ev;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Token accuracy of a checkpoint on a corpus");
  eval_cmd->add_option("--model", ev.model, "checkpoint to evaluate")->required();
  eval_cmd->add_option("--data", ev.data, "evaluation corpus (CoNLL)")->required();
  eval_cmd->callback([&] { rc = run_eval(ev); });

  CLI::App* analyze_cmd =
      app.add_subcommand("analyze", "Unit-level analyses over trained checkpoints");
  analyze_cmd->require_subcommand(1);

  CorrelationArgs corr;
  CLI::App* corr_cmd = analyze_cmd->add_subcommand(
      "correlations", "Pearson matrix between two layers' units (CSV)");
  corr_cmd->add_option("--model-a", corr.model_a, "first checkpoint")->required();
  corr_cmd->add_option("--model-b", corr.model_b,
                       "second checkpoint (defaults to --model-a)");
  corr_cmd->add_option("--layer-a", corr.layer_a, "trunk | rand_trunk (default trunk)");
  corr_cmd->add_option("--layer-b", corr.layer_b, "trunk | rand_trunk (default trunk)");
  corr_cmd->add_option("--member-a", corr.member_a, "ensemble member of --model-a");
  corr_cmd->add_option("--member-b", corr.member_b, "ensemble member of --model-b");
  corr_cmd->add_option("--data", corr.data, "probing corpus (CoNLL)")->required();
  corr_cmd->callback([&] { rc = run_correlations(corr); });

  TopWordsArgs tw;
  CLI::App* tw_cmd = analyze_cmd->add_subcommand(
      "top-words", "Highest-activation words of one unit (CSV)");
  tw_cmd->add_option("--model", tw.model, "checkpoint")->required();
  tw_cmd->add_option("--data", tw.data, "probing corpus (CoNLL)")->required();
  tw_cmd->add_option("--layer", tw.layer, "trunk | rand_trunk (default trunk)");
  tw_cmd->add_option("--member", tw.member, "ensemble member (default 0)");
  tw_cmd->add_option("--unit", tw.unit, "unit row index")->required();
  tw_cmd->add_option("--k", tw.k, "words to keep (default 10)");
  tw_cmd->callback([&] { rc = run_top_words(tw); });

  UniqueUnitsArgs uu;
  CLI::App* uu_cmd = analyze_cmd->add_subcommand(
      "unique-units", "Random units weakly correlated with every pretrained unit");
  uu_cmd->add_option("--model", uu.model, "two-branch checkpoint")->required();
  uu_cmd->add_option("--data", uu.data, "probing corpus (CoNLL)")->required();
  uu_cmd->add_option("--member", uu.member, "ensemble member (default 0)");
  uu_cmd->add_option("--threshold", uu.threshold,
                     "max |correlation| to count as unique (default 0.4)");
  uu_cmd->callback([&] { rc = run_unique_units(uu); });

  WeightHistArgs wh;
  CLI::App* wh_cmd = analyze_cmd->add_subcommand(
      "weight-hist", "Histograms of parameter blocks over a joint range (CSV)");
  wh_cmd->add_option("--model", wh.model, "checkpoint")->required();
  wh_cmd->add_option("--blocks", wh.blocks, "comma-separated block names, e.g. "
                                            "head.W,rand_head.W")
      ->required();
  wh_cmd->add_option("--member", wh.member, "ensemble member (default 0)");
  wh_cmd->add_option("--bins", wh.bins, "bin count (default 50)");
  wh_cmd->callback([&] { rc = run_weight_hist(wh); });

  PerClassArgs pc;
  CLI::App* pc_cmd = analyze_cmd->add_subcommand(
      "per-class", "Per-class accuracy deltas between two checkpoints (CSV)");
  pc_cmd->add_option("--model-a", pc.model_a, "baseline checkpoint")->required();
  pc_cmd->add_option("--model-b", pc.model_b, "comparison checkpoint")->required();
  pc_cmd->add_option("--data", pc.data, "evaluation corpus (CoNLL)")->required();
  pc_cmd->callback([&] { rc = run_per_class(pc); });

  CurveArgs cur;
  CLI::App* curve_cmd = app.add_subcommand(
      "curve", "Dev accuracy of schemes across training-set fractions (CSV)");
  curve_cmd->add_option("--schemes", cur.schemes, "comma-separated scheme names")
      ->required();
  curve_cmd->add_option("--fractions", cur.fractions,
                        "comma-separated fractions in (0,1]")
      ->required();
  curve_cmd->add_option("--init", cur.init, "source checkpoint (transfer schemes)");
  curve_cmd->add_option("--train", cur.train, "target training corpus (CoNLL)")
      ->required();
  curve_cmd->add_option("--dev", cur.dev,
                        "target dev corpus; held out from --train when absent");
  curve_cmd->add_option("--vectors", cur.vectors, "pretrained word vectors (text)");
  curve_cmd->add_option("--threads", cur.threads,
                        "worker threads across curve points (default 1)")
      ->check(CLI::PositiveNumber);
  add_train_flags(curve_cmd, cur.tf);
  curve_cmd->callback([&] { rc = run_curve(cur); });

  CountParamsArgs cp;
  CLI::App* cp_cmd = app.add_subcommand(
      "count-params", "Exact trainable-scalar counts per component (CSV)");
  cp_cmd->add_option("--model", cp.model, "checkpoint to count");
  cp_cmd->add_option("--train", cp.train,
                     "corpus to size a fresh (untrained) model's vocabulary");
  cp_cmd->add_option("--scheme", cp.scheme,
                     "scheme shaping the fresh model (with --train)");
  add_train_flags(cp_cmd, cp.tf);
  cp_cmd->callback([&] { rc = run_count_params(cp); });

  InspectArgs ins;
  CLI::App* ins_cmd = app.add_subcommand(
      "inspect-checkpoint", "Configuration, dimensions and metadata of a checkpoint");
  ins_cmd->add_option("--model", ins.model, "checkpoint to inspect")->required();
  ins_cmd->callback([&] { rc = run_inspect(ins); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return rc;
}
