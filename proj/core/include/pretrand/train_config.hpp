#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace pretrand {

// The six training schemes of the comparison harness. The wide random
// baseline uses hidden+k units per direction so its trunk capacity matches
// the merged two-branch model.
enum class SchemeKind {
  Random200,         // fresh model, `hidden` units per direction
  Random400,         // fresh model, `hidden + k` units per direction
  StandardFinetune,  // pre-trained encoder + trunk, fresh head, joint training
  Ensemble2Rand,     // two fresh models, averaged probabilities
  EnsemblePretRand,  // one fine-tuned pre-trained model + one fresh, averaged
  PretRand,          // pre-trained branch + random branch, normalized merge
};

const char* scheme_name(SchemeKind kind);
SchemeKind parse_scheme(const std::string& name);  // UsageError on unknown

inline bool scheme_needs_init(SchemeKind k) {
  return k == SchemeKind::StandardFinetune || k == SchemeKind::PretRand ||
         k == SchemeKind::EnsemblePretRand;
}
inline bool scheme_is_ensemble(SchemeKind k) {
  return k == SchemeKind::Ensemble2Rand || k == SchemeKind::EnsemblePretRand;
}

// Ablation toggles; meaningful for PretRand only. The ablation grid is the
// successive rows {learn_vect off} -> {+ random_pp off} -> {+ l2_norm off}.
struct Scheme {
  SchemeKind kind = SchemeKind::PretRand;
  bool learn_vect = true;  // learned per-class merge scales
  bool random_pp = true;   // random-branch warm-up phase before joint training
  bool l2_norm = true;     // per-branch normalization before merging
};

// Every knob a training run depends on. All fields round-trip through
// key=value pairs (config files and checkpoints share the format), so a
// checkpoint always records the exact configuration that produced it.
struct TrainConfig {
  Scheme scheme;

  double lr = 0.015;
  double momentum = 0.9;
  int batch_sentences = 8;
  int max_epochs = 100;
  int patience = 10;
  int k = 200;     // random-branch width per direction
  double p = 2.0;  // norm order for the branch merge
  int random_pp_epochs = 5;
  std::uint64_t seed = 1;
  std::string precision = "f32";  // "f32" | "f64"

  // architecture
  int word_dim = 300;
  int char_dim = 50;
  int char_hidden = 100;  // per direction
  int hidden = 200;       // main trunk, per direction

  // optimisation / data handling
  double clip_norm = 5.0;    // global-norm gradient threshold; 0 disables
  int min_count = 1;         // vocabulary frequency threshold
  double dev_holdout = 0.1;  // train fraction carved off when a dev split is missing
  bool extend_vocab = true;  // grow the vocabulary with target words at finetune
  bool random_pp_train_embeddings = false;  // keep embeddings trainable in warm-up

  void validate() const;  // UsageError on out-of-range values

  // apply(to_kv()) reproduces the config exactly; unknown keys are errors.
  std::vector<std::pair<std::string, std::string>> to_kv() const;
  void apply_kv(const std::string& key, const std::string& value);
  static TrainConfig from_kv(
      const std::vector<std::pair<std::string, std::string>>& kv);
};

// Applies `key=value` lines on top of cfg. Blank lines and `#` comments are
// allowed; whitespace around keys and values is trimmed. Errors carry the
// 1-based line number.
void apply_config_text(TrainConfig& cfg, const std::string& text);

}  // namespace pretrand
