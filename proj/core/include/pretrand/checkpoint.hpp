#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "pretrand/corpus.hpp"
#include "pretrand/tagger.hpp"
#include "pretrand/train_config.hpp"

namespace pretrand {

// One parameter tensor as stored on disk: row-major values under a stable
// name. Held at full precision in memory; the file stores scalars at the
// engine precision recorded in the checkpoint header.
struct NamedBlock {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;
};

struct TrainMeta {
  std::uint64_t epochs_run = 0;
  std::uint64_t best_epoch = 0;  // 0 = the initial parameters were never beaten
  double best_dev_accuracy = 0.0;
};

// One trained model, self-describing: vocabulary, tag-set, effective
// dimensions (the wide baseline's hidden differs from the config's), merge
// behaviour and every parameter block by name, plus how its training went.
struct MemberState {
  std::vector<std::string> tag_names;
  std::vector<std::string> vocab_words;
  std::vector<std::uint32_t> vocab_chars;
  ModelDims dims;
  MergeConfig merge;
  bool has_random = false;
  std::vector<NamedBlock> blocks;
  TrainMeta meta;
};

// A single binary file holding the full training configuration and one model
// (or two, for ensembles). Layout is versioned and timestamp-free, so equal
// runs serialize to equal bytes.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  int precision_bytes = 4;  // 4 = f32 engine, 8 = f64
  std::vector<std::pair<std::string, std::string>> config_kv;
  std::vector<MemberState> members;

  TrainConfig config() const;  // parsed from config_kv; Error if corrupt
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// ---- model <-> member bridges -------------------------------------------

template <typename T>
MemberState member_from_model(TaggerModel<T>& model, const TrainMeta& meta) {
  MemberState ms;
  ms.tag_names = model.tags.names;
  ms.vocab_words = model.vocab.words;
  ms.vocab_chars = model.vocab.chars;
  ms.dims = model.dims;
  ms.merge = model.merge;
  ms.has_random = model.has_random;
  ms.meta = meta;
  for (Parameter<T>* p : model.parameters()) {
    NamedBlock b;
    b.name = p->name;
    b.shape = p->value.shape;
    b.values.assign(p->value.data.begin(), p->value.data.end());
    ms.blocks.push_back(std::move(b));
  }
  return ms;
}

// Copies named blocks into an existing model. Unknown, missing and
// shape-mismatched blocks are errors naming the block.
template <typename T>
void load_blocks(const MemberState& ms, TaggerModel<T>& model) {
  std::unordered_map<std::string, Parameter<T>*> by_name;
  for (Parameter<T>* p : model.parameters()) by_name[p->name] = p;
  std::unordered_set<std::string> seen;
  for (const NamedBlock& b : ms.blocks) {
    auto it = by_name.find(b.name);
    PR_CHECK(it != by_name.end(),
             "checkpoint block '" << b.name << "' matches no model parameter");
    Parameter<T>* p = it->second;
    PR_CHECK(b.shape == p->value.shape,
             "checkpoint block '" << b.name << "' has shape " << shape_str(b.shape)
                                  << ", model expects " << shape_str(p->value.shape));
    PR_CHECK(seen.insert(b.name).second,
             "checkpoint block '" << b.name << "' appears twice");
    for (std::size_t i = 0; i < b.values.size(); ++i)
      p->value.data[i] = static_cast<T>(b.values[i]);
  }
  PR_CHECK(seen.size() == by_name.size(),
           "checkpoint is missing " << (by_name.size() - seen.size())
                                    << " parameter block(s)");
}

template <typename T>
TaggerModel<T> model_from_member(const MemberState& ms) {
  Vocab vocab = Vocab::from_lists(ms.vocab_words, ms.vocab_chars);
  TagSet tags = TagSet::from_names(ms.tag_names);
  Rng rng(0);  // init values are overwritten below
  TaggerModel<T> model = TaggerModel<T>::make_base(std::move(vocab), std::move(tags),
                                                   ms.dims, rng);
  model.merge = ms.merge;
  if (ms.has_random) model.attach_random_branch(rng);
  load_blocks(ms, model);
  return model;
}

template <typename T>
std::vector<TaggerModel<T>> models_from_checkpoint(const Checkpoint& ckpt) {
  std::vector<TaggerModel<T>> out;
  out.reserve(ckpt.members.size());
  for (const MemberState& ms : ckpt.members) out.push_back(model_from_member<T>(ms));
  return out;
}

}  // namespace pretrand
