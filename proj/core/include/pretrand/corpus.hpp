#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

namespace pretrand {

// Ordered tag inventory; id = position. Built from data (sorted tag names,
// so ids do not depend on sentence order) or fixed up front.
struct TagSet {
  std::vector<std::string> names;
  std::unordered_map<std::string, std::size_t> ids;

  static TagSet from_names(std::vector<std::string> names);

  std::size_t size() const { return names.size(); }
  bool contains(const std::string& name) const { return ids.count(name) > 0; }
  std::size_t id_of(const std::string& name) const;
  const std::string& name_of(std::size_t id) const;
  bool operator==(const TagSet& o) const { return names == o.names; }
};

struct Token {
  std::string surface;
  std::size_t tag = 0;
};
using Sentence = std::vector<Token>;

// One split (train, dev or test) of a dataset: sentences of (surface, tag id)
// against a tag-set, plus provenance.
struct TaggedCorpus {
  TagSet tags;
  std::vector<Sentence> sentences;
  std::string path;
  std::size_t token_count = 0;

  bool empty() const { return sentences.empty(); }
};

// How load_conll resolves the tag inventory: discover it from the file, or
// validate every tag against a fixed set (unknown tags are errors).
struct TagsetPolicy {
  std::optional<TagSet> fixed;
  static TagsetPolicy build_from_data() { return {}; }
  static TagsetPolicy fixed_set(TagSet t) { return {std::move(t)}; }
};

// Reads `token<TAB>tag` lines with blank-line sentence separators, UTF-8,
// CRLF tolerated. Errors name the offending line number.
TaggedCorpus load_conll(const std::string& path, const TagsetPolicy& policy);

// Inverse of load_conll: load(serialize(x)) == x field-for-field (tag ids
// included, since discovered tag-sets are sorted).
void serialize_conll(const TaggedCorpus& corpus, const std::string& path);

// Train/dev/test under one shared tag-set (the sorted union over the
// provided splits). dev/test paths may be empty.
struct Dataset {
  TagSet tags;
  TaggedCorpus train, dev, test;
  bool has_dev() const { return !dev.sentences.empty(); }
  bool has_test() const { return !test.sentences.empty(); }
};

Dataset load_dataset(const std::string& train_path, const std::string& dev_path,
                     const std::string& test_path);

// Word ids over lower-cased surfaces with PAD=0 / UNK=1; char ids over raw
// (cased) codepoints with UNK=0. Lookup is total: unseen strings map to UNK.
struct Vocab {
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::size_t kCharUnk = 0;

  std::vector<std::string> words;        // id -> lower-cased form; [0]=PAD, [1]=UNK
  std::vector<std::uint32_t> chars;      // id -> codepoint; [0]=UNK sentinel
  std::unordered_map<std::string, std::size_t> word_ids;
  std::unordered_map<std::uint32_t, std::size_t> char_ids;

  std::size_t word_count() const { return words.size(); }
  std::size_t char_count() const { return chars.size(); }

  std::size_t word_id(const std::string& surface) const;
  std::size_t char_id(std::uint32_t cp) const;

  static Vocab from_lists(std::vector<std::string> words,
                          std::vector<std::uint32_t> chars);
};

// Words with frequency >= min_count (counted over lower-cased forms), sorted;
// char inventory from raw surfaces, sorted by codepoint.
Vocab build_vocab(const TaggedCorpus& corpus, std::size_t min_count = 1);

// Appends words/chars present in `corpus` but missing from `vocab`, keeping
// existing ids stable. Returns what was added, in id order, so embedding
// tables can grow matching rows.
struct VocabExtension {
  std::vector<std::string> new_words;
  std::vector<std::uint32_t> new_chars;
};
VocabExtension extend_vocab(Vocab& vocab, const TaggedCorpus& corpus);

// Pretrained word vectors, queried by lower-cased form.
struct PretrainedVectors {
  std::size_t dim = 0;
  std::unordered_map<std::string, std::vector<double>> table;

  std::size_t size() const { return table.size(); }
  const std::vector<double>* find(const std::string& word) const;
};

// Text format: `token v1 v2 ... vD` per line. Dimension mismatches are
// errors naming the line; duplicate tokens keep the last occurrence and
// warn on `warnings` if given.
PretrainedVectors load_vectors(const std::string& path, std::size_t dim,
                               std::ostream* warnings = nullptr);

}  // namespace pretrand
