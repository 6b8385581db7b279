#include "pretrand/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "pretrand/errors.hpp"
#include "pretrand/utf8.hpp"

namespace pretrand {

TagSet TagSet::from_names(std::vector<std::string> names) {
  TagSet t;
  t.names = std::move(names);
  for (std::size_t i = 0; i < t.names.size(); ++i) {
    PR_CHECK(t.ids.emplace(t.names[i], i).second,
             "duplicate tag name '" << t.names[i] << "'");
  }
  return t;
}

std::size_t TagSet::id_of(const std::string& name) const {
  auto it = ids.find(name);
  PR_CHECK(it != ids.end(), "unknown tag '" << name << "'");
  return it->second;
}

const std::string& TagSet::name_of(std::size_t id) const {
  PR_CHECK(id < names.size(), "tag id " << id << " out of range (C=" << names.size() << ")");
  return names[id];
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  PR_CHECK(in, "cannot open '" << path << "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  // Tolerate a UTF-8 BOM.
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    text.erase(0, 3);
  }
  return text;
}

struct RawSentence {
  std::vector<std::pair<std::string, std::string>> items;  // (surface, tag name)
};

std::vector<RawSentence> parse_conll_text(const std::string& text,
                                          const std::string& path) {
  std::vector<RawSentence> sentences;
  RawSentence current;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto flush = [&] {
    if (!current.items.empty()) {
      sentences.push_back(std::move(current));
      current = RawSentence{};
    }
  };
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    bool last = nl == std::string::npos;
    std::string line = text.substr(pos, last ? std::string::npos : nl - pos);
    pos = last ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      if (last) break;
      continue;
    }
    std::size_t tabs = static_cast<std::size_t>(
        std::count(line.begin(), line.end(), '\t'));
    PR_CHECK(tabs == 1, "'" << path << "' line " << line_no << ": expected 2"
             << " tab-separated columns, got " << (tabs + 1));
    std::size_t tab = line.find('\t');
    std::string surface = line.substr(0, tab);
    std::string tag = line.substr(tab + 1);
    PR_CHECK(!surface.empty(), "'" << path << "' line " << line_no << ": empty token");
    PR_CHECK(!tag.empty(), "'" << path << "' line " << line_no << ": empty tag");
    current.items.emplace_back(std::move(surface), std::move(tag));
    if (last) break;
  }
  flush();
  return sentences;
}

TaggedCorpus assemble(std::vector<RawSentence> raw, const TagsetPolicy& policy,
                      const std::string& path) {
  PR_CHECK(!raw.empty(), "'" << path << "': no sentences found");
  TaggedCorpus corpus;
  if (policy.fixed) {
    corpus.tags = *policy.fixed;
  } else {
    std::set<std::string> seen;
    for (const auto& s : raw)
      for (const auto& [surface, tag] : s.items) seen.insert(tag);
    corpus.tags = TagSet::from_names({seen.begin(), seen.end()});
  }
  for (auto& s : raw) {
    Sentence out;
    out.reserve(s.items.size());
    for (auto& [surface, tag] : s.items) {
      auto it = corpus.tags.ids.find(tag);
      PR_CHECK(it != corpus.tags.ids.end(),
               "'" << path << "': tag '" << tag << "' not in the fixed tag-set");
      out.push_back(Token{std::move(surface), it->second});
    }
    corpus.token_count += out.size();
    corpus.sentences.push_back(std::move(out));
  }
  corpus.path = path;
  return corpus;
}

}  // namespace

TaggedCorpus load_conll(const std::string& path, const TagsetPolicy& policy) {
  return assemble(parse_conll_text(read_file(path), path), policy, path);
}

void serialize_conll(const TaggedCorpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  PR_CHECK(out, "cannot write '" << path << "'");
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    if (i) out << '\n';
    for (const Token& t : corpus.sentences[i]) {
      out << t.surface << '\t' << corpus.tags.name_of(t.tag) << '\n';
    }
  }
  PR_CHECK(out.good(), "write failed for '" << path << "'");
}

Dataset load_dataset(const std::string& train_path, const std::string& dev_path,
                     const std::string& test_path) {
  auto train_raw = parse_conll_text(read_file(train_path), train_path);
  std::vector<RawSentence> dev_raw, test_raw;
  if (!dev_path.empty()) dev_raw = parse_conll_text(read_file(dev_path), dev_path);
  if (!test_path.empty()) test_raw = parse_conll_text(read_file(test_path), test_path);

  std::set<std::string> seen;
  for (const auto* split : {&train_raw, &dev_raw, &test_raw})
    for (const auto& s : *split)
      for (const auto& [surface, tag] : s.items) seen.insert(tag);

  Dataset d;
  d.tags = TagSet::from_names({seen.begin(), seen.end()});
  TagsetPolicy policy = TagsetPolicy::fixed_set(d.tags);
  d.train = assemble(std::move(train_raw), policy, train_path);
  if (!dev_path.empty()) d.dev = assemble(std::move(dev_raw), policy, dev_path);
  if (!test_path.empty()) d.test = assemble(std::move(test_raw), policy, test_path);
  return d;
}

std::size_t Vocab::word_id(const std::string& surface) const {
  auto it = word_ids.find(lower_ascii(surface));
  return it == word_ids.end() ? kUnk : it->second;
}

std::size_t Vocab::char_id(std::uint32_t cp) const {
  auto it = char_ids.find(cp);
  return it == char_ids.end() ? kCharUnk : it->second;
}

Vocab Vocab::from_lists(std::vector<std::string> words,
                        std::vector<std::uint32_t> chars) {
  Vocab v;
  PR_CHECK(words.size() >= 2, "word list must include PAD and UNK");
  PR_CHECK(!chars.empty(), "char list must include the UNK sentinel");
  v.words = std::move(words);
  v.chars = std::move(chars);
  for (std::size_t i = 2; i < v.words.size(); ++i) {
    PR_CHECK(v.word_ids.emplace(v.words[i], i).second,
             "duplicate vocab word '" << v.words[i] << "'");
  }
  for (std::size_t i = 1; i < v.chars.size(); ++i) {
    PR_CHECK(v.char_ids.emplace(v.chars[i], i).second,
             "duplicate vocab codepoint " << v.chars[i]);
  }
  return v;
}

Vocab build_vocab(const TaggedCorpus& corpus, std::size_t min_count) {
  PR_CHECK(!corpus.empty(), "build_vocab on an empty corpus");
  std::map<std::string, std::size_t> freq;  // ordered => sorted vocab
  std::set<std::uint32_t> cps;
  for (const Sentence& s : corpus.sentences) {
    for (const Token& t : s) {
      ++freq[lower_ascii(t.surface)];
      for (std::uint32_t cp : utf8_decode(t.surface)) cps.insert(cp);
    }
  }
  std::vector<std::string> words{"<pad>", "<unk>"};
  for (const auto& [w, n] : freq) {
    if (n >= min_count) words.push_back(w);
  }
  std::vector<std::uint32_t> chars{0xFFFFFFFFu};  // UNK sentinel, not a codepoint
  chars.insert(chars.end(), cps.begin(), cps.end());
  return Vocab::from_lists(std::move(words), std::move(chars));
}

VocabExtension extend_vocab(Vocab& vocab, const TaggedCorpus& corpus) {
  std::set<std::string> new_words;
  std::set<std::uint32_t> new_chars;
  for (const Sentence& s : corpus.sentences) {
    for (const Token& t : s) {
      std::string lower = lower_ascii(t.surface);
      if (!vocab.word_ids.count(lower)) new_words.insert(std::move(lower));
      for (std::uint32_t cp : utf8_decode(t.surface)) {
        if (!vocab.char_ids.count(cp)) new_chars.insert(cp);
      }
    }
  }
  VocabExtension ext;
  for (const std::string& w : new_words) {
    vocab.word_ids.emplace(w, vocab.words.size());
    vocab.words.push_back(w);
    ext.new_words.push_back(w);
  }
  for (std::uint32_t cp : new_chars) {
    vocab.char_ids.emplace(cp, vocab.chars.size());
    vocab.chars.push_back(cp);
    ext.new_chars.push_back(cp);
  }
  return ext;
}

const std::vector<double>* PretrainedVectors::find(const std::string& word) const {
  auto it = table.find(lower_ascii(word));
  return it == table.end() ? nullptr : &it->second;
}

PretrainedVectors load_vectors(const std::string& path, std::size_t dim,
                               std::ostream* warnings) {
  PR_CHECK(dim > 0, "vector dimension must be positive");
  std::ifstream in(path, std::ios::binary);
  PR_CHECK(in, "cannot open '" << path << "'");
  PretrainedVectors pv;
  pv.dim = dim;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    std::vector<double> vec;
    vec.reserve(dim);
    double v;
    while (ss >> v) vec.push_back(v);
    PR_CHECK(ss.eof(), "'" << path << "' line " << line_no
             << ": non-numeric vector component");
    PR_CHECK(vec.size() == dim, "'" << path << "' line " << line_no
             << ": expected " << dim << " components, got " << vec.size());
    std::string key = lower_ascii(token);
    auto it = pv.table.find(key);
    if (it != pv.table.end()) {
      if (warnings) {
        *warnings << "warning: duplicate vector entry '" << key << "' at "
                  << path << ":" << line_no << "; keeping the later one\n";
      }
      it->second = std::move(vec);
    } else {
      pv.table.emplace(std::move(key), std::move(vec));
    }
  }
  return pv;
}

}  // namespace pretrand
