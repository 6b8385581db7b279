#include "pretrand/train_config.hpp"

#include <cerrno>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "pretrand/csv.hpp"
#include "pretrand/errors.hpp"

namespace pretrand {

namespace {

const std::vector<std::pair<SchemeKind, const char*>>& scheme_names() {
  static const std::vector<std::pair<SchemeKind, const char*>> table = {
      {SchemeKind::Random200, "random-200"},
      {SchemeKind::Random400, "random-400"},
      {SchemeKind::StandardFinetune, "standard-finetune"},
      {SchemeKind::Ensemble2Rand, "ensemble-2rand"},
      {SchemeKind::EnsemblePretRand, "ensemble-pretrand"},
      {SchemeKind::PretRand, "pretrand"},
  };
  return table;
}

long long parse_int_value(const std::string& key, const std::string& value,
                          long long lo, long long hi) {
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(value.c_str(), &end, 10);
  PR_USAGE_CHECK(!value.empty() && errno == 0 && end == value.c_str() + value.size(),
                 "config key '" << key << "': invalid integer '" << value << "'");
  PR_USAGE_CHECK(v >= lo && v <= hi, "config key '" << key << "': value " << v
                                                    << " out of range [" << lo
                                                    << ", " << hi << "]");
  return v;
}

std::uint64_t parse_u64_value(const std::string& key, const std::string& value) {
  PR_USAGE_CHECK(!value.empty() && value[0] != '-',
                 "config key '" << key << "': invalid unsigned integer '" << value << "'");
  errno = 0;
  char* end = nullptr;
  unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  PR_USAGE_CHECK(errno == 0 && end == value.c_str() + value.size(),
                 "config key '" << key << "': invalid unsigned integer '" << value << "'");
  return static_cast<std::uint64_t>(v);
}

double parse_double_value(const std::string& key, const std::string& value) {
  try {
    return parse_double(value);
  } catch (const Error&) {
    throw UsageError("config key '" + key + "': invalid number '" + value + "'");
  }
}

bool parse_bool_value(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw UsageError("config key '" + key + "': expected true/false, got '" + value + "'");
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

std::string trimmed(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

const char* scheme_name(SchemeKind kind) {
  for (const auto& [k, n] : scheme_names())
    if (k == kind) return n;
  throw Error("unknown scheme kind");
}

SchemeKind parse_scheme(const std::string& name) {
  for (const auto& [k, n] : scheme_names())
    if (name == n) return k;
  std::ostringstream oss;
  oss << "unknown scheme '" << name << "'; valid:";
  for (const auto& [k, n] : scheme_names()) oss << " " << n;
  throw UsageError(oss.str());
}

void TrainConfig::validate() const {
  PR_USAGE_CHECK(lr >= 0.0, "lr must be >= 0");
  PR_USAGE_CHECK(momentum >= 0.0 && momentum < 1.0, "momentum must be in [0,1)");
  PR_USAGE_CHECK(batch_sentences >= 1, "batch must be >= 1");
  PR_USAGE_CHECK(max_epochs >= 1, "max_epochs must be >= 1");
  PR_USAGE_CHECK(patience >= 1, "patience must be >= 1");
  PR_USAGE_CHECK(k >= 1, "k must be >= 1");
  PR_USAGE_CHECK(p > 0.0, "p_norm must be > 0");
  PR_USAGE_CHECK(random_pp_epochs >= 0, "random_pp_epochs must be >= 0");
  PR_USAGE_CHECK(precision == "f32" || precision == "f64",
                 "precision must be f32 or f64, got '" << precision << "'");
  PR_USAGE_CHECK(word_dim >= 1 && char_dim >= 1 && char_hidden >= 1 && hidden >= 1,
                 "model dimensions must be >= 1");
  PR_USAGE_CHECK(clip_norm >= 0.0, "clip_norm must be >= 0 (0 disables)");
  PR_USAGE_CHECK(min_count >= 1, "min_count must be >= 1");
  PR_USAGE_CHECK(dev_holdout > 0.0 && dev_holdout < 1.0,
                 "dev_holdout must be in (0,1)");
}

std::vector<std::pair<std::string, std::string>> TrainConfig::to_kv() const {
  return {
      {"scheme", scheme_name(scheme.kind)},
      {"learn_vect", bool_str(scheme.learn_vect)},
      {"random_pp", bool_str(scheme.random_pp)},
      {"l2_norm", bool_str(scheme.l2_norm)},
      {"lr", fmt_double(lr)},
      {"momentum", fmt_double(momentum)},
      {"batch", std::to_string(batch_sentences)},
      {"max_epochs", std::to_string(max_epochs)},
      {"patience", std::to_string(patience)},
      {"k", std::to_string(k)},
      {"p_norm", fmt_double(p)},
      {"random_pp_epochs", std::to_string(random_pp_epochs)},
      {"seed", std::to_string(seed)},
      {"precision", precision},
      {"word_dim", std::to_string(word_dim)},
      {"char_dim", std::to_string(char_dim)},
      {"char_hidden", std::to_string(char_hidden)},
      {"hidden", std::to_string(hidden)},
      {"clip_norm", fmt_double(clip_norm)},
      {"min_count", std::to_string(min_count)},
      {"dev_holdout", fmt_double(dev_holdout)},
      {"extend_vocab", bool_str(extend_vocab)},
      {"random_pp_train_embeddings", bool_str(random_pp_train_embeddings)},
  };
}

void TrainConfig::apply_kv(const std::string& key, const std::string& value) {
  constexpr long long kDimMax = 1 << 20;
  if (key == "scheme") scheme.kind = parse_scheme(value);
  else if (key == "learn_vect") scheme.learn_vect = parse_bool_value(key, value);
  else if (key == "random_pp") scheme.random_pp = parse_bool_value(key, value);
  else if (key == "l2_norm") scheme.l2_norm = parse_bool_value(key, value);
  else if (key == "lr") lr = parse_double_value(key, value);
  else if (key == "momentum") momentum = parse_double_value(key, value);
  else if (key == "batch") batch_sentences = (int)parse_int_value(key, value, 1, kDimMax);
  else if (key == "max_epochs") max_epochs = (int)parse_int_value(key, value, 1, kDimMax);
  else if (key == "patience") patience = (int)parse_int_value(key, value, 1, kDimMax);
  else if (key == "k") k = (int)parse_int_value(key, value, 1, kDimMax);
  else if (key == "p_norm") p = parse_double_value(key, value);
  else if (key == "random_pp_epochs") random_pp_epochs = (int)parse_int_value(key, value, 0, kDimMax);
  else if (key == "seed") seed = parse_u64_value(key, value);
  else if (key == "precision") precision = value;
  else if (key == "word_dim") word_dim = (int)parse_int_value(key, value, 1, kDimMax);
  else if (key == "char_dim") char_dim = (int)parse_int_value(key, value, 1, kDimMax);
  else if (key == "char_hidden") char_hidden = (int)parse_int_value(key, value, 1, kDimMax);
  else if (key == "hidden") hidden = (int)parse_int_value(key, value, 1, kDimMax);
  else if (key == "clip_norm") clip_norm = parse_double_value(key, value);
  else if (key == "min_count") min_count = (int)parse_int_value(key, value, 1, kDimMax);
  else if (key == "dev_holdout") dev_holdout = parse_double_value(key, value);
  else if (key == "extend_vocab") extend_vocab = parse_bool_value(key, value);
  else if (key == "random_pp_train_embeddings")
    random_pp_train_embeddings = parse_bool_value(key, value);
  else
    throw UsageError("unknown config key '" + key + "'");
}

TrainConfig TrainConfig::from_kv(
    const std::vector<std::pair<std::string, std::string>>& kv) {
  TrainConfig cfg;
  for (const auto& [key, value] : kv) cfg.apply_kv(key, value);
  return cfg;
}

void apply_config_text(TrainConfig& cfg, const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::string t = trimmed(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    PR_USAGE_CHECK(eq != std::string::npos,
                   "config line " << line_no << ": expected key=value, got '" << t << "'");
    std::string key = trimmed(t.substr(0, eq));
    std::string value = trimmed(t.substr(eq + 1));
    PR_USAGE_CHECK(!key.empty(), "config line " << line_no << ": empty key");
    try {
      cfg.apply_kv(key, value);
    } catch (const UsageError& e) {
      throw UsageError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace pretrand
