#include "pretrand/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "pretrand/errors.hpp"

namespace pretrand {

namespace {

constexpr char kMagic[8] = {'P', 'R', 'E', 'T', 'R', 'A', 'N', 'D'};
constexpr std::uint64_t kMaxElems = 1ull << 33;  // sanity cap on block sizes

void put_u8(std::string& out, std::uint8_t v) { out.push_back((char)v); }

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back((char)((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back((char)((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

void put_str(std::string& out, const std::string& s) {
  PR_CHECK(s.size() < (1ull << 32), "checkpoint string too long");
  put_u32(out, (std::uint32_t)s.size());
  out.append(s);
}

struct Cursor {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n, const char* what) {
    PR_CHECK(pos + n <= buf.size(),
             "checkpoint truncated at byte " << pos << " (reading " << what << ")");
  }
  std::uint8_t get_u8(const char* what) {
    need(1, what);
    return (std::uint8_t)buf[pos++];
  }
  std::uint32_t get_u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= (std::uint32_t)(std::uint8_t)buf[pos++] << (8 * i);
    return v;
  }
  std::uint64_t get_u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= (std::uint64_t)(std::uint8_t)buf[pos++] << (8 * i);
    return v;
  }
  double get_f64(const char* what) { return std::bit_cast<double>(get_u64(what)); }
  float get_f32(const char* what) { return std::bit_cast<float>(get_u32(what)); }
  std::string get_str(const char* what) {
    std::uint32_t n = get_u32(what);
    need(n, what);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

void put_member(std::string& out, const MemberState& ms, int precision_bytes) {
  put_u32(out, (std::uint32_t)ms.tag_names.size());
  for (const auto& t : ms.tag_names) put_str(out, t);
  put_u32(out, (std::uint32_t)ms.vocab_words.size());
  for (const auto& w : ms.vocab_words) put_str(out, w);
  put_u32(out, (std::uint32_t)ms.vocab_chars.size());
  for (std::uint32_t c : ms.vocab_chars) put_u32(out, c);

  put_u64(out, ms.dims.word_dim);
  put_u64(out, ms.dims.char_dim);
  put_u64(out, ms.dims.char_hidden);
  put_u64(out, ms.dims.hidden);
  put_u64(out, ms.dims.k);
  put_u8(out, ms.merge.use_norm ? 1 : 0);
  put_f64(out, ms.merge.p);
  put_u8(out, ms.merge.use_vectors ? 1 : 0);
  put_u8(out, ms.has_random ? 1 : 0);

  put_u32(out, (std::uint32_t)ms.blocks.size());
  for (const NamedBlock& b : ms.blocks) {
    put_str(out, b.name);
    put_u32(out, (std::uint32_t)b.shape.size());
    std::size_t numel = 1;
    for (std::size_t d : b.shape) {
      put_u64(out, d);
      numel *= d;
    }
    PR_CHECK(numel == b.values.size(), "block '" << b.name << "' shape/value mismatch");
    if (precision_bytes == 4)
      for (double v : b.values) put_f32(out, (float)v);
    else
      for (double v : b.values) put_f64(out, v);
  }

  put_u64(out, ms.meta.epochs_run);
  put_u64(out, ms.meta.best_epoch);
  put_f64(out, ms.meta.best_dev_accuracy);
}

MemberState get_member(Cursor& c, int precision_bytes) {
  MemberState ms;
  std::uint32_t ntags = c.get_u32("tag count");
  for (std::uint32_t i = 0; i < ntags; ++i) ms.tag_names.push_back(c.get_str("tag name"));
  std::uint32_t nwords = c.get_u32("word count");
  for (std::uint32_t i = 0; i < nwords; ++i) ms.vocab_words.push_back(c.get_str("word"));
  std::uint32_t nchars = c.get_u32("char count");
  for (std::uint32_t i = 0; i < nchars; ++i) ms.vocab_chars.push_back(c.get_u32("char"));

  ms.dims.word_dim = c.get_u64("word_dim");
  ms.dims.char_dim = c.get_u64("char_dim");
  ms.dims.char_hidden = c.get_u64("char_hidden");
  ms.dims.hidden = c.get_u64("hidden");
  ms.dims.k = c.get_u64("k");
  ms.merge.use_norm = c.get_u8("use_norm") != 0;
  ms.merge.p = c.get_f64("p_norm");
  ms.merge.use_vectors = c.get_u8("use_vectors") != 0;
  ms.has_random = c.get_u8("has_random") != 0;

  std::uint32_t nblocks = c.get_u32("block count");
  for (std::uint32_t i = 0; i < nblocks; ++i) {
    NamedBlock b;
    b.name = c.get_str("block name");
    std::uint32_t ndim = c.get_u32("block rank");
    PR_CHECK(ndim <= 8, "block '" << b.name << "' has implausible rank " << ndim);
    std::uint64_t numel = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      std::uint64_t dim = c.get_u64("block dim");
      PR_CHECK(dim > 0 && numel <= kMaxElems / std::max<std::uint64_t>(dim, 1),
               "block '" << b.name << "' has implausible shape");
      b.shape.push_back((std::size_t)dim);
      numel *= dim;
    }
    b.values.reserve(numel);
    if (precision_bytes == 4)
      for (std::uint64_t v = 0; v < numel; ++v)
        b.values.push_back((double)c.get_f32("block values"));
    else
      for (std::uint64_t v = 0; v < numel; ++v)
        b.values.push_back(c.get_f64("block values"));
    ms.blocks.push_back(std::move(b));
  }

  ms.meta.epochs_run = c.get_u64("epochs_run");
  ms.meta.best_epoch = c.get_u64("best_epoch");
  ms.meta.best_dev_accuracy = c.get_f64("best_dev_accuracy");
  return ms;
}

}  // namespace

TrainConfig Checkpoint::config() const {
  try {
    return TrainConfig::from_kv(config_kv);
  } catch (const UsageError& e) {
    throw Error(std::string("checkpoint config is corrupt: ") + e.what());
  }
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  PR_CHECK(ckpt.precision_bytes == 4 || ckpt.precision_bytes == 8,
           "checkpoint precision must be 4 or 8 bytes");
  PR_CHECK(ckpt.members.size() == 1 || ckpt.members.size() == 2,
           "checkpoint must hold 1 or 2 members, has " << ckpt.members.size());
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  std::string body;
  put_u32(body, Checkpoint::kVersion);
  put_u8(body, (std::uint8_t)ckpt.precision_bytes);
  put_u32(body, (std::uint32_t)ckpt.config_kv.size());
  for (const auto& [k, v] : ckpt.config_kv) {
    put_str(body, k);
    put_str(body, v);
  }
  put_u8(body, (std::uint8_t)ckpt.members.size());
  for (const MemberState& ms : ckpt.members) put_member(body, ms, ckpt.precision_bytes);
  out += body;
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  PR_CHECK(bytes.size() >= sizeof(kMagic) &&
               std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) == 0,
           "bad magic: not a recognised checkpoint (or an unsupported version)");
  Cursor c{bytes, sizeof(kMagic)};
  std::uint32_t version = c.get_u32("version");
  PR_CHECK(version == Checkpoint::kVersion,
           "unsupported checkpoint version " << version << " (expected "
                                             << Checkpoint::kVersion << ")");
  Checkpoint ckpt;
  ckpt.precision_bytes = c.get_u8("precision");
  PR_CHECK(ckpt.precision_bytes == 4 || ckpt.precision_bytes == 8,
           "corrupt checkpoint: precision byte is " << ckpt.precision_bytes);
  std::uint32_t nkv = c.get_u32("config entry count");
  for (std::uint32_t i = 0; i < nkv; ++i) {
    std::string k = c.get_str("config key");
    std::string v = c.get_str("config value");
    ckpt.config_kv.emplace_back(std::move(k), std::move(v));
  }
  std::uint8_t nmembers = c.get_u8("member count");
  PR_CHECK(nmembers == 1 || nmembers == 2,
           "corrupt checkpoint: member count is " << (int)nmembers);
  for (std::uint8_t m = 0; m < nmembers; ++m)
    ckpt.members.push_back(get_member(c, ckpt.precision_bytes));
  PR_CHECK(c.pos == bytes.size(),
           "checkpoint has " << bytes.size() - c.pos << " trailing byte(s)");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  PR_CHECK(os.good(), "cannot open '" << path << "' for writing");
  os.write(bytes.data(), (std::streamsize)bytes.size());
  os.flush();
  PR_CHECK(os.good(), "failed writing checkpoint to '" << path << "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  PR_CHECK(is.good(), "cannot open checkpoint '" << path << "'");
  std::string bytes((std::istreambuf_iterator<char>(is)),
                    std::istreambuf_iterator<char>());
  PR_CHECK(!is.bad(), "failed reading checkpoint '" << path << "'");
  try {
    return deserialize_checkpoint(bytes);
  } catch (const Error& e) {
    throw Error("'" + path + "': " + e.what());
  }
}

}  // namespace pretrand
