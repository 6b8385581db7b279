// Corpus loading, vocab construction, vector files, CSV round-trips.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pretrand/corpus.hpp"
#include "pretrand/csv.hpp"
#include "pretrand/errors.hpp"
#include "pretrand/utf8.hpp"
#include "support/tmpdir.hpp"

using namespace pretrand;
using testsupport::TmpDir;
namespace fs = std::filesystem;

TEST_CASE("load_conll: two-sentence fixture") {
  TmpDir tmp;
  std::string path = tmp.file("fix.conll",
                              "the\tN\n"
                              "dog\tN\n"
                              "barks\tV\n"
                              "\n"
                              "cats\tN\n"
                              "sleep\tV\n");
  TaggedCorpus c = load_conll(path, TagsetPolicy::build_from_data());
  CHECK(c.sentences.size() == 2);
  CHECK(c.tags.size() == 2);
  CHECK(c.token_count == 5);
  CHECK(c.tags.name_of(0) == "N");  // discovered tag-sets are sorted
  CHECK(c.tags.name_of(1) == "V");
  CHECK(c.sentences[0][2].surface == "barks");
  CHECK(c.sentences[0][2].tag == 1);
}

TEST_CASE("load_conll: malformed input names the line") {
  TmpDir tmp;
  std::string three_cols = tmp.file("bad.conll", "a\tN\nb\tN\textra\n");
  try {
    load_conll(three_cols, TagsetPolicy::build_from_data());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  std::string no_tab = tmp.file("notab.conll", "a N\n");
  CHECK_THROWS_AS(load_conll(no_tab, TagsetPolicy::build_from_data()), Error);

  std::string empty = tmp.file("empty.conll", "");
  CHECK_THROWS_AS(load_conll(empty, TagsetPolicy::build_from_data()), Error);

  std::string blank_only = tmp.file("blank.conll", "\n\n\n");
  CHECK_THROWS_AS(load_conll(blank_only, TagsetPolicy::build_from_data()), Error);

  CHECK_THROWS_AS(load_conll(tmp.path.string() + "/missing.conll",
                             TagsetPolicy::build_from_data()),
                  Error);
}

TEST_CASE("load_conll: fixed tag-set validates and orders ids") {
  TmpDir tmp;
  std::string path = tmp.file("f.conll", "x\tB\ny\tA\n");
  TagSet fixed = TagSet::from_names({"Z", "A", "B"});
  TaggedCorpus c = load_conll(path, TagsetPolicy::fixed_set(fixed));
  CHECK(c.tags.size() == 3);
  CHECK(c.sentences[0][0].tag == 2);  // B under the fixed order
  CHECK(c.sentences[0][1].tag == 1);

  std::string unknown = tmp.file("u.conll", "x\tQ\n");
  CHECK_THROWS_AS(load_conll(unknown, TagsetPolicy::fixed_set(fixed)), Error);
}

TEST_CASE("load_conll: CRLF, BOM, missing trailing newline, double blanks") {
  TmpDir tmp;
  std::string path = tmp.file("crlf.conll",
                              "\xEF\xBB\xBF"
                              "a\tN\r\n"
                              "\r\n"
                              "\r\n"
                              "b\tV");
  TaggedCorpus c = load_conll(path, TagsetPolicy::build_from_data());
  CHECK(c.sentences.size() == 2);
  CHECK(c.token_count == 2);
  CHECK(c.sentences[0][0].surface == "a");
  CHECK(c.sentences[1][0].surface == "b");
}

TEST_CASE("serialize_conll round-trips field-for-field") {
  TmpDir tmp;
  std::string path = tmp.file("rt.conll",
                              "The\tD\n"
                              "dog\tN\n"
                              "\n"
                              "gonna\tV\n"
                              "\xF0\x9F\x98\x80\tX\n");  // emoji surface
  TaggedCorpus a = load_conll(path, TagsetPolicy::build_from_data());
  std::string out = (tmp.path / "out.conll").string();
  serialize_conll(a, out);
  TaggedCorpus b = load_conll(out, TagsetPolicy::build_from_data());
  REQUIRE(a.sentences.size() == b.sentences.size());
  CHECK(a.tags.names == b.tags.names);
  CHECK(a.token_count == b.token_count);
  for (std::size_t i = 0; i < a.sentences.size(); ++i) {
    REQUIRE(a.sentences[i].size() == b.sentences[i].size());
    for (std::size_t j = 0; j < a.sentences[i].size(); ++j) {
      CHECK(a.sentences[i][j].surface == b.sentences[i][j].surface);
      CHECK(a.sentences[i][j].tag == b.sentences[i][j].tag);
    }
  }
}

TEST_CASE("load_dataset shares one sorted tag-set across splits") {
  TmpDir tmp;
  std::string train = tmp.file("train.conll", "a\tN\nb\tV\n");
  std::string dev = tmp.file("dev.conll", "c\tADJ\n");
  Dataset d = load_dataset(train, dev, "");
  CHECK(d.tags.size() == 3);  // ADJ from dev included
  CHECK(d.tags.name_of(0) == "ADJ");
  CHECK(d.train.tags == d.tags);
  CHECK(d.has_dev());
  CHECK(!d.has_test());
}

TEST_CASE("build_vocab: min_count, lower-casing, cased chars") {
  TmpDir tmp;
  std::string path = tmp.file("v.conll", "a\tN\na\tN\nb\tN\n\nMan\tN\n");
  TaggedCorpus c = load_conll(path, TagsetPolicy::build_from_data());

  Vocab v1 = build_vocab(c, 1);
  // PAD, UNK + {a, b, man}
  CHECK(v1.word_count() == 5);
  CHECK(v1.word_id("a") == 2);
  CHECK(v1.word_id("Man") == v1.word_id("man"));  // lower-cased lookup
  CHECK(v1.word_id("zzz") == Vocab::kUnk);
  CHECK(v1.words[Vocab::kPad] == "<pad>");

  // Char vocab keeps case: 'M' and 'm' are distinct; UNK sentinel at 0.
  CHECK(v1.char_id('M') != Vocab::kCharUnk);
  CHECK(v1.char_id('M') != v1.char_id('m'));
  CHECK(v1.char_id(0x1F600) == Vocab::kCharUnk);  // unseen codepoint

  Vocab v2 = build_vocab(c, 2);
  CHECK(v2.word_count() == 3);  // only "a" survives
  CHECK(v2.word_id("b") == Vocab::kUnk);
}

TEST_CASE("extend_vocab appends new words and chars with stable ids") {
  TmpDir tmp;
  std::string base_path = tmp.file("b.conll", "alpha\tN\nbeta\tN\n");
  TaggedCorpus base = load_conll(base_path, TagsetPolicy::build_from_data());
  Vocab v = build_vocab(base, 1);
  std::size_t before_words = v.word_count();
  std::size_t alpha_id = v.word_id("alpha");

  std::string ext_path = tmp.file("e.conll", "Gamma\tN\nalpha\tN\n");
  TaggedCorpus ext_corpus = load_conll(ext_path, TagsetPolicy::build_from_data());
  VocabExtension ext = extend_vocab(v, ext_corpus);
  CHECK(ext.new_words == std::vector<std::string>{"gamma"});
  CHECK(v.word_count() == before_words + 1);
  CHECK(v.word_id("alpha") == alpha_id);
  CHECK(v.word_id("gamma") == before_words);
  // 'G' and 'm' are new codepoints (base corpus had none).
  CHECK(v.char_id('G') != Vocab::kCharUnk);
  CHECK(v.char_id('m') != Vocab::kCharUnk);
}

TEST_CASE("load_vectors: fixture, dimension errors, duplicates") {
  TmpDir tmp;
  std::string good = tmp.file("v.txt",
                              "alpha 1 2 3 4\n"
                              "beta 5 6 7 8\n"
                              "gamma 9 10 11 12\n");
  PretrainedVectors pv = load_vectors(good, 4);
  CHECK(pv.size() == 3);
  CHECK((*pv.find("beta"))[2] == 7.0);
  CHECK((*pv.find("BETA"))[0] == 5.0);  // case-insensitive lookup
  CHECK(pv.find("delta") == nullptr);

  std::string short_line = tmp.file("s.txt", "alpha 1 2 3 4\nbeta 5 6 7\n");
  try {
    load_vectors(short_line, 4);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  std::string dupe = tmp.file("d.txt", "a 1 2\na 3 4\n");
  std::ostringstream warnings;
  PretrainedVectors pd = load_vectors(dupe, 2, &warnings);
  CHECK(pd.size() == 1);
  CHECK((*pd.find("a"))[0] == 3.0);  // last occurrence wins
  CHECK(warnings.str().find("duplicate") != std::string::npos);

  std::string bad_num = tmp.file("n.txt", "a 1 x\n");
  CHECK_THROWS_AS(load_vectors(bad_num, 2), Error);
}

TEST_CASE("utf8 decoding: multi-byte, malformed, casing") {
  // "Mañana😀" = M a ñ(2B) a n a 😀(4B)
  std::string s = "Ma\xC3\xB1"
                  "ana\xF0\x9F\x98\x80";
  auto cps = utf8_decode(s);
  REQUIRE(cps.size() == 7);
  CHECK(cps[0] == 'M');
  CHECK(cps[2] == 0xF1);
  CHECK(cps[6] == 0x1F600);
  CHECK(utf8_encode(cps) == s);

  // Truncated 4-byte sequence: one replacement for the lead byte, one for
  // the stray continuation byte, then decoding resumes.
  auto bad = utf8_decode("a\xF0\x9F"
                         "b");
  REQUIRE(bad.size() == 4);
  CHECK(bad[0] == 'a');
  CHECK(bad[1] == 0xFFFD);
  CHECK(bad[2] == 0xFFFD);
  CHECK(bad[3] == 'b');

  CHECK(lower_ascii("MaÑ") == "maÑ");  // ASCII-only lowering
}

TEST_CASE("csv: quoting, parsing, float round-trip") {
  std::ostringstream os;
  csv_write_row(os, {"plain", "with,comma", "with\"quote", "with\nnewline"});
  std::string text = os.str();
  auto rows = csv_parse(text);
  REQUIRE(rows.size() == 1);
  REQUIRE(rows[0].size() == 4);
  CHECK(rows[0][0] == "plain");
  CHECK(rows[0][1] == "with,comma");
  CHECK(rows[0][2] == "with\"quote");
  CHECK(rows[0][3] == "with\nnewline");

  // parse(emit(x)) == x for awkward doubles.
  for (double x : {0.1, 1.0 / 3.0, 1e-17, -2.5e300, 3.141592653589793, 0.0}) {
    CHECK(parse_double(fmt_double(x)) == x);
  }
  CHECK_THROWS_AS(parse_double("12x"), Error);
  CHECK_THROWS_AS(csv_parse("\"unterminated"), Error);
}
