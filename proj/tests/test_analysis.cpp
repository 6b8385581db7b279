// Unit-analysis ops: activation probes, correlations, histograms, deltas.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "pretrand/analysis.hpp"
#include "pretrand/corpus.hpp"
#include "pretrand/csv.hpp"
#include "pretrand/errors.hpp"

using namespace pretrand;

namespace {

using Model = TaggerModel<float>;

// Hand-rolled activations for the statistics tests; surfaces default to
// distinct placeholders so top-word aggregation stays out of the way.
ActivationMatrix make_matrix(std::vector<std::vector<double>> rows,
                             std::vector<std::string> surfaces = {}) {
  ActivationMatrix am;
  am.layer = "trunk";
  am.units = rows.size();
  am.columns = rows.empty() ? 0 : rows[0].size();
  for (const auto& r : rows) {
    REQUIRE(r.size() == am.columns);
    am.data.insert(am.data.end(), r.begin(), r.end());
  }
  if (surfaces.empty())
    for (std::size_t c = 0; c < am.columns; ++c) surfaces.push_back("w" + std::to_string(c));
  am.surfaces = std::move(surfaces);
  return am;
}

std::vector<Sentence> probe_split() {
  Sentence s1{{"ab", 0}, {"ba", 1}};
  Sentence s2{{"ca", 2}, {"ab", 0}, {"cc", 2}};
  return {s1, s2};
}

Model probe_model(bool with_random) {
  TagSet tags = TagSet::from_names({"A", "B", "C"});
  TaggedCorpus corpus = make_corpus(tags, probe_split());
  Vocab vocab = build_vocab(corpus);
  Rng rng(11);
  Model m = Model::make_base(vocab, tags, {4, 3, 3, 2, 3}, rng);
  if (with_random) m.attach_random_branch(rng);
  return m;
}

EvalClass cls(std::string tag, std::size_t gold, std::size_t correct) {
  return {std::move(tag), gold, correct};
}

// Assemble a consistent EvalResult from per-class counts.
EvalResult eval_from(std::vector<EvalClass> classes) {
  EvalResult r;
  for (const EvalClass& c : classes) {
    r.total += c.gold;
    r.correct += c.correct;
  }
  r.accuracy = r.total ? (double)r.correct / (double)r.total : 0.0;
  r.per_class = std::move(classes);
  return r;
}

}  // namespace

TEST_CASE("record_activations: shape, values from the forward pass, determinism") {
  Model m = probe_model(false);
  std::vector<Sentence> split = probe_split();

  ActivationMatrix am = record_activations(m, split, "trunk", "probe");
  CHECK(am.layer == "trunk");
  CHECK(am.source_id == "probe");
  CHECK(am.units == 4);  // 2 directions x hidden 2
  CHECK(am.columns == 5);
  REQUIRE(am.data.size() == 20);
  REQUIRE(am.surfaces == std::vector<std::string>{"ab", "ba", "ca", "ab", "cc"});

  // Columns must be the extractor states the model itself produces.
  std::size_t col = 0;
  for (const Sentence& s : split) {
    Tape<float> tape;
    tape.set_grad_enabled(false);
    ForwardTrace trace = m.forward(tape, s);
    for (std::size_t i = 0; i < s.size(); ++i, ++col) {
      const Tensor<float>& v = tape.val(trace.trunk_states[i]);
      for (std::size_t u = 0; u < am.units; ++u)
        CHECK(am.at(u, col) == (double)v.at(u));
    }
  }

  ActivationMatrix again = record_activations(m, split, "trunk", "probe");
  CHECK(again.data == am.data);

  CHECK_THROWS_WITH_AS(record_activations(m, split, "logits"),
                       doctest::Contains("unknown layer"), Error);
  CHECK_THROWS_WITH_AS(record_activations(m, split, "rand_trunk"),
                       doctest::Contains("no random branch"), Error);
}

TEST_CASE("record_activations: random branch rows") {
  Model m = probe_model(true);
  std::vector<Sentence> split = probe_split();
  ActivationMatrix am = record_activations(m, split, "rand_trunk");
  CHECK(am.units == 6);  // 2 x k(3)
  CHECK(am.columns == 5);

  Tape<float> tape;
  tape.set_grad_enabled(false);
  ForwardTrace trace = m.forward(tape, split[0]);
  const Tensor<float>& v0 = tape.val(trace.rand_states[0]);
  for (std::size_t u = 0; u < am.units; ++u) CHECK(am.at(u, 0) == (double)v0.at(u));
}

TEST_CASE("pearson_matrix: hand values, affine invariance, degeneracy") {
  // [DERIVED] x=[1,2,3,4], y=[1,3,2,4]: centered dot 4, norms sqrt(5) -> 0.8.
  ActivationMatrix x = make_matrix({{1, 2, 3, 4}});
  ActivationMatrix y = make_matrix({{1, 3, 2, 4}});
  CorrelationMatrix m = pearson_matrix(x, y);
  REQUIRE(m.rows == 1);
  REQUIRE(m.cols == 1);
  CHECK(m.at(0, 0) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK_FALSE(m.any_degenerate);

  SUBCASE("exact scaling gives 1, negation gives -1") {
    ActivationMatrix doubled = make_matrix({{2, 4, 6, 8}});
    CHECK(pearson_matrix(x, doubled).at(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    ActivationMatrix neg = make_matrix({{4, 3, 2, 1}});
    CHECK(pearson_matrix(x, neg).at(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
  }

  SUBCASE("affine transforms leave the coefficient alone") {
    ActivationMatrix raw = make_matrix({{0.3, -1.7, 2.2, 0.05, -0.9}});
    ActivationMatrix shifted = make_matrix({{0.3 * 2.5 - 7, -1.7 * 2.5 - 7, 2.2 * 2.5 - 7,
                                             0.05 * 2.5 - 7, -0.9 * 2.5 - 7}});
    CHECK(pearson_matrix(raw, shifted).at(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
  }

  SUBCASE("self-correlation: unit diagonal, symmetric, clamped") {
    ActivationMatrix a =
        make_matrix({{1, 2, 3, 4}, {0.5, -0.5, 1.5, 2.0}, {-3, 1, 0, 2}});
    CorrelationMatrix s = pearson_matrix(a, a);
    REQUIRE(s.rows == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(s.at(i, i) == doctest::Approx(1.0).epsilon(1e-9));
      for (std::size_t j = 0; j < 3; ++j) {
        CHECK(s.at(i, j) == doctest::Approx(s.at(j, i)).epsilon(1e-12));
        CHECK(std::fabs(s.at(i, j)) <= 1.0);
      }
    }
  }

  SUBCASE("constant rows: coefficient 0 plus a flag, never NaN") {
    ActivationMatrix flat = make_matrix({{2, 2, 2, 2}, {1, 2, 3, 4}});
    CorrelationMatrix s = pearson_matrix(flat, x);
    CHECK(s.at(0, 0) == 0.0);
    CHECK(s.at(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.any_degenerate);
    REQUIRE(s.degenerate_row.size() == 2);
    CHECK(s.degenerate_row[0] == 1);
    CHECK(s.degenerate_row[1] == 0);
    CHECK(s.degenerate_col[0] == 0);

    CorrelationMatrix t = pearson_matrix(x, flat);
    CHECK(t.at(0, 0) == 0.0);
    CHECK(t.degenerate_col[0] == 1);
  }

  SUBCASE("column mismatch is an error") {
    ActivationMatrix three = make_matrix({{1, 2, 3}});
    CHECK_THROWS_WITH_AS(pearson_matrix(x, three), doctest::Contains("column mismatch"),
                         Error);
  }
}

TEST_CASE("top_k_words: max aggregation, ordering, ties") {
  ActivationMatrix am = make_matrix({{0.1, 0.9, 0.5}}, {"a", "b", "c"});

  SUBCASE("k truncates after sorting") {
    auto top = top_k_words(am, 0, 2);
    REQUIRE(top.size() == 2);
    CHECK(top[0].surface == "b");
    CHECK(top[0].activation == 0.9);
    CHECK(top[1].surface == "c");
    CHECK(top[1].activation == 0.5);
  }

  SUBCASE("k beyond the distinct surfaces returns them all") {
    auto top = top_k_words(am, 0, 10);
    REQUIRE(top.size() == 3);
    CHECK(top[2].surface == "a");
  }

  SUBCASE("repeated surface keeps its maximum activation") {
    ActivationMatrix rep = make_matrix({{0.7, 0.2, 0.9}}, {"na", "gon", "na"});
    auto top = top_k_words(rep, 0, 10);
    REQUIRE(top.size() == 2);
    CHECK(top[0].surface == "na");
    CHECK(top[0].activation == 0.9);
    CHECK(top[1].surface == "gon");
  }

  SUBCASE("equal activations keep first-occurrence order") {
    ActivationMatrix tie = make_matrix({{0.5, 0.5, 0.1}}, {"x", "y", "z"});
    auto top = top_k_words(tie, 0, 2);
    CHECK(top[0].surface == "x");
    CHECK(top[1].surface == "y");
  }

  SUBCASE("unit index is validated") {
    CHECK_THROWS_WITH_AS(top_k_words(am, 1, 2), doctest::Contains("out of range"), Error);
  }
}

TEST_CASE("unique_units: strongest cross-correlation under the threshold") {
  // p0 centered is [-1.5,-.5,.5,1.5]; r1=[1,-1,-1,1] is orthogonal to it and
  // to p1 (p0 reversed), so r1 correlates 0 with both pre-trained rows while
  // r0 duplicates p0 exactly.
  ActivationMatrix pre = make_matrix({{1, 2, 3, 4}, {4, 3, 2, 1}});
  ActivationMatrix rand_units = make_matrix({{1, 2, 3, 4}, {1, -1, -1, 1}});

  UniqueUnitsReport rep = unique_units(rand_units, pre, 0.4);
  CHECK(rep.total == 2);
  REQUIRE(rep.units.size() == 1);
  CHECK(rep.units[0] == 1);
  CHECK(rep.fraction == doctest::Approx(0.5));

  SUBCASE("threshold comparison is strict") {
    // [DERIVED] corr([1,2,3,4],[1,3,2,4]) = 0.8: below 0.81, not below 0.79.
    ActivationMatrix one = make_matrix({{1, 3, 2, 4}});
    ActivationMatrix base = make_matrix({{1, 2, 3, 4}});
    CHECK(unique_units(one, base, 0.81).units.size() == 1);
    CHECK(unique_units(one, base, 0.79).units.empty());
  }

  SUBCASE("sign is ignored: strong anticorrelation is not unique") {
    ActivationMatrix anti = make_matrix({{4, 3, 2, 1}});
    ActivationMatrix base = make_matrix({{1, 2, 3, 4}});
    CHECK(unique_units(anti, base, 0.4).units.empty());
  }
}

TEST_CASE("weight_distribution: joint range, exact bin counts") {
  MemberState member;
  member.blocks.push_back({"head.W", {2, 2}, {0.0, 1.0, 0.5, 0.25}});
  member.blocks.push_back({"rand_head.W", {1, 1}, {0.25}});

  SUBCASE("two blocks share the joint [lo,hi]") {
    auto hists = weight_distribution(member, {"head.W", "rand_head.W"}, 4);
    REQUIRE(hists.size() == 2);
    for (const Histogram& h : hists) {
      CHECK(h.lo == 0.0);
      CHECK(h.hi == 1.0);
      REQUIRE(h.counts.size() == 4);
    }
    // head.W: 0 -> bin0, 0.25 -> bin1, 0.5 -> bin2, 1.0 clamps into bin3.
    CHECK(hists[0].counts == std::vector<std::size_t>{1, 1, 1, 1});
    CHECK(hists[1].counts == std::vector<std::size_t>{0, 1, 0, 0});
    std::size_t total = 0;
    for (std::size_t c : hists[0].counts) total += c;
    CHECK(total == member.blocks[0].values.size());
  }

  SUBCASE("constant block: lo == hi puts everything in bin 0") {
    MemberState flat;
    flat.blocks.push_back({"head.b", {3}, {0.5, 0.5, 0.5}});
    auto hists = weight_distribution(flat, {"head.b"}, 50);
    CHECK(hists[0].lo == 0.5);
    CHECK(hists[0].hi == 0.5);
    CHECK(hists[0].counts[0] == 3);
    for (std::size_t b = 1; b < 50; ++b) CHECK(hists[0].counts[b] == 0);
  }

  SUBCASE("unknown block is an error naming it") {
    CHECK_THROWS_WITH_AS(weight_distribution(member, {"zap"}, 4),
                         doctest::Contains("unknown block 'zap'"), Error);
  }
}

TEST_CASE("per_class_delta: ranking, exclusions, weighted identity") {
  EvalResult a = eval_from({cls("A", 10, 5), cls("B", 4, 2), cls("C", 0, 0), cls("D", 6, 6)});
  EvalResult b = eval_from({cls("A", 10, 5), cls("B", 4, 4), cls("C", 0, 0), cls("D", 6, 3)});

  PerClassDelta pcd = per_class_delta(a, b);
  REQUIRE(pcd.deltas.size() == 3);
  CHECK(pcd.deltas[0].tag == "B");
  CHECK(pcd.deltas[0].delta == doctest::Approx(0.5));
  CHECK(pcd.deltas[1].tag == "A");
  CHECK(pcd.deltas[1].delta == doctest::Approx(0.0));
  CHECK(pcd.deltas[2].tag == "D");
  CHECK(pcd.deltas[2].delta == doctest::Approx(-0.5));
  REQUIRE(pcd.excluded.size() == 1);
  CHECK(pcd.excluded[0] == "C");

  SUBCASE("identical evaluations give all-zero deltas") {
    PerClassDelta same = per_class_delta(a, a);
    for (const ClassDelta& d : same.deltas) CHECK(d.delta == 0.0);
  }

  SUBCASE("[DERIVED] frequency-weighted mean of deltas is the accuracy delta") {
    double weighted = 0.0;
    for (const ClassDelta& d : pcd.deltas)
      for (const EvalClass& c : a.per_class)
        if (c.tag == d.tag) weighted += (double)c.gold * d.delta;
    weighted /= (double)a.total;
    CHECK(weighted == doctest::Approx(b.accuracy - a.accuracy).epsilon(1e-12));
  }

  SUBCASE("tag-set mismatch is an error") {
    EvalResult other = eval_from({cls("A", 1, 1), cls("X", 1, 1), cls("C", 0, 0), cls("D", 1, 1)});
    CHECK_THROWS_WITH_AS(per_class_delta(a, other), doctest::Contains("tag-set mismatch"),
                         Error);
    EvalResult fewer = eval_from({cls("A", 1, 1)});
    CHECK_THROWS_WITH_AS(per_class_delta(a, fewer), doctest::Contains("tag-set mismatch"),
                         Error);
  }
}

TEST_CASE("diagonal_dominance: strict row-wise comparison") {
  CorrelationMatrix ident;
  ident.rows = ident.cols = 3;
  ident.data = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  DiagonalDominance d = diagonal_dominance(ident);
  CHECK(d.dominant == 3);
  CHECK(d.total == 3);
  CHECK(d.fraction == 1.0);

  SUBCASE("a tie in the row breaks dominance") {
    CorrelationMatrix tie;
    tie.rows = tie.cols = 2;
    tie.data = {0.9, 0.9, 0.1, 0.8};
    DiagonalDominance t = diagonal_dominance(tie);
    CHECK(t.dominant == 1);  // row 1 only
    CHECK(t.fraction == doctest::Approx(0.5));
  }

  SUBCASE("permuted correlations score zero") {
    CorrelationMatrix anti;
    anti.rows = anti.cols = 2;
    anti.data = {0, 1, 1, 0};
    CHECK(diagonal_dominance(anti).dominant == 0);
  }

  SUBCASE("rectangular input is rejected") {
    CorrelationMatrix rect;
    rect.rows = 2;
    rect.cols = 3;
    rect.data.assign(6, 0.0);
    CHECK_THROWS_WITH_AS(diagonal_dominance(rect), doctest::Contains("square"), Error);
  }
}

TEST_CASE("csv exports parse back to the source values") {
  SUBCASE("correlation matrix") {
    ActivationMatrix a = make_matrix({{1, 2, 3, 4}, {0.5, -0.5, 1.5, 2.0}});
    ActivationMatrix b = make_matrix({{1, 2, 3, 4}, {4, 3, 2, 1}, {2, 2, 5, 5}});
    CorrelationMatrix m = pearson_matrix(a, b);
    std::ostringstream os;
    write_correlation_csv(os, m);
    auto rows = csv_parse(os.str());
    REQUIRE(rows.size() == 3);  // header + 2 unit rows
    CHECK(rows[0] == std::vector<std::string>{"unit", "0", "1", "2"});
    for (std::size_t i = 0; i < m.rows; ++i) {
      CHECK(rows[i + 1][0] == std::to_string(i));
      for (std::size_t j = 0; j < m.cols; ++j)
        CHECK(parse_double(rows[i + 1][j + 1]) == m.at(i, j));
    }
  }

  SUBCASE("top words") {
    ActivationMatrix am = make_matrix({{0.1, 0.9, 0.5}}, {"a", "b", "c"});
    auto top = top_k_words(am, 0, 2);
    std::ostringstream os;
    write_top_words_csv(os, 0, top);
    auto rows = csv_parse(os.str());
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"unit", "rank", "surface", "activation"});
    CHECK(rows[1] == std::vector<std::string>{"0", "1", "b", fmt_double(0.9)});
    CHECK(rows[2] == std::vector<std::string>{"0", "2", "c", fmt_double(0.5)});
  }

  SUBCASE("histograms: edges chain and the last hits hi exactly") {
    MemberState member;
    member.blocks.push_back({"head.W", {4}, {0.0, 1.0, 0.5, 0.25}});
    auto hists = weight_distribution(member, {"head.W"}, 4);
    std::ostringstream os;
    write_histogram_csv(os, hists);
    auto rows = csv_parse(os.str());
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == std::vector<std::string>{"block", "bin_lo", "bin_hi", "count"});
    double prev_hi = 0.0;
    std::size_t total = 0;
    for (std::size_t b = 0; b < 4; ++b) {
      const auto& r = rows[b + 1];
      CHECK(r[0] == "head.W");
      if (b > 0) CHECK(parse_double(r[1]) == prev_hi);
      prev_hi = parse_double(r[2]);
      total += (std::size_t)std::stoul(r[3]);
    }
    CHECK(prev_hi == 1.0);
    CHECK(total == 4);
  }

  SUBCASE("per-class deltas") {
    EvalResult a = eval_from({cls("A", 2, 1), cls("B", 2, 0)});
    EvalResult b = eval_from({cls("A", 2, 2), cls("B", 2, 1)});
    PerClassDelta pcd = per_class_delta(a, b);
    std::ostringstream os;
    write_per_class_csv(os, pcd);
    auto rows = csv_parse(os.str());
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"class", "delta"});
    CHECK(rows[1][0] == pcd.deltas[0].tag);
    CHECK(parse_double(rows[1][1]) == pcd.deltas[0].delta);
  }
}

TEST_CASE("mean_abs: plain magnitude average") {
  CHECK(mean_abs({}) == 0.0);
  CHECK(mean_abs({-2.0, 2.0}) == 2.0);
  CHECK(mean_abs({1.0, -3.0, 0.0, 4.0}) == doctest::Approx(2.0));
}
