#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "pretrand/checkpoint.hpp"
#include "pretrand/tagger.hpp"
#include "pretrand/tape.hpp"
#include "pretrand/training.hpp"

namespace pretrand {

// Activations of one extractor layer over a probing split: one row per unit
// (forward-direction units first, then the backward block), one column per
// token occurrence in corpus order.
struct ActivationMatrix {
  std::string layer;      // "trunk" or "rand_trunk"
  std::string source_id;  // e.g. the checkpoint path the model came from
  std::size_t units = 0;
  std::size_t columns = 0;
  std::vector<double> data;            // row-major units x columns
  std::vector<std::string> surfaces;   // aligned to columns

  double& at(std::size_t u, std::size_t c) { return data[u * columns + c]; }
  double at(std::size_t u, std::size_t c) const { return data[u * columns + c]; }
};

// Pearson coefficients between all row pairs of two activation matrices.
// Rows whose activations are constant get coefficient 0 and a degeneracy
// flag instead of NaN.
struct CorrelationMatrix {
  std::size_t rows = 0;  // units of a
  std::size_t cols = 0;  // units of b
  std::vector<double> data;  // row-major, entries in [-1,1]
  std::vector<std::uint8_t> degenerate_row, degenerate_col;
  bool any_degenerate = false;

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

// Forward-only probe of an extractor layer. `layer` is "trunk" (the main
// branch) or "rand_trunk" (the random branch, when attached).
template <typename T>
ActivationMatrix record_activations(TaggerModel<T>& model,
                                    const std::vector<Sentence>& split,
                                    const std::string& layer,
                                    const std::string& source_id = "") {
  const bool want_random = layer == "rand_trunk";
  PR_CHECK(layer == "trunk" || want_random,
           "unknown layer '" << layer << "' (expected trunk or rand_trunk)");
  PR_CHECK(!want_random || model.has_random,
           "layer rand_trunk: the model has no random branch");

  ActivationMatrix am;
  am.layer = layer;
  am.source_id = source_id;
  am.units = 2 * (want_random ? model.dims.k : model.dims.hidden);
  for (const Sentence& s : split) am.columns += s.size();
  am.data.assign(am.units * am.columns, 0.0);
  am.surfaces.reserve(am.columns);

  std::size_t col = 0;
  for (const Sentence& s : split) {
    if (s.empty()) continue;
    Tape<T> tape;
    tape.set_grad_enabled(false);
    ForwardTrace trace = model.forward(tape, s);
    const std::vector<Var>& states = want_random ? trace.rand_states : trace.trunk_states;
    for (std::size_t i = 0; i < s.size(); ++i, ++col) {
      am.surfaces.push_back(s[i].surface);
      const Tensor<T>& v = tape.val(states[i]);
      for (std::size_t u = 0; u < am.units; ++u)
        am.at(u, col) = static_cast<double>(v.at(u));
    }
  }
  return am;
}

CorrelationMatrix pearson_matrix(const ActivationMatrix& a, const ActivationMatrix& b);

// Highest-activation words of one unit: occurrences aggregated by surface
// via max, ordered by activation descending with ties broken by the
// surface's first occurrence in the split.
struct WordActivation {
  std::string surface;
  double activation = 0.0;
};
std::vector<WordActivation> top_k_words(const ActivationMatrix& am, std::size_t unit,
                                        std::size_t k = 10);

// Random units whose strongest absolute correlation with any pre-trained
// unit stays below the threshold: the detectors the pre-trained branch does
// not already have.
struct UniqueUnitsReport {
  std::vector<std::size_t> units;
  std::size_t total = 0;
  double fraction = 0.0;
};
UniqueUnitsReport unique_units(const ActivationMatrix& random_am,
                               const ActivationMatrix& pretrained_am,
                               double threshold = 0.4);

// Exact histograms over named parameter blocks, sharing one [lo,hi] range
// (the joint min/max) so different blocks' shapes are comparable.
struct Histogram {
  std::string block;
  double lo = 0.0, hi = 0.0;
  std::vector<std::size_t> counts;
};
std::vector<Histogram> weight_distribution(const MemberState& member,
                                           const std::vector<std::string>& block_names,
                                           std::size_t bins = 50);

// Per-gold-class accuracy movement between two evaluations of the same
// tag-set, sorted by improvement; zero-gold classes are reported separately
// and excluded from the ranking.
struct ClassDelta {
  std::string tag;
  double delta = 0.0;
};
struct PerClassDelta {
  std::vector<ClassDelta> deltas;
  std::vector<std::string> excluded;  // classes with no gold tokens
};
PerClassDelta per_class_delta(const EvalResult& eval_a, const EvalResult& eval_b);

// Fraction of units whose self-correlation (diagonal of a square unit-to-unit
// correlation matrix) strictly exceeds every cross-correlation in its row —
// the "white diagonal" statistic.
struct DiagonalDominance {
  std::size_t dominant = 0;
  std::size_t total = 0;
  double fraction = 0.0;
};
DiagonalDominance diagonal_dominance(const CorrelationMatrix& m);

inline double mean_abs(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += std::fabs(v);
  return s / (double)values.size();
}

// ---- CSV exports (all fields round-trip through csv_parse/parse_double) ----

// Dense matrix with a leading header row/column of unit ids.
void write_correlation_csv(std::ostream& os, const CorrelationMatrix& m);
// unit,rank,surface,activation
void write_top_words_csv(std::ostream& os, std::size_t unit,
                         const std::vector<WordActivation>& words);
// block,bin_lo,bin_hi,count
void write_histogram_csv(std::ostream& os, const std::vector<Histogram>& hists);
// class,delta
void write_per_class_csv(std::ostream& os, const PerClassDelta& pcd);

}  // namespace pretrand
