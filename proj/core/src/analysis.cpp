#include "pretrand/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "pretrand/csv.hpp"
#include "pretrand/errors.hpp"

namespace pretrand {

namespace {

// Per-row centering stats for Pearson: mean, centered L2 norm, and whether
// the row is constant (norm-free correlation is undefined there).
struct RowStats {
  std::vector<double> centered;
  double norm = 0.0;
  bool constant = false;
};

RowStats row_stats(const ActivationMatrix& am, std::size_t row) {
  RowStats rs;
  std::size_t n = am.columns;
  rs.centered.resize(n);
  double mn = am.at(row, 0), mx = am.at(row, 0), sum = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    double v = am.at(row, c);
    sum += v;
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  rs.constant = mn == mx;
  double mean = sum / (double)n;
  double sq = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    rs.centered[c] = am.at(row, c) - mean;
    sq += rs.centered[c] * rs.centered[c];
  }
  rs.norm = std::sqrt(sq);
  return rs;
}

}  // namespace

CorrelationMatrix pearson_matrix(const ActivationMatrix& a, const ActivationMatrix& b) {
  PR_CHECK(a.columns == b.columns,
           "column mismatch: " << a.columns << " vs " << b.columns
                               << " token occurrences");
  PR_CHECK(a.columns >= 2, "need at least 2 token occurrences for correlation");
  PR_CHECK(a.units > 0 && b.units > 0, "empty activation matrix");

  std::vector<RowStats> sa, sb;
  sa.reserve(a.units);
  sb.reserve(b.units);
  for (std::size_t i = 0; i < a.units; ++i) sa.push_back(row_stats(a, i));
  for (std::size_t j = 0; j < b.units; ++j) sb.push_back(row_stats(b, j));

  CorrelationMatrix m;
  m.rows = a.units;
  m.cols = b.units;
  m.data.assign(m.rows * m.cols, 0.0);
  m.degenerate_row.assign(m.rows, 0);
  m.degenerate_col.assign(m.cols, 0);
  for (std::size_t i = 0; i < m.rows; ++i)
    if (sa[i].constant) {
      m.degenerate_row[i] = 1;
      m.any_degenerate = true;
    }
  for (std::size_t j = 0; j < m.cols; ++j)
    if (sb[j].constant) {
      m.degenerate_col[j] = 1;
      m.any_degenerate = true;
    }

  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      if (sa[i].constant || sb[j].constant) continue;  // stays 0, flagged above
      double dot = 0.0;
      for (std::size_t c = 0; c < a.columns; ++c) dot += sa[i].centered[c] * sb[j].centered[c];
      double r = dot / (sa[i].norm * sb[j].norm);
      m.at(i, j) = std::clamp(r, -1.0, 1.0);
    }
  }
  return m;
}

std::vector<WordActivation> top_k_words(const ActivationMatrix& am, std::size_t unit,
                                        std::size_t k) {
  PR_CHECK(unit < am.units,
           "unit " << unit << " out of range (layer has " << am.units << ")");
  struct Agg {
    double max_act;
    std::size_t first_col;
  };
  std::unordered_map<std::string, Agg> by_surface;
  std::vector<const std::string*> order;  // first-occurrence order of surfaces
  for (std::size_t c = 0; c < am.columns; ++c) {
    double v = am.at(unit, c);
    auto [it, inserted] = by_surface.try_emplace(am.surfaces[c], Agg{v, c});
    if (inserted)
      order.push_back(&it->first);
    else if (v > it->second.max_act)
      it->second.max_act = v;
  }
  std::vector<WordActivation> out;
  out.reserve(order.size());
  for (const std::string* s : order) out.push_back({*s, by_surface[*s].max_act});
  std::stable_sort(out.begin(), out.end(), [&](const WordActivation& x, const WordActivation& y) {
    return x.activation > y.activation;  // stable: ties keep first-occurrence order
  });
  if (out.size() > k) out.resize(k);
  return out;
}

UniqueUnitsReport unique_units(const ActivationMatrix& random_am,
                               const ActivationMatrix& pretrained_am,
                               double threshold) {
  CorrelationMatrix m = pearson_matrix(random_am, pretrained_am);
  UniqueUnitsReport rep;
  rep.total = m.rows;
  for (std::size_t i = 0; i < m.rows; ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) worst = std::max(worst, std::fabs(m.at(i, j)));
    if (worst < threshold) rep.units.push_back(i);
  }
  rep.fraction = rep.total ? (double)rep.units.size() / (double)rep.total : 0.0;
  return rep;
}

std::vector<Histogram> weight_distribution(const MemberState& member,
                                           const std::vector<std::string>& block_names,
                                           std::size_t bins) {
  PR_CHECK(bins >= 1, "need at least one bin");
  PR_CHECK(!block_names.empty(), "no blocks named");
  std::vector<const NamedBlock*> blocks;
  for (const std::string& name : block_names) {
    const NamedBlock* found = nullptr;
    for (const NamedBlock& b : member.blocks)
      if (b.name == name) found = &b;
    PR_CHECK(found, "unknown block '" << name << "'");
    PR_CHECK(!found->values.empty(), "block '" << name << "' is empty");
    blocks.push_back(found);
  }

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const NamedBlock* b : blocks)
    for (double v : b->values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }

  std::vector<Histogram> out;
  for (const NamedBlock* b : blocks) {
    Histogram h;
    h.block = b->name;
    h.lo = lo;
    h.hi = hi;
    h.counts.assign(bins, 0);
    for (double v : b->values) {
      std::size_t bin = 0;
      if (hi > lo) {
        bin = (std::size_t)((v - lo) / (hi - lo) * (double)bins);
        bin = std::min(bin, bins - 1);  // v == hi lands in the last bin
      }
      ++h.counts[bin];
    }
    out.push_back(std::move(h));
  }
  return out;
}

PerClassDelta per_class_delta(const EvalResult& eval_a, const EvalResult& eval_b) {
  PR_CHECK(eval_a.per_class.size() == eval_b.per_class.size(),
           "tag-set mismatch between the two evaluations");
  for (std::size_t i = 0; i < eval_a.per_class.size(); ++i)
    PR_CHECK(eval_a.per_class[i].tag == eval_b.per_class[i].tag,
             "tag-set mismatch at class " << i << ": '" << eval_a.per_class[i].tag
                                          << "' vs '" << eval_b.per_class[i].tag << "'");
  PerClassDelta pcd;
  for (std::size_t i = 0; i < eval_a.per_class.size(); ++i) {
    const EvalClass& ca = eval_a.per_class[i];
    const EvalClass& cb = eval_b.per_class[i];
    if (ca.gold == 0 && cb.gold == 0) {
      pcd.excluded.push_back(ca.tag);
      continue;
    }
    pcd.deltas.push_back({ca.tag, cb.accuracy() - ca.accuracy()});
  }
  std::stable_sort(pcd.deltas.begin(), pcd.deltas.end(),
                   [](const ClassDelta& x, const ClassDelta& y) { return x.delta > y.delta; });
  return pcd;
}

DiagonalDominance diagonal_dominance(const CorrelationMatrix& m) {
  PR_CHECK(m.rows == m.cols, "diagonal dominance needs a square matrix, got "
                                 << m.rows << "x" << m.cols);
  DiagonalDominance d;
  d.total = m.rows;
  for (std::size_t i = 0; i < m.rows; ++i) {
    bool dominant = true;
    for (std::size_t j = 0; j < m.cols && dominant; ++j)
      if (j != i && m.at(i, j) >= m.at(i, i)) dominant = false;
    if (dominant) ++d.dominant;
  }
  d.fraction = d.total ? (double)d.dominant / (double)d.total : 0.0;
  return d;
}

void write_correlation_csv(std::ostream& os, const CorrelationMatrix& m) {
  std::vector<std::string> header{"unit"};
  for (std::size_t j = 0; j < m.cols; ++j) header.push_back(std::to_string(j));
  csv_write_row(os, header);
  for (std::size_t i = 0; i < m.rows; ++i) {
    std::vector<std::string> row{std::to_string(i)};
    for (std::size_t j = 0; j < m.cols; ++j) row.push_back(fmt_double(m.at(i, j)));
    csv_write_row(os, row);
  }
}

void write_top_words_csv(std::ostream& os, std::size_t unit,
                         const std::vector<WordActivation>& words) {
  csv_write_row(os, {"unit", "rank", "surface", "activation"});
  for (std::size_t r = 0; r < words.size(); ++r)
    csv_write_row(os, {std::to_string(unit), std::to_string(r + 1), words[r].surface,
                       fmt_double(words[r].activation)});
}

void write_histogram_csv(std::ostream& os, const std::vector<Histogram>& hists) {
  csv_write_row(os, {"block", "bin_lo", "bin_hi", "count"});
  for (const Histogram& h : hists) {
    std::size_t bins = h.counts.size();
    for (std::size_t b = 0; b < bins; ++b) {
      double width = bins ? (h.hi - h.lo) / (double)bins : 0.0;
      csv_write_row(os, {h.block, fmt_double(h.lo + width * (double)b),
                         fmt_double(b + 1 == bins ? h.hi : h.lo + width * (double)(b + 1)),
                         std::to_string(h.counts[b])});
    }
  }
}

void write_per_class_csv(std::ostream& os, const PerClassDelta& pcd) {
  csv_write_row(os, {"class", "delta"});
  for (const ClassDelta& cd : pcd.deltas)
    csv_write_row(os, {cd.tag, fmt_double(cd.delta)});
}

}  // namespace pretrand
