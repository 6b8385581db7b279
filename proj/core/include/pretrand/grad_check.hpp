#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pretrand/parameter.hpp"

namespace pretrand {

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  bool flagged = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double tol = 0.0;
  std::string failure;  // non-empty if the loss function itself failed

  double max_rel_err() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max(m, e.max_rel_err);
    return m;
  }
  bool ok() const {
    if (!failure.empty()) return false;
    for (const auto& e : entries)
      if (e.flagged) return false;
    return true;
  }
  std::string summary() const {
    if (!failure.empty()) return "grad_check failed to evaluate: " + failure;
    std::string s;
    for (const auto& e : entries) {
      s += e.name + ": max_rel_err=" + std::to_string(e.max_rel_err) +
           (e.flagged ? " FLAGGED" : "") + "\n";
    }
    return s;
  }
};

// Compares analytic gradients against central finite differences
// (f(w+h)-f(w-h))/2h, elementwise over every parameter. `f(want_grad)`
// evaluates the scalar loss; when want_grad is true it must also run a
// backward pass into the parameters' grad buffers (which the harness zeroes
// beforehand). Relative error is |a-n| / max(|a|,|n|,1e-8). Reports, never
// throws. Meant to run with T = double.
template <typename T>
GradCheckReport grad_check(const std::function<T(bool)>& f,
                           const ParamRefs<T>& params, T step, double tol) {
  GradCheckReport report;
  report.tol = tol;
  std::vector<Tensor<double>> analytic;
  try {
    zero_grads(params);
    (void)f(true);
    for (Parameter<T>* p : params)
      analytic.push_back(p->grad.template cast<double>());
  } catch (const std::exception& e) {
    report.failure = e.what();
    return report;
  }

  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter<T>* p = params[pi];
    GradCheckEntry entry;
    entry.name = p->name.empty() ? ("param" + std::to_string(pi)) : p->name;
    for (std::size_t i = 0; i < p->numel(); ++i) {
      T orig = p->value.at(i);
      double plus, minus;
      try {
        p->value.at(i) = orig + step;
        plus = static_cast<double>(f(false));
        p->value.at(i) = orig - step;
        minus = static_cast<double>(f(false));
      } catch (const std::exception& e) {
        p->value.at(i) = orig;
        report.failure = e.what();
        return report;
      }
      p->value.at(i) = orig;
      double numeric = (plus - minus) / (2.0 * static_cast<double>(step));
      double a = analytic[pi].at(i);
      double rel = std::abs(a - numeric) /
                   std::max({std::abs(a), std::abs(numeric), 1e-8});
      if (rel > entry.max_rel_err) {
        entry.max_rel_err = rel;
        entry.worst_index = i;
        entry.worst_analytic = a;
        entry.worst_numeric = numeric;
      }
    }
    entry.flagged = entry.max_rel_err > tol;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace pretrand
