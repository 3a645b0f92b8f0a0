#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace rehab {

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  Confusion& operator+=(const Confusion& o) {
    tp += o.tp; fp += o.fp; fn += o.fn; tn += o.tn;
    return *this;
  }
  double precision() const;
  double recall() const;
  /// Harmonic mean of precision and recall on class 1; 0 when both are 0.
  double f1() const;
};

Confusion confusion(std::span<const int> preds, std::span<const int> truths);

/// F1 with positive class 1. Throws ShapeError on length mismatch or empty input.
double f1_score(std::span<const int> preds, std::span<const int> truths);

double mean(std::span<const double> xs);
/// Sample standard deviation (n - 1); 0 for fewer than two values.
double sample_std(std::span<const double> xs);

struct TTestResult {
  double mean_diff = 0.0;
  double t = 0.0;
  double p = 1.0;  // two-sided
  std::size_t df = 0;
  bool degenerate = false;  // all differences identical; p is not informative
};

/// Paired two-sided Student t-test on a - b. Zero differences give p = 1
/// flagged degenerate; constant non-zero differences give p = 0.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace rehab
