#include "rehab/metrics.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "rehab/errors.hpp"

namespace rehab {

double Confusion::precision() const { return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp); }

double Confusion::recall() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn); }

double Confusion::f1() const {
  // 2TP / (2TP + FP + FN) equals 2PR/(P+R) and avoids the 0/0 case.
  const auto denom = 2 * tp + fp + fn;
  return tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

Confusion confusion(std::span<const int> preds, std::span<const int> truths) {
  if (preds.size() != truths.size()) throw ShapeError("prediction and truth lengths differ");
  Confusion c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == 1;
    const bool t = truths[i] == 1;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double f1_score(std::span<const int> preds, std::span<const int> truths) {
  if (preds.empty() && truths.empty()) throw ShapeError("f1 of empty lists");
  return confusion(preds, truths).f1();
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("paired samples differ in length");
  if (a.size() < 2) throw InsufficientDataError("paired t-test needs at least two pairs");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  TTestResult r;
  r.df = d.size() - 1;
  r.mean_diff = mean(d);
  const double sd = sample_std(d);
  if (sd == 0.0) {
    r.degenerate = true;
    if (r.mean_diff == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = std::copysign(INFINITY, r.mean_diff);
      r.p = 0.0;
    }
    return r;
  }
  r.t = r.mean_diff / (sd / std::sqrt(static_cast<double>(d.size())));
  boost::math::students_t dist(static_cast<double>(r.df));
  r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  return r;
}

}  // namespace rehab
