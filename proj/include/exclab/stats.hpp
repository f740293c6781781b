#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace exclab {

// Welford accumulator with Chan's parallel merge; replica farms reduce
// per-thread accumulators with merge() so results are independent of the
// thread count.
struct RunningStat {
  long long count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double d = x - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (x - mean);
  }

  void merge(const RunningStat& other) {
    if (other.count == 0) return;
    if (count == 0) {
      *this = other;
      return;
    }
    const double d = other.mean - mean;
    const long long total = count + other.count;
    mean += d * static_cast<double>(other.count) / static_cast<double>(total);
    m2 += other.m2 + d * d * static_cast<double>(count) *
                         static_cast<double>(other.count) /
                         static_cast<double>(total);
    count = total;
  }

  double variance() const {
    return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
  }

  double stddev() const { return std::sqrt(variance()); }

  // Standard error of the mean.
  double se() const {
    return count > 0 ? std::sqrt(variance() / static_cast<double>(count))
                     : 0.0;
  }
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

inline LineFit fit_line(std::span<const double> xs,
                        std::span<const double> ys) {
  const auto n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  LineFit fit;
  const double denom = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

// Least-squares exponent of y ~ c * x^p on log-log values.
inline double fit_exponent(std::span<const double> xs,
                           std::span<const double> ys) {
  std::vector<double> lx(xs.size()), ly(ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
  }
  return fit_line(lx, ly).slope;
}

}  // namespace exclab
