#pragma once
// Small-sample statistics used by the Monte Carlo drivers: mean / standard
// error summaries and ordinary least-squares lines with R^2 and slope
// standard error.

#include <cmath>
#include <cstdint>
#include <span>

#include "homlat/errors.hpp"

namespace homlat {

struct Summary {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation (n-1 denominator)
  double se = 0.0;  // sd / sqrt(n)
  std::int64_t n = 0;
};

inline Summary summarize(std::span<const double> v) {
  Summary s;
  s.n = static_cast<std::int64_t>(v.size());
  if (s.n == 0) return s;
  double acc = 0.0;
  for (double x : v) acc += x;
  s.mean = acc / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double x : v) {
      const double d = x - s.mean;
      ss += d * d;
    }
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
    s.se = s.sd / std::sqrt(static_cast<double>(s.n));
  }
  return s;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_se = 0.0;
  std::int64_t n = 0;
};

inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("fit_line needs equal-length inputs");
  const std::int64_t n = static_cast<std::int64_t>(x.size());
  if (n < 2) throw ValidationError("fit_line needs at least 2 points");
  double mx = 0.0, my = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    mx += x[static_cast<std::size_t>(i)];
    my += y[static_cast<std::size_t>(i)];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double dx = x[static_cast<std::size_t>(i)] - mx;
    const double dy = y[static_cast<std::size_t>(i)] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw ValidationError("fit_line needs at least two distinct x values");
  LinearFit f;
  f.n = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double e = y[static_cast<std::size_t>(i)] -
                     (f.intercept + f.slope * x[static_cast<std::size_t>(i)]);
    ss_res += e * e;
  }
  f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  if (n > 2) f.slope_se = std::sqrt(ss_res / static_cast<double>(n - 2) / sxx);
  return f;
}

}  // namespace homlat
