#include <algorithm>
#include <cmath>

#include "psychoforge/error.hpp"
#include "psychoforge/stats.hpp"

namespace psychoforge::stats {
namespace {

void check_finite(const SampleVector& v) {
  for (double x : v.values) {
    if (!std::isfinite(x)) fail(ErrorCode::NonFinite, "sample '" + v.label + "' contains a non-finite value");
  }
}

}  // namespace

double mean(const std::vector<double>& v) {
  if (v.empty()) fail(ErrorCode::EmptySequence, "mean of empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double population_sd(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) fail(ErrorCode::EmptySequence, "quantile of empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + (v[hi] - v[lo]) * frac;
}

double pearson_r(const SampleVector& x, const SampleVector& y) {
  if (x.values.size() != y.values.size()) {
    fail(ErrorCode::LengthMismatch, "pearson_r: lengths " + std::to_string(x.values.size()) + " and " +
                                        std::to_string(y.values.size()));
  }
  if (x.values.size() < 2) fail(ErrorCode::TooFewObservations, "pearson_r: need at least 2 observations");
  check_finite(x);
  check_finite(y);
  const double mx = mean(x.values);
  const double my = mean(y.values);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    const double dx = x.values[i] - mx;
    const double dy = y.values[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  // A constant sample can leave rounding residue in the sums, so test it directly.
  auto constant = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
  };
  if (sxx == 0.0 || constant(x.values)) fail(ErrorCode::ZeroVariance, "pearson_r: zero variance in '" + x.label + "'");
  if (syy == 0.0 || constant(y.values)) fail(ErrorCode::ZeroVariance, "pearson_r: zero variance in '" + y.label + "'");
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

double point_biserial(const SampleVector& b, const SampleVector& y) {
  if (b.values.size() != y.values.size()) fail(ErrorCode::LengthMismatch, "point_biserial: length mismatch");
  bool zero = false;
  bool one = false;
  for (double v : b.values) {
    if (v == 0.0) {
      zero = true;
    } else if (v == 1.0) {
      one = true;
    } else {
      fail(ErrorCode::InvalidArgument, "point_biserial: indicator values must be 0 or 1");
    }
  }
  if (!(zero && one)) fail(ErrorCode::SingleClass, "point_biserial: indicator '" + b.label + "' has one class");
  return pearson_r(b, y);
}

double adjusted_r_squared(double r_squared, std::size_t n, std::size_t p) {
  if (n <= p + 1) {
    fail(ErrorCode::TooFewObservations,
         "adjusted R^2 needs n > p + 1 (n=" + std::to_string(n) + ", p=" + std::to_string(p) + ")");
  }
  const double nn = static_cast<double>(n);
  const double pp = static_cast<double>(p);
  return 1.0 - (1.0 - r_squared) * (nn - 1.0) / (nn - pp - 1.0);
}

}  // namespace psychoforge::stats
