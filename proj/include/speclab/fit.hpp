#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace speclab {

struct AffineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r2 = 0.0;
  double rmse = 0.0;
};

/// Least-squares fit y ≈ intercept + slope·x.
inline AffineFit fit_affine(const std::vector<double>& x,
                            const std::vector<double>& y) {
  const size_t n = x.size();
  if (n != y.size() || n < 2) {
    throw std::invalid_argument("fit_affine: need >= 2 paired samples");
  }
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0) {
    throw std::invalid_argument("fit_affine: regressor has zero variance");
  }
  AffineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssRes = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double r = y[i] - (f.intercept + f.slope * x[i]);
    ssRes += r * r;
  }
  f.r2 = syy > 0.0 ? 1.0 - ssRes / syy : (ssRes == 0.0 ? 1.0 : 0.0);
  f.rmse = std::sqrt(ssRes / n);
  return f;
}

}  // namespace speclab
