#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "dipolar/error.hpp"

namespace dipolar {

/// y ~ prefactor * x^exponent, fitted by least squares on (ln x, ln y).
struct PowerLawFit {
  double exponent = 0.0;
  double prefactor = 0.0;
  std::vector<double> residuals;  // ln y - fitted ln y, per point
  double rms_residual = 0.0;
};

inline PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidInput("power-law fit needs equally many x and y values");
  if (x.size() < 3) throw InvalidInput("power-law fit needs at least 3 points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InvalidInput("power-law fit needs positive data");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (!(std::abs(den) > 0.0)) throw InvalidInput("power-law fit needs distinct x values");
  PowerLawFit f;
  f.exponent = (n * sxy - sx * sy) / den;
  const double intercept = (sy - f.exponent * sx) / n;
  f.prefactor = std::exp(intercept);
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = std::log(y[i]) - (intercept + f.exponent * std::log(x[i]));
    f.residuals.push_back(r);
    ss += r * r;
  }
  f.rms_residual = std::sqrt(ss / n);
  return f;
}

}  // namespace dipolar
