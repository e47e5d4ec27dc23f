#include "cep/special.hpp"

#include <cmath>
#include <numbers>

namespace cep {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;
constexpr double kLogSqrt2Pi = 0.9189385332046728;

// Mills ratio R(t) = (1 - Phi(t)) / N(t) for t > 0, by the Lentz evaluation
// of R(t) = 1 / (t + 1 / (t + 2 / (t + 3 / (t + ...)))).
double mills_ratio(double t) {
  constexpr double kTiny = 1e-300;
  double f = t;
  double c = t;
  double d = 0.0;
  for (int k = 1; k < 500; ++k) {
    d = t + k * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = t + k / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 / f;
}

}  // namespace

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double log_normal_cdf(double x) {
  if (x > -6.0) return std::log(normal_cdf(x));
  // Phi(x) = N(x) R(-x)
  return -0.5 * x * x - kLogSqrt2Pi + std::log(mills_ratio(-x));
}

double pdf_over_cdf(double x) {
  if (x > -6.0) return normal_pdf(x) / normal_cdf(x);
  return 1.0 / mills_ratio(-x);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

}  // namespace cep
