#ifndef CEP_SPECIAL_HPP
#define CEP_SPECIAL_HPP

namespace cep {

/// Standard normal density N(x | 0, 1).
double normal_pdf(double x);

/// Standard normal CDF.
double normal_cdf(double x);

/// log of the standard normal CDF, accurate far into the lower tail.
double log_normal_cdf(double x);

/**
 * The ratio N(x) / Phi(x) (inverse Mills ratio of -x).
 *
 * For x < -6 the direct quotient loses precision and eventually divides two
 * underflowed numbers, so a continued fraction for the Mills ratio is used.
 */
double pdf_over_cdf(double x);

/// Logistic sigmoid 1 / (1 + exp(-x)).
double sigmoid(double x);

/// log sigmoid(x), stable for large |x|.
double log_sigmoid(double x);

}  // namespace cep

#endif  // CEP_SPECIAL_HPP
