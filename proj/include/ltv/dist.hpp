#pragma once

#include <cstddef>
#include <span>

namespace ltv::dist {

// Parameters of the underlying normal distribution of a lognormal variable.
// sigma must be strictly positive and both fields finite.
struct LognormalParams {
  double mu;
  double sigma;

  LognormalParams(double mu, double sigma);
};

// Zero-inflated lognormal: point mass at zero with probability 1-p,
// lognormal with probability p.
struct ZilnParams {
  double p;  // in (0,1)
  LognormalParams lognormal;

  ZilnParams(double p, LognormalParams lognormal);
};

enum class MeanEstimator { kAvg, kMle, kFinney };

// All three mean estimates computed from one sample, plus the log-domain
// sufficient statistics they share.
struct EstimatorReport {
  double theta_avg;
  double theta_mle;
  double theta_finney;
  double y_bar;     // sample mean of log x_i
  double s_y_sq;    // sum of squared deviations of log x_i
  std::size_t n;
};

// Negative log-likelihood of a lognormal observation:
//   log(x * sigma * sqrt(2*pi)) + (log x - mu)^2 / (2 sigma^2).
// Requires x > 0.
double lognormal_neg_loglik(double x, const LognormalParams& params);

// exp(mu + sigma^2/2). Throws std::range_error if the exponent exceeds the
// double-precision exp limit (709).
double lognormal_mean(const LognormalParams& params);

// p * exp(mu + sigma^2/2), the point LTV prediction of a ZILN model.
double ziln_mean(const ZilnParams& params);

// exp(mu + sigma * Phi^{-1}(q)) for q in (0,1).
double lognormal_quantile(double q, const LognormalParams& params);

// Inverse standard normal CDF, Acklam's rational approximation refined by one
// Halley step; absolute error well below 1e-9.
double normal_quantile(double q);

// Standard normal CDF via erf.
double normal_cdf(double z);

// Computes all three lognormal mean estimators from a sample of positive
// reals. Requires n >= 2 and every sample > 0. Sums are compensated so the
// result is deterministic across platforms.
EstimatorReport estimate_mean(std::span<const double> samples);

// The theoretical MSE_AVG / MSE_Finney curve:
//   {s^2 + s^4/2 + (s^6 + s^8/4)/(2n)} / (exp(s^2) - 1).
double theoretical_rel_efficiency(double sigma, std::size_t n);

// Neumaier-compensated sum.
double compensated_sum(std::span<const double> values);

}  // namespace ltv::dist
