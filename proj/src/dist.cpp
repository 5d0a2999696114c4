#include "ltv/dist.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace ltv::dist {

namespace {

constexpr double kLogSqrt2Pi = 0.9189385332046727417803297364056176;
constexpr double kExpOverflow = 709.0;

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw std::invalid_argument(std::string(what) + " must be finite");
  }
}

}  // namespace

LognormalParams::LognormalParams(double mu_in, double sigma_in)
    : mu(mu_in), sigma(sigma_in) {
  require_finite(mu, "mu");
  require_finite(sigma, "sigma");
  if (sigma <= 0.0) {
    throw std::invalid_argument("sigma must be > 0");
  }
}

ZilnParams::ZilnParams(double p_in, LognormalParams lognormal_in)
    : p(p_in), lognormal(lognormal_in) {
  require_finite(p, "p");
  if (p <= 0.0 || p >= 1.0) {
    throw std::invalid_argument("p must lie in (0,1)");
  }
}

double lognormal_neg_loglik(double x, const LognormalParams& params) {
  require_finite(x, "x");
  if (x <= 0.0) {
    throw std::invalid_argument("lognormal_neg_loglik requires x > 0");
  }
  const double z = std::log(x) - params.mu;
  return std::log(x) + std::log(params.sigma) + kLogSqrt2Pi +
         z * z / (2.0 * params.sigma * params.sigma);
}

double lognormal_mean(const LognormalParams& params) {
  const double exponent = params.mu + params.sigma * params.sigma / 2.0;
  if (exponent > kExpOverflow) {
    throw std::range_error("lognormal_mean overflows double precision");
  }
  return std::exp(exponent);
}

double ziln_mean(const ZilnParams& params) {
  return params.p * lognormal_mean(params.lognormal);
}

double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

double normal_quantile(double q) {
  if (!(q > 0.0 && q < 1.0)) {
    throw std::invalid_argument("quantile level must lie in (0,1)");
  }
  // Acklam's rational approximation.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (q < plow) {
    const double r = std::sqrt(-2.0 * std::log(q));
    x = (((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
        ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
  } else if (q <= 1.0 - plow) {
    const double r = q - 0.5;
    const double s = r * r;
    x = (((((a[0] * s + a[1]) * s + a[2]) * s + a[3]) * s + a[4]) * s + a[5]) *
        r /
        (((((b[0] * s + b[1]) * s + b[2]) * s + b[3]) * s + b[4]) * s + 1.0);
  } else {
    const double r = std::sqrt(-2.0 * std::log(1.0 - q));
    x = -(((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r +
          c[5]) /
        ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
  }
  // One Halley refinement step against the erf-based CDF.
  const double e = normal_cdf(x) - q;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

double lognormal_quantile(double q, const LognormalParams& params) {
  return std::exp(params.mu + params.sigma * normal_quantile(q));
}

double compensated_sum(std::span<const double> values) {
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

EstimatorReport estimate_mean(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 2) {
    throw std::invalid_argument("estimate_mean requires at least 2 samples");
  }
  std::vector<double> logs(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(samples[i] > 0.0) || !std::isfinite(samples[i])) {
      throw std::invalid_argument("estimate_mean requires positive samples");
    }
    logs[i] = std::log(samples[i]);
  }
  const double avg = compensated_sum(samples) / static_cast<double>(n);
  const double y_bar = compensated_sum(logs) / static_cast<double>(n);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = logs[i] - y_bar;
    sq[i] = d * d;
  }
  const double s_y_sq = compensated_sum(sq);
  const double nd = static_cast<double>(n);

  const double mle = std::exp(y_bar + s_y_sq / (2.0 * nd));

  // Finney's n^{-2} series correction with the MLE variance sigma^2 = S_Y^2/n.
  const double s2 = s_y_sq / nd;
  const double s4 = s2 * s2;
  const double bracket = 1.0 - s2 * (s2 + 2.0) / (4.0 * nd * nd) +
                         s4 * (3.0 * s4 + 44.0 * s2 + 84.0) / (96.0 * nd * nd);
  const double finney = std::exp(y_bar + 0.5 * s2) * bracket;

  return EstimatorReport{avg, mle, finney, y_bar, s_y_sq, n};
}

double theoretical_rel_efficiency(double sigma, std::size_t n) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("sigma must be > 0");
  }
  if (n < 1) {
    throw std::invalid_argument("n must be >= 1");
  }
  const double s2 = sigma * sigma;
  const double s4 = s2 * s2;
  const double s6 = s4 * s2;
  const double s8 = s4 * s4;
  const double numerator =
      s2 + s4 / 2.0 + (s6 + s8 / 4.0) / (2.0 * static_cast<double>(n));
  return numerator / (std::exp(s2) - 1.0);
}

}  // namespace ltv::dist
