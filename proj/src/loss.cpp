#include "ltv/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace ltv::loss {

double softplus(double z) {
  if (z > 0.0) {
    return z + std::log1p(std::exp(-z));
  }
  return std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

dist::ZilnParams activate(const RawLogits& logits) {
  return dist::ZilnParams(
      sigmoid(logits.p_logit),
      dist::LognormalParams(logits.mu_raw,
                            softplus(logits.sigma_raw) + kSigmaFloor));
}

LossGrad cross_entropy_from_logit(int indicator, double p_logit) {
  LossGrad out;
  out.value = softplus(p_logit) - indicator * p_logit;
  out.d_p_logit = sigmoid(p_logit) - indicator;
  return out;
}

LossGrad ziln_loss(double x, const RawLogits& logits) {
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw std::invalid_argument("ziln_loss requires finite x >= 0");
  }
  const int returning = x > 0.0 ? 1 : 0;
  LossGrad out = cross_entropy_from_logit(returning, logits.p_logit);
  if (returning) {
    const double sigma = softplus(logits.sigma_raw) + kSigmaFloor;
    const double log_x = std::log(x);
    const double z = log_x - logits.mu_raw;
    out.value += log_x + std::log(sigma) + 0.5 * std::log(2.0 * M_PI) +
                 z * z / (2.0 * sigma * sigma);
    out.d_mu_raw = -z / (sigma * sigma);
    const double d_sigma = 1.0 / sigma - z * z / (sigma * sigma * sigma);
    out.d_sigma_raw = d_sigma * sigmoid(logits.sigma_raw);
  }
  return out;
}

LossGrad mse_loss(double prediction, double label) {
  LossGrad out;
  const double diff = prediction - label;
  out.value = diff * diff;
  out.d_mu_raw = 2.0 * diff;
  return out;
}

std::pair<double, std::vector<LossGrad>> batch_loss(
    std::span<const double> labels, std::span<const RawLogits> logits,
    LossKind kind) {
  if (labels.empty()) {
    throw std::invalid_argument("batch_loss requires a non-empty batch");
  }
  if (labels.size() != logits.size()) {
    throw std::invalid_argument("batch_loss length mismatch");
  }
  const double scale = 1.0 / static_cast<double>(labels.size());
  std::vector<LossGrad> grads(labels.size());
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    LossGrad g;
    switch (kind) {
      case LossKind::kZiln:
        g = ziln_loss(labels[i], logits[i]);
        break;
      case LossKind::kMse:
        g = mse_loss(logits[i].mu_raw, labels[i]);
        break;
      case LossKind::kBce:
        g = cross_entropy_from_logit(labels[i] > 0.0 ? 1 : 0,
                                     logits[i].p_logit);
        break;
    }
    total += g.value;
    g.d_p_logit *= scale;
    g.d_mu_raw *= scale;
    g.d_sigma_raw *= scale;
    grads[i] = g;
  }
  return {total * scale, std::move(grads)};
}

}  // namespace ltv::loss
