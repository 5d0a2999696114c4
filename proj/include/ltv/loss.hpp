#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "ltv/dist.hpp"

namespace ltv::loss {

// Additive floor applied after softplus so sigma is bounded away from zero.
inline constexpr double kSigmaFloor = 1e-6;

// Pre-activation outputs of the three-headed network.
// Activations: p = sigmoid(p_logit), mu = mu_raw,
// sigma = softplus(sigma_raw) + kSigmaFloor.
struct RawLogits {
  double p_logit = 0.0;
  double mu_raw = 0.0;
  double sigma_raw = 0.0;
};

// Per-example loss value and its partial derivatives with respect to the raw
// logits.
struct LossGrad {
  double value = 0.0;
  double d_p_logit = 0.0;
  double d_mu_raw = 0.0;
  double d_sigma_raw = 0.0;
};

enum class LossKind { kZiln, kMse, kBce };

// log(1 + exp(z)) in overflow-safe form.
double softplus(double z);

double sigmoid(double z);

// Applies the head activations to raw logits.
dist::ZilnParams activate(const RawLogits& logits);

// Negative log-likelihood of the ZILN distribution with analytic gradients
// through sigmoid/identity/softplus. For x == 0 only the classification term
// is active and the mu/sigma gradients are zero. Requires x >= 0.
LossGrad ziln_loss(double x, const RawLogits& logits);

// Binary cross-entropy computed directly from the logit; never forms
// log(1 - sigmoid(z)). Gradient in d_p_logit.
LossGrad cross_entropy_from_logit(int indicator, double p_logit);

// Squared error with gradient with respect to the prediction (in d_mu_raw).
LossGrad mse_loss(double prediction, double label);

// Mean-reduced batch loss. Per-example gradients are scaled by 1/batch_size.
// MSE reads the prediction from mu_raw (the scalar head maps there); BCE
// reads the logit from p_logit with indicator 1{label > 0}.
std::pair<double, std::vector<LossGrad>> batch_loss(
    std::span<const double> labels, std::span<const RawLogits> logits,
    LossKind kind);

}  // namespace ltv::loss
