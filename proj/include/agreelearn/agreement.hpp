#pragma once

#include <span>
#include <utility>
#include <vector>

#include "agreelearn/layers.hpp"

namespace agreelearn {

/// Categorical distribution over n+1 uniformly spaced agreement levels
/// {0, 1/n, ..., 1}. Probabilities must sum to 1 within 1e-9.
struct AgreementDistribution {
  std::vector<double> probs;

  std::size_t bins() const { return probs.size() - 1; }  // n
  double bin_value(std::size_t k) const {
    return static_cast<double>(k) / static_cast<double>(bins());
  }
  void validate() const;
};

/// Expected agreement level: the probability-weighted sum of the bin values.
double distribution_readout(const AgreementDistribution& dist);

enum class AgreementVariant { Distributional, Linear };

/// Parameters of the agreement stream head. The distributional variant
/// projects backbone features to n+1 logits whose softmax forms the
/// distribution; two further layers (relu, then logistic) condense the full
/// probability vector into the agreement indicator. The linear variant is a
/// single logistic unit whose output serves as both prediction and indicator.
struct AgreementHeadParams {
  AgreementVariant variant = AgreementVariant::Distributional;
  std::size_t bins = 10;  // n

  Dense projection;        // (n+1) x feature_dim
  Dense indicator_hidden;  // hidden x (n+1)
  Dense indicator_out;     // 1 x hidden

  Dense linear;  // 1 x feature_dim
};

/// Agreement indicator from the full distribution (distributional variant).
double indicator(const AgreementDistribution& dist, const AgreementHeadParams& params);

/// (y_hat, y_tilde) of the linear variant; the two are identical by design.
std::pair<double, double> linear_indicator(std::span<const double> features,
                                           const AgreementHeadParams& params);

}  // namespace agreelearn
