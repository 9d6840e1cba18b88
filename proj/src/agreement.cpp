#include "agreelearn/agreement.hpp"

#include <cmath>
#include <stdexcept>

namespace agreelearn {

void AgreementDistribution::validate() const {
  if (probs.size() < 3) {
    throw std::invalid_argument("agreement distribution needs n >= 2 (>= 3 bins)");
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("agreement distribution probability outside [0, 1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("agreement distribution does not sum to 1");
  }
}

double distribution_readout(const AgreementDistribution& dist) {
  dist.validate();
  double y = 0.0;
  for (std::size_t k = 0; k < dist.probs.size(); ++k) {
    y += dist.probs[k] * dist.bin_value(k);
  }
  return y;
}

double indicator(const AgreementDistribution& dist, const AgreementHeadParams& params) {
  if (params.variant != AgreementVariant::Distributional) {
    throw std::invalid_argument("indicator: head is not distributional");
  }
  dist.validate();
  if (dist.probs.size() != static_cast<std::size_t>(params.indicator_hidden.w.cols())) {
    throw std::invalid_argument("indicator: distribution size does not match head");
  }
  const Eigen::Map<const Eigen::VectorXd> g(dist.probs.data(),
                                            static_cast<Eigen::Index>(dist.probs.size()));
  const Eigen::VectorXd hidden =
      (params.indicator_hidden.w * g + params.indicator_hidden.b).cwiseMax(0.0);
  const double pre = (params.indicator_out.w * hidden)(0) + params.indicator_out.b(0);
  return sigmoid(pre);
}

std::pair<double, double> linear_indicator(std::span<const double> features,
                                           const AgreementHeadParams& params) {
  if (params.variant != AgreementVariant::Linear) {
    throw std::invalid_argument("linear_indicator: head is not linear");
  }
  if (features.size() != static_cast<std::size_t>(params.linear.w.cols())) {
    throw std::invalid_argument("linear_indicator: feature size does not match head");
  }
  const Eigen::Map<const Eigen::VectorXd> x(features.data(),
                                            static_cast<Eigen::Index>(features.size()));
  const double y = sigmoid((params.linear.w * x)(0) + params.linear.b(0));
  return {y, y};
}

}  // namespace agreelearn
