#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "agreelearn/common.hpp"

namespace agreelearn {

enum class ClassifierLoss { FocalCe, Wkl };
enum class AgreementLoss { Ar, Rmse };
enum class InnerLoss { Focal, Wkl };

/// Focusing-parameter policy for the focal loss: derived per annotator from
/// the effective number of samples, or one fixed value for everyone.
struct GammaPolicy {
  bool auto_effective_number = true;
  double fixed_gamma = 0.0;
};

struct LossConfig {
  ClassifierLoss classifier_loss = ClassifierLoss::FocalCe;
  std::optional<AgreementLoss> agreement_loss;  // only set when the agreement stream trains
  GammaPolicy gamma_policy{};
  double stream_weight = 1.0;  // weight of the agreement loss in the total
  double lambda = 3.0;         // regularization scale
};

struct ScalarLoss {
  double value = 0.0;
  double grad = 0.0;
};

struct VectorLoss {
  double value = 0.0;
  std::vector<double> grad;
};

/// Pinball-style agreement regression loss with the quantile replaced by the
/// per-sample agreement target: max[alpha (y - alpha), (alpha - 1)(y - alpha)].
ScalarLoss ar_loss(double y_hat, double alpha);

/// Root mean squared error over a batch; gradient is (y - alpha) / (B * value),
/// defined as zero at a perfect fit.
VectorLoss rmse_loss(std::span<const double> y_hat, std::span<const double> alpha);

/// Focal loss -|g - p|^gamma (g log p + (1-g) log(1-p)); p is clamped to
/// [eps, 1-eps] before evaluation. gamma = 0 recovers plain cross-entropy.
ScalarLoss focal_loss(double p, int target, double gamma);

/// Focusing parameter from effective numbers of the two classes of one
/// annotator. Requires both classes present (0 < n_majority < n_labeled).
double gamma_effective_number(std::size_t n_majority, std::size_t n_labeled);

/// One batch worth of tri-state labels, B x J row-major.
struct LabelGrid {
  std::size_t batch = 0;
  std::size_t annotators = 0;
  std::vector<std::int8_t> labels;

  std::int8_t at(std::size_t i, std::size_t j) const { return labels[i * annotators + j]; }
};

/// Weighted kappa loss for one annotator batch: a soft confusion matrix pairs
/// predicted probabilities with the hard labels, kappa is computed from it,
/// and sigmoid(log(1 - kappa)) is returned as the loss value. kappa is clamped
/// at 1 - eps to keep the logarithm finite.
struct WklLoss {
  double value = 0.0;  // sigmoid(raw)
  double raw = 0.0;    // log(1 - kappa), range (-inf, log 2]
  double kappa = 0.0;
  std::vector<double> grad;
};

WklLoss wkl_loss(std::span<const double> p_tilde, std::span<const std::int8_t> labels);

/// Average loss over annotators: per annotator the mean focal loss over its
/// present labels, or one batch-level weighted kappa term. Annotators without
/// a usable contribution are skipped and the average renormalized.
struct MultiAnnotatorLoss {
  double value = 0.0;
  std::vector<double> grad;
  std::size_t contributing = 0;
  std::size_t skipped = 0;  // annotators with labels the inner loss cannot use
};

MultiAnnotatorLoss multi_annotator_loss(std::span<const double> p_tilde, const LabelGrid& grid,
                                        std::span<const double> per_annotator_gamma,
                                        InnerLoss inner);

/// Joint training objective for one batch: classifier loss over the
/// regularized probabilities plus stream_weight times the agreement loss over
/// the predicted agreement. Gradients are returned for both model outputs.
struct JointLoss {
  double classifier = 0.0;
  double agreement = 0.0;
  double total = 0.0;
  std::vector<double> d_p_tilde;
  std::vector<double> d_y_hat;
  std::size_t skipped_annotators = 0;
};

JointLoss joint_batch_loss(std::span<const double> p_tilde, std::span<const double> y_hat,
                           const LabelGrid& grid, std::span<const double> alphas,
                           const LossConfig& cfg, std::span<const double> per_annotator_gamma);

}  // namespace agreelearn
