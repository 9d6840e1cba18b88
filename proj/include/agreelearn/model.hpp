#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "agreelearn/agreement.hpp"
#include "agreelearn/layers.hpp"
#include "agreelearn/losses.hpp"

namespace agreelearn {

struct ModelConfig {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_widths{64, 64};
  AgreementVariant agreement_variant = AgreementVariant::Distributional;
  std::size_t bins = 10;            // n, distributional head
  std::size_t indicator_hidden = 16;
  double lambda = 3.0;
  std::uint64_t init_seed = 0;
};

/// Shifts the classifier probability toward the class the agreement indicator
/// favors. Evaluated in logit space: logit(p_tilde) = logit(p_hat) +
/// lambda * (2 y_tilde - 1), which is algebraically identical to the
/// exponential-reweighting form and stable at large lambda.
double regularize(double p_hat, double y_tilde, double lambda);

/// Activations kept by forward() so backward() can run without recomputation.
struct ForwardCache {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> pre;  // backbone pre-activations
  std::vector<Eigen::MatrixXd> act;  // backbone activations; act.back() is the feature matrix
  Eigen::MatrixXd cls_logits;        // B x 2
  Eigen::VectorXd p_hat;
  Eigen::VectorXd y_hat;
  Eigen::VectorXd y_tilde;
  Eigen::VectorXd p_tilde;
  // distributional head
  Eigen::MatrixXd dist;      // B x (n+1), softmax output
  Eigen::MatrixXd ind_pre;   // B x hidden
  Eigen::MatrixXd ind_act;   // B x hidden
  Eigen::VectorXd ind_out;   // B, pre-logistic
  // linear head
  Eigen::VectorXd lin_pre;   // B, pre-logistic
};

/// Shared MLP backbone, a two-logit softmax classifier head, and an
/// agreement head. All parameters live here together with their gradients;
/// backward() fills the gradient buffers analytically.
class TwoStreamModel {
 public:
  explicit TwoStreamModel(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  void set_lambda(double lambda);

  ForwardCache forward(const Eigen::MatrixXd& batch) const;

  /// Backpropagates d(total loss)/d(p_tilde) and d(total loss)/d(y_hat) into
  /// every parameter gradient. With detach_indicator the classifier-stream
  /// gradient does not flow through the agreement indicator.
  void backward(const ForwardCache& cache, std::span<const double> d_p_tilde,
                std::span<const double> d_y_hat, bool detach_indicator = false);

  void zero_grad();
  std::size_t parameter_count() const;

  struct BlockRef {
    std::string name;
    Dense* dense;
  };
  std::vector<BlockRef> blocks();

  nlohmann::json save_checkpoint() const;
  static TwoStreamModel load_checkpoint(const nlohmann::json& doc);

 private:
  ModelConfig cfg_;
  std::vector<Dense> backbone_;
  Dense classifier_;          // 2 x feature_dim
  AgreementHeadParams head_;
};

struct GradCheckBlock {
  std::string name;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckBlock> blocks;
  double max_rel_error() const;
  bool pass(double tolerance) const { return max_rel_error() < tolerance; }
};

/// Central finite differences of the joint batch loss against the analytic
/// gradients, per parameter block. Intended for small models in double
/// precision.
GradCheckReport grad_check(TwoStreamModel& model, const Eigen::MatrixXd& batch,
                           const LabelGrid& grid, std::span<const double> alphas,
                           const LossConfig& loss_cfg, double fd_step = 1e-5);

}  // namespace agreelearn
