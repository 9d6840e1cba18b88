#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "agreelearn/dataset.hpp"
#include "agreelearn/losses.hpp"
#include "agreelearn/metrics.hpp"
#include "agreelearn/model.hpp"

namespace agreelearn {

enum class Paradigm { MajorityVoting, LearnFromAll, Learn2Agree };
enum class MonitorMetric { TrainLoss, Delta };

struct TrainConfig {
  Paradigm paradigm = Paradigm::Learn2Agree;
  LossConfig loss{};
  std::size_t epochs = 50;
  double learning_rate = 1e-4;
  std::size_t lr_patience = 10;
  double lr_factor = 0.1;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  double eval_split = 0.2;
  std::vector<std::size_t> eval_indices;  // explicit fold; overrides eval_split when set
  MonitorMetric monitor = MonitorMetric::TrainLoss;
  bool detach_indicator = false;
  TieBreak tie_break = TieBreak::Negative;
  double threshold = 0.5;
};

/// Throws ConfigError on inconsistent settings (e.g. an agreement loss
/// outside the learn2agree paradigm).
void validate(const TrainConfig& cfg);

struct EpochStats {
  std::size_t epoch = 0;
  double classifier_loss = 0.0;
  double agreement_loss = 0.0;
  double total_loss = 0.0;
  double lr = 0.0;
  double delta = 0.0;  // NaN when no evaluation split
};

struct TrainResult {
  std::vector<EpochStats> history;
  std::vector<double> resolved_gamma;  // per annotator (single entry for majority voting)
  std::size_t skipped_annotator_batches = 0;
  std::size_t degenerate_gamma_fallbacks = 0;
};

/// Adam with bias-corrected moment estimates. Slots identify parameter
/// tensors; the time step advances once per step_begin().
class AdamOptimizer {
 public:
  explicit AdamOptimizer(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void set_learning_rate(double lr) { lr_ = lr; }
  double learning_rate() const { return lr_; }

  void step_begin() { ++t_; }
  void update(std::size_t slot, Eigen::MatrixXd& value, const Eigen::MatrixXd& grad);
  void update(std::size_t slot, Eigen::VectorXd& value, const Eigen::VectorXd& grad);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Eigen::MatrixXd> m_, v_;
};

TrainResult train(TwoStreamModel& model, const AnnotationSet& data, const TrainConfig& cfg);

/// Thresholds the (regularized) probabilities at `threshold` (ties count as
/// positive) and scores the agreement ratio against all annotators.
EvalReport evaluate(const TwoStreamModel& model, const AnnotationSet& data,
                    double threshold = 0.5, bool use_regularized = true);

std::string history_to_csv(const std::vector<EpochStats>& history);

/// Seeded train/eval row split; eval gets floor(N * eval_split) samples.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double eval_split, std::uint64_t seed);

}  // namespace agreelearn
