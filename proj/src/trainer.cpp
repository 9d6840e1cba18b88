#include "agreelearn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>

namespace agreelearn {

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
  if (!(cfg.lr_factor > 0.0 && cfg.lr_factor <= 1.0)) {
    throw ConfigError("train: lr_factor must be in (0, 1]");
  }
  if (!(cfg.eval_split >= 0.0 && cfg.eval_split < 1.0)) {
    throw ConfigError("train: eval_split must be in [0, 1)");
  }
  if (!(cfg.threshold > 0.0 && cfg.threshold < 1.0)) {
    throw ConfigError("train: threshold must be in (0, 1)");
  }
  if (!(cfg.loss.stream_weight >= 0.0) || !std::isfinite(cfg.loss.stream_weight)) {
    throw ConfigError("train: stream weight must be finite and >= 0");
  }
  if (!(cfg.loss.lambda >= 0.0) || !std::isfinite(cfg.loss.lambda)) {
    throw ConfigError("train: lambda must be finite and >= 0");
  }
  if (!cfg.loss.gamma_policy.auto_effective_number && cfg.loss.gamma_policy.fixed_gamma < 0.0) {
    throw ConfigError("train: fixed gamma must be >= 0");
  }
}

AdamOptimizer::AdamOptimizer(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void AdamOptimizer::update(std::size_t slot, Eigen::MatrixXd& value, const Eigen::MatrixXd& grad) {
  if (m_.size() <= slot) {
    m_.resize(slot + 1);
    v_.resize(slot + 1);
  }
  if (m_[slot].size() == 0) {
    m_[slot] = Eigen::MatrixXd::Zero(value.rows(), value.cols());
    v_[slot] = Eigen::MatrixXd::Zero(value.rows(), value.cols());
  }
  m_[slot] = beta1_ * m_[slot] + (1.0 - beta1_) * grad;
  v_[slot] = (beta2_ * v_[slot].array() + (1.0 - beta2_) * grad.array().square()).matrix();
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  value.array() -=
      lr_ * (m_[slot].array() / bc1) / ((v_[slot].array() / bc2).sqrt() + eps_);
}

void AdamOptimizer::update(std::size_t slot, Eigen::VectorXd& value, const Eigen::VectorXd& grad) {
  Eigen::MatrixXd v = value;
  update(slot, v, Eigen::MatrixXd(grad));
  value = v.col(0);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double eval_split, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::size_t n_eval = static_cast<std::size_t>(std::floor(eval_split * n));
  std::vector<std::size_t> eval(perm.begin(), perm.begin() + n_eval);
  std::vector<std::size_t> train(perm.begin() + n_eval, perm.end());
  std::sort(eval.begin(), eval.end());
  std::sort(train.begin(), train.end());
  return {train, eval};
}

namespace {

Eigen::MatrixXd feature_matrix(const AnnotationSet& data, std::span<const std::size_t> rows) {
  Eigen::MatrixXd x(rows.size(), data.feature_dim());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::vector<double>& f = data.sample(rows[r]).features;
    for (std::size_t c = 0; c < f.size(); ++c) x(r, c) = f[c];
  }
  return x;
}

}  // namespace

TrainResult train(TwoStreamModel& model, const AnnotationSet& data, const TrainConfig& cfg) {
  validate(cfg);
  const bool learn2agree = cfg.paradigm == Paradigm::Learn2Agree;
  if (cfg.loss.agreement_loss && !learn2agree) {
    throw ConfigError("train: agreement loss requires the learn2agree paradigm");
  }
  if (learn2agree && !cfg.loss.agreement_loss) {
    throw ConfigError("train: learn2agree needs an agreement loss (ar or rmse)");
  }
  if (data.feature_dim() != model.config().input_dim) {
    throw ConfigError("train: dataset feature dim does not match model input");
  }

  model.set_lambda(learn2agree ? cfg.loss.lambda : 0.0);

  auto [train_rows, eval_rows] = cfg.eval_indices.empty()
                                     ? split_indices(data.size(), cfg.eval_split,
                                                     derive_seed(cfg.seed, "split"))
                                     : [&] {
                                         std::vector<std::size_t> eval = cfg.eval_indices;
                                         std::sort(eval.begin(), eval.end());
                                         std::vector<std::size_t> tr;
                                         for (std::size_t i = 0; i < data.size(); ++i) {
                                           if (!std::binary_search(eval.begin(), eval.end(), i)) {
                                             tr.push_back(i);
                                           }
                                         }
                                         return std::make_pair(tr, eval);
                                       }();
  if (train_rows.empty()) throw ConfigError("train: evaluation split leaves no training data");

  // Label source per paradigm: the annotator grid, or one majority-vote column.
  const std::size_t grid_cols = cfg.paradigm == Paradigm::MajorityVoting
                                    ? 1
                                    : data.annotator_count();
  std::vector<std::int8_t> mv;
  if (cfg.paradigm == Paradigm::MajorityVoting) mv = majority_vote(data, cfg.tie_break);
  auto label_at = [&](std::size_t row, std::size_t j) -> std::int8_t {
    return cfg.paradigm == Paradigm::MajorityVoting ? mv[row] : data.label(row, j);
  };

  TrainResult result;

  // Focusing parameters from the training-split annotation counts.
  result.resolved_gamma.assign(grid_cols, 0.0);
  for (std::size_t j = 0; j < grid_cols; ++j) {
    if (!cfg.loss.gamma_policy.auto_effective_number) {
      result.resolved_gamma[j] = cfg.loss.gamma_policy.fixed_gamma;
      continue;
    }
    std::size_t pos = 0, labeled = 0;
    for (std::size_t row : train_rows) {
      const std::int8_t v = label_at(row, j);
      if (v == kMissingLabel) continue;
      ++labeled;
      pos += v;
    }
    const std::size_t majority = std::max(pos, labeled - pos);
    if (labeled < 2 || majority == labeled) {
      result.resolved_gamma[j] = 2.0;
      ++result.degenerate_gamma_fallbacks;
    } else {
      result.resolved_gamma[j] = gamma_effective_number(majority, labeled);
    }
  }

  std::vector<double> alphas;
  if (learn2agree) alphas = agreement_targets(data);

  std::optional<AnnotationSet> eval_data;
  if (!eval_rows.empty()) eval_data.emplace(data.subset(eval_rows));

  AdamOptimizer adam(cfg.learning_rate);
  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));

  double best_monitored = std::numeric_limits<double>::infinity();
  std::size_t epochs_since_improvement = 0;

  std::vector<std::size_t> order = train_rows;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double sum_cls = 0.0, sum_agr = 0.0, sum_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, stop - start);
      const std::size_t b = rows.size();

      LabelGrid grid;
      grid.batch = b;
      grid.annotators = grid_cols;
      grid.labels.resize(b * grid_cols);
      for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < grid_cols; ++j) {
          grid.labels[i * grid_cols + j] = label_at(rows[i], j);
        }
      }
      std::vector<double> batch_alpha(b, 0.0);
      if (learn2agree) {
        for (std::size_t i = 0; i < b; ++i) batch_alpha[i] = alphas[rows[i]];
      }

      const Eigen::MatrixXd x = feature_matrix(data, rows);
      const ForwardCache cache = model.forward(x);
      const std::vector<double> p_tilde(cache.p_tilde.data(), cache.p_tilde.data() + b);
      const std::vector<double> y_hat(cache.y_hat.data(), cache.y_hat.data() + b);
      const JointLoss joint =
          joint_batch_loss(p_tilde, y_hat, grid, batch_alpha, cfg.loss, result.resolved_gamma);
      result.skipped_annotator_batches += joint.skipped_annotators;

      model.zero_grad();
      model.backward(cache, joint.d_p_tilde, joint.d_y_hat, cfg.detach_indicator);

      adam.step_begin();
      std::size_t slot = 0;
      for (auto& ref : model.blocks()) {
        adam.update(slot++, ref.dense->w, ref.dense->gw);
        adam.update(slot++, ref.dense->b, ref.dense->gb);
      }

      const double scale = static_cast<double>(b);
      sum_cls += joint.classifier * scale;
      sum_agr += joint.agreement * scale;
      sum_total += joint.total * scale;
    }

    EpochStats stats;
    stats.epoch = epoch;
    const double n_train = static_cast<double>(order.size());
    stats.classifier_loss = sum_cls / n_train;
    stats.agreement_loss = sum_agr / n_train;
    stats.total_loss = sum_total / n_train;
    stats.lr = adam.learning_rate();
    stats.delta = std::numeric_limits<double>::quiet_NaN();
    if (eval_data) {
      try {
        stats.delta = evaluate(model, *eval_data, cfg.threshold, true).delta;
      } catch (const std::invalid_argument&) {
        // Split too small for any kappa pair: leave delta as NaN.
      }
    }
    result.history.push_back(stats);

    const double monitored = cfg.monitor == MonitorMetric::TrainLoss
                                 ? stats.total_loss
                                 : (std::isnan(stats.delta) ? std::numeric_limits<double>::infinity()
                                                            : -stats.delta);
    if (monitored < best_monitored) {
      best_monitored = monitored;
      epochs_since_improvement = 0;
    } else {
      ++epochs_since_improvement;
      if (epochs_since_improvement >= cfg.lr_patience) {
        adam.set_learning_rate(adam.learning_rate() * cfg.lr_factor);
        epochs_since_improvement = 0;
      }
    }
  }
  return result;
}

EvalReport evaluate(const TwoStreamModel& model, const AnnotationSet& data, double threshold,
                    bool use_regularized) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("evaluate: threshold must be in (0, 1)");
  }
  std::vector<std::int8_t> preds(data.size());
  constexpr std::size_t kChunk = 512;
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < data.size(); start += kChunk) {
    const std::size_t stop = std::min(data.size(), start + kChunk);
    rows.resize(stop - start);
    std::iota(rows.begin(), rows.end(), start);
    const Eigen::MatrixXd x = feature_matrix(data, rows);
    const ForwardCache cache = model.forward(x);
    const Eigen::VectorXd& p = use_regularized ? cache.p_tilde : cache.p_hat;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      preds[start + i] = p(static_cast<Eigen::Index>(i)) >= threshold ? 1 : 0;
    }
  }
  return agreement_ratio(preds, data);
}

std::string history_to_csv(const std::vector<EpochStats>& history) {
  std::string out = "epoch,classifier_loss,agreement_loss,total_loss,lr,delta\n";
  char buf[256];
  for (const EpochStats& s : history) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.epoch,
                  s.classifier_loss, s.agreement_loss, s.total_loss, s.lr, s.delta);
    out += buf;
  }
  return out;
}

}  // namespace agreelearn
