#include "agreelearn/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace agreelearn {

ScalarLoss ar_loss(double y_hat, double alpha) {
  if (!(y_hat >= 0.0 && y_hat <= 1.0)) throw std::invalid_argument("ar_loss: y_hat outside [0, 1]");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("ar_loss: alpha outside [0, 1]");
  const double e = y_hat - alpha;
  ScalarLoss out;
  out.value = std::max(alpha * e, (alpha - 1.0) * e);
  if (e > 0.0) {
    out.grad = alpha;
  } else if (e < 0.0) {
    out.grad = alpha - 1.0;
  } else {
    out.grad = 0.0;  // subgradient at the kink
  }
  return out;
}

VectorLoss rmse_loss(std::span<const double> y_hat, std::span<const double> alpha) {
  if (y_hat.size() != alpha.size()) throw std::invalid_argument("rmse_loss: length mismatch");
  if (y_hat.empty()) throw std::invalid_argument("rmse_loss: empty batch");
  const double b = static_cast<double>(y_hat.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < y_hat.size(); ++i) {
    const double e = y_hat[i] - alpha[i];
    sq += e * e;
  }
  VectorLoss out;
  out.value = std::sqrt(sq / b);
  out.grad.assign(y_hat.size(), 0.0);
  if (out.value > 0.0) {
    for (std::size_t i = 0; i < y_hat.size(); ++i) {
      out.grad[i] = (y_hat[i] - alpha[i]) / (b * out.value);
    }
  }
  return out;
}

ScalarLoss focal_loss(double p, int target, double gamma) {
  if (gamma < 0.0) throw std::invalid_argument("focal_loss: gamma must be >= 0");
  if (target != 0 && target != 1) throw std::invalid_argument("focal_loss: target must be 0 or 1");
  p = clamp_prob(p);
  ScalarLoss out;
  if (target == 1) {
    const double log_p = std::log(p);
    if (gamma == 0.0) {
      out.value = -log_p;
      out.grad = -1.0 / p;
      return out;
    }
    const double mod = std::pow(1.0 - p, gamma);
    out.value = -mod * log_p;
    out.grad = gamma * std::pow(1.0 - p, gamma - 1.0) * log_p - mod / p;
  } else {
    const double log_q = std::log(1.0 - p);
    if (gamma == 0.0) {
      out.value = -log_q;
      out.grad = 1.0 / (1.0 - p);
      return out;
    }
    const double mod = std::pow(p, gamma);
    out.value = -mod * log_q;
    out.grad = -gamma * std::pow(p, gamma - 1.0) * log_q + mod / (1.0 - p);
  }
  return out;
}

double gamma_effective_number(std::size_t n_majority, std::size_t n_labeled) {
  if (n_labeled < 2) throw std::invalid_argument("gamma_effective_number: need >= 2 labels");
  if (n_majority == 0 || n_majority >= n_labeled) {
    throw std::invalid_argument("gamma_effective_number: one class absent");
  }
  const double n = static_cast<double>(n_labeled);
  const double beta = (n - 1.0) / n;
  const double num = 1.0 - std::pow(beta, static_cast<double>(n_majority));
  const double den = 1.0 - std::pow(beta, static_cast<double>(n_labeled - n_majority));
  return num / den;
}

WklLoss wkl_loss(std::span<const double> p_tilde, std::span<const std::int8_t> labels) {
  const std::size_t b = p_tilde.size();
  if (labels.size() != b) throw std::invalid_argument("wkl_loss: length mismatch");
  if (b < 2) throw std::invalid_argument("wkl_loss: batch must have >= 2 samples");

  std::size_t n_pos = 0;
  for (std::int8_t g : labels) {
    if (g != 0 && g != 1) throw std::invalid_argument("wkl_loss: labels must be binary");
    n_pos += g;
  }
  if (n_pos == 0 || n_pos == b) {
    throw std::invalid_argument("wkl_loss: labels are single-class, kappa undefined");
  }

  // Soft confusion matrix: sample i adds p_i to the predicted-positive row
  // and 1 - p_i to the predicted-negative row of its label column.
  const double n = static_cast<double>(b);
  double row1 = 0.0;  // soft count of positive predictions
  double agree = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    row1 += p_tilde[i];
    agree += labels[i] == 1 ? p_tilde[i] : 1.0 - p_tilde[i];
  }
  const double row0 = n - row1;
  const double col1 = static_cast<double>(n_pos);
  const double col0 = n - col1;

  const double p_o = agree / n;
  const double p_e = (row0 * col0 + row1 * col1) / (n * n);
  double kappa = (p_o - p_e) / (1.0 - p_e);

  const bool clamped = kappa > 1.0 - kProbEps;
  if (clamped) kappa = 1.0 - kProbEps;

  WklLoss out;
  out.kappa = kappa;
  out.raw = std::log(1.0 - kappa);
  out.value = sigmoid(out.raw);

  out.grad.assign(b, 0.0);
  if (!clamped) {
    const double dvalue_dkappa = -out.value * (1.0 - out.value) / (1.0 - kappa);
    for (std::size_t i = 0; i < b; ++i) {
      const double dpo = (labels[i] == 1 ? 1.0 : -1.0) / n;
      const double dpe = (col1 - col0) / (n * n);
      const double dkappa = (dpo * (1.0 - p_e) + dpe * (p_o - 1.0)) / ((1.0 - p_e) * (1.0 - p_e));
      out.grad[i] = dvalue_dkappa * dkappa;
    }
  }
  return out;
}

MultiAnnotatorLoss multi_annotator_loss(std::span<const double> p_tilde, const LabelGrid& grid,
                                        std::span<const double> per_annotator_gamma,
                                        InnerLoss inner) {
  const std::size_t b = grid.batch;
  const std::size_t j_all = grid.annotators;
  if (p_tilde.size() != b) throw std::invalid_argument("multi_annotator_loss: batch mismatch");
  if (grid.labels.size() != b * j_all) throw std::invalid_argument("multi_annotator_loss: grid shape");
  if (inner == InnerLoss::Focal && per_annotator_gamma.size() != j_all) {
    throw std::invalid_argument("multi_annotator_loss: gamma per annotator required");
  }

  MultiAnnotatorLoss out;
  out.grad.assign(b, 0.0);

  std::size_t any_present = 0;
  struct Contribution {
    double value;
    std::vector<std::pair<std::size_t, double>> grad;  // (sample, d/dp)
  };
  std::vector<Contribution> contributions;

  for (std::size_t j = 0; j < j_all; ++j) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < b; ++i) {
      if (grid.at(i, j) != kMissingLabel) idx.push_back(i);
    }
    if (idx.empty()) continue;
    ++any_present;

    if (inner == InnerLoss::Focal) {
      Contribution c;
      c.value = 0.0;
      const double count = static_cast<double>(idx.size());
      for (std::size_t i : idx) {
        const ScalarLoss fl = focal_loss(p_tilde[i], grid.at(i, j), per_annotator_gamma[j]);
        c.value += fl.value / count;
        c.grad.emplace_back(i, fl.grad / count);
      }
      contributions.push_back(std::move(c));
    } else {
      std::size_t pos = 0;
      for (std::size_t i : idx) pos += grid.at(i, j);
      if (idx.size() < 2 || pos == 0 || pos == idx.size()) {
        ++out.skipped;  // kappa undefined for this annotator batch
        continue;
      }
      std::vector<double> sub_p(idx.size());
      std::vector<std::int8_t> sub_g(idx.size());
      for (std::size_t k = 0; k < idx.size(); ++k) {
        sub_p[k] = p_tilde[idx[k]];
        sub_g[k] = grid.at(idx[k], j);
      }
      const WklLoss wkl = wkl_loss(sub_p, sub_g);
      Contribution c;
      c.value = wkl.value;
      for (std::size_t k = 0; k < idx.size(); ++k) c.grad.emplace_back(idx[k], wkl.grad[k]);
      contributions.push_back(std::move(c));
    }
  }

  if (any_present == 0) {
    throw std::invalid_argument("multi_annotator_loss: no annotator labeled this batch");
  }
  out.contributing = contributions.size();
  if (contributions.empty()) return out;  // all annotator batches unusable: zero loss

  const double scale = 1.0 / static_cast<double>(contributions.size());
  for (const Contribution& c : contributions) {
    out.value += scale * c.value;
    for (auto [i, g] : c.grad) out.grad[i] += scale * g;
  }
  return out;
}

JointLoss joint_batch_loss(std::span<const double> p_tilde, std::span<const double> y_hat,
                           const LabelGrid& grid, std::span<const double> alphas,
                           const LossConfig& cfg, std::span<const double> per_annotator_gamma) {
  const std::size_t b = p_tilde.size();
  JointLoss out;
  out.d_p_tilde.assign(b, 0.0);
  out.d_y_hat.assign(b, 0.0);

  const InnerLoss inner =
      cfg.classifier_loss == ClassifierLoss::FocalCe ? InnerLoss::Focal : InnerLoss::Wkl;
  MultiAnnotatorLoss cls = multi_annotator_loss(p_tilde, grid, per_annotator_gamma, inner);
  out.classifier = cls.value;
  out.d_p_tilde = std::move(cls.grad);
  out.skipped_annotators = cls.skipped;

  if (cfg.agreement_loss) {
    if (y_hat.size() != b || alphas.size() != b) {
      throw std::invalid_argument("joint_batch_loss: agreement stream shape mismatch");
    }
    if (*cfg.agreement_loss == AgreementLoss::Ar) {
      const double scale = 1.0 / static_cast<double>(b);
      for (std::size_t i = 0; i < b; ++i) {
        const ScalarLoss ar = ar_loss(y_hat[i], alphas[i]);
        out.agreement += scale * ar.value;
        out.d_y_hat[i] = cfg.stream_weight * scale * ar.grad;
      }
    } else {
      const VectorLoss rmse = rmse_loss(y_hat, alphas);
      out.agreement = rmse.value;
      for (std::size_t i = 0; i < b; ++i) out.d_y_hat[i] = cfg.stream_weight * rmse.grad[i];
    }
  }

  out.total = out.classifier + cfg.stream_weight * out.agreement;
  return out;
}

}  // namespace agreelearn
