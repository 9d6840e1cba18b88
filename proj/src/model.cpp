#include "agreelearn/model.hpp"

#include <cmath>
#include <stdexcept>

namespace agreelearn {

double regularize(double p_hat, double y_tilde, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("regularize: lambda must be >= 0");
  if (!(p_hat > 0.0 && p_hat < 1.0)) throw std::invalid_argument("regularize: p_hat outside (0, 1)");
  if (!(y_tilde >= 0.0 && y_tilde <= 1.0)) {
    throw std::invalid_argument("regularize: y_tilde outside [0, 1]");
  }
  return sigmoid(logit(p_hat) + lambda * (2.0 * y_tilde - 1.0));
}

TwoStreamModel::TwoStreamModel(ModelConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.input_dim == 0) throw ConfigError("model: input_dim must be set");
  if (cfg_.lambda < 0.0) throw ConfigError("model: lambda must be >= 0");

  Rng rng(derive_seed(cfg_.init_seed, "init"));
  std::size_t width = cfg_.input_dim;
  for (std::size_t h : cfg_.hidden_widths) {
    if (h == 0) throw ConfigError("model: hidden width must be >= 1");
    backbone_.emplace_back(h, width);
    backbone_.back().init_uniform(rng);
    width = h;
  }
  classifier_ = Dense(2, width);
  classifier_.init_uniform(rng);

  head_.variant = cfg_.agreement_variant;
  head_.bins = cfg_.bins;
  if (cfg_.agreement_variant == AgreementVariant::Distributional) {
    if (cfg_.bins < 2) throw ConfigError("model: bins must be >= 2");
    if (cfg_.indicator_hidden == 0) throw ConfigError("model: indicator_hidden must be >= 1");
    head_.projection = Dense(cfg_.bins + 1, width);
    head_.projection.init_uniform(rng);
    head_.indicator_hidden = Dense(cfg_.indicator_hidden, cfg_.bins + 1);
    head_.indicator_hidden.init_uniform(rng);
    head_.indicator_out = Dense(1, cfg_.indicator_hidden);
    head_.indicator_out.init_uniform(rng);
  } else {
    head_.linear = Dense(1, width);
    head_.linear.init_uniform(rng);
  }
}

void TwoStreamModel::set_lambda(double lambda) {
  if (lambda < 0.0) throw ConfigError("model: lambda must be >= 0");
  cfg_.lambda = lambda;
}

ForwardCache TwoStreamModel::forward(const Eigen::MatrixXd& batch) const {
  if (static_cast<std::size_t>(batch.cols()) != cfg_.input_dim) {
    throw std::invalid_argument("forward: batch width does not match model input");
  }
  const Eigen::Index b = batch.rows();
  ForwardCache c;
  c.input = batch;

  Eigen::MatrixXd x = batch;
  for (const Dense& layer : backbone_) {
    c.pre.push_back(affine(layer, x));
    c.act.push_back(relu(c.pre.back()));
    x = c.act.back();
  }
  const Eigen::MatrixXd& features = c.act.empty() ? c.input : c.act.back();

  c.cls_logits = affine(classifier_, features);
  c.p_hat.resize(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    // Two-logit softmax, positive class = column 1.
    c.p_hat(i) = clamp_prob(sigmoid(c.cls_logits(i, 1) - c.cls_logits(i, 0)));
  }

  c.y_hat.resize(b);
  c.y_tilde.resize(b);
  if (cfg_.agreement_variant == AgreementVariant::Distributional) {
    c.dist = softmax_rows(affine(head_.projection, features));
    Eigen::VectorXd bin_values(cfg_.bins + 1);
    for (std::size_t k = 0; k <= cfg_.bins; ++k) {
      bin_values(static_cast<Eigen::Index>(k)) =
          static_cast<double>(k) / static_cast<double>(cfg_.bins);
    }
    c.y_hat = c.dist * bin_values;
    c.ind_pre = affine(head_.indicator_hidden, c.dist);
    c.ind_act = relu(c.ind_pre);
    c.ind_out = affine(head_.indicator_out, c.ind_act).col(0);
    for (Eigen::Index i = 0; i < b; ++i) c.y_tilde(i) = sigmoid(c.ind_out(i));
  } else {
    c.lin_pre = affine(head_.linear, features).col(0);
    for (Eigen::Index i = 0; i < b; ++i) c.y_hat(i) = sigmoid(c.lin_pre(i));
    c.y_tilde = c.y_hat;
  }

  c.p_tilde.resize(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    c.p_tilde(i) = regularize(c.p_hat(i), c.y_tilde(i), cfg_.lambda);
  }
  return c;
}

void TwoStreamModel::backward(const ForwardCache& cache, std::span<const double> d_p_tilde,
                              std::span<const double> d_y_hat, bool detach_indicator) {
  const Eigen::Index b = cache.input.rows();
  if (d_p_tilde.size() != static_cast<std::size_t>(b) ||
      d_y_hat.size() != static_cast<std::size_t>(b)) {
    throw std::invalid_argument("backward: gradient length does not match cached batch");
  }
  if (cache.pre.size() != backbone_.size()) {
    throw std::invalid_argument("backward: stale cache");
  }
  const Eigen::MatrixXd& features = cache.act.empty() ? cache.input : cache.act.back();

  // Through the regularizer: p_tilde = sigmoid(logit(p_hat) + lambda (2 y_tilde - 1)).
  Eigen::VectorXd d_logit(b);   // d total / d (z1 - z0)
  Eigen::VectorXd d_y_tilde(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const double s = cache.p_tilde(i) * (1.0 - cache.p_tilde(i));
    d_logit(i) = d_p_tilde[i] * s;
    d_y_tilde(i) = detach_indicator ? 0.0 : d_p_tilde[i] * s * 2.0 * cfg_.lambda;
  }

  Eigen::MatrixXd d_cls(b, 2);
  d_cls.col(1) = d_logit;
  d_cls.col(0) = -d_logit;
  Eigen::MatrixXd d_features = affine_backward(classifier_, features, d_cls);

  if (cfg_.agreement_variant == AgreementVariant::Distributional) {
    // y_hat path: linear readout over the distribution.
    Eigen::VectorXd bin_values(cfg_.bins + 1);
    for (std::size_t k = 0; k <= cfg_.bins; ++k) {
      bin_values(static_cast<Eigen::Index>(k)) =
          static_cast<double>(k) / static_cast<double>(cfg_.bins);
    }
    Eigen::MatrixXd d_dist = Eigen::Map<const Eigen::VectorXd>(d_y_hat.data(), b) *
                             bin_values.transpose();  // B x (n+1)

    // y_tilde path: logistic, affine, relu, affine back into the distribution.
    Eigen::VectorXd d_ind_out(b);
    for (Eigen::Index i = 0; i < b; ++i) {
      d_ind_out(i) = d_y_tilde(i) * cache.y_tilde(i) * (1.0 - cache.y_tilde(i));
    }
    Eigen::MatrixXd d_ind_act = affine_backward(head_.indicator_out, cache.ind_act, d_ind_out);
    Eigen::MatrixXd d_ind_pre = relu_backward(cache.ind_pre, d_ind_act);
    d_dist += affine_backward(head_.indicator_hidden, cache.dist, d_ind_pre);

    const Eigen::MatrixXd d_proj = softmax_backward(cache.dist, d_dist);
    d_features += affine_backward(head_.projection, features, d_proj);
  } else {
    Eigen::MatrixXd d_lin_pre(b, 1);
    for (Eigen::Index i = 0; i < b; ++i) {
      const double s = cache.y_hat(i) * (1.0 - cache.y_hat(i));
      d_lin_pre(i, 0) = (d_y_hat[i] + d_y_tilde(i)) * s;
    }
    d_features += affine_backward(head_.linear, features, d_lin_pre);
  }

  Eigen::MatrixXd dx = d_features;
  for (std::size_t l = backbone_.size(); l-- > 0;) {
    const Eigen::MatrixXd d_pre = relu_backward(cache.pre[l], dx);
    const Eigen::MatrixXd& x_in = l == 0 ? cache.input : cache.act[l - 1];
    dx = affine_backward(backbone_[l], x_in, d_pre);
  }
}

void TwoStreamModel::zero_grad() {
  for (auto& ref : blocks()) ref.dense->zero_grad();
}

std::size_t TwoStreamModel::parameter_count() const {
  std::size_t n = 0;
  for (const Dense& d : backbone_) n += d.param_count();
  n += classifier_.param_count();
  if (cfg_.agreement_variant == AgreementVariant::Distributional) {
    n += head_.projection.param_count() + head_.indicator_hidden.param_count() +
         head_.indicator_out.param_count();
  } else {
    n += head_.linear.param_count();
  }
  return n;
}

std::vector<TwoStreamModel::BlockRef> TwoStreamModel::blocks() {
  std::vector<BlockRef> out;
  for (std::size_t l = 0; l < backbone_.size(); ++l) {
    out.push_back({"backbone." + std::to_string(l), &backbone_[l]});
  }
  out.push_back({"classifier", &classifier_});
  if (cfg_.agreement_variant == AgreementVariant::Distributional) {
    out.push_back({"agreement.projection", &head_.projection});
    out.push_back({"agreement.indicator_hidden", &head_.indicator_hidden});
    out.push_back({"agreement.indicator_out", &head_.indicator_out});
  } else {
    out.push_back({"agreement.linear", &head_.linear});
  }
  return out;
}

namespace {

nlohmann::json dense_to_json(const Dense& d) {
  nlohmann::json j;
  j["rows"] = d.w.rows();
  j["cols"] = d.w.cols();
  std::vector<double> w;
  w.reserve(static_cast<std::size_t>(d.w.size()));
  for (Eigen::Index r = 0; r < d.w.rows(); ++r) {
    for (Eigen::Index c = 0; c < d.w.cols(); ++c) w.push_back(d.w(r, c));
  }
  j["w"] = w;
  j["b"] = std::vector<double>(d.b.data(), d.b.data() + d.b.size());
  return j;
}

void dense_from_json(const nlohmann::json& j, Dense& d) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  if (rows != d.w.rows() || cols != d.w.cols()) {
    throw ValidationError("checkpoint: block shape mismatch");
  }
  const auto w = j.at("w").get<std::vector<double>>();
  const auto b = j.at("b").get<std::vector<double>>();
  if (w.size() != static_cast<std::size_t>(d.w.size()) ||
      b.size() != static_cast<std::size_t>(d.b.size())) {
    throw ValidationError("checkpoint: block data length mismatch");
  }
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) d.w(r, c) = w[k++];
  }
  for (Eigen::Index r = 0; r < d.b.size(); ++r) d.b(r) = b[static_cast<std::size_t>(r)];
}

}  // namespace

nlohmann::json TwoStreamModel::save_checkpoint() const {
  nlohmann::json doc;
  doc["version"] = 1;
  doc["model"]["input_dim"] = cfg_.input_dim;
  doc["model"]["hidden_widths"] = cfg_.hidden_widths;
  doc["model"]["agreement_variant"] =
      cfg_.agreement_variant == AgreementVariant::Distributional ? "distributional" : "linear";
  doc["model"]["bins"] = cfg_.bins;
  doc["model"]["indicator_hidden"] = cfg_.indicator_hidden;
  doc["model"]["lambda"] = cfg_.lambda;
  doc["model"]["init_seed"] = cfg_.init_seed;

  nlohmann::json blocks = nlohmann::json::object();
  TwoStreamModel* self = const_cast<TwoStreamModel*>(this);
  for (const auto& ref : self->blocks()) blocks[ref.name] = dense_to_json(*ref.dense);
  doc["blocks"] = blocks;
  return doc;
}

TwoStreamModel TwoStreamModel::load_checkpoint(const nlohmann::json& doc) {
  if (!doc.contains("version")) throw ValidationError("checkpoint: missing version field");
  if (doc.at("version").get<int>() != 1) throw ValidationError("checkpoint: unsupported version");
  const nlohmann::json& m = doc.at("model");
  ModelConfig cfg;
  cfg.input_dim = m.at("input_dim").get<std::size_t>();
  cfg.hidden_widths = m.at("hidden_widths").get<std::vector<std::size_t>>();
  const std::string variant = m.at("agreement_variant").get<std::string>();
  if (variant == "distributional") {
    cfg.agreement_variant = AgreementVariant::Distributional;
  } else if (variant == "linear") {
    cfg.agreement_variant = AgreementVariant::Linear;
  } else {
    throw ValidationError("checkpoint: unknown agreement variant '" + variant + "'");
  }
  cfg.bins = m.at("bins").get<std::size_t>();
  cfg.indicator_hidden = m.at("indicator_hidden").get<std::size_t>();
  cfg.lambda = m.at("lambda").get<double>();
  cfg.init_seed = m.at("init_seed").get<std::uint64_t>();

  TwoStreamModel model(cfg);
  for (auto& ref : model.blocks()) {
    if (!doc.at("blocks").contains(ref.name)) {
      throw ValidationError("checkpoint: missing block '" + ref.name + "'");
    }
    dense_from_json(doc.at("blocks").at(ref.name), *ref.dense);
  }
  return model;
}

double GradCheckReport::max_rel_error() const {
  double m = 0.0;
  for (const GradCheckBlock& b : blocks) m = std::max(m, b.max_rel_error);
  return m;
}

namespace {

std::vector<double> resolve_gammas(const LabelGrid& grid, const LossConfig& cfg) {
  std::vector<double> gammas(grid.annotators, 0.0);
  for (std::size_t j = 0; j < grid.annotators; ++j) {
    if (!cfg.gamma_policy.auto_effective_number) {
      gammas[j] = cfg.gamma_policy.fixed_gamma;
      continue;
    }
    std::size_t pos = 0, labeled = 0;
    for (std::size_t i = 0; i < grid.batch; ++i) {
      if (grid.at(i, j) == kMissingLabel) continue;
      ++labeled;
      pos += grid.at(i, j);
    }
    const std::size_t majority = std::max(pos, labeled - pos);
    if (labeled < 2 || majority == labeled) {
      gammas[j] = 2.0;  // effective-number formula undefined with one class
    } else {
      gammas[j] = gamma_effective_number(majority, labeled);
    }
  }
  return gammas;
}

double total_loss(TwoStreamModel& model, const Eigen::MatrixXd& batch, const LabelGrid& grid,
                  std::span<const double> alphas, const LossConfig& cfg,
                  std::span<const double> gammas) {
  const ForwardCache c = model.forward(batch);
  const std::vector<double> p_tilde(c.p_tilde.data(), c.p_tilde.data() + c.p_tilde.size());
  const std::vector<double> y_hat(c.y_hat.data(), c.y_hat.data() + c.y_hat.size());
  return joint_batch_loss(p_tilde, y_hat, grid, alphas, cfg, gammas).total;
}

}  // namespace

GradCheckReport grad_check(TwoStreamModel& model, const Eigen::MatrixXd& batch,
                           const LabelGrid& grid, std::span<const double> alphas,
                           const LossConfig& loss_cfg, double fd_step) {
  const std::vector<double> gammas = resolve_gammas(grid, loss_cfg);

  // Analytic gradients.
  model.zero_grad();
  const ForwardCache cache = model.forward(batch);
  const std::vector<double> p_tilde(cache.p_tilde.data(),
                                    cache.p_tilde.data() + cache.p_tilde.size());
  const std::vector<double> y_hat(cache.y_hat.data(), cache.y_hat.data() + cache.y_hat.size());
  const JointLoss joint = joint_batch_loss(p_tilde, y_hat, grid, alphas, loss_cfg, gammas);
  model.backward(cache, joint.d_p_tilde, joint.d_y_hat);

  GradCheckReport report;
  for (auto& ref : model.blocks()) {
    GradCheckBlock block{ref.name, 0.0};
    auto check_entry = [&](double& value, double analytic) {
      const double saved = value;
      value = saved + fd_step;
      const double up = total_loss(model, batch, grid, alphas, loss_cfg, gammas);
      value = saved - fd_step;
      const double down = total_loss(model, batch, grid, alphas, loss_cfg, gammas);
      value = saved;
      const double numeric = (up - down) / (2.0 * fd_step);
      const double scale = std::max({std::abs(analytic), std::abs(numeric), 1.0});
      block.max_rel_error = std::max(block.max_rel_error, std::abs(numeric - analytic) / scale);
    };
    Dense& d = *ref.dense;
    for (Eigen::Index r = 0; r < d.w.rows(); ++r) {
      for (Eigen::Index c = 0; c < d.w.cols(); ++c) check_entry(d.w(r, c), d.gw(r, c));
    }
    for (Eigen::Index r = 0; r < d.b.size(); ++r) check_entry(d.b(r), d.gb(r));
    report.blocks.push_back(block);
  }
  return report;
}

}  // namespace agreelearn
