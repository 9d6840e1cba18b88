#include "agreelearn/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

namespace agreelearn {

namespace {

using nlohmann::json;

template <typename T>
T enum_from(const std::string& text, const std::map<std::string, T>& table,
            const std::string& field) {
  const auto it = table.find(text);
  if (it == table.end()) throw ConfigError("config: unknown " + field + " '" + text + "'");
  return it->second;
}

const std::map<std::string, ClassifierLoss> kClassifierLoss{{"focal_ce", ClassifierLoss::FocalCe},
                                                            {"wkl", ClassifierLoss::Wkl}};
const std::map<std::string, AgreementLoss> kAgreementLoss{{"ar", AgreementLoss::Ar},
                                                          {"rmse", AgreementLoss::Rmse}};
const std::map<std::string, AgreementVariant> kVariant{
    {"distributional", AgreementVariant::Distributional}, {"linear", AgreementVariant::Linear}};
const std::map<std::string, Paradigm> kParadigm{{"majority_voting", Paradigm::MajorityVoting},
                                                {"learn_from_all", Paradigm::LearnFromAll},
                                                {"learn2agree", Paradigm::Learn2Agree}};
const std::map<std::string, MonitorMetric> kMonitor{{"train_loss", MonitorMetric::TrainLoss},
                                                    {"delta", MonitorMetric::Delta}};
const std::map<std::string, TieBreak> kTieBreak{{"positive", TieBreak::Positive},
                                                {"negative", TieBreak::Negative}};
const std::map<std::string, FileFormat> kFormat{{"jsonl", FileFormat::Jsonl},
                                                {"csv", FileFormat::Csv}};

template <typename T>
std::string enum_name(T value, const std::map<std::string, T>& table) {
  for (const auto& [name, v] : table) {
    if (v == value) return name;
  }
  return "?";
}

SynthSpec parse_synth(const json& s) {
  SynthSpec spec;
  spec.n_samples = s.at("n_samples").get<std::size_t>();
  spec.feature_dim = s.at("feature_dim").get<std::size_t>();
  if (s.contains("class_balance")) spec.class_balance = s.at("class_balance").get<double>();
  if (s.contains("boundary_noise")) spec.boundary_noise = s.at("boundary_noise").get<double>();
  if (s.contains("missing_rate")) spec.missing_rate = s.at("missing_rate").get<double>();
  if (s.contains("seed")) spec.seed = s.at("seed").get<std::uint64_t>();
  if (!s.contains("annotators") || !s.at("annotators").is_array()) {
    throw ConfigError("config: synth needs an \"annotators\" array");
  }
  for (const json& a : s.at("annotators")) {
    AnnotatorSpec as;
    as.target_kappa = a.at("target_kappa").get<double>();
    if (a.contains("flip_bias")) as.flip_bias = a.at("flip_bias").get<double>();
    spec.annotators.push_back(as);
  }
  return spec;
}

json synth_to_json(const SynthSpec& spec) {
  json s;
  s["n_samples"] = spec.n_samples;
  s["feature_dim"] = spec.feature_dim;
  s["class_balance"] = spec.class_balance;
  s["boundary_noise"] = spec.boundary_noise;
  s["missing_rate"] = spec.missing_rate;
  s["seed"] = spec.seed;
  s["annotators"] = json::array();
  for (const AnnotatorSpec& a : spec.annotators) {
    s["annotators"].push_back({{"target_kappa", a.target_kappa}, {"flip_bias", a.flip_bias}});
  }
  return s;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& doc) {
  ExperimentConfig cfg;
  if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
  if (doc.contains("dataset")) cfg.dataset_path = doc.at("dataset").get<std::string>();
  if (doc.contains("format")) {
    cfg.format = enum_from(doc.at("format").get<std::string>(), kFormat, "format");
  }
  if (doc.contains("synth")) cfg.synth = parse_synth(doc.at("synth"));
  if (doc.contains("out")) cfg.out_dir = doc.at("out").get<std::string>();
  if (doc.contains("checkpoint")) cfg.checkpoint_path = doc.at("checkpoint").get<std::string>();
  if (doc.contains("quiet")) cfg.quiet = doc.at("quiet").get<bool>();
  if (doc.contains("use_regularized")) cfg.use_regularized = doc.at("use_regularized").get<bool>();
  if (doc.contains("repeat_seeds")) {
    cfg.repeat_seeds = doc.at("repeat_seeds").get<std::vector<std::uint64_t>>();
  }
  if (doc.contains("axes")) {
    for (const auto& [axis, values] : doc.at("axes").items()) {
      if (!values.is_array()) throw ConfigError("config: axis '" + axis + "' must be an array");
      std::vector<std::string> items;
      for (const json& v : values) {
        items.push_back(v.is_string() ? v.get<std::string>() : v.dump());
      }
      cfg.axes[axis] = items;
    }
  }

  if (doc.contains("paradigm")) {
    cfg.train.paradigm = enum_from(doc.at("paradigm").get<std::string>(), kParadigm, "paradigm");
  }
  if (doc.contains("loss")) {
    const json& l = doc.at("loss");
    if (l.contains("classifier")) {
      cfg.train.loss.classifier_loss =
          enum_from(l.at("classifier").get<std::string>(), kClassifierLoss, "classifier loss");
    }
    if (l.contains("agreement") && !l.at("agreement").is_null()) {
      cfg.train.loss.agreement_loss =
          enum_from(l.at("agreement").get<std::string>(), kAgreementLoss, "agreement loss");
    }
    if (l.contains("gamma")) {
      const json& g = l.at("gamma");
      if (g.is_string() && g.get<std::string>() == "auto") {
        cfg.train.loss.gamma_policy = GammaPolicy{true, 0.0};
      } else if (g.is_number()) {
        cfg.train.loss.gamma_policy = GammaPolicy{false, g.get<double>()};
      } else {
        throw ConfigError("config: loss.gamma must be \"auto\" or a number");
      }
    }
    if (l.contains("mu")) cfg.train.loss.stream_weight = l.at("mu").get<double>();
    if (l.contains("lambda")) cfg.train.loss.lambda = l.at("lambda").get<double>();
  }
  if (doc.contains("model")) {
    const json& m = doc.at("model");
    if (m.contains("hidden")) {
      cfg.model.hidden_widths = m.at("hidden").get<std::vector<std::size_t>>();
    }
    if (m.contains("agreement_variant")) {
      cfg.model.agreement_variant =
          enum_from(m.at("agreement_variant").get<std::string>(), kVariant, "agreement variant");
    }
    if (m.contains("bins")) cfg.model.bins = m.at("bins").get<std::size_t>();
    if (m.contains("indicator_hidden")) {
      cfg.model.indicator_hidden = m.at("indicator_hidden").get<std::size_t>();
    }
  }
  if (doc.contains("train")) {
    const json& t = doc.at("train");
    if (t.contains("epochs")) cfg.train.epochs = t.at("epochs").get<std::size_t>();
    if (t.contains("learning_rate")) cfg.train.learning_rate = t.at("learning_rate").get<double>();
    if (t.contains("lr_patience")) cfg.train.lr_patience = t.at("lr_patience").get<std::size_t>();
    if (t.contains("lr_factor")) cfg.train.lr_factor = t.at("lr_factor").get<double>();
    if (t.contains("batch_size")) cfg.train.batch_size = t.at("batch_size").get<std::size_t>();
    if (t.contains("eval_split")) cfg.train.eval_split = t.at("eval_split").get<double>();
    if (t.contains("eval_indices")) {
      cfg.train.eval_indices = t.at("eval_indices").get<std::vector<std::size_t>>();
    }
    if (t.contains("monitor")) {
      cfg.train.monitor = enum_from(t.at("monitor").get<std::string>(), kMonitor, "monitor");
    }
    if (t.contains("detach_indicator")) {
      cfg.train.detach_indicator = t.at("detach_indicator").get<bool>();
    }
    if (t.contains("tie_break")) {
      cfg.train.tie_break = enum_from(t.at("tie_break").get<std::string>(), kTieBreak, "tie_break");
    }
    if (t.contains("threshold")) cfg.train.threshold = t.at("threshold").get<double>();
  }
  cfg.train.seed = cfg.seed.value_or(0);
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return parse_experiment_config(doc);
}

nlohmann::json resolved_config(const ExperimentConfig& cfg) {
  json doc;
  doc["seed"] = cfg.seed.value_or(0);
  if (cfg.dataset_path) doc["dataset"] = *cfg.dataset_path;
  doc["format"] = enum_name(cfg.format, kFormat);
  if (cfg.synth) doc["synth"] = synth_to_json(*cfg.synth);
  doc["paradigm"] = enum_name(cfg.train.paradigm, kParadigm);
  doc["loss"]["classifier"] = enum_name(cfg.train.loss.classifier_loss, kClassifierLoss);
  doc["loss"]["agreement"] = cfg.train.loss.agreement_loss
                                 ? json(enum_name(*cfg.train.loss.agreement_loss, kAgreementLoss))
                                 : json(nullptr);
  doc["loss"]["gamma"] = cfg.train.loss.gamma_policy.auto_effective_number
                             ? json("auto")
                             : json(cfg.train.loss.gamma_policy.fixed_gamma);
  doc["loss"]["mu"] = cfg.train.loss.stream_weight;
  doc["loss"]["lambda"] = cfg.train.loss.lambda;
  doc["model"]["hidden"] = cfg.model.hidden_widths;
  doc["model"]["agreement_variant"] = enum_name(cfg.model.agreement_variant, kVariant);
  doc["model"]["bins"] = cfg.model.bins;
  doc["model"]["indicator_hidden"] = cfg.model.indicator_hidden;
  doc["train"]["epochs"] = cfg.train.epochs;
  doc["train"]["learning_rate"] = cfg.train.learning_rate;
  doc["train"]["lr_patience"] = cfg.train.lr_patience;
  doc["train"]["lr_factor"] = cfg.train.lr_factor;
  doc["train"]["batch_size"] = cfg.train.batch_size;
  doc["train"]["eval_split"] = cfg.train.eval_split;
  doc["train"]["eval_indices"] = cfg.train.eval_indices;
  doc["train"]["monitor"] = enum_name(cfg.train.monitor, kMonitor);
  doc["train"]["detach_indicator"] = cfg.train.detach_indicator;
  doc["train"]["tie_break"] = enum_name(cfg.train.tie_break, kTieBreak);
  doc["train"]["threshold"] = cfg.train.threshold;
  doc["out"] = cfg.out_dir;
  if (cfg.checkpoint_path) doc["checkpoint"] = *cfg.checkpoint_path;
  doc["repeat_seeds"] = cfg.repeat_seeds;
  doc["quiet"] = cfg.quiet;
  doc["use_regularized"] = cfg.use_regularized;
  return doc;
}

namespace {

SynthSpec resolved_synth_spec(const ExperimentConfig& cfg) {
  SynthSpec spec = *cfg.synth;
  if (spec.seed == 0) spec.seed = derive_seed(cfg.seed.value_or(0), "data");
  return spec;
}

}  // namespace

AnnotationSet experiment_data(const ExperimentConfig& cfg) {
  if (cfg.dataset_path.has_value() == cfg.synth.has_value()) {
    throw ConfigError("config: exactly one of \"dataset\" and \"synth\" must be given");
  }
  if (cfg.dataset_path) return load_annotations(*cfg.dataset_path, cfg.format);
  return generate(resolved_synth_spec(cfg)).data;
}

void write_jsonl_dataset(const AnnotationSet& data, const std::string& path) {
  std::string text;
  for (std::size_t i = 0; i < data.size(); ++i) {
    json row;
    row["id"] = data.sample(i).id;
    row["features"] = data.sample(i).features;
    json labels = json::object();
    for (std::size_t j = 0; j < data.annotator_count(); ++j) {
      const std::string& id = data.annotator_ids()[j];
      labels[id] = data.present(i, j) ? json(int(data.label(i, j))) : json(nullptr);
    }
    row["labels"] = labels;
    text += row.dump();
    text += '\n';
  }
  write_text_file(path, text);
}

SynthOutputs cmd_synth(const ExperimentConfig& cfg) {
  if (!cfg.synth) throw ConfigError("synth: config needs a \"synth\" block");
  if (cfg.synth->seed == 0 && !cfg.seed) {
    throw ConfigError("synth: a seed is required (synth.seed or top-level seed)");
  }
  const SynthSpec spec = resolved_synth_spec(cfg);
  const SynthResult result = generate(spec);

  SynthOutputs out;
  out.dataset_path = out_path(cfg, "dataset.jsonl");
  out.sidecar_path = out_path(cfg, "sidecar.json");
  out.latent_path = out_path(cfg, "latent_labels.json");
  write_jsonl_dataset(result.data, out.dataset_path);

  json sidecar;
  sidecar["spec"] = synth_to_json(spec);
  sidecar["realized_kappa_vs_reference"] = json::object();
  sidecar["flip_rates"] = json::object();
  for (std::size_t a = 0; a < result.data.annotator_count(); ++a) {
    const std::string& id = result.data.annotator_ids()[a];
    sidecar["realized_kappa_vs_reference"][id] = result.realized_kappa[a];
    sidecar["flip_rates"][id] = result.flip_rates[a];
  }
  sidecar["pairwise_kappa"] = json::object();
  for (std::size_t a = 0; a < result.data.annotator_count(); ++a) {
    for (std::size_t b = a + 1; b < result.data.annotator_count(); ++b) {
      const double k =
          cohens_kappa(result.data.annotator_labels(a), result.data.annotator_labels(b));
      sidecar["pairwise_kappa"][result.data.annotator_ids()[a] + "|" +
                                result.data.annotator_ids()[b]] = k;
    }
  }
  write_text_file(out.sidecar_path, sidecar.dump(2) + "\n");

  json latent;
  latent["note"] = "diagnostic only: latent reference labels, not training ground truth";
  latent["labels"] = json::object();
  for (std::size_t i = 0; i < result.data.size(); ++i) {
    latent["labels"][result.data.sample(i).id] = int(result.reference_labels[i]);
  }
  write_text_file(out.latent_path, latent.dump(2) + "\n");
  return out;
}

TrainOutputs cmd_train(const ExperimentConfig& cfg) {
  const AnnotationSet data = experiment_data(cfg);

  ModelConfig mc;
  mc.input_dim = data.feature_dim();
  mc.hidden_widths = cfg.model.hidden_widths;
  mc.agreement_variant = cfg.model.agreement_variant;
  mc.bins = cfg.model.bins;
  mc.indicator_hidden = cfg.model.indicator_hidden;
  mc.lambda = cfg.train.loss.lambda;
  mc.init_seed = cfg.seed.value_or(0);
  TwoStreamModel model(mc);

  TrainOutputs out;
  out.result = train(model, data, cfg.train);

  // Reconstruct the training split to evaluate on held-out rows.
  const auto [train_rows, eval_rows] =
      cfg.train.eval_indices.empty()
          ? split_indices(data.size(), cfg.train.eval_split, derive_seed(cfg.train.seed, "split"))
          : std::make_pair(std::vector<std::size_t>{}, cfg.train.eval_indices);
  if (eval_rows.empty()) {
    out.report = evaluate(model, data, cfg.train.threshold, cfg.use_regularized);
  } else {
    out.report = evaluate(model, data.subset(eval_rows), cfg.train.threshold,
                          cfg.use_regularized);
  }

  out.checkpoint_path = out_path(cfg, "checkpoint.json");
  out.history_path = out_path(cfg, "history.csv");
  out.report_path = out_path(cfg, "report.json");
  write_text_file(out.checkpoint_path, model.save_checkpoint().dump(2) + "\n");
  write_text_file(out.history_path, history_to_csv(out.result.history));

  json report;
  report["config"] = resolved_config(cfg);
  report["seed"] = cfg.seed.value_or(0);
  report["evaluation"] = out.report.to_json();
  report["eval_rows"] = eval_rows.empty() ? data.size() : eval_rows.size();
  report["resolved_gamma"] = out.result.resolved_gamma;
  report["skipped_annotator_batches"] = out.result.skipped_annotator_batches;
  report["degenerate_gamma_fallbacks"] = out.result.degenerate_gamma_fallbacks;
  write_text_file(out.report_path, report.dump(2) + "\n");
  return out;
}

nlohmann::json cmd_evaluate(const ExperimentConfig& cfg) {
  if (!cfg.checkpoint_path) throw ConfigError("evaluate: config needs \"checkpoint\"");
  std::ifstream in(*cfg.checkpoint_path);
  if (!in) throw ConfigError("evaluate: cannot open " + *cfg.checkpoint_path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("checkpoint: ") + e.what());
  }
  const TwoStreamModel model = TwoStreamModel::load_checkpoint(doc);
  const AnnotationSet data = experiment_data(cfg);
  const EvalReport report =
      evaluate(model, data, cfg.train.threshold, cfg.use_regularized);
  json out;
  out["config"] = resolved_config(cfg);
  out["evaluation"] = report.to_json();
  write_text_file(out_path(cfg, "eval_report.json"), out.dump(2) + "\n");
  return out;
}

nlohmann::json cmd_annotator_baseline(const ExperimentConfig& cfg) {
  const AnnotationSet data = experiment_data(cfg);
  if (data.annotator_count() < 3) {
    throw ConfigError(
        "annotator-baseline: needs at least 3 annotators; with 2 the rest of the pool has no "
        "pairs, so the agreement-ratio denominator is empty");
  }
  json table;
  table["config"] = resolved_config(cfg);
  table["per_annotator"] = json::object();
  for (std::size_t j = 0; j < data.annotator_count(); ++j) {
    const EvalReport report = annotator_vs_rest(data, j);
    table["per_annotator"][data.annotator_ids()[j]] = report.to_json();
  }
  write_text_file(out_path(cfg, "annotator_baseline.json"), table.dump(2) + "\n");
  return table;
}

namespace {

struct MatrixCell {
  std::map<std::string, std::string> values;  // axis -> value, sorted by axis name
};

std::string cell_dir_name(const MatrixCell& cell, std::uint64_t seed) {
  std::string name;
  for (const auto& [axis, value] : cell.values) {
    name += value;
    name += '_';
  }
  return name + "s" + std::to_string(seed);
}

void apply_axis(ExperimentConfig& cfg, const std::string& axis, const std::string& value) {
  if (axis == "classifier_loss") {
    cfg.train.loss.classifier_loss = enum_from(value, kClassifierLoss, "classifier loss");
  } else if (axis == "agreement_variant") {
    cfg.model.agreement_variant = enum_from(value, kVariant, "agreement variant");
  } else if (axis == "agreement_loss") {
    cfg.train.loss.agreement_loss = enum_from(value, kAgreementLoss, "agreement loss");
  } else if (axis == "paradigm") {
    cfg.train.paradigm = enum_from(value, kParadigm, "paradigm");
  } else {
    throw ConfigError("matrix: unknown axis '" + axis + "'");
  }
}

}  // namespace

MatrixOutputs cmd_matrix(const ExperimentConfig& cfg) {
  if (cfg.axes.empty()) throw ConfigError("matrix: needs an \"axes\" object");

  std::vector<std::uint64_t> seeds = cfg.repeat_seeds;
  std::vector<std::string> axis_names;
  std::vector<std::vector<std::string>> axis_values;
  for (const auto& [axis, values] : cfg.axes) {
    if (values.empty()) throw ConfigError("matrix: axis '" + axis + "' is empty");
    if (axis == "seed") {
      seeds.clear();
      for (const std::string& v : values) seeds.push_back(std::stoull(v));
      continue;
    }
    axis_names.push_back(axis);
    axis_values.push_back(values);
  }
  if (seeds.empty()) seeds.push_back(cfg.seed.value_or(0));

  // Enumerate cells in lexicographic order of the (sorted) axis names.
  std::vector<MatrixCell> cells;
  std::vector<std::size_t> cursor(axis_names.size(), 0);
  while (true) {
    MatrixCell cell;
    for (std::size_t a = 0; a < axis_names.size(); ++a) {
      cell.values[axis_names[a]] = axis_values[a][cursor[a]];
    }
    cells.push_back(cell);
    std::size_t a = axis_names.size();
    while (a > 0) {
      --a;
      if (++cursor[a] < axis_values[a].size()) break;
      cursor[a] = 0;
      if (a == 0) {
        a = SIZE_MAX;
        break;
      }
    }
    if (axis_names.empty() || a == SIZE_MAX) break;
  }

  std::string rows_csv;
  for (const std::string& name : axis_names) rows_csv += name + ",";
  rows_csv += "seed,delta\n";

  json summary_cells = json::array();
  std::string summary_csv;
  for (const std::string& name : axis_names) summary_csv += name + ",";
  summary_csv += "runs,delta_mean,delta_stddev\n";

  char buf[64];
  for (const MatrixCell& cell : cells) {
    std::vector<double> deltas;
    for (std::uint64_t seed : seeds) {
      ExperimentConfig run = cfg;
      run.seed = seed;
      run.train.seed = seed;
      run.axes.clear();
      for (const auto& [axis, value] : cell.values) apply_axis(run, axis, value);
      if (run.train.paradigm != Paradigm::Learn2Agree) {
        run.train.loss.agreement_loss.reset();
      } else if (!run.train.loss.agreement_loss) {
        run.train.loss.agreement_loss = AgreementLoss::Ar;
      }
      run.out_dir = (std::filesystem::path(cfg.out_dir) / "cells" / cell_dir_name(cell, seed)).string();

      const TrainOutputs outputs = cmd_train(run);
      deltas.push_back(outputs.report.delta);

      for (const std::string& name : axis_names) rows_csv += cell.values.at(name) + ",";
      std::snprintf(buf, sizeof(buf), "%llu,%.17g\n", (unsigned long long)seed,
                    outputs.report.delta);
      rows_csv += buf;
    }

    double mean = 0.0;
    for (double d : deltas) mean += d;
    mean /= static_cast<double>(deltas.size());
    double var = 0.0;
    if (deltas.size() > 1) {
      for (double d : deltas) var += (d - mean) * (d - mean);
      var /= static_cast<double>(deltas.size() - 1);
    }
    const double stddev = std::sqrt(var);

    json cell_json;
    for (const auto& [axis, value] : cell.values) cell_json[axis] = value;
    cell_json["runs"] = deltas.size();
    cell_json["delta_mean"] = mean;
    cell_json["delta_stddev"] = stddev;
    cell_json["deltas"] = deltas;
    summary_cells.push_back(cell_json);

    for (const std::string& name : axis_names) summary_csv += cell.values.at(name) + ",";
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", deltas.size(), mean, stddev);
    summary_csv += buf;
  }

  MatrixOutputs out;
  out.rows_path = out_path(cfg, "matrix_rows.csv");
  out.summary_csv_path = out_path(cfg, "matrix_summary.csv");
  out.summary_json_path = out_path(cfg, "matrix_summary.json");
  out.summary = json{{"config", resolved_config(cfg)}, {"cells", summary_cells}};
  write_text_file(out.rows_path, rows_csv);
  write_text_file(out.summary_csv_path, summary_csv);
  write_text_file(out.summary_json_path, out.summary.dump(2) + "\n");
  return out;
}

GradCheckReport cmd_grad_check(const ExperimentConfig& cfg) {
  const std::uint64_t seed = cfg.seed.value_or(0);
  Rng rng(derive_seed(seed, "grad-check"));

  constexpr std::size_t kBatch = 6;
  constexpr std::size_t kDim = 4;
  ModelConfig mc;
  mc.input_dim = kDim;
  mc.hidden_widths = {8};
  mc.agreement_variant = cfg.model.agreement_variant;
  mc.bins = 5;
  mc.indicator_hidden = 4;
  mc.lambda = cfg.train.loss.lambda;
  mc.init_seed = seed;
  TwoStreamModel model(mc);

  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd batch(kBatch, kDim);
  for (Eigen::Index r = 0; r < batch.rows(); ++r) {
    for (Eigen::Index c = 0; c < batch.cols(); ++c) batch(r, c) = normal(rng);
  }
  LabelGrid grid;
  grid.batch = kBatch;
  grid.annotators = 2;
  grid.labels.resize(kBatch * 2);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t i = 0; i < kBatch; ++i) {
    // Keep both classes present per annotator so WKL stays defined.
    grid.labels[i * 2 + 0] = static_cast<std::int8_t>(i % 2);
    grid.labels[i * 2 + 1] = static_cast<std::int8_t>(coin(rng) ? 1 - int(i % 2) : int(i % 2));
  }
  std::vector<double> alphas(kBatch);
  std::uniform_real_distribution<double> unif(0.05, 0.95);
  for (double& a : alphas) a = unif(rng);

  LossConfig loss = cfg.train.loss;
  if (!loss.agreement_loss) loss.agreement_loss = AgreementLoss::Ar;
  return grad_check(model, batch, grid, alphas, loss);
}

}  // namespace agreelearn
